"""Estimate-and-prepare conversion at a sublinear rate.

``N`` copies of a coherent ``rho`` are measured with the covariant phase
POVM; the estimate ``t`` selects the output ``T_t(rho'^{(x)M})``. The map is
covariant because the estimator is, and the error per run is
``|T_t rho'^M - rho'^M|_1 <= M |T_t rho' - rho'|_1``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..qcore import HarmonicHamiltonian, tensor_power, time_evolve, trace_distance
from .phase import PhasePOVM, build_phase_povm


@dataclass
class SublinearResult:
    t_est: float
    state: np.ndarray
    error: float


def default_bins(H: HarmonicHamiltonian, N: int, per_copy: int = 8) -> int:
    return per_copy * H.spread * N + 1


def _povm(rho, H, N, L) -> PhasePOVM:
    return build_phase_povm(H, N, default_bins(H, N) if L is None else L, rho)


def _shift_error(rho_prime, H, M, t) -> float:
    if M == 0:
        return 0.0
    target = tensor_power(rho_prime, M)
    return trace_distance(time_evolve(target, H.tensor_power(M), t), target)


def sublinear_prepare(rho: np.ndarray, N: int, rho_prime: np.ndarray, M: int, H: HarmonicHamiltonian,
                      L: int | None = None, seed=None, povm: PhasePOVM | None = None) -> SublinearResult:
    """One run: estimate from ``rho^N`` and output ``T_t(rho'^M)``."""
    if M < 0 or N < 1:
        raise ValueError("need N >= 1 and M >= 0")
    if M == 0:
        return SublinearResult(0.0, np.ones((1, 1), dtype=complex), 0.0)
    povm = _povm(rho, H, N, L) if povm is None else povm
    rng = np.random.default_rng(seed)
    t = float(povm.product_distribution(rho).sample(rng)[0])
    target = tensor_power(rho_prime, M)
    out = time_evolve(target, H.tensor_power(M), t)
    return SublinearResult(t, out, trace_distance(out, target))


def expected_error(rho: np.ndarray, N: int, rho_prime: np.ndarray, M: int, H: HarmonicHamiltonian,
                   L: int | None = None) -> float:
    """Exact mean error over the estimator distribution."""
    if M == 0:
        return 0.0
    dist = _povm(rho, H, N, L).product_distribution(rho)
    return float(sum(p * _shift_error(rho_prime, H, M, t) for p, t in zip(dist.probs, dist.support) if p > 0))


def _sweep_task(args) -> dict:
    rho, N, rho_prime, M, H, L, seeds = args
    povm = _povm(rho, H, N, L)
    dist = povm.product_distribution(rho)
    errs = []
    for s in seeds:
        t = float(dist.sample(np.random.default_rng(s))[0])
        errs.append(_shift_error(rho_prime, H, M, t))
    return {"N": N, "M": M, "mean_error": float(np.mean(errs)), "std_error": float(np.std(errs)), "runs": len(errs)}


def sublinear_study(rho: np.ndarray, rho_prime: np.ndarray, H: HarmonicHamiltonian, Ns, Ms,
                    runs: int = 200, seed: int = 0, workers: int = 1, L: int | None = None) -> list[dict]:
    """Monte-Carlo mean error for every ``(N, M)``; one seed stream per cell.

    With ``workers > 1`` cells run in separate processes; the output only
    depends on ``seed``.
    """
    cells = [(N, M) for N in Ns for M in Ms]
    children = np.random.SeedSequence(seed).spawn(len(cells))
    tasks = []
    for (N, M), child in zip(cells, children):
        seeds = [int(x) for x in child.generate_state(runs)]
        tasks.append((rho, N, rho_prime, M, H, L, seeds))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_task, tasks))
    return [_sweep_task(t) for t in tasks]
