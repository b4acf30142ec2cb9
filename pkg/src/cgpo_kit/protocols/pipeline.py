"""The estimate / shift / Gibbs-preserving map / shift sandwich on N copies.

Copy layout of the ``N`` input copies: the ``nu`` sets ``A_1..A_nu`` of
``set_size`` copies each come first, then the estimation blocks ``B1`` and
``B2``. The output is the ``nu * set_size`` copies of the A part.

With independent estimates ``t1`` (from B1) and ``t2`` (from B2) the map is

    N(Sigma) = sum_{k1,k2} T_{t2} o Lambda^{(x)nu} o T_{-t1} ( Tr_B[(E_k1 (x) E_k2) Sigma] ),

where ``E_k`` are the bin effects with the failure branch spread uniformly.
It is covariant for every real shift as long as ``L`` exceeds the spread of
total levels of ``A`` plus either estimation block (no aliasing of modes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..channels import QuantumChannel, apply, tensor_power_channel
from ..qcore import (
    HarmonicHamiltonian,
    bures_distance,
    check_budget,
    evolution_phases,
    partial_trace_dims,
    tensor_power,
    time_evolve,
    trace_distance,
)
from .phase import PhasePOVM, build_phase_povm

EXACT_MAX_INPUT_DIM = 64
SQRT8 = 2 * math.sqrt(2)
# slack for the feasibility solver tolerance on the Lambda error
BUDGET_TOL = 1e-8


@dataclass(frozen=True)
class PipelineParams:
    N: int
    set_size: int
    nu: int
    b1: int
    b2: int
    L: int = 8
    delta: float | None = None
    delta1: float = 0.1
    epsilon: float = 0.1

    def __post_init__(self):
        if min(self.N, self.set_size, self.nu, self.b1, self.b2, self.L) < 1:
            raise ValueError("all block sizes and L must be positive")
        if self.nu * self.set_size + self.b1 + self.b2 != self.N:
            raise ValueError("blocks do not add up to N")

    @classmethod
    def from_fraction(cls, N: int, delta: float, set_size: int | None = None, **kw) -> "PipelineParams":
        """Split ``N`` copies: ``nu = floor((1-delta) N / set_size)`` sets, rest to B1/B2.

        ``set_size`` defaults to ``floor(sqrt(N))``. Leftover copies go to the
        estimation blocks, B1 taking the odd one.
        """
        if not 0 < delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        s = math.isqrt(N) if set_size is None else int(set_size)
        nu = math.floor((1 - delta) * N / s + 1e-12)
        rest = N - nu * s
        b1 = (rest + 1) // 2
        return cls(N, s, nu, b1, rest - b1, delta=delta, **kw)

    @property
    def output_copies(self) -> int:
        return self.nu * self.set_size

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("N", "set_size", "nu", "b1", "b2", "L", "delta", "delta1", "epsilon")}


def minimal_bins(H: HarmonicHamiltonian, params: PipelineParams) -> int:
    a = params.output_copies
    return H.spread * (a + max(params.b1, params.b2)) + 1


def estimation_povms(H: HarmonicHamiltonian, params: PipelineParams, reference: np.ndarray) -> tuple[PhasePOVM, PhasePOVM]:
    need = minimal_bins(H, params)
    if params.L < need:
        raise ValueError(f"L={params.L} too small for covariance of the sandwich; need L >= {need}")
    return (build_phase_povm(H, params.b1, params.L, reference),
            build_phase_povm(H, params.b2, params.L, reference))


def _check_lambda(lambda_map: QuantumChannel, H: HarmonicHamiltonian, params: PipelineParams):
    if lambda_map.dim_in != H.dim ** params.set_size or lambda_map.dim_out != lambda_map.dim_in:
        raise ValueError("Lambda must act on set_size copies of the system")


def cgpo_pipeline(lambda_map: QuantumChannel, params: PipelineParams, H: HarmonicHamiltonian,
                  reference: np.ndarray, mode: str = "exact_mixture", seed=None,
                  share_estimator: bool = False):
    """Assemble the sandwich channel (``exact_mixture``) or run it once (``sample``).

    ``share_estimator=True`` reuses the B1 estimate for both shifts and leaves
    B2 unread. A common shift moves that estimate with the input, so this
    variant is still covariant; it only wastes the B2 block.
    """
    _check_lambda(lambda_map, H, params)
    p1, p2 = estimation_povms(H, params, reference)
    if mode == "exact_mixture":
        return _exact_channel(lambda_map, params, H, p1, p2, share_estimator)
    if mode == "sample":
        return _sample(lambda_map, params, H, reference, p1, p2, seed, share_estimator)
    raise ValueError(f"unknown mode {mode!r}")


def _exact_channel(lambda_map, params, H, p1: PhasePOVM, p2: PhasePOVM, share: bool) -> QuantumChannel:
    d = H.dim
    din = d ** params.N
    if din > EXACT_MAX_INPUT_DIM:
        raise ValueError(
            f"dimension budget exceeded: exact pipeline needs d^N <= {EXACT_MAX_INPUT_DIM}, got {din}"
        )
    lam = tensor_power_channel(lambda_map, params.nu)
    HA = lam.H_in
    dA = HA.dim
    check_budget((dA * din), "pipeline Choi")
    E1 = p1.resolved_effects()
    E2 = p2.resolved_effects()
    t1 = p1.estimates
    t2 = p2.estimates
    J = np.zeros((dA * din, dA * din), dtype=complex)
    Jl = lam.choi
    # Choi of the functional X -> Tr[E X] is E^T; the sandwich factorises over k1, k2
    for k1 in range(params.L):
        v = evolution_phases(HA, -t1[k1])
        if share:
            u = evolution_phases(HA, t1[k1])
            D = np.kron(u, v)
            W = Jl * np.outer(D, D.conj())
            J += np.kron(W, np.kron(E1[k1].T, np.eye(d ** params.b2)))
            continue
        for k2 in range(params.L):
            u = evolution_phases(HA, t2[k2])
            D = np.kron(u, v)
            W = Jl * np.outer(D, D.conj())
            J += np.kron(W, np.kron(E1[k1].T, E2[k2].T))
    H_in = H.tensor_power(params.N)
    return QuantumChannel(J, H_in, HA)


@dataclass
class PipelineSample:
    t1: float
    t2: float
    set_state: np.ndarray
    nu: int


def _sample(lambda_map, params, H, rho, p1, p2, seed, share) -> PipelineSample:
    rng = np.random.default_rng(seed)
    t1 = float(p1.product_distribution(rho).sample(rng)[0])
    t2 = t1 if share else float(p2.product_distribution(rho).sample(rng)[0])
    Hs = H.tensor_power(params.set_size)
    x = time_evolve(tensor_power(rho, params.set_size), Hs, -t1)
    y = time_evolve(apply(lambda_map, x), Hs, t2)
    return PipelineSample(t1, t2, y, params.nu)


def set_marginal(channel_output: np.ndarray, H: HarmonicHamiltonian, params: PipelineParams, index: int) -> np.ndarray:
    """Reduced output on set ``A_index`` (0-based)."""
    dims = [H.dim ** params.set_size] * params.nu
    return partial_trace_dims(channel_output, dims, [index])


@dataclass
class ErrorBudget:
    measured: float
    shift_in: float
    lambda_error: float
    shift_out: float
    delta1: float

    @property
    def bound(self) -> float:
        return self.shift_in + self.delta1 + self.shift_out

    @property
    def holds(self) -> bool:
        return self.lambda_error <= self.delta1 + BUDGET_TOL and self.measured <= self.bound + BUDGET_TOL

    def to_dict(self) -> dict:
        return {
            "measured": self.measured,
            "shift_in": self.shift_in,
            "lambda_error": self.lambda_error,
            "shift_out": self.shift_out,
            "delta1": self.delta1,
            "bound": self.bound,
            "holds": self.holds,
        }


def set_output_exact(lambda_map: QuantumChannel, params: PipelineParams, H: HarmonicHamiltonian,
                     rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(zeta, set output)`` for the product input ``rho^{(x)N}``.

    ``zeta`` is the twirled input to Lambda on one set; the set output is its
    image under Lambda followed by the averaged second shift. Works for any
    ``N`` because the estimation blocks are handled in compressed form.
    """
    _check_lambda(lambda_map, H, params)
    p1, p2 = estimation_povms(H, params, rho)
    Hs = H.tensor_power(params.set_size)
    x = tensor_power(rho, params.set_size)
    d1 = p1.product_distribution(rho)
    d2 = p2.product_distribution(rho)
    zeta = sum(p * time_evolve(x, Hs, -t) for p, t in zip(d1.probs, d1.support))
    lz = apply(lambda_map, zeta)
    out = sum(p * time_evolve(lz, Hs, t) for p, t in zip(d2.probs, d2.support))
    return zeta, out


def error_budget(lambda_map: QuantumChannel, params: PipelineParams, H: HarmonicHamiltonian,
                 rho: np.ndarray, rho_prime: np.ndarray) -> ErrorBudget:
    """Per-set error against the three-term triangle bound.

    ``shift_in = 2 sqrt2 b(zeta, rho^s)`` and ``shift_out = 2 sqrt2 b(out, Lambda(zeta))``.
    """
    zeta, out = set_output_exact(lambda_map, params, H, rho)
    x = tensor_power(rho, params.set_size)
    target = tensor_power(rho_prime, params.set_size)
    lz = apply(lambda_map, zeta)
    return ErrorBudget(
        measured=trace_distance(out, target),
        shift_in=SQRT8 * bures_distance(zeta, x),
        lambda_error=trace_distance(apply(lambda_map, x), target),
        shift_out=SQRT8 * bures_distance(out, lz),
        delta1=params.delta1,
    )


def fit_shift_constant(rho: np.ndarray, H: HarmonicHamiltonian, ts=None) -> float:
    """Smallest ``C`` with ``b^2(rho, T_t rho) <= C t^2`` on the grid ``ts``."""
    if ts is None:
        ts = np.linspace(H.period / 2000, H.period / 2, 400)
    vals = [bures_distance(rho, time_evolve(rho, H, t)) ** 2 / t ** 2 for t in ts]
    return float(max(vals))


def shift_bound(C: float, t: float, m: int) -> float:
    """``sqrt(1 - (1 - C t^2)^m)``, the Bures bound on an m-fold shifted product."""
    base = max(0.0, 1.0 - C * t * t)
    return float(math.sqrt(max(0.0, 1.0 - base ** m)))


def covariance_defect(channel: QuantumChannel, ts, inputs) -> float:
    """``max |N(T_t S) - T_t N(S)|_1`` over the given shifts and inputs."""
    worst = 0.0
    for S in inputs:
        out = apply(channel, S)
        for t in ts:
            a = apply(channel, time_evolve(S, channel.H_in, t))
            worst = max(worst, trace_distance(a, time_evolve(out, channel.H_out, t)))
    return worst


def lambda_for_budget(rho: np.ndarray, rho_prime: np.ndarray, H: HarmonicHamiltonian, beta: float,
                      set_size: int, delta1: float, max_iters: int = 20000) -> QuantumChannel | None:
    """Gibbs-preserving map on one set with trace error at most ``delta1``.

    Searches at Frobenius radius ``delta1 / sqrt(D)``, which bounds the trace
    error by ``delta1``. Returns ``None`` when the search fails.
    """
    from ..feasibility import FeasibilityProblem, find_gpo

    Hs = H.tensor_power(set_size)
    radius = delta1 / math.sqrt(Hs.dim)
    out = find_gpo(FeasibilityProblem(tensor_power(rho, set_size), tensor_power(rho_prime, set_size),
                                      Hs, beta, radius, False, max_iters))
    return out.channel if out.found else None


def error_budget_sweep(rho: np.ndarray, rho_prime: np.ndarray, H: HarmonicHamiltonian, beta: float,
                       base: PipelineParams, Ls, delta1s) -> list[dict]:
    """Error budget for every ``(L, delta1)``; Lambda is re-searched per ``delta1``."""
    rows = []
    for d1 in delta1s:
        lam = lambda_for_budget(rho, rho_prime, H, beta, base.set_size, d1)
        for L in Ls:
            p = PipelineParams(base.N, base.set_size, base.nu, base.b1, base.b2, L, base.delta, d1, base.epsilon)
            row = {"L": L, "delta1": d1}
            if lam is None:
                row.update(status="lambda_not_found")
            else:
                row.update(status="ok", **error_budget(lam, p, H, rho, rho_prime).to_dict())
            rows.append(row)
    return rows
