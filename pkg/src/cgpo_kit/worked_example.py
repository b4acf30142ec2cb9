"""Reproduction of the two-level worked example.

``rho = diag(3/200, 197/200)`` and ``rho' = |+><+|`` on the qubit of
:mod:`.presets`. Eight copies of ``rho`` can be mapped by a Gibbs-preserving
operation onto

    Xi(c) = c P + (1 - c) (g^8 - a P) / (1 - a),   P = |+><+|^8,  a = 25 / 4^8,

for a mixing weight ``c`` just below 0.995, while no single-copy covariant
Gibbs-preserving map reaches ``|+><+|`` within 0.01.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .feasibility import FeasibilityProblem, find_cgpo
from .presets import PAPER_BETA, paper_hamiltonian, paper_rho
from .qcore import plus_state, tensor_power, trace_distance
from .thermo import free_energy, gibbs_state

COPIES = 8
BRACKET_WEIGHT = 25 / 4 ** COPIES
EPSILON = 0.01
F_RHO = 1.291
F_RHO_PRIME = 0.836
F_TOL = 1e-3


def xi_state(c: float, gibbs_n: np.ndarray, plus_n: np.ndarray, a: float = BRACKET_WEIGHT) -> np.ndarray:
    return c * plus_n + (1 - c) * (gibbs_n - a * plus_n) / (1 - a)


def measure_prepare_weight(rho_diag, gibbs_diag, a: float = BRACKET_WEIGHT, n: int = COPIES) -> float:
    """Largest ``c`` reached by ``X -> Tr[QX] P + Tr[(1-Q)X] sigma`` with ``Tr[Q g^n] = a``.

    The channel fixes ``g^n`` exactly when ``Tr[Q g^n] = a``; the best test
    ``Q`` is the likelihood-ratio (Neyman-Pearson) one on diagonal inputs.
    """
    p = np.asarray(rho_diag, dtype=float)
    q = np.asarray(gibbs_diag, dtype=float)
    pn, qn = p, q
    for _ in range(n - 1):
        pn, qn = np.kron(pn, p), np.kron(qn, q)
    order = np.argsort(-pn / qn, kind="stable")
    c, room = 0.0, a
    for i in order:
        take = min(1.0, room / qn[i])
        c += take * pn[i]
        room -= take * qn[i]
        if room <= 0:
            break
    return float(c)


def bracket_oracle(a: float = BRACKET_WEIGHT, n: int = COPIES) -> tuple[float, bool]:
    """``g^n - a P >= 0`` iff ``a <|g^{-n}|> <= 1``; for the qubit ``<+|g^{-1}|+> = 8/3``."""
    bound = (3 / 8) ** n
    return bound, bound >= a


@dataclass
class ExampleReport:
    checks: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": self.checks, "values": self.values}


def reproduce_example(c_grid=None, max_iters: int = 20000) -> ExampleReport:
    H = paper_hamiltonian()
    beta = PAPER_BETA
    rho, rho_p = paper_rho(), plus_state()
    rep = ExampleReport()

    f, fp = free_energy(rho, H, beta), free_energy(rho_p, H, beta)
    rep.values.update(F_rho=f, F_rho_prime=fp)
    rep.checks["free_energies"] = abs(f - F_RHO) <= F_TOL and abs(fp - F_RHO_PRIME) <= F_TOL

    g8 = tensor_power(gibbs_state(H, beta), COPIES)
    p8 = tensor_power(rho_p, COPIES)
    bracket = g8 - BRACKET_WEIGHT * p8
    min_eig = float(np.linalg.eigvalsh(bracket)[0])
    bound, oracle = bracket_oracle()
    rep.values.update(bracket_min_eigenvalue=min_eig, bracket_oracle_bound=bound, bracket_weight=BRACKET_WEIGHT)
    rep.checks["bracket_psd"] = min_eig >= -1e-14 and oracle

    c_grid = np.linspace(0.994, 0.995, 101) if c_grid is None else np.asarray(c_grid)
    scan = []
    for c in c_grid:
        xi = xi_state(float(c), g8, p8)
        w = np.linalg.eigvalsh(xi)
        scan.append({
            "c": float(c),
            "trace": float(np.trace(xi).real),
            "min_eigenvalue": float(w[0]),
            "distance": trace_distance(xi, p8),
        })
    good = [s for s in scan if s["distance"] < EPSILON]
    valid = all(abs(s["trace"] - 1) <= 1e-12 and s["min_eigenvalue"] >= -1e-12 for s in scan)
    rep.values["xi_scan"] = scan
    rep.values["xi_best"] = min(scan, key=lambda s: s["distance"])
    rep.checks["xi_witness"] = valid and bool(good)

    g = gibbs_state(H, beta)
    c_mp = measure_prepare_weight(np.diag(rho).real, np.diag(g).real)
    d_mp = trace_distance(xi_state(c_mp, g8, p8), p8)
    rep.values.update(measure_prepare_c=c_mp, measure_prepare_distance=d_mp)

    best_c = rep.values["xi_best"]["c"]
    xi = xi_state(best_c, g8, p8)
    f_xi = free_energy(xi, H.tensor_power(COPIES), beta)
    rep.values.update(F_xi=f_xi, F_rho_times_copies=COPIES * f)
    rep.checks["free_energy_monotone"] = COPIES * f >= f_xi

    out = find_cgpo(FeasibilityProblem(rho, rho_p, H, beta, EPSILON, True, max_iters))
    rep.values["single_shot"] = out.to_dict()
    rep.checks["single_shot_not_found"] = out.status == "not_found"
    return rep


def catalyst_size(copies: int = COPIES) -> dict:
    """Catalyst of the compiled conversion: ``copies - 1`` systems and a ``copies``-level label."""
    label_qubits = math.ceil(math.log2(copies))
    return {"system_copies": copies - 1, "label_levels": copies, "spins": copies - 1 + label_qubits}
