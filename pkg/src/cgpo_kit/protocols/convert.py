"""End-to-end correlated-catalytic conversion driver.

Routes tried, cheapest first:

* ``direct``: a covariant Gibbs-preserving map ``rho^n -> ~rho'^n`` from the
  feasibility search, compiled with the catalyst of :mod:`.catalyst`;
* ``pipeline``: only for coherent ``rho``. A Gibbs-preserving map on one set
  is wrapped in the estimate/shift sandwich, the estimation slots are refilled
  with Gibbs states, and the result is compiled the same way.

The best route by final system error is reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..channels import (
    QuantumChannel,
    identity_channel,
    is_covariant,
    is_cptp,
    is_gibbs_preserving,
)
from ..feasibility import FeasibilityProblem, find_cgpo, find_gpo, minimal_epsilon
from ..qcore import HarmonicHamiltonian, tensor_power, trace_distance
from ..thermo import free_energy, gibbs_state
from .catalyst import build_catalyst, catalytic_channel
from .phase import shortest_period_is_full
from .pipeline import PipelineParams, cgpo_pipeline

F_TOL = 1e-9


@dataclass
class CatalyticBudget:
    """Resources the driver may spend."""

    epsilon: float = 0.01
    max_copies: int = 3
    bisection_steps: int = 10
    max_iters: int = 20000
    pipeline: PipelineParams | None = None
    verify_channel: bool = True

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "max_copies": self.max_copies,
            "bisection_steps": self.bisection_steps,
            "max_iters": self.max_iters,
            "pipeline": None if self.pipeline is None else self.pipeline.to_dict(),
        }


@dataclass
class ConversionReport:
    status: str
    free_energy_in: float
    free_energy_out: float
    error: float | None = None
    route: str | None = None
    copies: int | None = None
    catalyst: dict | None = None
    residuals: dict = field(default_factory=dict)
    routes: list[dict] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.free_energy_in - self.free_energy_out

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "free_energy_in": self.free_energy_in,
            "free_energy_out": self.free_energy_out,
            "free_energy_gap": self.gap,
            "error": self.error,
            "route": self.route,
            "copies": self.copies,
            "catalyst": self.catalyst,
            "residuals": self.residuals,
            "routes": self.routes,
        }


def search_cgpo_map(rho: np.ndarray, rho_prime: np.ndarray, H: HarmonicHamiltonian, beta: float, n: int,
                    budget: CatalyticBudget | None = None) -> QuantumChannel | None:
    """Covariant GP map on ``n`` copies taking ``rho^n`` as close to ``rho'^n`` as the solver gets.

    Tries an exact witness first, then bisects the Frobenius radius.
    """
    budget = CatalyticBudget() if budget is None else budget
    base = FeasibilityProblem(tensor_power(rho, n), tensor_power(rho_prime, n), H.tensor_power(n), beta,
                              0.0, True, budget.max_iters)
    out = find_cgpo(base)
    if out.found:
        return out.channel
    _, best = minimal_epsilon(base, steps=budget.bisection_steps)
    return best.channel


def _residuals(ch: QuantumChannel, beta: float) -> dict:
    return {
        "cptp": is_cptp(ch).violation,
        "gibbs": is_gibbs_preserving(ch, beta).violation,
        "covariance": is_covariant(ch).violation,
    }


def _pipeline_route(rho, rho_prime, H, beta, params: PipelineParams, budget):
    Hs = H.tensor_power(params.set_size)
    base = FeasibilityProblem(tensor_power(rho, params.set_size), tensor_power(rho_prime, params.set_size),
                              Hs, beta, 0.0, False, budget.max_iters)
    out = find_gpo(base)
    if not out.found:
        _, out = minimal_epsilon(base, steps=budget.bisection_steps)
    sandwich = cgpo_pipeline(out.channel, params, H, rho)
    # refill the consumed estimation slots with Gibbs states (rate below one)
    return _append_gibbs(sandwich, H.tensor_power(params.b1 + params.b2), beta)


def _append_gibbs(ch: QuantumChannel, H_pad: HarmonicHamiltonian, beta: float) -> QuantumChannel:
    """``Sigma -> ch(Sigma) (x) gibbs`` on ``H_pad``."""
    g = gibbs_state(H_pad, beta)
    T = ch.tensor4()
    n = ch.dim_out * g.shape[0] * ch.dim_in
    J = np.einsum("aibj,cd->acibdj", T, g).reshape(n, n)
    return QuantumChannel(J, ch.H_in, ch.H_out.tensor(H_pad))


def correlated_catalytic_convert(rho: np.ndarray, rho_prime: np.ndarray, H: HarmonicHamiltonian,
                                 beta: float, budget: CatalyticBudget | None = None) -> ConversionReport:
    """Convert ``rho`` into ``rho'`` with a correlated catalyst under covariant GP maps.

    Returns ``status`` ``impossible`` (free energy increases), ``success``
    (error at most ``budget.epsilon``) or ``partial`` (best error found).
    """
    budget = CatalyticBudget() if budget is None else budget
    f_in = free_energy(rho, H, beta)
    f_out = free_energy(rho_prime, H, beta)
    if f_in < f_out - F_TOL:
        return ConversionReport("impossible", f_in, f_out)

    candidates = []
    if trace_distance(rho, rho_prime) <= F_TOL:
        candidates.append(("identity", 1, identity_channel(H)))
    else:
        for n in range(1, budget.max_copies + 1):
            candidates.append(("direct", n, search_cgpo_map(rho, rho_prime, H, beta, n, budget)))
        if budget.pipeline is not None and shortest_period_is_full(rho, H):
            p = budget.pipeline
            candidates.append(("pipeline", p.N, _pipeline_route(rho, rho_prime, H, beta, p, budget)))

    best = None
    routes = []
    for name, n, lam in candidates:
        if lam is None:
            routes.append({"route": name, "copies": n, "error": None})
            continue
        _, rep, _ = build_catalyst(lam, rho, rho_prime)
        routes.append({"route": name, "copies": n, "error": rep.system_error})
        if best is None or rep.system_error < best[3].system_error:
            best = (name, n, lam, rep)
    if best is None:
        return ConversionReport("partial", f_in, f_out, routes=routes)

    name, n, lam, rep = best
    residuals = _residuals(lam, beta)
    if budget.verify_channel and (H.dim ** n) * n <= 32:
        residuals.update({f"round_{k}": v for k, v in _residuals(catalytic_channel(lam, H, n), beta).items()})
    residuals["catalyst_exactness"] = rep.catalyst_exactness
    status = "success" if rep.system_error <= budget.epsilon else "partial"
    return ConversionReport(status, f_in, f_out, rep.system_error, name, n, rep.to_dict(), residuals, routes)
