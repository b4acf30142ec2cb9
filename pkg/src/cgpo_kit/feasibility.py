"""Convex-feasibility search for (covariant) Gibbs-preserving channels.

The search runs Dykstra's alternating projections over Choi matrices between

* the PSD cone (eigenvalue clipping),
* an affine set: trace preservation, the Gibbs fixed point, an optional
  support mask (covariance and/or classical restriction) and, when
  ``epsilon == 0``, the exact output condition,
* for ``epsilon > 0``, the set of channels whose output on ``rho_in`` lies in
  a Frobenius ball of radius ``epsilon`` around the target.

``not_found`` only means the iteration budget ran out; it is not a proof of
infeasibility. For diagonal inputs :func:`blackwell_oracle` is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import (
    QuantumChannel,
    apply,
    covariance_mask,
    is_covariant,
    is_cptp,
    is_gibbs_preserving,
)
from .qcore import HarmonicHamiltonian, check_budget, hermitize, trace_distance
from .thermo import gibbs_distribution, gibbs_state, thermomajorizes, lorenz_margin

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 20000
CHECK_EVERY = 10


@dataclass
class FeasibilityProblem:
    rho_in: np.ndarray
    target: np.ndarray
    H: HarmonicHamiltonian
    beta: float
    epsilon: float = 0.0
    require_covariance: bool = False
    max_iters: int = DEFAULT_MAX_ITERS
    tol: float = DEFAULT_TOL
    H_out: HarmonicHamiltonian | None = None
    diagonal: bool = False

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.rho_in.shape != (self.H.dim, self.H.dim):
            raise ValueError("rho_in does not match the input Hamiltonian")
        if self.target.shape != (self.out_hamiltonian.dim,) * 2:
            raise ValueError("target does not match the output Hamiltonian")

    @property
    def out_hamiltonian(self) -> HarmonicHamiltonian:
        return self.H if self.H_out is None else self.H_out

    def to_dict(self) -> dict:
        from .qcore import matrix_to_dict

        return {
            "rho_in": matrix_to_dict(self.rho_in),
            "target": matrix_to_dict(self.target),
            "hamiltonian": self.H.to_dict(),
            "beta": self.beta,
            "epsilon": self.epsilon,
            "require_covariance": self.require_covariance,
            "max_iters": self.max_iters,
            "tol": self.tol,
            "diagonal": self.diagonal,
        }


@dataclass
class FeasibilityOutcome:
    status: str
    channel: QuantumChannel | None
    residuals: dict = field(default_factory=dict)
    iterations: int = 0
    frobenius_error: float | None = None
    trace_error: float | None = None
    oracle: bool | None = None

    @property
    def found(self) -> bool:
        return self.status == "found"

    def to_dict(self, include_channel: bool = False) -> dict:
        out = {
            "status": self.status,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "iterations": self.iterations,
            "frobenius_error": self.frobenius_error,
            "trace_error": self.trace_error,
        }
        if self.oracle is not None:
            out["oracle"] = bool(self.oracle)
        if include_channel and self.channel is not None:
            out["channel"] = self.channel.to_dict()
        return out


class _Projector:
    """Cached projections for one problem geometry."""

    def __init__(self, H_in, H_out, beta, mask, rho_in=None, target=None, exact_output=False):
        di, do = H_in.dim, H_out.dim
        self.di, self.do = di, do
        self.n = di * do
        self.mask = mask.reshape(self.n, self.n)
        self.idx = np.flatnonzero(self.mask)
        self.classical = bool(np.all(self.mask == (self.mask & np.eye(self.n, dtype=bool))))
        g_in = gibbs_state(H_in, beta)
        g_out = gibbs_state(H_out, beta)

        rows, rhs = [], []
        # trace preservation: sum_a J[a,i,a,j] = delta_ij
        tp = np.zeros((di, di, do, di, do, di))
        for a in range(do):
            for i in range(di):
                for j in range(di):
                    tp[i, j, a, i, a, j] = 1
        rows.append(tp.reshape(di * di, -1))
        rhs.append(np.eye(di).reshape(-1))
        rows.append(self._output_rows(g_in))
        rhs.append(g_out.reshape(-1))
        if exact_output:
            rows.append(self._output_rows(rho_in))
            rhs.append(target.reshape(-1))
        A = np.vstack(rows)[:, self.idx]
        self.A = A
        self.b = np.concatenate(rhs).astype(complex)
        self.A_pinv = np.linalg.pinv(A, rcond=1e-12)

    def _output_rows(self, rho):
        do, di = self.do, self.di
        # E(rho)[a,b] = sum_ij J[a,i,b,j] rho[i,j]
        r = np.zeros((do, do, do, di, do, di), dtype=complex)
        for a in range(do):
            for b in range(do):
                r[a, b, a, :, b, :] = rho
        return r.reshape(do * do, -1)

    def affine(self, J):
        x = J.reshape(-1)[self.idx]
        x = x - self.A_pinv @ (self.A @ x - self.b)
        out = np.zeros(self.n * self.n, dtype=complex)
        out[self.idx] = x
        return hermitize(out.reshape(self.n, self.n))

    def affine_residual(self, J):
        off = J.reshape(-1).copy()
        off[self.idx] = 0
        x = J.reshape(-1)[self.idx]
        return max(float(np.linalg.norm(self.A @ x - self.b)), float(np.max(np.abs(off), initial=0.0)))

    def psd(self, J):
        if self.classical:
            d = np.clip(np.diag(J).real, 0.0, None)
            return np.diag(d).astype(complex)
        w, v = np.linalg.eigh(hermitize(J))
        return (v * np.clip(w, 0.0, None)) @ v.conj().T

    def min_eig(self, J):
        if self.classical:
            return float(np.min(np.diag(J).real))
        return float(np.linalg.eigvalsh(hermitize(J))[0])


class _Ball:
    def __init__(self, rho_in, target, epsilon, di, do):
        self.rho = rho_in
        self.target = target
        self.eps = epsilon
        self.di, self.do = di, do
        self.scale = float(np.sum(np.abs(rho_in) ** 2))
        self.rho_conj = rho_in.conj()

    def output(self, J):
        return np.einsum("aibj,ij->ab", J.reshape(self.do, self.di, self.do, self.di), self.rho)

    def distance(self, J):
        return float(np.linalg.norm(self.output(J) - self.target))

    def project(self, J):
        y = self.output(J)
        diff = y - self.target
        r = np.linalg.norm(diff)
        if r <= self.eps:
            return J
        y_new = self.target + diff * (self.eps / r)
        return J + np.kron(y_new - y, self.rho_conj) / self.scale


def _polish(J, J_safe, safe_min):
    """Mix in a strictly positive feasible Choi to remove residual negativity."""
    w = np.linalg.eigvalsh(hermitize(J))[0]
    if w >= 0:
        return J
    s = -w / (-w + safe_min)
    return (1 - s) * J + s * J_safe


def _support_mask(H_in, H_out, covariant: bool, diagonal: bool) -> np.ndarray:
    do, di = H_out.dim, H_in.dim
    mask = np.ones((do, di, do, di), dtype=bool)
    if covariant:
        mask &= covariance_mask(H_in, H_out)
    if diagonal:
        eye_o = np.eye(do, dtype=bool)
        eye_i = np.eye(di, dtype=bool)
        mask &= eye_o[:, None, :, None] & eye_i[None, :, None, :]
    return mask


def _dykstra(J0, proj: _Projector, ball: _Ball | None, max_iters: int, tol: float, psd_tol: float | None = None):
    psd_tol = tol if psd_tol is None else psd_tol
    J = J0.copy()
    p_psd = np.zeros_like(J)
    p_ball = np.zeros_like(J)
    history = []
    residuals = {}
    it = 0
    for it in range(1, max_iters + 1):
        y = proj.psd(J + p_psd)
        p_psd = J + p_psd - y
        J = y
        if ball is not None:
            y = ball.project(J + p_ball)
            p_ball = J + p_ball - y
            J = y
        J = proj.affine(J)
        if it % CHECK_EVERY == 0 or it == max_iters:
            neg = max(0.0, -proj.min_eig(J))
            bres = max(0.0, ball.distance(J) - ball.eps) if ball is not None else 0.0
            residuals = {"psd": neg, "ball": bres, "affine": proj.affine_residual(J)}
            worst = max(residuals["ball"], residuals["affine"], neg * tol / psd_tol)
            if worst < tol:
                return J, residuals, it, True
            history.append(worst)
            # stop once progress has stalled for good
            if len(history) > 400 and history[-1] > 0.999 * history[-200]:
                break
    return J, residuals, it, False


def _solve(problem: FeasibilityProblem) -> FeasibilityOutcome:
    H_in, H_out = problem.H, problem.out_hamiltonian
    di, do = H_in.dim, H_out.dim
    check_budget((di * do) ** 2, "Choi matrix (squared)")
    mask = _support_mask(H_in, H_out, problem.require_covariance, problem.diagonal)
    exact = problem.epsilon == 0
    proj = _Projector(H_in, H_out, problem.beta, mask, problem.rho_in, problem.target, exact_output=exact)
    ball = None if exact else _Ball(problem.rho_in, problem.target, problem.epsilon, di, do)

    g_out = gibbs_state(H_out, problem.beta)
    J_safe = np.kron(g_out, np.eye(di)).astype(complex)
    safe_min = float(np.min(np.diag(g_out).real))
    # the identity is a second start when input and output spaces agree; it
    # rescues thin feasible sets that contain it (e.g. target == rho_in)
    starts = [J_safe]
    if H_in.levels == H_out.levels:
        v = np.eye(di).reshape(-1)
        starts.append(np.outer(v, v).astype(complex))
    iters = 0
    for J0 in starts:
        # polishing moves the output by at most 2 * mixing weight, and that
        # weight is below psd_tol / safe_min
        J, residuals, n, ok = _dykstra(J0, proj, ball, problem.max_iters, problem.tol, problem.tol * safe_min)
        iters += n
        if ok:
            break
    if not ok:
        return FeasibilityOutcome("not_found", None, residuals, iters)

    J = _polish(J, J_safe, safe_min)
    ch = QuantumChannel(J, H_in, H_out)
    out = apply(ch, problem.rho_in)
    frob = float(np.linalg.norm(out - problem.target))
    # independent verification; never trust the solver residuals alone
    checks = [is_cptp(ch, problem.tol), is_gibbs_preserving(ch, problem.beta, problem.tol)]
    if problem.require_covariance:
        checks.append(is_covariant(ch, problem.tol))
    ok = all(checks) and frob <= problem.epsilon + 3 * problem.tol
    return FeasibilityOutcome(
        "found" if ok else "not_found",
        ch if ok else None,
        residuals,
        iters,
        frob,
        trace_distance(out, problem.target),
    )


def find_gpo(problem: FeasibilityProblem) -> FeasibilityOutcome:
    outcome = _solve(problem)
    if _is_diagonal(problem.rho_in) and _is_diagonal(problem.target) and problem.H_out is None:
        outcome.oracle = blackwell_oracle(problem.rho_in, problem.target, problem.H, problem.beta)
    return outcome


def find_cgpo(problem: FeasibilityProblem) -> FeasibilityOutcome:
    if not problem.require_covariance:
        problem = FeasibilityProblem(**{**problem.__dict__, "require_covariance": True})
    return _solve(problem)


def _is_diagonal(a: np.ndarray) -> bool:
    return bool(np.allclose(a, np.diag(np.diag(a)), atol=1e-14))


def _as_distribution(p) -> np.ndarray:
    p = np.asarray(p)
    if p.ndim == 2:
        if not _is_diagonal(p):
            raise ValueError("Blackwell oracle needs diagonal states")
        p = np.diag(p)
    return np.real(p).astype(float)


def blackwell_oracle(p, p_prime, H: HarmonicHamiltonian, beta: float) -> bool:
    """Exact classical convertibility via Lorenz-curve dominance."""
    return thermomajorizes(_as_distribution(p), _as_distribution(p_prime), gibbs_distribution(H, beta))


def blackwell_margin(p, p_prime, H: HarmonicHamiltonian, beta: float) -> float:
    return lorenz_margin(_as_distribution(p), _as_distribution(p_prime), gibbs_distribution(H, beta))


def minimal_epsilon(problem: FeasibilityProblem, hi: float | None = None, steps: int = 20) -> tuple[float, FeasibilityOutcome]:
    """Bisect the Frobenius radius for the smallest ``epsilon`` the solver reaches.

    Returns the smallest radius at which a witness was found and that witness.
    ``hi`` defaults to the distance of the Gibbs state, always reachable.
    """
    solve = find_cgpo if problem.require_covariance else find_gpo
    if hi is None:
        hi = float(np.linalg.norm(gibbs_state(problem.out_hamiltonian, problem.beta) - problem.target)) + 1e-6
    best = solve(FeasibilityProblem(**{**problem.__dict__, "epsilon": hi}))
    if not best.found:
        raise RuntimeError("solver failed at the Gibbs radius")
    lo = 0.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        out = solve(FeasibilityProblem(**{**problem.__dict__, "epsilon": mid}))
        if out.found:
            hi, best = mid, out
        else:
            lo = mid
    return hi, best


def random_cptp_choi(H_in: HarmonicHamiltonian, H_out: HarmonicHamiltonian, rng: np.random.Generator) -> np.ndarray:
    di, do = H_in.dim, H_out.dim
    n = di * do
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    G = g @ g.conj().T
    X = np.einsum("aiaj->ij", G.reshape(do, di, do, di))
    w, v = np.linalg.eigh(X)
    Xm = (v / np.sqrt(w)) @ v.conj().T
    K = np.kron(np.eye(do), Xm)
    return hermitize(K @ G @ K.conj().T)


def random_gp_channel(H: HarmonicHamiltonian, beta: float, seed: int | None = None,
                      covariant: bool = False, max_iters: int = DEFAULT_MAX_ITERS,
                      tol: float = DEFAULT_TOL, diagonal: bool = False) -> QuantumChannel:
    """Random CPTP map pushed into the Gibbs-preserving (optionally covariant) set.

    Dykstra's iteration started at a Ginibre channel converges to its
    projection onto the feasible set, so distinct seeds give distinct maps.
    """
    rng = np.random.default_rng(seed)
    di = H.dim
    check_budget(di ** 4, "Choi matrix (squared)")
    J0 = random_cptp_choi(H, H, rng)
    mask = _support_mask(H, H, covariant, diagonal)
    J0 = np.where(mask.reshape(J0.shape), J0, 0)
    proj = _Projector(H, H, beta, mask)
    J, residuals, iters, ok = _dykstra(J0, proj, None, max_iters, tol)
    if not ok:
        raise RuntimeError(f"projection failed after {iters} iterations: {residuals}")
    g = gibbs_state(H, beta)
    J_safe = np.kron(g, np.eye(di)).astype(complex)
    J = _polish(J, J_safe, float(np.min(np.diag(g).real)))
    return QuantumChannel(J, H, H)


def random_gp_stochastic_matrix(H: HarmonicHamiltonian, beta: float, seed: int | None = None) -> np.ndarray:
    """Column-stochastic matrix ``T`` with ``T g = g`` for the Gibbs vector ``g``."""
    ch = random_gp_channel(H, beta, seed, diagonal=True)
    J = ch.tensor4()
    d = H.dim
    return np.real(np.array([[J[a, i, a, i] for i in range(d)] for a in range(d)]))
