"""Gibbs states, free energies and classical thermomajorization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qcore import HarmonicHamiltonian, hermitize

SUPPORT_TOL = 1e-10
LORENZ_TOL = 1e-12


def _beta(H: HarmonicHamiltonian, beta: float | None) -> float:
    if beta is None:
        beta = H.beta
    if beta is None:
        raise ValueError("no inverse temperature given and Hamiltonian has no default")
    beta = float(beta)
    if not math.isfinite(beta) or beta < 0:
        raise ValueError("beta must be finite and nonnegative")
    return beta


def gibbs_distribution(H: HarmonicHamiltonian, beta: float | None = None) -> np.ndarray:
    beta = _beta(H, beta)
    e = H.energies
    # shift by the ground energy so that exp never overflows
    w = np.exp(-beta * (e - e.min()))
    return w / w.sum()


def gibbs_state(H: HarmonicHamiltonian, beta: float | None = None) -> np.ndarray:
    return np.diag(gibbs_distribution(H, beta)).astype(complex)


def partition_function(H: HarmonicHamiltonian, beta: float | None = None) -> float:
    beta = _beta(H, beta)
    return float(np.sum(np.exp(-beta * H.energies)))


def log_partition_function(H: HarmonicHamiltonian, beta: float | None = None) -> float:
    beta = _beta(H, beta)
    e = -beta * H.energies
    m = e.max()
    return float(m + np.log(np.sum(np.exp(e - m))))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Quantum relative entropy ``Tr rho (ln rho - ln sigma)`` in nats.

    Returns ``inf`` when the support of ``rho`` is not contained in the
    support of ``sigma`` (eigenvalues below 1e-10 count as outside).
    """
    if rho.shape != sigma.shape:
        raise ValueError("dimension mismatch")
    wr, vr = np.linalg.eigh(hermitize(rho))
    ws, vs = np.linalg.eigh(hermitize(sigma))
    kernel = vs[:, ws <= SUPPORT_TOL]
    if kernel.shape[1]:
        leak = np.real(np.trace(kernel.conj().T @ rho @ kernel))
        if leak > SUPPORT_TOL:
            return math.inf
    wr = np.clip(wr, 0.0, None)
    pos = wr > 0
    neg_entropy = float(np.sum(wr[pos] * np.log(wr[pos])))
    keep = ws > SUPPORT_TOL
    # Tr rho ln sigma restricted to supp(sigma)
    overlap = np.abs(vs.conj().T @ vr) ** 2 @ wr
    cross = float(np.sum(overlap[keep] * np.log(ws[keep])))
    return max(neg_entropy - cross, 0.0)


def free_energy(rho: np.ndarray, H: HarmonicHamiltonian, beta: float | None = None) -> float:
    """Dimensionless nonequilibrium free energy ``S(rho || gibbs)``."""
    if rho.shape[0] != H.dim:
        raise ValueError("state and Hamiltonian dimensions differ")
    return relative_entropy(rho, gibbs_state(H, beta))


def kl_divergence(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    s = p > 0
    if np.any(q[s] <= 0):
        return math.inf
    return float(np.sum(p[s] * np.log(p[s] / q[s])))


def _check_distribution(p, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if np.any(np.isnan(p)):
        raise ValueError(f"{name} contains NaN")
    if np.any(p < -1e-15) or abs(p.sum() - 1) > 1e-12:
        raise ValueError(f"{name} is not a probability vector")
    return np.clip(p, 0.0, None)


def renyi_divergence(p, q, alpha: float) -> float:
    """Classical Renyi divergence ``sgn(a)/(a-1) ln sum p^a q^(1-a)``.

    ``alpha`` may be any extended real; 0, 1 and the infinities use their
    limit formulas (alpha=0 is the limit from above).
    """
    p = _check_distribution(p, "p")
    q = _check_distribution(q, "q")
    if p.shape != q.shape:
        raise ValueError("length mismatch")
    if alpha is None or (isinstance(alpha, float) and math.isnan(alpha)):
        raise ValueError("alpha is NaN")
    sp = p > 0
    if np.any(q[sp] <= 0):
        if alpha >= 0:
            return math.inf
    if alpha == 1:
        return kl_divergence(p, q)
    if alpha == math.inf:
        return float(np.log(np.max(p[sp] / q[sp])))
    if alpha == -math.inf:
        if np.any(~sp):
            return math.inf
        return float(np.log(np.max(q / p)))
    if alpha == 0:
        return float(-np.log(np.sum(q[sp])))
    if alpha < 0:
        if np.any(~sp):
            return math.inf
        terms = np.log(p) * alpha + np.log(q) * (1 - alpha)
    else:
        terms = np.log(p[sp]) * alpha + np.log(q[sp]) * (1 - alpha)
    m = terms.max()
    lse = m + np.log(np.sum(np.exp(terms - m)))
    val = float(np.sign(alpha) / (alpha - 1) * lse)
    if math.isnan(val):
        raise ValueError("Renyi divergence evaluated to NaN")
    # rounding can push an exact zero slightly negative
    return 0.0 if abs(val) < 1e-15 else val


def extended_free_energy(p, H: HarmonicHamiltonian, beta: float | None, alpha: float) -> float:
    """``(S_alpha(p || gibbs) - ln Z) / beta`` in energy units."""
    b = _beta(H, beta)
    if b == 0:
        raise ValueError("infinite-temperature extended free energy undefined")
    s = renyi_divergence(p, gibbs_distribution(H, b), alpha)
    return (s - log_partition_function(H, b)) / b


@dataclass(frozen=True)
class LorenzCurve:
    """Concave piecewise-linear curve through ``(cum p, cum q)`` points."""

    x: np.ndarray
    y: np.ndarray

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def upper(self, xs) -> np.ndarray:
        """Curve height at ``xs``; a vertical run at x=0 counts with its top."""
        x, y = self.x, self.y
        # keep the highest point for repeated abscissae
        keep = np.ones(len(x), dtype=bool)
        keep[:-1] = x[1:] > x[:-1]
        return np.interp(xs, x[keep], y[keep])

    def slopes(self) -> np.ndarray:
        dx = np.diff(self.x)
        dy = np.diff(self.y)
        with np.errstate(divide="ignore"):
            return np.where(dx > 0, dy / np.where(dx > 0, dx, 1), np.inf)

    def to_csv(self) -> str:
        rows = ["x,y"] + [f"{a!r},{b!r}" for a, b in self.breakpoints]
        return "\n".join(rows) + "\n"


def lorenz_curve(p, q) -> LorenzCurve:
    p = _check_distribution(p, "p")
    q = _check_distribution(q, "q")
    if np.any(q <= 0):
        raise ValueError("reference distribution must be strictly positive")
    ratio = p / q
    order = np.argsort(ratio, kind="stable")
    r = ratio[order]
    ps = p[order]
    qs = q[order]
    # merge equal-ratio runs into one segment
    groups = np.concatenate([[True], ~np.isclose(r[1:], r[:-1], rtol=0, atol=1e-14)])
    gid = np.cumsum(groups) - 1
    pm = np.bincount(gid, weights=ps)
    qm = np.bincount(gid, weights=qs)
    x = np.concatenate([[0.0], np.cumsum(pm)])
    y = np.concatenate([[0.0], np.cumsum(qm)])
    x[-1] = 1.0
    y[-1] = 1.0
    return LorenzCurve(x, y)


def lorenz_margin(p, p_prime, q) -> float:
    """Minimum of ``curve(p) - curve(p')`` over the union of breakpoints."""
    a = lorenz_curve(p, q)
    b = lorenz_curve(p_prime, q)
    xs = np.union1d(a.x, b.x)
    return float(np.min(a.upper(xs) - b.upper(xs)))


def thermomajorizes(p, p_prime, q, tol: float = LORENZ_TOL) -> bool:
    """True iff the Lorenz curve of ``(p, q)`` is nowhere below that of ``(p', q)``."""
    return lorenz_margin(p, p_prime, q) >= -tol
