"""Compile an n-copy marginal conversion into a correlated-catalytic one.

Given a map ``Lambda`` on ``n`` copies with output ``tau_n = Lambda(rho^n)``,
the catalyst lives on ``n-1`` copies of the system plus an ``n``-level label:

    c = (1/n) sum_k rho^{(x)k-1} (x) tau_{n-k} (x) |k><k|,

where ``tau_i`` is the marginal of ``tau_n`` on its first ``i`` copies. One
round reads the label ``k``, inserts the fresh system at copy slot ``k``,
applies ``Lambda`` when ``k = n``, advances the label cyclically and hands
out the last copy as the system output. The catalyst returns to ``c``
exactly; the system leaves in the average single-copy marginal of
``tau_n``.

Label and slot indices are 0-based in code (``k = 0..n-1``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channels import QuantumChannel, apply, choi_from_superop_fn
from ..qcore import (
    HarmonicHamiltonian,
    check_budget,
    partial_trace_dims,
    permute_subsystems,
    tensor_power,
    trace_distance,
    trivial_hamiltonian,
)
from ..thermo import relative_entropy

EXACTNESS_TOL = 1e-9


@dataclass(frozen=True)
class CatalystState:
    """Block-diagonal catalyst on ``S^{n-1} (x) label``."""

    n: int
    d: int
    blocks: tuple[np.ndarray, ...]

    @property
    def label_dim(self) -> int:
        return self.n

    @property
    def system_dim(self) -> int:
        return self.d ** (self.n - 1)

    @property
    def dim(self) -> int:
        return self.system_dim * self.n

    def matrix(self) -> np.ndarray:
        check_budget(self.dim, "catalyst")
        c = np.zeros((self.dim, self.dim), dtype=complex)
        n = self.n
        view = c.reshape(self.system_dim, n, self.system_dim, n)
        for k, b in enumerate(self.blocks):
            view[:, k, :, k] = b / n
        return c

    def label_distribution(self) -> np.ndarray:
        return np.array([np.trace(b).real for b in self.blocks]) / self.n

    def hamiltonian(self, H: HarmonicHamiltonian) -> HarmonicHamiltonian:
        Hs = H.tensor_power(self.n - 1) if self.n > 1 else trivial_hamiltonian(1, H.delta)
        return Hs.tensor(trivial_hamiltonian(self.n, H.delta))


def first_marginals(tau: np.ndarray, d: int, n: int) -> list[np.ndarray]:
    """``[tau_0, ..., tau_n]`` with ``tau_0 = [[1]]``."""
    out = [np.ones((1, 1), dtype=complex)]
    for i in range(1, n):
        out.append(partial_trace_dims(tau, [d] * n, range(i)))
    out.append(tau)
    return out


def single_copy_marginals(tau: np.ndarray, d: int, n: int) -> list[np.ndarray]:
    return [partial_trace_dims(tau, [d] * n, [i]) for i in range(n)]


def catalyst_from_output(rho: np.ndarray, tau: np.ndarray, n: int) -> CatalystState:
    d = rho.shape[0]
    taus = first_marginals(tau, d, n)
    blocks = tuple(np.kron(tensor_power(rho, k), taus[n - 1 - k]) for k in range(n))
    return CatalystState(n, d, blocks)


def _round(X: np.ndarray, lam, d: int, n: int) -> np.ndarray:
    """One catalytic round on ``S_in (x) S^{n-1} (x) label`` (label read in its eigenbasis)."""
    D = d ** n
    X = X.reshape(D, n, D, n)
    out = np.zeros((D, n, D, n), dtype=complex)
    dims = [d] * n
    for k in range(n):
        block = X[:, k, :, k]
        if not np.any(block):
            continue
        # slot order: catalyst copies 1..k, then the input, then the rest
        order = list(range(1, k + 1)) + [0] + list(range(k + 1, n))
        y = permute_subsystems(block, dims, order)
        if k == n - 1:
            y = lam(y)
        # the last copy leaves as the system output, placed first
        y = permute_subsystems(y, dims, [n - 1] + list(range(n - 1)))
        k2 = (k + 1) % n
        out[:, k2, :, k2] += y
    return out.reshape(D * n, D * n)


def _as_callable(lambda_map):
    if isinstance(lambda_map, QuantumChannel):
        return lambda x: apply(lambda_map, x)
    return lambda_map


@dataclass
class CatalystReport:
    n: int
    catalyst_dim: int
    catalyst_exactness: float
    marginal_average_error: float
    system_error: float | None
    marginal_errors: list[float] | None
    correlation: float
    mutual_information: float

    @property
    def exact(self) -> bool:
        return self.catalyst_exactness <= EXACTNESS_TOL

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "catalyst_dim": self.catalyst_dim,
            "catalyst_exactness": self.catalyst_exactness,
            "catalyst_exact": self.exact,
            "marginal_average_error": self.marginal_average_error,
            "system_error": self.system_error,
            "max_marginal_error": None if self.marginal_errors is None else max(self.marginal_errors),
            "correlation": self.correlation,
            "mutual_information": self.mutual_information,
        }


def catalytic_round(lambda_map, rho: np.ndarray, catalyst: CatalystState) -> np.ndarray:
    """Joint state on ``S_out (x) S^{n-1} (x) label`` after one round on ``rho (x) c``."""
    d, n = catalyst.d, catalyst.n
    check_budget(d ** n * n, "catalytic round")
    return _round(np.kron(rho, catalyst.matrix()), _as_callable(lambda_map), d, n)


def build_catalyst(lambda_map, rho: np.ndarray, rho_prime: np.ndarray | None = None,
                   n: int | None = None) -> tuple[CatalystState, CatalystReport, np.ndarray]:
    """Catalyst for ``lambda_map`` on ``n`` copies of ``rho``, verified by running one round.

    ``lambda_map`` is a :class:`QuantumChannel` on ``n`` copies or a callable
    (then ``n`` must be given). Returns ``(catalyst, report, joint state)``.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    if n is None:
        if not isinstance(lambda_map, QuantumChannel):
            raise ValueError("n is required when lambda_map is a callable")
        n = round(np.log(lambda_map.dim_in) / np.log(d))
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(lambda_map, QuantumChannel) and lambda_map.dim_in != d ** n:
        raise ValueError("lambda_map does not act on n copies of the system")
    check_budget(d ** n * n, "catalyst")
    lam = _as_callable(lambda_map)
    tau = lam(tensor_power(rho, n))
    cat = catalyst_from_output(rho, tau, n)
    joint = _round(np.kron(rho, cat.matrix()), lam, d, n)

    dims = [d, cat.dim]
    c_out = partial_trace_dims(joint, dims, [1])
    s_out = partial_trace_dims(joint, dims, [0])
    marg = sum(single_copy_marginals(tau, d, n)) / n
    prod = np.kron(s_out, c_out)
    errs = None
    sys_err = None
    if rho_prime is not None:
        errs = [trace_distance(m, rho_prime) for m in single_copy_marginals(tau, d, n)]
        sys_err = trace_distance(s_out, rho_prime)
    report = CatalystReport(
        n=n,
        catalyst_dim=cat.dim,
        catalyst_exactness=trace_distance(c_out, cat.matrix()),
        marginal_average_error=trace_distance(s_out, marg),
        system_error=sys_err,
        marginal_errors=errs,
        correlation=trace_distance(joint, prod),
        mutual_information=relative_entropy(joint, prod),
    )
    return cat, report, joint


def catalytic_channel(lambda_map: QuantumChannel, H: HarmonicHamiltonian, n: int) -> QuantumChannel:
    """The round as a channel on ``S (x) S^{n-1} (x) label`` (small ``n`` only).

    The label carries a trivial Hamiltonian, so this channel is covariant and
    Gibbs-preserving whenever ``lambda_map`` is.
    """
    d = H.dim
    Hfull = H.tensor_power(n).tensor(trivial_hamiltonian(n, H.delta))
    check_budget(Hfull.dim ** 2, "catalytic channel Choi")
    lam = _as_callable(lambda_map)
    return choi_from_superop_fn(lambda X: _round(X, lam, d, n), Hfull, Hfull)

