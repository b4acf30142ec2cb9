"""Dense linear-algebra primitives for finite-dimensional quantum states.

States are plain ``numpy`` arrays (complex, square). Hamiltonians are always
diagonal in the computational basis, so every basis used here is an energy
eigenbasis.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10

DEFAULT_MAX_DIM = 4096
_max_dim_override: int | None = None


class DimensionBudgetError(ValueError):
    """Raised when a dense object would exceed the configured dimension budget."""

    code = "dimension_budget_exceeded"


def max_dim() -> int:
    """Current dimension budget (override > ``CGPO_KIT_MAX_DIM`` > default)."""
    if _max_dim_override is not None:
        return _max_dim_override
    env = os.environ.get("CGPO_KIT_MAX_DIM")
    if env:
        return int(env)
    return DEFAULT_MAX_DIM


def set_max_dim(value: int | None) -> None:
    global _max_dim_override
    _max_dim_override = None if value is None else int(value)


def check_budget(dim: int, what: str = "state") -> None:
    limit = max_dim()
    if dim > limit:
        raise DimensionBudgetError(
            f"dimension budget exceeded: {what} needs dim {dim} > {limit}"
        )


@dataclass(frozen=True)
class HarmonicHamiltonian:
    """Diagonal Hamiltonian with energies ``levels[i] * delta``.

    ``levels`` are integers; the gcd of all pairwise differences must be 1 so
    that ``delta`` is the largest common spacing and ``2*pi/delta`` is the
    shortest common period.
    """

    levels: tuple[int, ...]
    delta: float = 1.0
    beta: float | None = None

    def __post_init__(self):
        levels = tuple(int(n) for n in self.levels)
        if any(l != n for l, n in zip(levels, self.levels)):
            raise ValueError("levels must be integers")
        object.__setattr__(self, "levels", levels)
        if not len(levels):
            raise ValueError("empty Hamiltonian")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.beta is not None and self.beta < 0:
            raise ValueError("beta must be nonnegative")
        diffs = {abs(a - levels[0]) for a in levels}
        diffs.discard(0)
        if diffs and reduce(math.gcd, diffs) != 1:
            raise ValueError(
                "level differences share a common factor; rescale delta so the gcd is 1"
            )

    @classmethod
    def from_energies(cls, energies: Sequence[float], delta: float, beta=None):
        levels = np.asarray(energies, dtype=float) / delta
        rounded = np.rint(levels)
        if not np.allclose(levels, rounded, atol=1e-9):
            raise ValueError("energies are not integer multiples of delta")
        return cls(tuple(int(n) for n in rounded), delta, beta)

    @property
    def dim(self) -> int:
        return len(self.levels)

    @property
    def energies(self) -> np.ndarray:
        return np.asarray(self.levels, dtype=float) * self.delta

    @property
    def period(self) -> float:
        return 2 * np.pi / self.delta

    @property
    def spread(self) -> int:
        return max(self.levels) - min(self.levels)

    def matrix(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)

    def tensor_power(self, n: int) -> "HarmonicHamiltonian":
        """Hamiltonian of ``n`` non-interacting copies (levels add)."""
        if n < 1:
            raise ValueError("need at least one copy")
        levels = np.asarray(self.levels)
        total = levels
        for _ in range(n - 1):
            total = np.add.outer(total, levels).ravel()
        return HarmonicHamiltonian._unchecked(tuple(int(x) for x in total), self.delta, self.beta)

    def tensor(self, other: "HarmonicHamiltonian") -> "HarmonicHamiltonian":
        if not np.isclose(self.delta, other.delta):
            raise ValueError("Hamiltonians with different spacings")
        total = np.add.outer(np.asarray(self.levels), np.asarray(other.levels)).ravel()
        return HarmonicHamiltonian._unchecked(tuple(int(x) for x in total), self.delta, self.beta)

    @classmethod
    def _unchecked(cls, levels, delta, beta):
        # composite systems inherit the gcd property from their factors, but a
        # single-level factor combined with itself would trip the check
        obj = object.__new__(cls)
        object.__setattr__(obj, "levels", tuple(levels))
        object.__setattr__(obj, "delta", float(delta))
        object.__setattr__(obj, "beta", beta)
        return obj

    def to_dict(self) -> dict:
        out = {"delta": self.delta, "levels": list(self.levels)}
        if self.beta is not None:
            out["beta"] = self.beta
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "HarmonicHamiltonian":
        return cls(tuple(data["levels"]), float(data.get("delta", 1.0)), data.get("beta"))


def trivial_hamiltonian(dim: int, delta: float = 1.0) -> HarmonicHamiltonian:
    """All levels degenerate (used for classical label registers)."""
    return HarmonicHamiltonian((0,) * dim, delta)


@dataclass(frozen=True)
class CompositeLabel:
    """Named tensor factors of a composite system, in Kronecker order."""

    factors: tuple[tuple[str, int], ...]
    hamiltonians: tuple[HarmonicHamiltonian | None, ...] = field(default=())

    def __post_init__(self):
        names = [n for n, _ in self.factors]
        if len(set(names)) != len(names):
            raise ValueError("duplicate subsystem names")
        if self.hamiltonians and len(self.hamiltonians) != len(self.factors):
            raise ValueError("one Hamiltonian per factor")
        for (name, d), h in zip(self.factors, self.hamiltonians):
            if h is not None and h.dim != d:
                raise ValueError(f"Hamiltonian of {name!r} has wrong dimension")

    @classmethod
    def copies(cls, d: int, n: int, prefix: str = "S", H: HarmonicHamiltonian | None = None):
        factors = tuple((f"{prefix}{i}", d) for i in range(n))
        hams = (H,) * n if H is not None else ()
        return cls(factors, hams)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.factors]

    @property
    def dims(self) -> list[int]:
        return [d for _, d in self.factors]

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown subsystem {name!r}") from None

    def total_hamiltonian(self) -> HarmonicHamiltonian:
        if not self.hamiltonians or any(h is None for h in self.hamiltonians):
            raise ValueError("not every factor carries a Hamiltonian")
        return reduce(lambda a, b: a.tensor(b), self.hamiltonians)

    def __add__(self, other: "CompositeLabel") -> "CompositeLabel":
        hams = ()
        if self.hamiltonians and other.hamiltonians:
            hams = self.hamiltonians + other.hamiltonians
        return CompositeLabel(self.factors + other.factors, hams)


# ---------------------------------------------------------------- validation


def is_density_matrix(rho: np.ndarray) -> bool:
    try:
        validate_density_matrix(rho)
    except ValueError:
        return False
    return True


def validate_density_matrix(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if herm > HERMITIAN_TOL:
        raise ValueError(f"not Hermitian (deviation {herm:.3g})")
    tr = np.trace(rho).real
    if abs(tr - 1) > TRACE_TOL:
        raise ValueError(f"trace {tr!r} is not 1")
    w = np.linalg.eigvalsh(rho)
    if w[0] < -PSD_TOL:
        raise ValueError(f"negative eigenvalue {w[0]:.3g}")
    return rho


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1
    return v


def projector(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    return np.outer(vec, vec.conj())


def plus_state() -> np.ndarray:
    return projector(np.array([1, 1]))


def dephase(rho: np.ndarray, H: HarmonicHamiltonian) -> np.ndarray:
    """Pinch onto the zero-mode blocks (kills all energy coherence)."""
    n = np.asarray(H.levels)
    return np.where(n[:, None] == n[None, :], rho, 0)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed random state of the given rank (full rank by default)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real)


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    return random_density_matrix(dim, rng, rank=1)


# ------------------------------------------------------------- composition


def tensor(*states: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of operators."""
    if not states:
        raise ValueError("nothing to tensor")
    dim = int(np.prod([s.shape[0] for s in states]))
    check_budget(dim)
    return reduce(np.kron, states)


def tensor_power(rho: np.ndarray, n: int) -> np.ndarray:
    if n == 0:
        return np.ones((1, 1), dtype=complex)
    check_budget(rho.shape[0] ** n)
    out = rho
    for _ in range(n - 1):
        out = np.kron(out, rho)
    return out


def partial_trace_dims(state: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced operator on the factors ``keep`` (kept in ascending order)."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(set(keep))
    if any(k < 0 or k >= n for k in keep):
        raise ValueError("keep index out of range")
    if state.shape[0] != int(np.prod(dims)):
        raise ValueError("dims do not match operator size")
    drop = [i for i in range(n) if i not in keep]
    t = state.reshape(dims + dims)
    # contract every dropped row index with its column partner
    perm = keep + drop + [n + i for i in keep] + [n + i for i in drop]
    t = t.transpose(perm)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    dd = int(np.prod([dims[i] for i in drop])) if drop else 1
    t = t.reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


def partial_trace(state: np.ndarray, label: CompositeLabel, keep: Iterable[str]) -> np.ndarray:
    keep = list(keep)
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    idx = [label.index(name) for name in keep]
    return partial_trace_dims(state, label.dims, idx)


def permute_subsystems(state: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so that new factor ``j`` is old factor ``order[j]``."""
    dims = list(dims)
    n = len(dims)
    t = state.reshape(dims + dims)
    t = t.transpose(list(order) + [n + i for i in order])
    d = state.shape[0]
    return t.reshape(d, d)


# ----------------------------------------------------------- time evolution


def evolution_phases(H: HarmonicHamiltonian, t: float) -> np.ndarray:
    """Diagonal of ``exp(-i H t)``."""
    return np.exp(-1j * H.energies * t)


def time_evolve(state: np.ndarray, H: HarmonicHamiltonian, t: float) -> np.ndarray:
    """``exp(-iHt) state exp(iHt)`` for diagonal ``H``."""
    if state.shape[0] != H.dim:
        raise ValueError("state and Hamiltonian dimensions differ")
    u = evolution_phases(H, t)
    return state * np.outer(u, u.conj())


# ------------------------------------------------------------ matrix functions


def _eigh_clipped(a: np.ndarray):
    w, v = np.linalg.eigh(hermitize(a))
    return np.clip(w, 0.0, None), v


def sqrtm_psd(a: np.ndarray) -> np.ndarray:
    w, v = _eigh_clipped(a)
    return (v * np.sqrt(w)) @ v.conj().T


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values; Hermitian input uses the eigenvalue route."""
    if np.allclose(a, a.conj().T, atol=1e-14):
        return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(a)))))
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Unnormalised trace distance ``|a - b|_1`` (ranges over [0, 2] for states)."""
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(a - b)))))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Square-root fidelity ``Tr sqrt(sqrt(a) b sqrt(a))``."""
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    sa = sqrtm_psd(a)
    w = np.linalg.eigvalsh(hermitize(sa @ b @ sa))
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))))
    return min(max(f, 0.0), 1.0)


def bures_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(max(0.0, 1.0 - fidelity(a, b))))


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


# ----------------------------------------------------------------- JSON


def matrix_to_dict(a: np.ndarray) -> dict:
    a = np.asarray(a)
    return {"dim": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_dict(data: dict) -> np.ndarray:
    re = np.asarray(data["re"], dtype=float)
    im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
    a = re + 1j * im
    if "dim" in data and a.shape != (data["dim"], data["dim"]):
        raise ValueError("matrix shape does not match 'dim'")
    return a
