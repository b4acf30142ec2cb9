"""Quantum channels in Choi form and their defining property checks.

Choi convention, used everywhere in the package::

    J = sum_ij  E(|i><j|)  (x)  |i><j|        (output factor first)

so that ``E(rho) = Tr_in[J (I (x) rho^T)]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qcore import (
    HarmonicHamiltonian,
    check_budget,
    evolution_phases,
    hermitize,
    matrix_from_dict,
    matrix_to_dict,
    trace_distance,
)
from .thermo import gibbs_state

CPTP_TOL = 1e-9


@dataclass(frozen=True)
class QuantumChannel:
    choi: np.ndarray
    H_in: HarmonicHamiltonian
    H_out: HarmonicHamiltonian

    def __post_init__(self):
        n = self.dim_in * self.dim_out
        if self.choi.shape != (n, n):
            raise ValueError(
                f"Choi shape {self.choi.shape} does not match dims {self.dim_out}x{self.dim_in}"
            )

    @property
    def dim_in(self) -> int:
        return self.H_in.dim

    @property
    def dim_out(self) -> int:
        return self.H_out.dim

    def tensor4(self) -> np.ndarray:
        """Choi reshaped to ``[out, in, out', in']``."""
        return self.choi.reshape(self.dim_out, self.dim_in, self.dim_out, self.dim_in)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply(self, rho)

    def to_dict(self) -> dict:
        return {
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
            "choi": matrix_to_dict(self.choi),
            "levels_in": list(self.H_in.levels),
            "levels_out": list(self.H_out.levels),
            "delta": self.H_in.delta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuantumChannel":
        d = float(data.get("delta", 1.0))
        H_in = HarmonicHamiltonian._unchecked(tuple(data["levels_in"]), d, None)
        H_out = HarmonicHamiltonian._unchecked(tuple(data["levels_out"]), d, None)
        ch = cls(matrix_from_dict(data["choi"]), H_in, H_out)
        if ch.dim_in != data["dim_in"] or ch.dim_out != data["dim_out"]:
            raise ValueError("dims inconsistent with levels")
        return ch


@dataclass
class CheckReport:
    passed: bool
    violation: float
    witness: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {"pass": bool(self.passed), "violation": float(self.violation), "witness": self.witness}


# ------------------------------------------------------------ construction


def apply(ch: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    if rho.shape != (ch.dim_in, ch.dim_in):
        raise ValueError(f"input of shape {rho.shape} does not fit channel with dim_in={ch.dim_in}")
    return np.einsum("aibj,ij->ab", ch.tensor4(), rho)


def choi_from_superop_fn(fn, H_in: HarmonicHamiltonian, H_out: HarmonicHamiltonian) -> QuantumChannel:
    """Build the Choi matrix by feeding ``fn`` every matrix unit ``|i><j|``."""
    di, do = H_in.dim, H_out.dim
    check_budget(di * do, "Choi matrix")
    J = np.zeros((do, di, do, di), dtype=complex)
    for i in range(di):
        for j in range(di):
            e = np.zeros((di, di), dtype=complex)
            e[i, j] = 1
            J[:, i, :, j] = fn(e)
    return QuantumChannel(J.reshape(do * di, do * di), H_in, H_out)


def from_kraus(operators: Sequence[np.ndarray], H_in: HarmonicHamiltonian, H_out: HarmonicHamiltonian | None = None,
               tol: float = CPTP_TOL) -> QuantumChannel:
    H_out = H_in if H_out is None else H_out
    ops = [np.asarray(k, dtype=complex) for k in operators]
    if not ops:
        raise ValueError("empty Kraus set")
    for k in ops:
        if k.shape != (H_out.dim, H_in.dim):
            raise ValueError(f"Kraus operator of shape {k.shape}, expected {(H_out.dim, H_in.dim)}")
    completeness = sum(k.conj().T @ k for k in ops)
    dev = np.max(np.abs(completeness - np.eye(H_in.dim)))
    if dev > tol:
        raise ValueError(f"incomplete Kraus set: |sum K^dag K - I| = {dev:.3g}")
    # column-stacking: vec(K) with input index last matches the Choi layout
    vecs = [k.reshape(-1) for k in ops]
    J = sum(np.outer(v, v.conj()) for v in vecs)
    return QuantumChannel(J, H_in, H_out)


def to_kraus(ch: QuantumChannel, tol: float = 1e-12) -> list[np.ndarray]:
    w, v = np.linalg.eigh(hermitize(ch.choi))
    ops = []
    for val, vec in zip(w[::-1], v.T[::-1]):
        if val <= tol:
            break
        ops.append(np.sqrt(val) * vec.reshape(ch.dim_out, ch.dim_in))
    return ops


def identity_channel(H: HarmonicHamiltonian) -> QuantumChannel:
    return from_kraus([np.eye(H.dim)], H)


def unitary_channel(U: np.ndarray, H: HarmonicHamiltonian) -> QuantumChannel:
    return from_kraus([U], H)


def phase_shift_channel(H: HarmonicHamiltonian, t: float) -> QuantumChannel:
    """The time translation ``rho -> exp(-iHt) rho exp(iHt)``."""
    return from_kraus([np.diag(evolution_phases(H, t))], H)


def replacement_channel(sigma: np.ndarray, H_in: HarmonicHamiltonian, H_out: HarmonicHamiltonian | None = None) -> QuantumChannel:
    """``rho -> Tr(rho) sigma``; Choi is ``sigma (x) I``."""
    H_out = H_in if H_out is None else H_out
    return QuantumChannel(np.kron(sigma, np.eye(H_in.dim)).astype(complex), H_in, H_out)


def gibbs_replacement_channel(H_in: HarmonicHamiltonian, beta: float | None = None,
                              H_out: HarmonicHamiltonian | None = None) -> QuantumChannel:
    H_out = H_in if H_out is None else H_out
    return replacement_channel(gibbs_state(H_out, beta), H_in, H_out)


def dephasing_channel(H: HarmonicHamiltonian) -> QuantumChannel:
    """Pinching onto energy eigenspaces."""
    n = np.asarray(H.levels)
    ops = [np.diag((n == lvl).astype(complex)) for lvl in np.unique(n)]
    return from_kraus(ops, H)


def compose(a: QuantumChannel, b: QuantumChannel) -> QuantumChannel:
    """Channel ``a o b`` (apply ``b`` first)."""
    if b.dim_out != a.dim_in:
        raise ValueError("cannot compose: dimension mismatch")
    Ja = a.tensor4()
    Jb = b.tensor4()
    # (a o b)(|i><j|) = sum_{kl} b(|i><j|)_{kl} a(|k><l|)
    J = np.einsum("akbl,kilj->aibj", Ja, Jb)
    n = a.dim_out * b.dim_in
    return QuantumChannel(J.reshape(n, n), b.H_in, a.H_out)


def tensor_channels(a: QuantumChannel, b: QuantumChannel) -> QuantumChannel:
    di, do = a.dim_in * b.dim_in, a.dim_out * b.dim_out
    check_budget(di * do, "Choi matrix")
    Ja = a.tensor4()
    Jb = b.tensor4()
    J = np.einsum("aibj,ckdl->acikbdjl", Ja, Jb)
    return QuantumChannel(J.reshape(do * di, do * di), a.H_in.tensor(b.H_in), a.H_out.tensor(b.H_out))


def tensor_power_channel(ch: QuantumChannel, n: int) -> QuantumChannel:
    out = ch
    for _ in range(n - 1):
        out = tensor_channels(out, ch)
    return out


def conjugate_by_phases(ch: QuantumChannel, t_out: float, t_in: float) -> QuantumChannel:
    """Choi of ``T_{t_out} o ch o T_{t_in}``."""
    u = evolution_phases(ch.H_out, t_out)
    v = evolution_phases(ch.H_in, t_in)
    d = np.kron(u, v)
    return QuantumChannel(ch.choi * np.outer(d, d.conj()), ch.H_in, ch.H_out)


# ------------------------------------------------------------------ checks


def is_cptp(ch: QuantumChannel, tol: float = CPTP_TOL) -> CheckReport:
    herm = float(np.max(np.abs(ch.choi - ch.choi.conj().T)))
    min_eig = float(np.linalg.eigvalsh(hermitize(ch.choi))[0])
    tp = np.einsum("aiaj->ij", ch.tensor4())
    tp_dev = float(np.max(np.abs(tp - np.eye(ch.dim_in))))
    violation = max(herm, max(-min_eig, 0.0), tp_dev)
    return CheckReport(
        violation <= tol,
        violation,
        {"hermiticity": herm, "min_choi_eigenvalue": min_eig, "trace_preservation": tp_dev},
    )


def is_gibbs_preserving(ch: QuantumChannel, beta: float | None = None, tol: float = CPTP_TOL) -> CheckReport:
    g_in = gibbs_state(ch.H_in, beta)
    g_out = gibbs_state(ch.H_out, beta)
    violation = trace_distance(apply(ch, g_in), g_out)
    return CheckReport(violation <= tol, violation, {})


@dataclass
class ModeDecomposition:
    modes: dict[int, np.ndarray]

    def reconstruct(self) -> np.ndarray:
        return sum(self.modes.values())

    def off_mode_norm(self) -> float:
        return max((float(np.max(np.abs(b))) for w, b in self.modes.items() if w != 0), default=0.0)


def mode_index(H: HarmonicHamiltonian) -> np.ndarray:
    n = np.asarray(H.levels)
    return n[:, None] - n[None, :]


def mode_decompose(op: np.ndarray, H: HarmonicHamiltonian) -> ModeDecomposition:
    """Split ``op`` into blocks where entry (i, j) belongs to mode ``n_i - n_j``."""
    w = mode_index(H)
    return ModeDecomposition({int(k): np.where(w == k, op, 0) for k in np.unique(w)})


def is_incoherent(rho: np.ndarray, H: HarmonicHamiltonian, tol: float = 1e-9) -> bool:
    return off_mode_leakage(rho, H) <= tol


def off_mode_leakage(rho: np.ndarray, H: HarmonicHamiltonian) -> float:
    w = mode_index(H)
    off = np.abs(rho[w != 0])
    return float(off.max()) if off.size else 0.0


def covariance_mask(H_in: HarmonicHamiltonian, H_out: HarmonicHamiltonian) -> np.ndarray:
    """Boolean mask over Choi entries ``[out, in, out', in']`` allowed for covariant maps."""
    no = np.asarray(H_out.levels)
    ni = np.asarray(H_in.levels)
    # entry (a,i,b,j) of J is <a|E(|i><j|)|b>; covariance needs n_a-n_b == n_i-n_j
    s = no[:, None] - ni[None, :]
    return (s[:, :, None, None] == s[None, None, :, :])


def is_covariant(ch: QuantumChannel, tol: float = CPTP_TOL) -> CheckReport:
    """Structural check: every ``E(|i><j|)`` lives in output mode ``n_i - n_j``."""
    mask = covariance_mask(ch.H_in, ch.H_out)
    J = ch.tensor4()
    bad = np.abs(np.where(mask, 0, J))
    leak = float(bad.max()) if bad.size else 0.0
    witness = {}
    if leak > 0:
        a, i, b, j = np.unravel_index(int(np.argmax(bad)), bad.shape)
        witness = {"input": [int(i), int(j)], "output_entry": [int(a), int(b)]}
    return CheckReport(leak <= tol, leak, witness)


def is_covariant_sampled(ch: QuantumChannel, tol: float = CPTP_TOL, samples: int = 64) -> CheckReport:
    """Definitional check ``T_t o E == E o T_t`` on ``t = k * period / samples``."""
    period = ch.H_in.period
    worst = 0.0
    worst_t = 0.0
    for k in range(samples):
        t = k * period / samples
        shifted = conjugate_by_phases(ch, t, -t)
        dev = float(np.max(np.abs(shifted.choi - ch.choi)))
        if dev > worst:
            worst, worst_t = dev, t
    return CheckReport(worst <= tol, worst, {"t": worst_t})


def project_covariant(ch: QuantumChannel) -> QuantumChannel:
    """Zero the cross-mode Choi entries (orthogonal projection, idempotent)."""
    mask = covariance_mask(ch.H_in, ch.H_out)
    J = np.where(mask, ch.tensor4(), 0).reshape(ch.choi.shape)
    return QuantumChannel(J, ch.H_in, ch.H_out)
