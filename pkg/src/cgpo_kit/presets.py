"""Named states and the two-level system of the worked example.

The qubit has energies ``E0 = 0``, ``E1 = ln 3`` and ``beta = 1``, so its
Gibbs state is ``diag(3/4, 1/4)``.
"""

from __future__ import annotations

import math

import numpy as np

from .qcore import HarmonicHamiltonian, plus_state
from .thermo import gibbs_state

PAPER_BETA = 1.0


def paper_hamiltonian() -> HarmonicHamiltonian:
    return HarmonicHamiltonian((0, 1), math.log(3), PAPER_BETA)


def paper_rho() -> np.ndarray:
    return np.diag([3 / 200, 197 / 200]).astype(complex)


STATE_PRESETS = {
    "paper-qubit-rho": paper_rho,
    "plus-state": plus_state,
    "paper-gibbs": lambda: gibbs_state(paper_hamiltonian(), PAPER_BETA),
}


def preset_state(name: str) -> np.ndarray:
    try:
        return STATE_PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown state preset {name!r}; known: {sorted(STATE_PRESETS)}") from None
