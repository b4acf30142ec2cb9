"""Desk-scale numerics for covariant Gibbs-preserving operations."""

from importlib import metadata as _metadata

from .channels import QuantumChannel, is_covariant, is_cptp, is_gibbs_preserving
from .feasibility import FeasibilityProblem, blackwell_oracle, find_cgpo, find_gpo, minimal_epsilon
from .qcore import CompositeLabel, DimensionBudgetError, HarmonicHamiltonian
from .thermo import free_energy, gibbs_state, lorenz_curve, renyi_divergence, thermomajorizes

try:
    __version__ = _metadata.version("cgpo-kit")
except _metadata.PackageNotFoundError:
    __version__ = "0.0.0"
