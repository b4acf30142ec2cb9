"""Constructive protocols: phase estimation, the CGPO sandwich and the catalyst compiler."""

from .catalyst import CatalystReport, CatalystState, build_catalyst, catalytic_channel, catalytic_round
from .convert import CatalyticBudget, ConversionReport, correlated_catalytic_convert
from .phase import (
    EstimatorDistribution,
    PhasePOVM,
    build_phase_povm,
    estimate_phase,
    variance_scaling,
)
from .pipeline import (
    ErrorBudget,
    PipelineParams,
    cgpo_pipeline,
    covariance_defect,
    error_budget,
    error_budget_sweep,
    set_output_exact,
)
from .sublinear import expected_error, sublinear_prepare, sublinear_study
