import numpy as np
import pytest

from cgpo_kit.protocols.convert import CatalyticBudget, correlated_catalytic_convert
from cgpo_kit.qcore import random_density_matrix
from cgpo_kit.thermo import gibbs_state


def test_identity_conversion(H, rng):
    rho = random_density_matrix(2, rng)
    rep = correlated_catalytic_convert(rho, rho, H, H.beta)
    assert rep.status == "success"
    assert rep.error == pytest.approx(0, abs=1e-12)
    assert rep.route == "identity"


def test_to_gibbs_is_free(H, rho_paper):
    rep = correlated_catalytic_convert(rho_paper, gibbs_state(H), H, H.beta, CatalyticBudget(max_copies=1))
    assert rep.status == "success"
    assert rep.error <= 1e-9
    assert rep.residuals["catalyst_exactness"] <= 1e-9
    assert rep.residuals["covariance"] <= 1e-9


def test_free_energy_increase_is_impossible(H, rho_paper):
    rep = correlated_catalytic_convert(gibbs_state(H), rho_paper, H, H.beta)
    assert rep.status == "impossible"
    assert rep.gap < 0
    assert rep.to_dict()["free_energy_gap"] == rep.gap


def test_incoherent_to_coherent_stays_partial(H, rho_paper, plus):
    budget = CatalyticBudget(max_copies=1, bisection_steps=6)
    rep = correlated_catalytic_convert(rho_paper, plus, H, H.beta, budget)
    assert rep.gap > 0
    assert rep.status == "partial"
    # covariant maps cannot create coherence, so the output stays diagonal
    assert rep.error > 0.9
    assert np.isfinite(rep.error)
