import numpy as np
import pytest

from cgpo_kit.channels import (
    apply,
    gibbs_replacement_channel,
    identity_channel,
    is_covariant,
    is_cptp,
    is_gibbs_preserving,
    tensor_power_channel,
)
from cgpo_kit.feasibility import random_gp_channel
from cgpo_kit.protocols.catalyst import (
    build_catalyst,
    catalyst_from_output,
    catalytic_channel,
    catalytic_round,
    first_marginals,
)
from cgpo_kit.qcore import partial_trace_dims, random_density_matrix, tensor_power, trace_distance
from cgpo_kit.thermo import gibbs_state


def test_single_copy_is_trivial(H, rho_paper):
    g = gibbs_state(H)
    cat, rep, _ = build_catalyst(gibbs_replacement_channel(H), rho_paper, g)
    assert cat.dim == 1
    assert rep.exact
    assert rep.system_error < 1e-12


def test_dimension_formula(H, rho_paper):
    tau = tensor_power(rho_paper, 7)
    cat = catalyst_from_output(rho_paper, tau, 7)
    assert cat.dim == 2 ** 6 * 7
    assert cat.label_dim == 7
    m = cat.matrix()
    assert np.trace(m).real == pytest.approx(1)
    assert np.allclose(cat.label_distribution(), 1 / 7)


def test_first_marginals_are_consistent(rng):
    tau = random_density_matrix(8, rng)
    m = first_marginals(tau, 2, 3)
    assert m[0].shape == (1, 1) and m[3] is tau
    assert np.allclose(partial_trace_dims(m[2], [2, 2], [0]), m[1])


def test_correlated_map_is_exact_catalyst(H, rng):
    rho = random_density_matrix(2, rng)
    lam = random_gp_channel(H.tensor_power(3), H.beta, seed=4, covariant=True)
    cat, rep, joint = build_catalyst(lam, rho)
    assert rep.exact
    assert rep.marginal_average_error < 1e-12
    assert np.trace(joint).real == pytest.approx(1)


def test_system_error_within_marginal_errors(H, rng):
    rho = random_density_matrix(2, rng)
    target = random_density_matrix(2, rng)
    lam = random_gp_channel(H.tensor_power(3), H.beta, seed=9, covariant=True)
    _, rep, _ = build_catalyst(lam, rho, target)
    assert rep.system_error <= max(rep.marginal_errors) + 1e-9
    assert rep.correlation >= 0
    assert rep.mutual_information >= -1e-12


def test_product_map_leaves_no_correlation(H, rng):
    rho = random_density_matrix(2, rng)
    _, rep, _ = build_catalyst(tensor_power_channel(identity_channel(H), 3), rho, rho)
    assert rep.system_error < 1e-12
    assert rep.exact


def test_callable_needs_n(H, rho_paper):
    with pytest.raises(ValueError, match="n is required"):
        build_catalyst(lambda x: x, rho_paper)
    _, rep, _ = build_catalyst(lambda x: x, rho_paper, rho_paper, n=2)
    assert rep.exact


def test_round_matches_joint(H, rng):
    rho = random_density_matrix(2, rng)
    lam = random_gp_channel(H.tensor_power(2), H.beta, seed=2, covariant=True)
    cat, _, joint = build_catalyst(lam, rho)
    assert np.max(np.abs(catalytic_round(lam, rho, cat) - joint)) < 1e-14


def test_round_channel_is_covariant_gibbs_preserving(H):
    lam = random_gp_channel(H.tensor_power(3), H.beta, seed=1, covariant=True)
    ch = catalytic_channel(lam, H, 3)
    assert is_cptp(ch).passed
    assert is_gibbs_preserving(ch, H.beta).passed
    assert is_covariant(ch).passed
    # Gibbs on system and catalyst copies with any label state stays fixed
    g = gibbs_state(ch.H_in, H.beta)
    assert trace_distance(apply(ch, g), g) < 1e-9
