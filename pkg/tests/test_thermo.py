import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgpo_kit.feasibility import random_gp_stochastic_matrix
from cgpo_kit.qcore import HarmonicHamiltonian, plus_state, random_density_matrix, tensor, tensor_power
from cgpo_kit.thermo import (
    extended_free_energy,
    free_energy,
    gibbs_distribution,
    gibbs_state,
    kl_divergence,
    log_partition_function,
    lorenz_curve,
    relative_entropy,
    renyi_divergence,
    thermomajorizes,
)

ALPHAS = [-2, -1, 0.5, 1, 2, math.inf]


def _dist(rng, d):
    p = rng.dirichlet(np.ones(d))
    return p


def test_gibbs_states(H):
    assert np.allclose(np.diag(gibbs_state(H, 1.0)).real, [0.75, 0.25])
    assert np.allclose(gibbs_distribution(H, 0.0), [0.5, 0.5])
    cold = HarmonicHamiltonian((0, 1), 1.0)
    assert np.allclose(gibbs_distribution(cold, 1e6), [1, 0])


def test_paper_free_energies(H, rho_paper, plus):
    # oracle: closed forms for a diagonal state and a pure state
    g = np.array([0.75, 0.25])
    p = np.array([3 / 200, 197 / 200])
    f_rho = float(np.sum(p * np.log(p / g)))
    f_plus = -0.5 * (math.log(0.75) + math.log(0.25))
    assert abs(free_energy(rho_paper, H, 1.0) - f_rho) < 1e-12
    assert abs(free_energy(plus, H, 1.0) - f_plus) < 1e-12
    assert abs(free_energy(rho_paper, H, 1.0) - 1.291) < 1e-3
    assert abs(free_energy(plus, H, 1.0) - 0.836) < 1e-3
    assert free_energy(gibbs_state(H, 1.0), H, 1.0) < 1e-14


def test_relative_entropy_support_and_zero(rng):
    rho = random_density_matrix(3, rng)
    assert relative_entropy(rho, rho) < 1e-12
    sigma = np.diag([0.5, 0.5, 0.0]).astype(complex)
    assert relative_entropy(rho, sigma) == math.inf


def test_relative_entropy_additive(rng):
    for _ in range(20):
        a, b = random_density_matrix(2, rng), random_density_matrix(2, rng)
        c, d = random_density_matrix(3, rng), random_density_matrix(3, rng)
        lhs = relative_entropy(tensor(a, c), tensor(b, d))
        assert abs(lhs - relative_entropy(a, b) - relative_entropy(c, d)) < 1e-9


def test_free_energy_additive(H, rng):
    rho = random_density_matrix(2, rng)
    f = free_energy(rho, H, 1.0)
    for k in range(1, 5):
        assert abs(free_energy(tensor_power(rho, k), H.tensor_power(k), 1.0) - k * f) < 1e-8


def test_free_energy_is_renyi_one_on_diagonals(qutrit, rng):
    for _ in range(10):
        p = _dist(rng, 3)
        F = free_energy(np.diag(p).astype(complex), qutrit, 0.7)
        assert abs(F - renyi_divergence(p, gibbs_distribution(qutrit, 0.7), 1)) < 1e-10


def test_renyi_limits(rng):
    p = _dist(rng, 4)
    for a in ALPHAS + [0, -math.inf]:
        assert abs(renyi_divergence(p, p, a)) < 1e-12
    for _ in range(100):
        p, q = _dist(rng, 4), _dist(rng, 4)
        assert abs(renyi_divergence(p, q, 1) - kl_divergence(p, q)) < 1e-9
    p, q = [0.9, 0.1], [0.5, 0.5]
    assert abs(renyi_divergence(p, q, math.inf) - math.log(1.8)) < 1e-12
    assert abs(renyi_divergence(p, q, 100) - math.log(1.8)) < 0.01


def test_renyi_zero_and_minus_inf():
    q = np.array([0.25, 0.25, 0.5])
    p = np.array([0.5, 0.5, 0.0])
    assert abs(renyi_divergence(p, q, 0) - (-math.log(0.5))) < 1e-12
    assert renyi_divergence(p, q, -1) == math.inf
    p = np.array([0.2, 0.3, 0.5])
    assert abs(renyi_divergence(p, q, -math.inf) - math.log(max(q / p))) < 1e-12


def test_renyi_rejects_nan():
    with pytest.raises(ValueError):
        renyi_divergence([0.5, 0.5], [0.5, 0.5], float("nan"))
    with pytest.raises(ValueError):
        renyi_divergence([float("nan"), 1.0], [0.5, 0.5], 2)


def test_extended_free_energy(H, rho_paper):
    g = gibbs_distribution(H, 1.0)
    lnZ = log_partition_function(H, 1.0)
    assert abs(lnZ - math.log(4 / 3)) < 1e-12
    for a in ALPHAS:
        assert abs(extended_free_energy(g, H, 1.0, a) + lnZ) < 1e-12
    p = np.diag(rho_paper).real
    assert abs(extended_free_energy(p, H, 1.0, 1) - (free_energy(rho_paper, H, 1.0) - math.log(4 / 3))) < 1e-12
    with pytest.raises(ValueError, match="infinite-temperature extended free energy undefined"):
        extended_free_energy(p, H, 0.0, 2)


def test_lorenz_curves():
    c = lorenz_curve([0.3, 0.7], [0.3, 0.7])
    assert c.breakpoints == [(0.0, 0.0), (1.0, 1.0)]
    c = lorenz_curve([1.0, 0.0], [0.5, 0.5])
    assert c.breakpoints == [(0.0, 0.0), (0.0, 0.5), (1.0, 1.0)]
    assert len(lorenz_curve([0.5, 0.5], [0.5, 0.5]).breakpoints) == 2


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 6))
def test_lorenz_curve_shape(seed, d):
    rng = np.random.default_rng(seed)
    p, q = _dist(rng, d), _dist(rng, d)
    c = lorenz_curve(p, q)
    assert c.breakpoints[0] == (0.0, 0.0) and c.breakpoints[-1] == (1.0, 1.0)
    assert np.all(np.diff(c.x) >= 0) and np.all(np.diff(c.y) >= 0)
    s = c.slopes()
    assert np.all(np.diff(s[np.isfinite(s)]) <= 1e-9)
    # every curve lies on or above the diagonal
    xs = np.linspace(0, 1, 11)
    assert np.all(c.upper(xs) >= xs - 1e-12)


def test_thermomajorization_basics(rng):
    q = np.array([0.5, 0.3, 0.2])
    for _ in range(20):
        p = _dist(rng, 3)
        assert thermomajorizes(p, p, q)
        assert thermomajorizes(p, q, q)
    assert not thermomajorizes(q, [0.6, 0.3, 0.1], q)


def test_data_processing_under_gp_stochastic_matrices(qutrit, rng):
    g = gibbs_distribution(qutrit, 0.7)
    for seed in range(200):
        T = random_gp_stochastic_matrix(qutrit, 0.7, seed)
        assert np.allclose(T @ g, g, atol=1e-8)
        p = _dist(rng, 3)
        q = np.clip(T @ p, 0, None)
        q = q / q.sum()
        assert thermomajorizes(p, q, g, tol=1e-8)
        assert kl_divergence(q, g) <= kl_divergence(p, g) + 1e-7
        for a in ALPHAS:
            assert extended_free_energy(q, qutrit, 0.7, a) <= extended_free_energy(p, qutrit, 0.7, a) + 1e-7


def test_plus_state_is_not_gibbs(H):
    assert free_energy(plus_state(), H, 1.0) > 0
