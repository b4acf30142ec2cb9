import numpy as np
import pytest

from cgpo_kit.protocols.phase import (
    PhasePOVM,
    build_phase_povm,
    circular_mean,
    circular_variance,
    estimate_phase,
    loglog_slope,
    variance_scaling,
    wrap,
)
from cgpo_kit.qcore import HarmonicHamiltonian, random_density_matrix, tensor_power, time_evolve
from cgpo_kit.thermo import gibbs_state


def test_wrap_range():
    w = wrap(np.array([-np.pi, np.pi, 3 * np.pi, 0.1]), 2 * np.pi)
    assert np.allclose(w, [np.pi, np.pi, np.pi, 0.1])


def test_circular_statistics_hand_cases():
    mean, r = circular_mean([0.0], [1.0], 1.0)
    assert mean == 0 and r == pytest.approx(1)
    # two points straddling the wrap average to the wrap point
    mean, _ = circular_mean([0.9, 0.1], [0.5, 0.5], 1.0)
    assert abs(wrap(mean, 1.0)) < 1e-12
    assert circular_variance([0.9, 0.1], [0.5, 0.5], 1.0) == pytest.approx(0.01)


def test_completeness_and_psd(H):
    povm = PhasePOVM(H, 1, 4)
    effects, fail = povm.effects()
    assert np.max(np.abs(sum(effects) + fail - np.eye(2))) < 1e-12
    for e in effects + [fail]:
        assert np.linalg.eigvalsh(e)[0] >= -1e-12
    povm = PhasePOVM(H, 3, 7)
    effects, fail = povm.effects()
    assert np.max(np.abs(sum(effects) + fail - np.eye(8))) < 1e-12
    assert np.linalg.eigvalsh(fail)[0] >= -1e-12


def test_bins_lower_bound(H):
    with pytest.raises(ValueError, match="L >= 4"):
        PhasePOVM(H, 3, 3)


def test_effect_covariance_is_exact(H):
    povm = PhasePOVM(H.tensor_power(1), 2, 5)
    effects, _ = povm.effects()
    Ht = povm.total_hamiltonian()
    step = povm.period / povm.L
    u = np.diag(np.exp(-1j * Ht.energies * step))
    for k, m in enumerate(effects):
        assert np.max(np.abs(u @ m @ u.conj().T - effects[(k + 1) % povm.L])) < 1e-12


def test_distribution_shifts_with_input(H, rng):
    povm = PhasePOVM(H, 3, 8)
    Ht = povm.total_hamiltonian()
    kappa = random_density_matrix(8, rng)
    base = povm.distribution(kappa)
    step = povm.period / povm.L
    for j in range(1, 4):
        shifted = povm.distribution(time_evolve(kappa, Ht, j * step))
        assert np.array_equal(np.roll(base.probs, j), shifted.probs) or \
            np.max(np.abs(np.roll(base.probs, j) - shifted.probs)) < 1e-15


def test_product_and_dense_distributions_agree(H, rng):
    rho = random_density_matrix(2, rng)
    povm = PhasePOVM(H, 4, 9)
    dense = povm.distribution(tensor_power(rho, 4))
    fast = povm.product_distribution(rho)
    assert np.max(np.abs(dense.probs - fast.probs)) < 1e-14
    assert dense.failure_probability == pytest.approx(fast.failure_probability, abs=1e-14)


def test_qutrit_with_gap_in_levels(rng):
    H = HarmonicHamiltonian((0, 1, 3), 0.5)
    rho = random_density_matrix(3, rng)
    povm = PhasePOVM(H, 2, 7)
    dense = povm.distribution(tensor_power(rho, 2))
    assert np.max(np.abs(dense.probs - povm.product_distribution(rho).probs)) < 1e-14


def test_incoherent_input_gives_uniform(H):
    g = gibbs_state(H, 1.0)
    povm = PhasePOVM(H, 4, 9)
    dist = estimate_phase(g, povm)
    assert np.allclose(dist.probs, 1 / 9)
    assert dist.resultant < 1e-12


def test_calibration_and_mean_shift(H, plus):
    povm = build_phase_povm(H, 4, 33, plus)
    dist = povm.product_distribution(plus)
    assert abs(dist.circular_mean) < 1e-9
    assert dist.failure_probability < 1
    step = povm.period / povm.L
    shifted = time_evolve(plus, H, 5 * step)
    moved = povm.product_distribution(shifted)
    assert abs(wrap(moved.circular_mean - 5 * step, povm.period)) < 1e-9


def test_build_requires_coherent_reference(H):
    with pytest.raises(ValueError, match="shortest period"):
        build_phase_povm(H, 2, 8, gibbs_state(H, 1.0))


def test_sample_mode_is_seeded(H, plus):
    povm = build_phase_povm(H, 4, 33, plus)
    a = estimate_phase(plus, povm, "sample", seed=3, shots=100)
    b = estimate_phase(plus, povm, "sample", seed=3, shots=100)
    assert np.array_equal(a, b)
    assert np.all(np.isin(a, povm.estimates))


def test_variance_decreases(H, plus):
    rows = variance_scaling(plus, H, [4, 8, 16], shots=4000, seed=1)
    exact = [r["exact_variance"] for r in rows]
    assert exact[0] > exact[1] > exact[2]
    assert loglog_slope([4, 8, 16], exact) < -0.8
