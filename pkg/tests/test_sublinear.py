import numpy as np
import pytest

from cgpo_kit.protocols.sublinear import expected_error, sublinear_prepare, sublinear_study
from cgpo_kit.qcore import tensor_power, time_evolve, trace_distance


def test_zero_outputs_cost_nothing(H, plus):
    r = sublinear_prepare(plus, 4, plus, 0, H)
    assert r.error == 0 and r.state.shape == (1, 1)
    assert expected_error(plus, 4, plus, 0, H) == 0


def test_bad_sizes(H, plus):
    with pytest.raises(ValueError):
        sublinear_prepare(plus, 0, plus, 1, H)


def test_output_is_shifted_target(H, plus):
    r = sublinear_prepare(plus, 8, plus, 2, H, seed=11)
    target = tensor_power(plus, 2)
    expect = time_evolve(target, H.tensor_power(2), r.t_est)
    assert np.max(np.abs(r.state - expect)) < 1e-14
    assert r.error == pytest.approx(trace_distance(expect, target))


def test_error_falls_with_more_inputs(H, plus):
    errs = [expected_error(plus, N, plus, 1, H) for N in (4, 8, 16, 32)]
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_error_grows_subadditively_in_outputs(H, plus):
    N = 16
    e = {M: expected_error(plus, N, plus, M, H) for M in (1, 2, 4)}
    for M in (2, 4):
        # doubling M grows the error but by no more than the triangle bound
        ratio = e[M] / e[M // 2]
        assert 1 < ratio <= 2 + 1e-12
        assert e[M] <= M * e[1] + 1e-12


def test_monte_carlo_agrees_with_exact(H, plus):
    rows = sublinear_study(plus, plus, H, [8], [1, 2], runs=400, seed=3)
    for row in rows:
        exact = expected_error(plus, 8, plus, row["M"], H)
        assert abs(row["mean_error"] - exact) < 4 * row["std_error"] / np.sqrt(row["runs"]) + 1e-12


def test_study_is_seed_deterministic(H, plus):
    a = sublinear_study(plus, plus, H, [4, 8], [1], runs=20, seed=7)
    b = sublinear_study(plus, plus, H, [4, 8], [1], runs=20, seed=7, workers=2)
    assert a == b
