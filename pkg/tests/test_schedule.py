import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dddm.schedule import continuous_alpha_bar, continuous_beta, linear_schedule, perturb

# 50-digit product of (1 - beta_t) over the default ramp (mpmath)
ABAR_1000 = 4.0358297653756833e-05
# quadrature of the continuous rate over [0, T] (mpmath, 50 digits)
CONT_ABAR_T = 4.0359658156433514e-05
CONT_ABAR_250 = 0.5231052983603501544


def test_default_endpoints():
    s = linear_schedule()
    assert s.T == 1000
    assert s.betas[0] == 1e-4 and s.betas[-1] == pytest.approx(0.02, abs=1e-15)
    assert s.alpha_bars[0] == 1 - 1e-4
    assert s.alpha_bar(1) == 0.9999


def test_abar_T_matches_high_precision_product():
    s = linear_schedule(1000, 1e-4, 0.02)
    assert abs(s.alpha_bars[-1] - ABAR_1000) / ABAR_1000 < 1e-7


def test_one_step_schedule():
    s = linear_schedule(1, 0.5, 0.5)
    np.testing.assert_array_equal(s.betas, [0.5])
    assert s.alpha_bars[0] == 0.5


def test_monotone_and_bounded():
    s = linear_schedule()
    assert np.all(np.diff(s.alpha_bars) < 0)
    assert np.all((s.alpha_bars > 0) & (s.alpha_bars < 1))
    assert np.all((s.betas > 0) & (s.betas < 1))


def test_tables_are_read_only():
    s = linear_schedule(10)
    with pytest.raises(ValueError):
        s.betas[0] = 0.5


@pytest.mark.parametrize("args", [(0, 1e-4, 0.02), (10, 0.0, 0.02), (10, 1e-4, 1.0), (10, 0.03, 0.02), (10, -1e-4, 0.02)])
def test_invalid_schedules(args):
    with pytest.raises(ValueError):
        linear_schedule(*args)


def test_perturb_examples():
    s = linear_schedule(1, 0.5, 0.5)
    np.testing.assert_allclose(perturb([1.0, 0.0], 1, [0.0, 1.0], s), [0.7071067811865476, 0.7071067811865476], rtol=1e-15)
    d = linear_schedule()
    x0 = np.array([1.5, -2.0])
    np.testing.assert_allclose(perturb(x0, 300, np.zeros(2), d), np.sqrt(d.alpha_bar(300)) * x0)
    eps = np.array([0.3, 0.1])
    np.testing.assert_allclose(perturb(np.zeros(2), 300, eps, d), np.sqrt(1 - d.alpha_bar(300)) * eps)


def test_perturb_batch_rows_use_their_own_step():
    d = linear_schedule()
    x0 = np.ones((3, 2))
    t = np.array([1, 500, 1000])
    out = perturb(x0, t, np.zeros((3, 2)), d)
    np.testing.assert_allclose(out[:, 0], np.sqrt(d.alpha_bars[t - 1]))


def test_perturb_errors():
    d = linear_schedule(10)
    with pytest.raises(ValueError):
        perturb([1.0, 2.0], 1, [1.0], d)
    for t in (0, 11):
        with pytest.raises(ValueError):
            perturb([1.0], t, [1.0], d)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-10, 10), t=st.integers(1, 1000),
       x=st.lists(st.floats(-5, 5), min_size=2, max_size=2), e=st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_perturb_is_linear(a, t, x, e):
    d = linear_schedule()
    x, e = np.array(x), np.array(e)
    np.testing.assert_allclose(perturb(a * x, t, a * e, d), a * perturb(x, t, e, d), atol=1e-12)


def test_continuous_endpoints():
    d = linear_schedule()
    assert continuous_alpha_bar(d, 0.0) == 1.0
    assert abs(continuous_alpha_bar(d, 1000.0) - CONT_ABAR_T) / CONT_ABAR_T < 1e-10
    assert abs(continuous_alpha_bar(d, 250.0) - CONT_ABAR_250) / CONT_ABAR_250 < 1e-12


def test_continuous_tracks_discrete_within_5_percent():
    for T in (1000, 100, 10):
        d = linear_schedule(T)
        t = np.arange(1, T + 1, dtype=float)
        gap = np.abs(continuous_alpha_bar(d, t) - d.alpha_bars) / d.alpha_bars
        assert gap.max() <= 0.05


def test_continuous_constant_rate():
    # constant per-step beta b integrates to a constant rate -log(1 - b)
    b = 0.01
    d = linear_schedule(50, b, b)
    for t in (0.0, 0.5, 7.25, 50.0):
        assert continuous_alpha_bar(d, t) == pytest.approx(np.exp(np.log1p(-b) * t), rel=1e-13)
    one = linear_schedule(1, 0.5, 0.5)
    assert continuous_alpha_bar(one, 1.0) == pytest.approx(0.5, rel=1e-14)


def test_continuous_rate_is_log_derivative():
    d = linear_schedule()
    t, h = 400.0, 1e-3
    fd = -(np.log(continuous_alpha_bar(d, t + h)) - np.log(continuous_alpha_bar(d, t - h))) / (2 * h)
    assert continuous_beta(d, t) == pytest.approx(fd, rel=1e-7)


def test_continuous_range_check():
    d = linear_schedule(10)
    for t in (-0.1, 10.01):
        with pytest.raises(ValueError):
            continuous_alpha_bar(d, t)
