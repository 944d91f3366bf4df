import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dddm.metrics import IMAGE_SCALE_C, Base, MetricSpec, base_distance, feature_matrix, loss_and_grad, pseudo_wrap

BASES = [Base.L1, Base.SQUARED_L2, Base.FEATURE]
# sqrt(1 + c^2) - c at c = 6.9e-5, 50-digit mpmath
WRAP_1_BEST_C = 0.99993100238049999717


@pytest.mark.parametrize("base", BASES)
def test_identity(base):
    x = np.array([0.3, -1.2])
    assert base_distance(MetricSpec(base), x, x) == 0.0


def test_l1_example():
    assert base_distance(MetricSpec(Base.L1), [1.0, 2.0], [0.0, 0.0]) == 3.0


def test_feature_distance_recomputed_independently():
    spec = MetricSpec(Base.FEATURE, feature_seed=11, feature_width=8)
    x, y = np.array([0.7, -0.2]), np.array([-1.1, 0.4])
    # second implementation: draw the same matrix column by column and accumulate
    g = np.random.default_rng(11).standard_normal((2, 8)) / np.sqrt(8)
    total = 0.0
    for j in range(8):
        f = sum((x[i] - y[i]) * g[i, j] for i in range(2))
        total += f * f
    assert base_distance(spec, x, y) == pytest.approx(total, abs=1e-12)


def test_feature_map_must_be_injective():
    with pytest.raises(ValueError):
        feature_matrix(0, 3, 2)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        base_distance(MetricSpec(), [1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        loss_and_grad(MetricSpec(), [1.0, 2.0], [1.0])


def test_invalid_spec():
    with pytest.raises(ValueError):
        MetricSpec(c=-1e-3)
    with pytest.raises(ValueError):
        MetricSpec("cosine")


def test_wrap_examples():
    assert pseudo_wrap(MetricSpec(c=0.7), 0.0) == 0.0
    assert pseudo_wrap(MetricSpec(c=0.0), 4.0) == 2.0
    assert IMAGE_SCALE_C == 0.000069
    assert pseudo_wrap(MetricSpec(c=IMAGE_SCALE_C), 1.0) == pytest.approx(WRAP_1_BEST_C, rel=1e-15)
    with pytest.raises(ValueError):
        pseudo_wrap(MetricSpec(c=0.1), -1e-12)


def test_wrap_is_stable_for_tiny_d():
    c = 1e3
    d = 1e-12
    # naive sqrt(d + c^2) - c would cancel to 0
    assert pseudo_wrap(MetricSpec(c=c), d) == pytest.approx(d / (2 * c), rel=1e-9)


def test_loss_examples():
    loss, grad = loss_and_grad(MetricSpec(Base.SQUARED_L2, 0.0), [3.0, 0.0], [0.0, 0.0])
    assert loss == 3.0
    np.testing.assert_allclose(grad, [1.0, 0.0])
    for base in BASES:
        loss, grad = loss_and_grad(MetricSpec(base, 0.0), [1.0, 2.0], [1.0, 2.0])
        assert loss == 0.0 and np.all(grad == 0)


@pytest.mark.parametrize("base", BASES)
@pytest.mark.parametrize("c", [0.0, 0.05, 1.0])
def test_grad_matches_finite_differences(base, c, rng):
    spec = MetricSpec(base, c, feature_seed=3)
    for _ in range(5):
        p, q = rng.standard_normal(2), rng.standard_normal(2)
        _, g = loss_and_grad(spec, p, q)
        h = 1e-6
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            fd = (loss_and_grad(spec, p + e, q)[0] - loss_and_grad(spec, p - e, q)[0]) / (2 * h)
            assert abs(g[i] - fd) <= 1e-4 * max(abs(fd), 1e-3)


def test_batched_rows_match_singles(rng):
    spec = MetricSpec(Base.FEATURE, 0.1)
    P, Q = rng.standard_normal((6, 2)), rng.standard_normal((6, 2))
    loss, grad = loss_and_grad(spec, P, Q)
    for i in range(6):
        li, gi = loss_and_grad(spec, P[i], Q[i])
        assert loss[i] == pytest.approx(li, rel=1e-14)
        np.testing.assert_allclose(grad[i], gi, rtol=1e-13)


@settings(max_examples=200, deadline=None)
@given(d1=st.floats(0, 1e6), d2=st.floats(0, 1e6), c=st.floats(0, 100))
def test_wrap_properties(d1, d2, c):
    s = MetricSpec(c=c)
    w1, w2 = pseudo_wrap(s, d1), pseudo_wrap(s, d2)
    assert w1 >= 0
    assert w1 <= np.sqrt(d1) * (1 + 1e-12)
    if d1 < d2:
        assert w1 <= w2
    assert (w1 == 0) == (d1 == 0)
