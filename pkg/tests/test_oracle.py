import numpy as np
import pytest

from dddm.micronet import init_params
from dddm.oracle import (GaussianSpec, gaussian_score, iterate_denoiser, oracle_divergence, solve_pf_ode,
                         zero_network_divergence)
from dddm.schedule import continuous_alpha_bar, linear_schedule

SCHED = linear_schedule()


def test_score_examples():
    x = np.array([0.4, -1.3])
    std = GaussianSpec((0.0, 0.0), 1.0)
    for t in (0.0, 17.5, 1000.0):
        np.testing.assert_allclose(gaussian_score(std, x, t, SCHED), -x)
    spec = GaussianSpec((2.0, 0.0), 0.5)
    np.testing.assert_allclose(gaussian_score(spec, x, 0.0, SCHED), -(x - spec.mean) / 0.5)


def test_score_hand_example():
    # find t with abar(t) = 0.25 by bisection, then plug in
    lo, hi = 0.0, 1000.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if continuous_alpha_bar(SCHED, mid) > 0.25 else (lo, mid)
    t = 0.5 * (lo + hi)
    s = gaussian_score(GaussianSpec((2.0, 0.0), 1.0), np.array([1.0, 1.0]), t, SCHED)
    np.testing.assert_allclose(s, [0.0, -1.0], atol=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        GaussianSpec((0.0,), 0.0)
    assert GaussianSpec([1, 2]).mu == (1.0, 2.0)


def test_standard_normal_is_identity(rng):
    spec = GaussianSpec((0.0, 0.0), 1.0)
    x = rng.standard_normal((20, 2))
    for n in (1, 7, 1000):
        np.testing.assert_allclose(solve_pf_ode(spec, x, 500.0, SCHED, n), x, atol=1e-12, rtol=0)


def test_unit_variance_closed_form():
    spec = GaussianSpec((2.0, 0.0), 1.0)
    x = np.array([0.3, -0.7])
    for t in (250.0, 500.0, 1000.0):
        expect = x + spec.mean * (1 - np.sqrt(continuous_alpha_bar(SCHED, t)))
        np.testing.assert_allclose(solve_pf_ode(spec, x, t, SCHED, 1000), expect, atol=1e-6)


def test_unit_variance_is_a_translation(rng):
    spec = GaussianSpec((1.0, -3.0), 1.0)
    a, b = rng.standard_normal((2, 2)) * 3
    da = solve_pf_ode(spec, a, 640.0, SCHED, 200) - a
    db = solve_pf_ode(spec, b, 640.0, SCHED, 200) - b
    np.testing.assert_allclose(da, db, atol=1e-8)


def test_rk4_order_on_nonlinear_spec():
    spec = GaussianSpec((1.5, -0.5), 0.2)
    x = np.array([0.8, 0.1])
    ref = solve_pf_ode(spec, x, 1000.0, SCHED, 4096)
    errs = [np.linalg.norm(solve_pf_ode(spec, x, 1000.0, SCHED, n) - ref) for n in (8, 16, 32)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 3.5)


def test_per_row_times_match_scalar_calls(rng):
    spec = GaussianSpec((1.0, 1.0), 0.3)
    x = rng.standard_normal((4, 2))
    ts = np.array([1.0, 10.0, 300.0, 1000.0])
    batch = solve_pf_ode(spec, x, ts, SCHED, 50)
    for i in range(4):
        np.testing.assert_allclose(batch[i], solve_pf_ode(spec, x[i], ts[i], SCHED, 50), rtol=1e-14)


def test_ode_errors():
    spec = GaussianSpec((0.0, 0.0))
    for t in (0.0, 1001.0):
        with pytest.raises(ValueError):
            solve_pf_ode(spec, np.zeros(2), t, SCHED)
    with pytest.raises(ValueError):
        solve_pf_ode(spec, np.zeros(2), 5.0, SCHED, 0)
    with pytest.raises(ValueError):
        solve_pf_ode(spec, np.zeros(3), 5.0, SCHED)


def _zero_net(T):
    p = init_params(2, np.random.default_rng(0), hidden=(8,), embed_dim=4, T=T)
    p.flat[:] = 0.0
    return p


def test_zero_network_divergence_standard_normal():
    res = oracle_divergence(_zero_net(1000), GaussianSpec((0.0, 0.0)), SCHED, M=64)
    assert res.mean < 1e-12
    assert res.iterations == 2  # second iterate does not move
    assert zero_network_divergence((0.0, 0.0), SCHED) == 0.0


def test_zero_network_divergence_closed_form():
    sched = linear_schedule(100)
    spec = GaussianSpec((2.0, 0.0))
    res = oracle_divergence(_zero_net(100), spec, sched, M=4000, seed=3, ode_steps=400)
    # per draw the error is ||mu|| (1 - sqrt(abar(t))) exactly, so only the t-sampling is random
    np.testing.assert_allclose(res.errors, 2.0 * (1 - np.sqrt(continuous_alpha_bar(sched, res.steps.astype(float)))),
                               atol=1e-8)
    closed = zero_network_divergence(spec.mean, sched)
    assert abs(res.mean - closed) < 4 * res.errors.std() / np.sqrt(4000)


def test_iterate_denoiser_early_stop():
    p = _zero_net(10)
    x, used = iterate_denoiser(p, np.ones((3, 2)), 5, np.zeros((3, 2)), iters=10)
    np.testing.assert_array_equal(x, np.ones((3, 2)))
    assert used == 2
    _, used = iterate_denoiser(p, np.ones((3, 2)), 5, np.zeros((3, 2)), iters=1)
    assert used == 1


def test_divergence_is_seeded():
    p = init_params(2, np.random.default_rng(1), hidden=(8,), embed_dim=4, T=50)
    sched = linear_schedule(50)
    spec = GaussianSpec((1.0, 0.0))
    a = oracle_divergence(p, spec, sched, M=32, seed=4)
    b = oracle_divergence(p, spec, sched, M=32, seed=4)
    assert a.mean == b.mean
    with pytest.raises(ValueError):
        oracle_divergence(p, spec, sched, M=0)
