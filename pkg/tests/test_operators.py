import io
import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fraccalc.cesaro_seq import cesaro_array
from fraccalc.operators import (
    CesaroCache,
    LinOpHandle,
    SpaceMismatchError,
    SpaceTag,
    apply,
    cesaro_mean,
    cesaro_sum,
    ergodic_identity_residual,
    estimate_K_alpha,
    load_grid_csv,
    load_matrix_csv,
    load_sequence_csv,
    mean_ergodic_probe,
    power_norm_estimate,
    range_identity_residual,
    resolvent_bound_check,
    spectrum_condition_check,
    volterra_cesaro_mean,
)


def contraction(seed, dim=8):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((dim, dim))
    return LinOpHandle.dense(m / (1.1 * np.linalg.norm(m, 2))), rng.standard_normal(dim)


def direct_cesaro(mat, alpha, n, x):
    k = cesaro_array(alpha, n)
    return sum(k[n - j] * np.linalg.matrix_power(mat, j) @ x for j in range(n + 1))


# spaces and application ---------------------------------------------------------------


def test_weighted_norms():
    sp = SpaceTag.ell2_beta(0.5, 10)
    x = np.arange(11.0)
    assert sp.norm(x) == pytest.approx(np.sqrt(np.sum(x**2 * cesaro_array(0.5, 10))))
    g = SpaceTag.grid01(100, 2.0)
    assert g.norm(np.ones(101)) == pytest.approx(1.0, abs=1e-14)
    t = g.nodes
    assert g.norm(t) == pytest.approx(np.sqrt(1 / 3), abs=1e-4)
    stack = np.stack([np.ones(101), 2 * np.ones(101)], axis=1)
    np.testing.assert_allclose(g.norm(stack), [1.0, 2.0])


def test_space_validation():
    with pytest.raises(ValueError):
        SpaceTag.ell2_beta(1.5, 10)
    with pytest.raises(SpaceMismatchError):
        LinOpHandle("backward_shift", SpaceTag.grid01(10))
    with pytest.raises(ValueError):
        LinOpHandle.dense(np.ones((2, 3)))
    op = LinOpHandle.backward_shift(0.5, 5)
    with pytest.raises(SpaceMismatchError):
        op.vector(np.ones(3))
    other = LinOpHandle.backward_shift(0.4, 5)
    with pytest.raises(SpaceMismatchError):
        op.vector(np.ones(6)) + other.vector(np.ones(6))


def test_shift_application():
    op = LinOpHandle.backward_shift(0.5, 5)
    y = apply(op, op.vector([1, 2, 3, 0, 0, 0]))
    np.testing.assert_array_equal(y.entries, [2, 3, 0, 0, 0, 0])
    assert y.valid is None
    z = apply(op, op.vector(np.ones(6), valid=6))
    assert z.valid == 5


def test_identity_application():
    op = LinOpHandle.dense(np.eye(4))
    x = op.vector([1.0, -2.0, 3.0, 0.5])
    np.testing.assert_array_equal(apply(op, x).entries, x.entries)


def test_volterra_on_constant():
    op = LinOpHandle.volterra_complement(1000)
    y = apply(op, op.vector(np.ones(1001)))
    assert np.max(np.abs(y.entries - (1 - op.space.nodes))) <= 2e-6


def test_volterra_second_order_accuracy():
    errs = []
    for n in (100, 200, 400):
        op = LinOpHandle.volterra_complement(n)
        t = op.space.nodes
        y = apply(op, op.vector(np.cos(3 * t)))
        errs.append(np.max(np.abs(y.entries - (np.cos(3 * t) - np.sin(3 * t) / 3))))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


# Cesàro sums ---------------------------------------------------------------------------


def test_cesaro_sum_identity_operator():
    op = LinOpHandle.dense(np.eye(3))
    x = op.vector([1.0, 2.0, -1.0])
    cache = CesaroCache(op, 0.5, x, 3)
    np.testing.assert_allclose(cesaro_sum(cache, 3).entries, cesaro_array(1.5, 3)[3] * x.entries, rtol=1e-14)
    np.testing.assert_allclose(cesaro_mean(cache, 3).entries, x.entries, rtol=1e-14)


def test_cesaro_sum_shift_double_loop():
    beta, N, a, n = 0.5, 60, 0.7, 12
    op = LinOpHandle.backward_shift(beta, N)
    f = np.random.default_rng(2).standard_normal(N + 1)
    f[40:] = 0
    got = cesaro_sum(CesaroCache(op, a, op.vector(f), n), n).entries
    k = cesaro_array(a, n)
    fpad = np.concatenate([f, np.zeros(n + 1)])
    direct = np.array([sum(k[n - i] * fpad[j + i] for i in range(n + 1)) for j in range(N + 1)])
    np.testing.assert_allclose(got, direct, atol=1e-12)


def test_cesaro_order_zero_is_power():
    op, v = contraction(0)
    got = cesaro_sum(CesaroCache(op, 0.0, op.vector(v), 5), 5).entries
    np.testing.assert_allclose(got, np.linalg.matrix_power(op.matrix, 5) @ v, atol=1e-13)


@given(st.floats(0.0, 2.5), st.integers(0, 30), st.integers(0, 1000))
def test_incremental_matches_direct(a, n, seed):
    op, v = contraction(seed % 17, 5)
    got = cesaro_sum(CesaroCache(op, a, op.vector(v), n), n).entries
    ref = direct_cesaro(op.matrix, a, n, v)
    assert np.max(np.abs(got - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))


def test_cache_is_append_only_and_thread_safe():
    op, v = contraction(1)
    cache = CesaroCache(op, 0.4, op.vector(v), 4)
    first = cache.get(3).entries.copy()
    errors = []

    def extend(n):
        try:
            cache.extend(n)
        except Exception as exc:  # pragma: no cover - surfaced below
            errors.append(exc)

    threads = [threading.Thread(target=extend, args=(20 + 5 * i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert cache.n_max >= 55
    np.testing.assert_array_equal(cache.get(3).entries, first)
    with pytest.raises(ValueError):
        cache.partial_sums[0, 0] = 1.0
    np.testing.assert_allclose(cache.get(50).entries, direct_cesaro(op.matrix, 0.4, 50, v), atol=1e-10)


def test_shift_cache_valid_window():
    op = LinOpHandle.backward_shift(0.5, 50)
    cache = CesaroCache(op, 0.5, op.vector(np.ones(51), valid=51), 10)
    assert cache.valid_at(10) == 41


# bounds and growth ---------------------------------------------------------------------


def test_K_identity_is_one():
    est = estimate_K_alpha(LinOpHandle.dense(np.eye(4)), 0.5, 64)
    assert est.value == pytest.approx(1.0, abs=1e-12)
    assert not est.growing


def test_K_shift_trend():
    op = LinOpHandle.backward_shift(0.5, 3000)
    assert estimate_K_alpha(op, 0.1, 1024).growing
    bounded = estimate_K_alpha(op, 0.5, 1024)
    assert not bounded.growing and np.isfinite(bounded.value)


@pytest.mark.parametrize("beta", [0.3, 0.6])
def test_shift_power_growth(beta):
    op = LinOpHandle.backward_shift(beta, 2100)
    rep = power_norm_estimate(op, [64, 128, 256, 512, 1024, 2048])
    assert abs(rep.slope_squared - (1 - beta)) <= 0.15


def test_volterra_powers_bounded_on_l2():
    op = LinOpHandle.volterra_complement(400)
    rep = power_norm_estimate(op, [8, 16, 32, 64, 128])
    assert abs(rep.slope_squared) <= 0.15
    assert max(rep.norms) <= 2.0


# identities -------------------------------------------------------------------------------


def test_ergodic_identity_examples():
    zero = LinOpHandle.dense(np.zeros((3, 3)))
    x = zero.vector([1.0, 2.0, 3.0])
    assert ergodic_identity_residual(zero, 0.5, 1.5, 2, x) <= 1e-12
    op, v = contraction(3)
    assert ergodic_identity_residual(op, 0.3, 1.3, 10, op.vector(v)) <= 1e-9
    eye = LinOpHandle.dense(np.eye(3))
    assert ergodic_identity_residual(eye, 0.5, 1.2, 7, eye.vector([1.0, 0.0, -1.0])) <= 1e-12


@pytest.mark.parametrize("n", [1, 16, 64, 128])
def test_range_identity_all_models(n):
    op, v = contraction(4)
    assert range_identity_residual(op, 0.3, n, op.vector(v)) <= 1e-9
    sh = LinOpHandle.backward_shift(0.5, 400)
    w = np.zeros(401)
    w[:30] = np.random.default_rng(n).standard_normal(30)
    assert range_identity_residual(sh, 0.5, n, sh.vector(w)) <= 1e-9
    vo = LinOpHandle.volterra_complement(200)
    assert range_identity_residual(vo, 0.7, n, vo.vector(np.cos(vo.space.nodes))) <= 1e-9


def test_mean_of_identity_is_identity():
    eye = LinOpHandle.dense(np.eye(3))
    x = eye.vector([2.0, -1.0, 0.5])
    vals = mean_ergodic_probe(eye, 0.7, x, [1, 10, 100])
    np.testing.assert_allclose(vals, x.norm(), rtol=1e-13)


def test_mean_ergodic_decay_on_range():
    op = LinOpHandle.backward_shift(0.5, 2100)
    a = np.zeros(2101)
    a[:20] = np.random.default_rng(5).standard_normal(20)
    av = op.vector(a)
    av = av * (1.0 / av.norm())
    x = apply(op, av) - av
    vals = mean_ergodic_probe(op, 1.0, x, [10, 100, 1000, 2000])
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] < 1e-3


def test_mean_ergodic_fixed_vector():
    rng = np.random.default_rng(6)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    m = q @ np.diag([1.0, 0.5, -0.3, 0.2]) @ q.T
    op = LinOpHandle.dense(m)
    v = op.vector(q[:, 0])
    np.testing.assert_allclose(mean_ergodic_probe(op, 1.0, v, [1, 50, 500]), v.norm(), rtol=1e-10)


def test_spectrum_condition():
    assert spectrum_condition_check(LinOpHandle.dense(np.eye(3)))
    assert not spectrum_condition_check(LinOpHandle.dense([[0.0, -1.0], [1.0, 0.0]]))
    assert spectrum_condition_check(LinOpHandle.dense(np.diag([1.0, 0.5, -0.3])))


def test_resolvent_bound_examples():
    assert resolvent_bound_check(LinOpHandle.dense(np.zeros((2, 2))), 0.5, 1.0, [-2.0]).holds
    assert resolvent_bound_check(LinOpHandle.dense(np.diag([0.9, -0.5])), 0.0, 1.0, [-1.0]).holds
    assert resolvent_bound_check(LinOpHandle.dense(np.eye(2)), 0.5, 1.0, [-3.0]).holds


def test_resolvent_bound_random_samples():
    op, _ = contraction(7)
    rng = np.random.default_rng(7)
    lam = -rng.uniform(0.01, 5, 50) + 1j * rng.uniform(-5, 5, 50)
    rep = resolvent_bound_check(op, 0.5, 1.0, lam)
    assert rep.holds and len(rep.lambdas) == 50
    with pytest.raises(ValueError):
        resolvent_bound_check(op, 0.5, 1.0, [0.5])


# Volterra Laguerre means --------------------------------------------------------------------


def test_volterra_mean_zero():
    op = LinOpHandle.volterra_complement(200)
    assert np.all(volterra_cesaro_mean(op, 0.5, 3, op.zeros()).entries == 0)


def test_volterra_mean_first_step():
    a = 0.6
    op = LinOpHandle.volterra_complement(2000)
    f = op.vector(np.exp(op.space.nodes))
    direct = (a * f.entries + apply(op, f).entries) / (a + 1)
    np.testing.assert_allclose(volterra_cesaro_mean(op, a, 1, f).entries, direct, atol=1e-6)


@pytest.mark.parametrize("a, n", [(1.0, 4), (0.5, 6), (1.7, 3)])
def test_volterra_mean_matches_power_iterates(a, n):
    op = LinOpHandle.volterra_complement(2000)
    f = op.vector(np.ones(2001))
    lag = volterra_cesaro_mean(op, a, n, f).entries
    it = cesaro_mean(CesaroCache(op, a, f, n), n).entries
    assert np.max(np.abs(lag - it)) <= 1e-4


# loaders -----------------------------------------------------------------------------------


def test_loaders():
    op = load_matrix_csv(io.StringIO("0.5,0\n0,0.25\n"))
    np.testing.assert_array_equal(op.matrix, [[0.5, 0], [0, 0.25]])
    g = load_grid_csv(io.StringIO("t,value\n0,1\n0.5,2\n1,3\n"))
    np.testing.assert_array_equal(g.entries, [1, 2, 3])
    s = load_sequence_csv(io.StringIO("index,value\n0,1\n1,0\n2,5\n"), 0.5, 4)
    np.testing.assert_array_equal(s.entries, [1, 0, 5, 0, 0])
    with pytest.raises(ValueError):
        load_sequence_csv(io.StringIO("index,value\n0,1\n2,5\n"), 0.5, 4)
    with pytest.raises(ValueError):
        load_grid_csv(io.StringIO("t,value\n0,1\n0.3,2\n1,3\n"))
