import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.linalg import fractional_matrix_power, logm

from fraccalc.cesaro_seq import cesaro_array
from fraccalc.frac_diff import d_alpha
from fraccalc.func_calc import (
    FuncCalcConfig,
    HypothesisWarning,
    NonMembershipError,
    ParameterRangeError,
    SeriesDivergenceError,
    fractional_power,
    generator_check,
    hilbert_transform_alpha,
    log_coefficients,
    log_operator,
    log_operator_taylor,
    phi_alpha_apply,
    poisson_coefficients,
    poisson_solve_cesaro,
    poisson_solve_taylor,
    rate_check,
)
from fraccalc.operators import LinOpHandle, apply
from fraccalc.series_algebra import delta0, geometric, k_power
from fraccalc.special_fn import digamma


def contraction(seed, dim=8):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((dim, dim))
    m /= 1.1 * np.linalg.norm(m, 2)
    op = LinOpHandle.dense(m)
    return op, op.vector(rng.standard_normal(dim))


def shift_model(beta=0.6, n_max=200, support=30, seed=0):
    op = LinOpHandle.backward_shift(beta, n_max)
    w = np.zeros(n_max + 1)
    w[:support] = np.random.default_rng(seed).standard_normal(support)
    return op, op.vector(w)


def zero_op():
    op = LinOpHandle.dense(np.zeros((3, 3)))
    return op, op.vector([1.0, 2.0, 3.0])


def rel(a, b):
    return (a - b).norm() / b.norm()


# the functional calculus -----------------------------------------------------------------


def test_unit_maps_to_identity():
    op, x = contraction(0)
    r = phi_alpha_apply(op, delta0(), 0.5, x)
    assert r.converged
    np.testing.assert_allclose(r.value.entries, x.entries, atol=1e-14)


def test_one_minus_z_maps_to_difference():
    op, x = contraction(1)
    r = phi_alpha_apply(op, k_power(-1.0), 0.7, x)
    np.testing.assert_allclose(r.value.entries, x.entries - op.matrix @ x.entries, atol=1e-9)


@pytest.mark.parametrize("lam", [-2.0, -0.5])
def test_resolvent_coefficients(lam):
    op, x = contraction(2)
    r = phi_alpha_apply(op, geometric(1 - lam, 400), 0.5, x)
    a = np.eye(8) - op.matrix
    ref = -np.linalg.solve(lam * np.eye(8) - a, x.entries)
    assert np.max(np.abs(r.value.entries - ref)) <= 1e-8


def test_non_member_is_rejected():
    op, x = contraction(3)
    with pytest.raises(NonMembershipError):
        phi_alpha_apply(op, k_power(0.5), 1.0, x)


def test_fractional_power_matches_scipy():
    for seed in range(3):
        op, x = contraction(seed)
        for s in (0.2, 0.5, 0.8):
            ref = fractional_matrix_power(np.eye(8) - op.matrix, s) @ x.entries
            got = fractional_power(op, s, x).entries
            assert np.max(np.abs(got - ref)) <= 1e-10


def test_fractional_power_semigroup():
    op, x = contraction(4)
    twice = fractional_power(op, 0.5, fractional_power(op, 0.5, x))
    once = x - apply(op, x)
    assert np.max(np.abs(twice.entries - once.entries)) <= 1e-7


def test_fractional_power_of_zero_operator():
    op, x = zero_op()
    np.testing.assert_allclose(fractional_power(op, 0.4, x).entries, x.entries, atol=1e-14)


def test_fractional_power_on_shift_is_fractional_difference():
    op, w = shift_model()
    for s in (0.3, 0.7):
        got = fractional_power(op, s, w).entries
        ref = d_alpha(w.entries, s, n_out=w.entries.size).values
        assert np.max(np.abs(got - ref)) <= 1e-10


def test_parameter_range():
    op, x = contraction(5)
    with pytest.raises(ParameterRangeError):
        poisson_solve_cesaro(op, 0.5, 1.3, x)
    with pytest.raises(ParameterRangeError):
        poisson_solve_taylor(op, 0.0, x)


# Poisson equation ---------------------------------------------------------------------


def test_poisson_coefficients_closed_form():
    s, a = 0.3, 0.5
    c = poisson_coefficients(s, a, 50)
    n = np.arange(51)
    ref = [math.sin(math.pi * s) / math.pi * math.gamma(1 - s + a) * math.gamma(s + m) / math.gamma(m + a + 1)
           for m in n]
    np.testing.assert_allclose(c, ref, rtol=1e-12)


def test_poisson_zero_operator():
    op, x = zero_op()
    for r in (poisson_solve_cesaro(op, 0.5, 0.3, x), poisson_solve_taylor(op, 0.3, x)):
        assert r.converged
        assert np.max(np.abs(r.value.entries - x.entries)) <= 1e-8


def test_poisson_coefficient_normalisation():
    # with T = 0 the Cesàro route collapses to sum_n c(n) k^alpha(n) = 1
    s, a = 0.4, 0.8
    c = poisson_coefficients(s, a, 1 << 16)
    k = cesaro_array(a, 1 << 16)
    partial = np.cumsum(c * k)
    # S(M) = S - A M^{s-1} - B M^{s-2} + ...: solve on three cutoffs
    ms = np.array([1 << 14, 1 << 15, 1 << 16], dtype=float)
    lhs = np.stack([np.ones(3), ms ** (s - 1), ms ** (s - 2)], axis=1)
    limit = np.linalg.solve(lhs, partial[ms.astype(int)])[0]
    assert limit == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("model", ["shift", "dense"])
def test_poisson_round_trip(model):
    op, w = shift_model() if model == "shift" else contraction(6)
    x = fractional_power(op, 0.3, w)
    u1 = poisson_solve_cesaro(op, 0.5, 0.3, x)
    u2 = poisson_solve_taylor(op, 0.3, x)
    assert u1.converged and u2.converged
    assert rel(u1.value, w) <= 1e-6 and rel(u2.value, w) <= 1e-6
    assert (u1.value - u2.value).norm() <= 1e-6 * x.norm()
    for u in (u1, u2):
        assert (fractional_power(op, 0.3, u.value) - x).norm() <= 1e-5 * x.norm()


def test_poisson_taylor_on_shift_is_weyl_sum():
    op, u = shift_model(support=20)
    s = 0.4
    x = fractional_power(op, s, u)
    got = poisson_solve_taylor(op, s, x).value.entries
    k = cesaro_array(s, x.entries.size)
    xe = np.concatenate([x.entries, np.zeros(x.entries.size)])
    direct = np.array([np.dot(k[: x.entries.size], xe[j: j + x.entries.size]) for j in range(x.entries.size)])
    np.testing.assert_allclose(got, direct, atol=1e-10)
    np.testing.assert_allclose(got, u.entries, atol=1e-10)


def test_poisson_constant_profile_not_converged():
    op = LinOpHandle.backward_shift(0.6, 400)
    x = op.vector(np.ones(401), valid=401)
    r = poisson_solve_cesaro(op, 0.5, 0.3, x)
    assert r.verdict in ("inconclusive", "diverging")


def test_taylor_route_warns_outside_range():
    op, w = contraction(7)
    x = fractional_power(op, 0.5, w)
    with pytest.warns(HypothesisWarning):
        poisson_solve_taylor(op, 0.5, x, alpha=0.6)
    with pytest.warns(HypothesisWarning):
        log_operator_taylor(op, x, alpha=1.2)


def test_domain_verdicts_match_eigen_criterion():
    agree = 0
    rng = np.random.default_rng(11)
    for i in range(20):
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        d = np.concatenate(([1.0], rng.uniform(-0.9, 0.9, 5)))
        m = q @ np.diag(d) @ q.T
        op = LinOpHandle.dense(m)
        v = rng.standard_normal(6)
        in_range = i % 2 == 0
        if in_range:
            v -= np.dot(v, q[:, 0]) * q[:, 0]
        r = poisson_solve_cesaro(op, 0.5, 0.5, op.vector(v), verify=False)
        agree += (r.verdict == "converged") == in_range
    assert agree == 20


def test_range_density_consequence():
    # x = (I - T) w is reached by (I - T)^s applied to (I - T)^{1-s} w
    for seed in (12, 13):
        op, w = contraction(seed)
        x = w - apply(op, w)
        for s in (0.3, 0.6):
            u = fractional_power(op, 1 - s, w)
            assert (fractional_power(op, s, u) - x).norm() <= 1e-5 * x.norm()


# logarithm and Hilbert transform -----------------------------------------------------------


def test_log_constant_against_quadrature():
    for a in (0.2, 0.5, 1.5):
        ref, _ = quad(lambda u: (1 - u**a) / (1 - u), 0, 1, epsabs=1e-14)
        assert digamma(a + 1) - digamma(1.0) == pytest.approx(ref, abs=1e-10)


def test_log_coefficients_are_beta_values():
    a = 0.5
    c = log_coefficients(a, 20)
    assert c.size == 21
    n = np.arange(1, 21)
    ref = np.array([math.gamma(a + 1) * math.gamma(m) / math.gamma(a + 1 + m) for m in n])
    np.testing.assert_allclose(c[1:], ref, rtol=1e-12)


def test_log_zero_operator():
    op, x = zero_op()
    for r in (log_operator(op, 0.7, x), log_operator_taylor(op, x), hilbert_transform_alpha(op, 0.7, x)):
        assert r.value.norm() <= 1e-8 * x.norm()


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_log_matches_matrix_logarithm(seed):
    op, x = contraction(seed)
    ref = np.real(logm(np.eye(8) - op.matrix)) @ x.entries
    for r in (log_operator(op, 0.5, x), log_operator_taylor(op, x)):
        assert r.converged
        assert np.max(np.abs(r.value.entries - ref)) <= 1e-8


def test_log_routes_agree_on_shift():
    op, u = shift_model()
    x = u - apply(op, u)
    for a in (0.3, 0.5, 0.8):
        l1, l2 = log_operator(op, a, x), log_operator_taylor(op, x)
        assert l1.converged and l2.converged
        assert (l1.value - l2.value).norm() <= 1e-6 * x.norm()


def test_hilbert_is_negative_log():
    for seed in (3, 4):
        op, x = contraction(seed)
        h = hilbert_transform_alpha(op, 0.5, x)
        lg = log_operator(op, 0.5, x)
        assert np.max(np.abs(h.value.entries + lg.value.entries)) <= 1e-10


def test_hilbert_small_order_near_classical():
    op, x = contraction(5)
    m = op.matrix
    classical = np.zeros(8)
    p = x.entries.copy()
    for n in range(1, 3000):
        p = m @ p
        classical += p / n
    h = hilbert_transform_alpha(op, 0.05, x)
    assert np.max(np.abs(h.value.entries - classical)) <= 1e-3


def test_generator_check():
    op, x = contraction(6)
    rep = generator_check(op, 0.5, x)
    assert rep.passed and 0.9 <= rep.slope <= 1.1
    sh, u = shift_model()
    assert generator_check(sh, 0.5, u - apply(sh, u)).passed


# rates ------------------------------------------------------------------------------------


def test_rates_on_shift():
    op, w = shift_model(n_max=2200)
    x = fractional_power(op, 0.3, w)
    r = rate_check(op, 0.5, 0.3, x, [64, 2048])
    assert r.ratio <= 0.25 and r.decreasing


def test_mean_variant_rates():
    op, w = shift_model(n_max=2200)
    x = fractional_power(op, 0.5, w)
    r = rate_check(op, 0.2, 0.5, x, [64, 256, 1024, 2048], variant="mean")
    assert r.ratio <= 0.25
    assert np.all(np.diff(r.values) < 0)


def test_rates_zero_operator():
    op, x = zero_op()
    a, s = 0.5, 0.3
    ns = [4, 64]
    r = rate_check(op, a, s, x, ns)
    ref = [cesaro_array(a + 1, n)[n] / cesaro_array(a + 2, n)[n] * n**s * x.norm() for n in ns]
    np.testing.assert_allclose(r.values, ref, rtol=1e-12)


# reports and errors -------------------------------------------------------------------------


def test_report_json_and_verdicts():
    op, w = contraction(8)
    x = fractional_power(op, 0.3, w)
    r = poisson_solve_cesaro(op, 0.5, 0.3, x)
    doc = json.loads(r.to_json("u.csv"))
    assert doc["verdict"] == "converged" and doc["value_ref"] == "u.csv"
    assert r.tail_norm_estimate <= FuncCalcConfig().rel_tol * max(r.value.norm(), x.norm())


def test_fractional_power_raises_when_not_converged():
    op = LinOpHandle.dense(np.diag([1.0, 0.5]))
    x = op.vector([1.0, 1.0])
    with pytest.raises(SeriesDivergenceError):
        fractional_power(op, 0.3, x, config=FuncCalcConfig(max_powers=64))


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.floats(0.1, 0.9))
def test_two_routes_agree_property(seed, s):
    op, w = contraction(seed, 5)
    x = fractional_power(op, s, w)
    a = min(0.5, 0.9 * (1 - s))
    u1 = poisson_solve_cesaro(op, a, s, x)
    with warnings.catch_warnings():
        warnings.simplefilter("error", HypothesisWarning)
        u2 = poisson_solve_taylor(op, s, x, alpha=a)
    if u1.converged and u2.converged:
        assert (u1.value - u2.value).norm() <= 1e-6 * x.norm()
