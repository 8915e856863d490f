import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gammaln

from fraccalc.cesaro_seq import cesaro_array
from fraccalc.frac_diff import (
    FracDiffConfig,
    TailModel,
    d_alpha,
    forward_difference,
    inversion_residual,
    richardson,
    weyl_diff,
    weyl_power_coeffs,
    weyl_sum,
)

N_LONG = 1 << 16


def geometric(mu, n=2000):
    return mu ** -(np.arange(n) + 1.0)


def power_seq(s):
    return cesaro_array(s, N_LONG), TailModel.power(s - 1.0, 1.0 / math.gamma(s))


def log_seq():
    return 1.0 / (np.arange(N_LONG) + 1.0), TailModel.power(-1.0, 1.0)


def test_dirac_is_fixed():
    d = np.zeros(50)
    d[0] = 1.0
    for a in (0.3, 1.0, 2.4):
        np.testing.assert_allclose(weyl_sum(d, a, n_out=10).values, np.eye(1, 10)[0], atol=1e-15)
        np.testing.assert_allclose(d_alpha(d, a, n_out=10).values, np.eye(1, 10)[0], atol=1e-15)
    assert inversion_residual(d, 0.7) <= 1e-14


def test_weyl_sum_of_geometric():
    out = weyl_sum(geometric(2.0, 200), 1.0, n_out=40).values
    np.testing.assert_allclose(out, 2.0 ** -np.arange(40), rtol=1e-13)


def test_weyl_sum_matches_direct_tail_sums():
    rng = np.random.default_rng(3)
    f = rng.uniform(0, 1, 300) * 0.5 ** np.arange(300)
    a = 0.6
    k = cesaro_array(a, 300)
    direct = [sum(k[j - n] * f[j] for j in range(n, 300)) for n in range(30)]
    np.testing.assert_allclose(weyl_sum(f, a, n_out=30).values, direct, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("mu", [2.0, 3.0, 1.5])
@pytest.mark.parametrize("a", [0.3, 1.0, 1.8])
def test_eigenfunction_law(mu, a):
    p = geometric(mu)
    w = weyl_diff(p, a, n_out=65).values
    assert np.max(np.abs(w - mu**-a * (mu - 1) ** a * p[:65])) <= 1e-8


def test_eigenfunction_examples():
    p = geometric(2.0)
    np.testing.assert_allclose(weyl_diff(p, 1.0, n_out=30).values, 0.5 * p[:30], rtol=1e-12)
    np.testing.assert_allclose(weyl_diff(p, 0.5, n_out=30).values, 2**-0.5 * p[:30], atol=1e-9)


@given(st.integers(1, 4))
def test_integer_order_is_forward_difference(m):
    rng = np.random.default_rng(m)
    f = np.zeros(80)
    f[:40] = rng.standard_normal(40)
    direct = np.array([sum((-1) ** j * math.comb(m, j) * f[n + j] for j in range(m + 1)) for n in range(60)])
    np.testing.assert_allclose(weyl_diff(f, float(m), n_out=60).values, direct, atol=1e-12)
    np.testing.assert_allclose(d_alpha(f, float(m), n_out=60).values, direct, atol=1e-12)
    np.testing.assert_allclose(forward_difference(f, m)[:60], direct, atol=1e-12)


@pytest.mark.parametrize("a", [0.25, 0.5, 1.3])
@pytest.mark.parametrize("s", [0.2, 0.7])
def test_power_closed_form(a, s):
    f, tail = power_seq(s)
    n = np.arange(201)
    exact = math.sin(math.pi * s) / math.pi * np.exp(gammaln(1 - s + a) + gammaln(s + n) - gammaln(n + a + 1))
    got = d_alpha(f, a, tail, n_out=201).values
    assert np.max(np.abs(got - exact) / np.abs(exact)) <= 1e-10
    np.testing.assert_allclose(weyl_power_coeffs(s, a, 200), exact, rtol=1e-11)


@pytest.mark.parametrize("a", [0.25, 0.5, 1.3])
def test_log_closed_form(a):
    f, tail = log_seq()
    n = np.arange(201)
    exact = np.exp(gammaln(a + 1) + gammaln(n + 1) - gammaln(n + a + 2))
    got = d_alpha(f, a, tail, n_out=201)
    assert np.max(np.abs(got.values - exact) / exact) <= 1e-10
    assert got.reliable is None or bool(np.all(got.reliable))


@pytest.mark.parametrize("a, s", [(0.25, 0.2), (0.5, 0.7), (1.3, 0.2)])
def test_closed_form_asymptotics(a, s):
    n = np.arange(100, 2001)
    p = weyl_power_coeffs(s, a, 2000)[n]
    lead = math.gamma(1 - s + a) / (math.gamma(s) * math.gamma(1 - s)) * n ** (s - a - 1.0)
    assert np.all(np.abs(p / lead - 1) <= 5 / n)
    ln = np.exp(gammaln(a + 1) + gammaln(n + 1) - gammaln(n + a + 2))
    assert np.all(np.abs(ln / (math.gamma(a + 1) * n ** (-a - 1.0)) - 1) <= 5 / n)


@pytest.mark.parametrize("a", [0.3, 0.8, 1.5, 2.2])
def test_weyl_and_d_alpha_agree(a):
    for f, tail in (power_seq(-0.4), (geometric(1.7, 4000), TailModel.zero())):
        w = weyl_diff(f, a, tail, n_out=64).values
        d = d_alpha(f, a, tail, n_out=64).values
        assert np.max(np.abs(w - d)) <= 1e-9


def test_inversion_examples():
    assert inversion_residual(geometric(3.0, 400), 0.6) <= 1e-8
    rng = np.random.default_rng(7)
    f = rng.uniform(0, 1, 400) * 2.0 ** -np.arange(400)
    assert inversion_residual(f, 1.5) <= 1e-8


@given(st.floats(0.05, 2.5), st.floats(1.3, 4.0))
def test_inversion_property(a, mu):
    assert inversion_residual(geometric(mu, 600), a) <= 1e-8


def test_weyl_sum_then_d_alpha_on_power():
    # W^{-a} D^a k^s = k^s for s = 0.4, a = 0.7 on n <= 128
    s, a = 0.4, 0.7
    d = weyl_power_coeffs(s, a, N_LONG - 1)
    tail = TailModel.power(s - a - 1.0, math.gamma(1 - s + a) / (math.gamma(s) * math.gamma(1 - s)))
    back = weyl_sum(d, a, tail, n_out=129).values
    np.testing.assert_allclose(back, cesaro_array(s, 128), rtol=1e-8)


def test_reliability_window_near_truncation():
    f = geometric(1.01, 300)
    out = weyl_diff(f, 0.5, n_out=300)
    assert out.reliable is not None
    assert not out.reliable[-1]


def test_richardson_recovers_limit():
    cut = 2.0 ** np.arange(4, 12)
    partials = 3.0 - 2.0 / cut + 0.5 / cut**2
    value, err = richardson(partials, 1.0)
    assert value == pytest.approx(3.0, abs=1e-12)
    assert err <= 1e-8


def test_config_is_frozen():
    cfg = FracDiffConfig()
    with pytest.raises(Exception):
        cfg.rel_tol = 1.0  # type: ignore[misc]
