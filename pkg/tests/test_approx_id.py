import math

import numpy as np
import pytest

from fraccalc.admissibility import HypothesisViolation
from fraccalc.approx_id import (
    ApproxIdFamily,
    convergence_to_unit,
    h_r_decomposition,
    member_coeffs,
    member_norm,
    s_pieces,
    unboundedness_probe,
)
from fraccalc.cesaro_seq import cesaro_array
from fraccalc.series_algebra import delta0, from_coeffs, k_power, log_over_z, weyl_coefficients

# empirical bound for the Taylor family at s = 0.5, alpha = 0.3: the norm
# increments shrink by about 0.88 per doubling of n from 3.23 at n = 1024
M_TAYLOR_05_03 = 3.7


def decreasing_toward_zero(vals, jitter=0.10):
    vals = list(vals)
    mono = all(b <= a * (1 + jitter) for a, b in zip(vals, vals[1:]))
    return mono and vals[-1] < vals[0] / 4


@pytest.mark.parametrize("kind", ["fractional_gn", "taylor_g0n"])
def test_unit_family(kind):
    fam = ApproxIdFamily.create(delta0(), 0.7, kind)
    np.testing.assert_array_equal(member_coeffs(fam, 1, 10).coefficients(10), np.eye(1, 11)[0])
    for n in (1, 3, 8):
        assert member_norm(fam, n).norm_value == pytest.approx(1.0, abs=1e-12)
    errs = convergence_to_unit(fam, [1, 4, 16], check_hypotheses=False)
    assert all(e.norm_value <= 1e-12 for e in errs)


def test_log_family_last_polynomial_coefficient():
    fam = ApproxIdFamily.create(None, 1.0, "log_gLn")
    for n in (1, 3, 7, 20):
        c = member_coeffs(fam, n, 4 * n).coefficients(n)
        assert abs(c[n]) == pytest.approx(1 / (n + 1), rel=1e-12)
        assert np.all(c[1:n] == pytest.approx(0.0, abs=1e-13))
    c3 = member_coeffs(fam, 3).coefficients(3)
    assert abs(c3[3]) == pytest.approx(0.25, rel=1e-12)


def test_log_family_norm_constant():
    fam = ApproxIdFamily.create(None, 1.0, "log_gLn")
    for n in (1, 2, 5, 10):
        assert member_norm(fam, n).norm_value == pytest.approx(2 + 2 * n / (n + 1), abs=1e-9)


def test_taylor_family_coefficients():
    fam = ApproxIdFamily.create(k_power(0.4), 1.0, "taylor_g0n")
    c = member_coeffs(fam, 4, 60).coefficients(60)
    ref = np.convolve(cesaro_array(0.4, 3), cesaro_array(-0.4, 60))[:61]
    np.testing.assert_allclose(c, ref, atol=1e-15)
    assert np.all(c[4:] < 0)


@pytest.mark.parametrize("n", [4, 8, 16, 32, 64])
def test_fractional_family_norm_bound(n):
    fam = ApproxIdFamily.create(k_power(0.4), 1.0, "fractional_gn", certify=True)
    assert member_norm(fam, n).norm_value <= 2 + 1e-6


def test_sign_structure_and_norm_formula():
    fam = ApproxIdFamily.create(k_power(0.4), 0.6, "fractional_gn")
    mem = member_coeffs(fam, 8, 1 << 15)
    w = weyl_coefficients(mem, 0.6, 65).values
    assert w[0] <= 1 + 1e-10
    assert np.max(w[1:]) <= 1e-10
    assert member_norm(fam, 8).norm_value == pytest.approx(2 * w[0] - fam.member_value_at_one(8), abs=1e-8)


def test_certify_rejects_non_admissible_base():
    with pytest.raises(HypothesisViolation):
        ApproxIdFamily.create(from_coeffs([1.0, -0.5, 0.25]), 0.5, "fractional_gn", certify=True)


def test_unknown_kind_and_bad_log_base():
    with pytest.raises(ValueError):
        ApproxIdFamily.create(k_power(0.4), 1.0, "bogus")
    with pytest.raises(ValueError):
        ApproxIdFamily.create(k_power(0.4), 1.0, "log_gLn")


def test_unboundedness_above_threshold():
    v = unboundedness_probe(0.5, 0.5, [32, 128, 512])
    assert v[0] < v[1] < v[2]


def test_unboundedness_at_boundary_order():
    v = unboundedness_probe(0.9, 0.1, [32, 128, 512])
    assert v[0] < v[1] < v[2]


def test_boundedness_below_threshold():
    ns = [16, 32, 64, 128, 256, 512, 1024]
    v = unboundedness_probe(0.5, 0.3, ns)
    inc = np.diff(v)
    assert max(v) <= M_TAYLOR_05_03
    # increments shrink geometrically below the threshold and stall above it
    assert np.all(inc[1:] / inc[:-1] < 0.95)
    w = np.diff(unboundedness_probe(0.5, 0.5, ns))
    assert np.all(w[1:] / w[:-1] > 0.98)


def test_unboundedness_rejects_bad_s():
    with pytest.raises(ValueError):
        unboundedness_probe(1.2, 0.5, [8])


def test_convergence_to_unit_fractional():
    fam = ApproxIdFamily.create(k_power(0.4), 1.0, "fractional_gn")
    ns = [32, 64, 128, 256, 512]
    vals = [r.norm_value for r in convergence_to_unit(fam, ns)]
    assert decreasing_toward_zero(vals)
    assert vals[-1] < 0.05


def test_convergence_to_unit_log_family():
    fam = ApproxIdFamily.create(None, 0.5, "log_gLn")
    vals = [r.norm_value for r in convergence_to_unit(fam, [4, 16, 64, 256])]
    assert decreasing_toward_zero(vals)


def test_log_family_boundary_lower_bound():
    fam = ApproxIdFamily.create(None, 1.0, "log_gLn")
    ns = [1, 4, 16, 64]
    reps = convergence_to_unit(fam, ns, check_hypotheses=False)
    for n, r in zip(ns, reps):
        assert r.norm_value >= n / (n + 1) - 1e-6
    with pytest.raises(HypothesisViolation):
        convergence_to_unit(fam, [4])


def test_taylor_hypothesis_guard():
    fam = ApproxIdFamily.create(k_power(0.5), 0.6, "taylor_g0n")
    with pytest.raises(HypothesisViolation):
        convergence_to_unit(fam, [4])


@pytest.mark.parametrize("a", [1.0, 0.6])
def test_h_r_decomposition(a):
    fam = ApproxIdFamily.create(k_power(0.4), a, "fractional_gn")
    prev = math.inf
    for n in (8, 32, 128):
        hr = h_r_decomposition(fam, n)
        assert hr.residual <= 1e-10
        assert hr.r_norm <= 3.0 * hr.r_bound_factor
        assert hr.r_norm < prev
        prev = hr.r_norm
    assert prev < 0.05


def test_s_pieces_vanish():
    fam = ApproxIdFamily.create(k_power(0.5), 0.3, "taylor_g0n")
    ns = (8, 32, 128, 512)
    pieces = [s_pieces(fam, n) for n in ns]
    for name in ("s1", "s2", "s3", "total"):
        vals = [getattr(p, name) for p in pieces]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        # power-law decay, slow near the threshold alpha = 1 - s
        slope = np.polyfit(np.log(ns), np.log(vals), 1)[0]
        assert slope <= -0.1
