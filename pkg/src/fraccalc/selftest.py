"""Invariant suite behind ``fraccalc selftest``.

Each check is a small, deterministic computation with a fixed tolerance.
Rows are keyed by the result they exercise.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _cesaro_group_law() -> tuple[bool, str]:
    from .cesaro_seq import cesaro_array, cesaro_asymptotic, sign_pattern

    orders = (-1.5, -0.5, 0.3, 1.0, 1.7, 2.5)
    worst = 0.0
    for a in orders:
        for b in orders:
            ref = cesaro_array(a + b, 512)
            got = np.convolve(cesaro_array(a, 512), cesaro_array(b, 512))[:513]
            worst = max(worst, float(np.max(np.abs(got - ref) / np.maximum(1.0, np.abs(ref)))))
    signs_ok = list(sign_pattern(1.5, 4)) == [1, -1, 1, 1, 1] and list(sign_pattern(2.0, 3)) == [1, -1, 1, 0]
    n = np.arange(100, 2001)
    ratio = cesaro_array(0.7, 2000)[n] / np.array([cesaro_asymptotic(0.7, int(m)) for m in n])
    asym_ok = bool(np.all(np.abs(ratio - 1) <= 5 / n))
    return worst <= 1e-10 and signs_ok and asym_ok, f"group law {worst:.1e}"


def _fracdiff_inversion() -> tuple[bool, str]:
    from .cesaro_seq import cesaro_array
    from .frac_diff import TailModel, d_alpha, inversion_residual, weyl_power_coeffs

    geo = 0.7 ** np.arange(200)
    r1 = inversion_residual(geo, 0.5)
    mu, a = 3.0, 0.6
    p = mu ** -(np.arange(400) + 1.0)
    lhs = d_alpha(p, a, n_out=100).values
    r2 = float(np.max(np.abs(lhs - mu**-a * (mu - 1) ** a * p[:100])))
    s = 0.3
    ks = cesaro_array(s, 1 << 16)
    tail = TailModel.power(s - 1.0, 1.0 / math.gamma(s))
    num = d_alpha(ks, a, tail, n_out=201).values
    exact = weyl_power_coeffs(s, a, 200)
    r3 = float(np.max(np.abs(num - exact) / np.abs(exact)))
    ok = r1 <= 1e-8 and r2 <= 1e-8 and r3 <= 1e-10
    return ok, f"inversion {r1:.1e}, eigen {r2:.1e}, closed form {r3:.1e}"


def _norm_constants() -> tuple[bool, str]:
    from .approx_id import ApproxIdFamily, member_norm
    from .series_algebra import alpha_norm, k_power

    fam = ApproxIdFamily.create(None, 1.0, "log_gLn")
    e1 = abs(member_norm(fam, 1).norm_value - 3.0)
    k4 = ApproxIdFamily.create(k_power(0.4), 1.0, "fractional_gn")
    worst = max(member_norm(k4, n).norm_value for n in (4, 16))
    s, a = 0.3, 0.5
    want = 2 * math.gamma(s + a + 1) / (math.gamma(1 + s) * math.gamma(1 + a))
    e3 = abs(alpha_norm(k_power(-s, 64), a).norm_value - want)
    return e1 <= 1e-9 and worst <= 2 + 1e-6 and e3 <= 1e-8, f"|3-norm| {e1:.1e}, max {worst:.4f}"


def _admissibility() -> tuple[bool, str]:
    from .admissibility import check_admissible
    from .series_algebra import k_power, log_over_z

    bad = [
        (name, a)
        for name, f in (("k0.5", k_power(0.5)), ("L", log_over_z()))
        for a in (0.0, 0.5, 1.0)
        if not check_admissible(f, a, 64).strict
    ]
    return not bad, "all strict" if not bad else f"failed {bad}"


def _appendix_identity() -> tuple[bool, str]:
    from .admissibility import appendix_identity_residual
    from .series_algebra import log_over_z

    worst = max(appendix_identity_residual(log_over_z(), p, v).residual for p in (1, 2) for v in (1, 5, 20))
    return worst <= 1e-7, f"{worst:.1e}"


def _convolution_identity() -> tuple[bool, str]:
    from .admissibility import convolution_diff_identity_residual
    from .series_algebra import k_power

    r = convolution_diff_identity_residual(k_power(0.3), k_power(-0.3), 0.5, 8).residual
    return r <= 1e-8, f"{r:.1e}"


def _boundary_divergence() -> tuple[bool, str]:
    from .approx_id import ApproxIdFamily, convergence_to_unit, unboundedness_probe

    norms = unboundedness_probe(0.5, 0.5, [32, 128, 512])
    inc = norms[0] < norms[1] < norms[2]
    fam = ApproxIdFamily.create(None, 1.0, "log_gLn")
    ns = [4, 16]
    reps = convergence_to_unit(fam, ns, check_hypotheses=False)
    low = all(r.norm_value >= n / (n + 1) - 1e-6 for n, r in zip(ns, reps))
    return inc and low, "norms " + ", ".join(f"{v:.3f}" for v in norms)


def _shift_model(beta=0.6, n_max=200, support=30, seed=0):
    from .operators import LinOpHandle

    rng = np.random.default_rng(seed)
    op = LinOpHandle.backward_shift(beta, n_max)
    w = np.zeros(n_max + 1)
    w[:support] = rng.standard_normal(support)
    return op, op.vector(w)


def _contraction(seed: int, dim: int = 8):
    from .operators import LinOpHandle

    rng = np.random.default_rng(seed)
    m = rng.standard_normal((dim, dim))
    m /= 1.1 * np.linalg.norm(m, 2)
    return LinOpHandle.dense(m), rng.standard_normal(dim)


def _poisson() -> tuple[bool, str]:
    from .func_calc import fractional_power, poisson_solve_cesaro, poisson_solve_taylor

    op, w = _shift_model()
    cases = [(op, w)]
    top, v = _contraction(1)
    cases.append((top, top.vector(v)))
    worst = 0.0
    ok = True
    for op, w in cases:
        x = fractional_power(op, 0.3, w, 0.5)
        u1 = poisson_solve_cesaro(op, 0.5, 0.3, x)
        u2 = poisson_solve_taylor(op, 0.3, x)
        ok &= u1.converged and u2.converged
        for u in (u1, u2):
            worst = max(worst, (u.value - w).norm() / w.norm())
    return ok and worst <= 1e-6, f"relative error {worst:.1e}"


def _logarithm() -> tuple[bool, str]:
    from scipy.linalg import logm

    from .func_calc import hilbert_transform_alpha, log_operator, log_operator_taylor

    op, v = _contraction(2)
    x = op.vector(v)
    ref = logm(np.eye(8) - op.matrix) @ v
    l1 = log_operator(op, 0.5, x)
    l2 = log_operator_taylor(op, x)
    h = hilbert_transform_alpha(op, 0.5, x)
    e1 = float(np.max(np.abs(l1.value.entries - ref)))
    e2 = float(np.max(np.abs(l2.value.entries - ref)))
    e3 = float(np.max(np.abs(h.value.entries + l1.value.entries)))
    ok = e1 <= 1e-8 and e2 <= 1e-8 and e3 <= 1e-10
    return ok, f"log {e1:.1e}/{e2:.1e}, H+log {e3:.1e}"


def _generator() -> tuple[bool, str]:
    from .func_calc import generator_check

    op, v = _contraction(3)
    rep = generator_check(op, 0.5, op.vector(v))
    return rep.passed, f"slope {rep.slope:.3f}"


def _rates() -> tuple[bool, str]:
    from .func_calc import fractional_power, rate_check

    op, w = _shift_model(n_max=2200)
    x = fractional_power(op, 0.3, w, 0.5)
    r = rate_check(op, 0.5, 0.3, x, [64, 2048])
    return r.ratio <= 0.25, f"ratio {r.ratio:.3f}"


def _operator_identities() -> tuple[bool, str]:
    from .operators import ergodic_identity_residual, range_identity_residual

    op, v = _contraction(4)
    x = op.vector(v)
    sh, w = _shift_model(beta=0.5)
    r = max(
        ergodic_identity_residual(op, 0.3, 1.3, 10, x),
        ergodic_identity_residual(sh, 0.5, 1.5, 64, w),
        range_identity_residual(op, 0.3, 64, x),
        range_identity_residual(sh, 0.5, 64, w),
    )
    return r <= 1e-9, f"{r:.1e}"


def _resolvent() -> tuple[bool, str]:
    from .operators import resolvent_bound_check

    op, _ = _contraction(5)
    rng = np.random.default_rng(5)
    lam = -rng.uniform(0.01, 5, 50) + 1j * rng.uniform(-5, 5, 50)
    rep = resolvent_bound_check(op, 0.5, 1.0, lam)
    return rep.holds, f"worst slack {rep.worst_slack:.3f}"


def _volterra_mean() -> tuple[bool, str]:
    from .operators import CesaroCache, LinOpHandle, cesaro_mean, volterra_cesaro_mean

    op = LinOpHandle.volterra_complement(2000)
    f = op.vector(np.ones(2001))
    a = volterra_cesaro_mean(op, 1.0, 4, f).entries
    b = cesaro_mean(CesaroCache(op, 1.0, f, 4), 4).entries
    e = float(np.max(np.abs(a - b)))
    return e <= 1e-4, f"{e:.1e}"


def _shift_growth() -> tuple[bool, str]:
    from .operators import LinOpHandle, power_norm_estimate

    slopes = []
    for beta in (0.3, 0.6):
        op = LinOpHandle.backward_shift(beta, 2100)
        slopes.append(power_norm_estimate(op, [64, 128, 256, 512, 1024, 2048]).slope_squared)
    ok = all(abs(s - (1 - b)) <= 0.15 for s, b in zip(slopes, (0.3, 0.6)))
    return ok, "slopes " + ", ".join(f"{s:.3f}" for s in slopes)


CHECKS = {
    "Cesàro group law": _cesaro_group_law,
    "fractional difference inversion": _fracdiff_inversion,
    "algebra norm constants": _norm_constants,
    "admissibility certificates": _admissibility,
    "summation-by-parts identity": _appendix_identity,
    "convolution difference identity": _convolution_identity,
    "boundary divergence witnesses": _boundary_divergence,
    "fractional Poisson equation": _poisson,
    "logarithm and Hilbert transform": _logarithm,
    "generator of fractional powers": _generator,
    "ergodic rates": _rates,
    "Cesàro operator identities": _operator_identities,
    "resolvent bound": _resolvent,
    "Volterra Laguerre means": _volterra_mean,
    "shift power growth": _shift_growth,
}


def _run_one(name: str) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, detail = CHECKS[name]()
    except Exception as exc:  # a crashing check is a failing row
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def run_selftest(names=None, threads: int = 1) -> list[CheckResult]:
    names = list(CHECKS) if names is None else list(names)
    if threads <= 1:
        return [_run_one(n) for n in names]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_one, names))


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    return "\n".join(lines)
