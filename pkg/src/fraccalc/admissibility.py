"""Sign certificates for admissible functions, log-convexity of finite
degree, the Kaluza-type sign conclusion, and two structural identities for
fractional differences of Cauchy products."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .cesaro_seq import FracOrder, cesaro_array, order_value
from .frac_diff import (
    FracDiffConfig,
    TailModel,
    d_alpha,
    extrapolate_powers,
    forward_difference,
    weyl_power_coeffs,
    weyl_sum,
)
from .series_algebra import (
    AnalyticFn,
    invert_series,
    k_power,
    multiply,
    weyl_coefficients,
)

__all__ = [
    "AdmissibilityConfig",
    "AdmissibilityCertificate",
    "LogConvexityCertificate",
    "KaluzaReport",
    "IdentityResidual",
    "HypothesisViolation",
    "inverse_of",
    "reconstruction_residual",
    "check_admissible",
    "check_log_convex",
    "kaluza_conclusion_check",
    "convolution_diff_identity_residual",
    "appendix_identity_residual",
]


class HypothesisViolation(ValueError):
    """An input fails a stated hypothesis of the identity being checked."""


@dataclass(frozen=True)
class AdmissibilityConfig:
    sign_tol: float = 1e-12
    rec_tol: float = 1e-6
    # two-stage reconstruction sizes for fractional orders
    rec_n_in: int = 1 << 21
    rec_n_mid: int = 1 << 14
    inverse_len: int = 1 << 14
    frac: FracDiffConfig = field(default_factory=FracDiffConfig)


DEFAULT = AdmissibilityConfig()


# shared helpers ------------------------------------------------------------


def inverse_of(f: AnalyticFn, n_len: int) -> AnalyticFn:
    """Coefficients of ``1/f``; closed form for powers of ``1 - z``."""
    cf = f.known_closed_form
    if cf.kind == "k_power":
        return k_power(-cf.param, n_len)
    return invert_series(f, n_len)


def _diff_tail(f: AnalyticFn, beta: float) -> TailModel:
    if f.tail.is_power:
        return TailModel.power(f.tail.exponent - beta, f.tail.coefficient)
    return TailModel.zero()


def reconstruction_residual(
    f: AnalyticFn,
    beta: float | FracOrder,
    n_check: int,
    config: AdmissibilityConfig = DEFAULT,
) -> float:
    r"""``max_{n <= n_check} |W^{-beta}(D^beta f)(n) - f(n)| / max|f|``.

    Both stages truncate infinite sums; the first produces ``D^beta f`` on a
    long middle window and the second sums it back with the tail model
    ``D^beta f(j) ~ j^(p - beta)`` inherited from ``f``.
    """
    b = order_value(beta)
    if b == 0:
        return 0.0
    integer = b == math.floor(b)
    if not f.tail.is_power:
        # finitely supported under the model: pad so the window is exact
        vals = f.coefficients(max(f.truncation_n, n_check) + 64)
        dbf = d_alpha(vals, b, TailModel.zero(), n_out=vals.size, config=config.frac)
        back = weyl_sum(dbf.values, b, TailModel.zero(), n_out=n_check + 1, config=config.frac)
    else:
        if integer:
            n_mid = config.rec_n_mid * 16
            vals = f.coefficients(n_mid + int(b))
            dbf_vals = forward_difference(vals, int(b))
        else:
            n_in = config.rec_n_in if f.is_closed_form else f.truncation_n
            n_mid = config.rec_n_mid if f.is_closed_form else max(64, n_in // 128)
            vals = f.coefficients(n_in)
            dbf_vals = d_alpha(vals, b, f.tail, n_out=n_mid, config=config.frac).values
        back = weyl_sum(dbf_vals, b, _diff_tail(f, b), n_out=n_check + 1, config=config.frac)
    ref = f.coefficients(n_check)
    scale = max(float(np.max(np.abs(ref))), 1e-300)
    return float(np.max(np.abs(back.values[: n_check + 1] - ref)) / scale)


def _weyl_of_inverse(g: AnalyticFn, beta: float, n: int, cfg: FracDiffConfig):
    w = weyl_coefficients(g, beta, n + 1, cfg)
    err = w.tail_err if w.tail_err is not None else np.zeros(w.values.size)
    return w.values[: n + 1], err[: n + 1]


# admissibility ------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityCertificate:
    alpha: float
    checked_up_to: int
    f_nonneg_ok: bool
    f_dalpha_nonneg_ok: bool
    reconstruction_ok: bool
    g_sign_ok: bool
    worst_margin: float
    sign_tol: float
    f_bounded: bool = True
    f_decreasing: bool = False
    reconstruction_residual: float = 0.0
    margins: dict = field(default_factory=dict)

    @property
    def admissible(self) -> bool:
        """All four sign/identity checks pass (non-strict inequalities)."""
        return (
            self.f_nonneg_ok and self.f_dalpha_nonneg_ok and self.reconstruction_ok and self.g_sign_ok
        )

    @property
    def strict(self) -> bool:
        return self.admissible and self.worst_margin > self.sign_tol

    @property
    def verdict(self) -> str:
        if self.strict:
            return "strict"
        return "admissible" if self.admissible else "rejected"

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(admissible=self.admissible, strict=self.strict, verdict=self.verdict)
        return d


def check_admissible(
    f: AnalyticFn,
    alpha: float | FracOrder,
    n_check: int = 128,
    tail: TailModel | None = None,
    config: AdmissibilityConfig = DEFAULT,
) -> AdmissibilityCertificate:
    """Check the admissibility conditions at ``beta in {0, alpha}`` over ``n <= n_check``.

    Sign conditions are accepted within ``sign_tol``; ``worst_margin`` is the
    smallest absolute value among all sign-checked quantities so that a
    strict certificate can be told apart from a boundary one.
    """
    a = order_value(alpha)
    if tail is not None:
        f = AnalyticFn(f.coeffs, f.known_closed_form, tail, f.value_at_one)
    tol = config.sign_tol
    betas = [0.0] if a == 0 else [0.0, a]
    vals = f.coefficients(max(2 * n_check, 16))
    first, second = vals[: n_check + 1], vals[n_check + 1 :]
    bounded = bool(np.all(np.isfinite(vals)) and (second.size == 0 or np.max(np.abs(second)) <= np.max(np.abs(first)) + tol))
    decreasing = bool(np.all(np.diff(vals[: n_check + 1]) <= tol))

    quantities: list[float] = []
    margins: dict = {}
    f_ok = bool(np.all(first >= -tol))
    quantities.extend(np.abs(first).tolist())
    margins["f"] = float(np.min(np.abs(first)))

    d_ok = True
    rec_res = 0.0
    for b in betas:
        if b == 0:
            continue
        dbf = weyl_coefficients(f, b, n_check + 1, config.frac)
        dv, de = dbf.values[: n_check + 1], (dbf.tail_err if dbf.tail_err is not None else np.zeros(dbf.values.size))[: n_check + 1]
        d_ok &= bool(np.all(dv - de >= -tol))
        quantities.extend(np.abs(dv).tolist())
        margins[f"D^{b:g}f"] = float(np.min(np.abs(dv)))
        rec_res = max(rec_res, reconstruction_residual(f, b, n_check, config))
    rec_ok = rec_res <= config.rec_tol

    g = inverse_of(f, config.inverse_len)
    g_ok = True
    for b in betas:
        wg, we = _weyl_of_inverse(g, b, n_check, config.frac)
        g_ok &= bool(wg[0] - we[0] >= -tol and np.all(wg[1:] + we[1:] <= tol))
        quantities.extend(np.abs(wg).tolist())
        margins[f"W^{b:g}g"] = float(np.min(np.abs(wg)))

    return AdmissibilityCertificate(
        alpha=a,
        checked_up_to=n_check,
        f_nonneg_ok=f_ok and bounded,
        f_dalpha_nonneg_ok=d_ok,
        reconstruction_ok=rec_ok,
        g_sign_ok=g_ok,
        worst_margin=float(min(quantities)),
        sign_tol=tol,
        f_bounded=bounded,
        f_decreasing=decreasing,
        reconstruction_residual=rec_res,
        margins=margins,
    )


# log-convexity -------------------------------------------------------------


@dataclass(frozen=True)
class LogConvexityCertificate:
    degree_m: int
    checked_up_to: int
    per_p_ok: tuple
    worst_margin: float

    @property
    def positive(self) -> bool:
        return all(self.per_p_ok)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_p_ok"] = list(self.per_p_ok)
        d["positive"] = self.positive
        return d


def check_log_convex(
    f: AnalyticFn,
    m: int,
    n_check: int = 100,
    tail: TailModel | None = None,
    rel_slack: float = 1e-12,
) -> LogConvexityCertificate:
    """Check ``D^p f(j) > 0`` and ``(D^p f(j+1))^2 <= D^p f(j) D^p f(j+2)``.

    ``worst_margin`` is the smallest relative convexity gap
    ``D^p f(j) D^p f(j+2) / (D^p f(j+1))^2 - 1`` (equality gives 0).
    """
    if m < 0:
        raise ValueError("degree must be non-negative")
    vals = f.coefficients(n_check + 2 + m)
    per_p = []
    worst = math.inf
    for p in range(m + 1):
        d = forward_difference(vals, p)[: n_check + 3]
        pos = bool(np.all(d > 0))
        if not pos:
            per_p.append(False)
            worst = min(worst, float(np.min(d)))
            continue
        lhs = d[1:-1] ** 2
        rhs = d[:-2] * d[2:]
        gap = rhs / lhs - 1.0
        per_p.append(bool(np.all(gap >= -rel_slack)))
        worst = min(worst, float(np.min(gap)))
    return LogConvexityCertificate(m, n_check, tuple(per_p), worst)


@dataclass(frozen=True)
class KaluzaReport:
    degree_m: int
    checked_up_to: int
    hypotheses_ok: bool
    log_convex: bool
    decreasing: bool
    decay_trend_ok: bool
    per_beta: list
    all_strict: bool
    all_nonstrict: bool

    def to_dict(self) -> dict:
        return asdict(self)


def kaluza_conclusion_check(
    f: AnalyticFn,
    m: int,
    beta_samples,
    n_check: int = 128,
    config: AdmissibilityConfig = DEFAULT,
) -> KaluzaReport:
    """Verify ``W^beta g(0) > 0`` and ``W^beta g(j) < 0`` for ``j >= 1``.

    ``g`` are the coefficients of ``1/f``.  The decay hypothesis
    ``D^beta f(j) j^beta -> 0`` is checked as a decreasing trend over the
    last decade of the window.
    """
    betas = [order_value(b) for b in beta_samples]
    if any(b < 0 or b > m for b in betas):
        raise ValueError("beta samples must lie in [0, m]")
    lc = check_log_convex(f, m, n_check)
    vals = f.coefficients(n_check + 1)
    decreasing = bool(np.all(np.diff(vals) <= 0))
    lo = max(1, n_check // 10)
    trend = True
    for b in betas:
        db = weyl_coefficients(f, b, n_check + 1, config.frac).values[: n_check + 1]
        j = np.arange(lo, n_check + 1, dtype=float)
        prod = db[lo:] * j**b
        trend &= bool(np.all(np.diff(prod) <= 0))
    g = inverse_of(f, config.inverse_len)
    per_beta = []
    strict_all = True
    nonstrict_all = True
    for b in betas:
        wg, we = _weyl_of_inverse(g, b, n_check, config.frac)
        tol = config.sign_tol
        strict = bool(wg[0] - we[0] > tol and np.all(wg[1:] + we[1:] < -tol))
        nonstrict = bool(wg[0] >= -tol and np.all(wg[1:] <= tol))
        margin = float(min(wg[0], float(np.min(-wg[1:])))) if wg.size > 1 else float(wg[0])
        per_beta.append({"beta": b, "w0": float(wg[0]), "max_tail": float(np.max(wg[1:])) if wg.size > 1 else 0.0,
                         "margin": margin, "strict": strict})
        strict_all &= strict
        nonstrict_all &= nonstrict
    hyp = lc.positive and decreasing and trend
    return KaluzaReport(m, n_check, hyp, lc.positive, decreasing, trend, per_beta, strict_all, nonstrict_all)


# structural identities -------------------------------------------------------


@dataclass(frozen=True)
class IdentityResidual:
    residual: float
    lhs: float
    rhs: float
    tail_bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def _dalpha_long(f: AnalyticFn, alpha: float, n: int, cfg: FracDiffConfig) -> np.ndarray:
    cf = f.known_closed_form
    if cf.kind == "k_power":
        return weyl_power_coeffs(cf.param, alpha, n)
    w = weyl_coefficients(f, alpha, n + 1, cfg).values
    out = np.zeros(n + 1)
    out[: min(n + 1, w.size)] = w[: n + 1]
    return out


def convolution_diff_identity_residual(
    f: AnalyticFn,
    h: AnalyticFn,
    alpha: float | FracOrder,
    v: int,
    *,
    m_max: int = 1 << 21,
    config: AdmissibilityConfig = DEFAULT,
    check_hypotheses: bool = True,
) -> IdentityResidual:
    r"""Compare ``W^alpha(f*h)(v)`` with the double-sum expression

    .. math::
        \Big(\sum_{j=0}^{v}\sum_{l=v-j}^{v} - \sum_{j>v}\sum_{l>v}\Big)
        k^\alpha(l+j-v)\,D^\alpha f(j)\,W^\alpha h(l).

    The left side is a numerical fractional difference of the product.  On
    the right, the infinite double tail is summed over triangles
    ``j + l <= M`` by one FFT and extrapolated in ``M`` with the power
    exponents implied by the tails of ``D^alpha f`` and ``W^alpha h``.
    """
    return convolution_diff_identity_residuals(
        f, h, alpha, [v], m_max=m_max, config=config, check_hypotheses=check_hypotheses
    )[0]


def convolution_diff_identity_residuals(
    f: AnalyticFn,
    h: AnalyticFn,
    alpha: float | FracOrder,
    vs,
    *,
    m_max: int = 1 << 21,
    config: AdmissibilityConfig = DEFAULT,
    check_hypotheses: bool = True,
) -> list[IdentityResidual]:
    """:func:`convolution_diff_identity_residual` for several ``v``, sharing the long arrays."""
    vs = [int(v) for v in vs]
    if not vs or min(vs) < 0:
        raise ValueError("v must be non-negative")
    a = order_value(alpha)
    if a <= 0:
        raise ValueError("alpha must be positive")
    if check_hypotheses:
        fv = f.coefficients(256)
        if np.any(fv < 0):
            raise HypothesisViolation("f must be non-negative")
        if f.tail.is_power and f.tail.exponent > 0:
            raise HypothesisViolation("f must be bounded")
    v_top = max(vs)
    prod = multiply(f, h, max(4096, 8 * v_top))
    lhs_all = weyl_coefficients(prod, a, v_top + 1, config.frac).values

    both_power = f.tail.is_power and h.tail.is_power
    n_long = m_max if both_power else max(f.truncation_n, h.truncation_n, 4 * v_top + 64)
    da = _dalpha_long(f, a, n_long, config.frac)
    wb = _dalpha_long(h, a, n_long, config.frac)
    if check_hypotheses and np.any(da[: min(256, da.size)] < -config.sign_tol):
        raise HypothesisViolation("D^alpha f must be non-negative")
    K = cesaro_array(a, 2 * n_long + 2)
    return [_convolution_identity_at(v, float(lhs_all[v]), da, wb, K, f, h, a, n_long, both_power)
            for v in vs]


def _convolution_identity_at(v, lhs, da, wb, K, f, h, a, n_long, both_power) -> IdentityResidual:
    finite = 0.0
    for j in range(v + 1):
        ls = np.arange(v - j, v + 1)
        finite += da[j] * float(np.dot(K[ls + j - v], wb[ls]))

    A, B = da[v + 1 :], wb[v + 1 :]
    if not both_power:
        # at least one factor is finitely supported beyond v: exact sum
        c = np.convolve(A, B)
        tail = float(np.dot(K[np.arange(c.size) + v + 2], c))
        bound = 0.0
    else:
        c = fftconvolve(A, B)[: n_long - v]
        w = K[np.arange(c.size) + v + 2] * c
        cums = np.cumsum(w)
        pa = f.tail.exponent - a
        pb = h.tail.exponent - a
        exps = sorted({round(g + i, 9) for i in range(6)
                       for g in (-(pa + a), -(pb + a), -(pa + pb + a + 1))})
        exps = [e for e in exps if e > 0]
        top = cums.size - 1
        ladder = [top >> k for k in range(9, -1, -1)]
        tail, bound = extrapolate_powers(ladder, cums[ladder], exps[:8])
    rhs = finite - tail
    return IdentityResidual(abs(lhs - rhs), lhs, rhs, bound)


def appendix_identity_residual(
    f: AnalyticFn,
    p: int,
    v: int,
    n_tail: int = 4096,
    config: AdmissibilityConfig = DEFAULT,
) -> IdentityResidual:
    r"""Residual of

    .. math::
        \sum_{l=0}^{v} W^p g(l)\sum_{j=v-l}^{v} k^p(j+l-v) D^p f(j)
        = \sum_{l>v} W^p g(l)\sum_{j>v} k^p(j+l-v) D^p f(j)

    with ``g`` the coefficients of ``1/f`` and integer ``p``.  Direct sums run
    to ``n_tail`` in both indices; the remainders are closed by summation by
    parts, which turns each into finitely many boundary terms because
    ``k^p(j + c)`` is a polynomial of degree ``p - 1`` in ``j``.  The size of
    those boundary terms is reported as ``tail_bound``.
    """
    if p < 1 or v < 1:
        raise ValueError("need p >= 1 and v >= 1")
    N = J = int(n_tail)
    fv = f.coefficients(J + p + 2)
    g = inverse_of(f, N + p + 2).coefficients(N + p + 2)
    Df = [forward_difference(fv, q) for q in range(p + 1)]
    Wg = [forward_difference(g, q) for q in range(p + 1)]
    Kr = {r: cesaro_array(r, 2 * (J + N) + 4) for r in range(p + 1)}

    lhs = 0.0
    for l in range(v + 1):
        js = np.arange(v - l, v + 1)
        lhs += Wg[p][l] * float(np.dot(Kr[p][js + l - v], Df[p][js]))

    js = np.arange(v + 1, J + 1)
    dpf = Df[p][js]

    def inner(r: int, l: int) -> tuple[float, float]:
        # sum_{j>v} k^r(j + l - v) D^p f(j), with the j > J remainder closed
        c = l - v
        body = float(np.dot(Kr[r][js + c], dpf))
        rem = 0.0
        for i in range(r):
            rem += Df[p - 1 - i][J + 1 + i] * Kr[r - i][J + 1 + i + c]
        return body + rem, abs(rem)

    ls = np.arange(v + 1, N + 1)
    # vectorized body for r = p over all l
    c = ls - v
    body = np.array([float(np.dot(Kr[p][js + ci], dpf)) for ci in c])
    rems = np.zeros(ls.size)
    for i in range(p):
        rems += Df[p - 1 - i][J + 1 + i] * Kr[p - i][J + 1 + i + c]
    A = body + rems
    rhs = float(np.dot(Wg[p][ls], A))
    bound = float(np.sum(np.abs(rems * Wg[p][ls])))
    # l > N remainder: sum_{l>N} W^p g(l) A_p(l), A_r(l) - A_r(l-1) = A_{r-1}(l)
    tail_l = 0.0
    for i in range(p):
        val, _ = inner(p - i, N + 1 + i)
        tail_l += Wg[p - 1 - i][N + 1 + i] * val
    rhs += tail_l
    bound += abs(tail_l)
    return IdentityResidual(abs(lhs - rhs), lhs, rhs, bound)
