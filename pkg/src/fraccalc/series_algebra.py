r"""Power series in the weighted algebra with norm
:math:`\|f\|_{(\alpha)} = \sum_n |W^\alpha f(n)|\,k^{\alpha+1}(n)`.

An :class:`AnalyticFn` is a truncated Taylor coefficient sequence plus an
optional closed-form tag that lets callers regenerate coefficients to any
length and infers the behaviour of the coefficients beyond the truncation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import lfilter

from .cesaro_seq import CoeffSeq, FracOrder, cesaro_array, order_value
from .frac_diff import (
    FracDiffConfig,
    TailModel,
    d_alpha,
    forward_difference,
    richardson,
)
from .special_fn import gamma_sign_log

__all__ = [
    "ClosedForm",
    "AnalyticFn",
    "AlgebraNormReport",
    "BoundaryValue",
    "ZeroConstantTermError",
    "k_power",
    "log_over_z",
    "one_minus_z_times",
    "delta0",
    "geometric",
    "from_coeffs",
    "multiply",
    "weyl_coefficients",
    "alpha_norm",
    "invert_series",
    "evaluate_at_one",
    "delta_z",
    "represent",
]

_KINDS = ("k_power", "log_over_z", "one_minus_z_times", "custom")


class ZeroConstantTermError(ValueError):
    """A power series with vanishing constant term has no inverse."""


@dataclass(frozen=True)
class ClosedForm:
    kind: str = "custom"
    param: float | None = None
    inner: "AnalyticFn | None" = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown closed form {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "k_power":
            return f"k_power({self.param:g})"
        if self.kind == "one_minus_z_times":
            return f"one_minus_z_times({self.inner.known_closed_form.describe()})"
        return self.kind


@dataclass(frozen=True, eq=False)
class AnalyticFn:
    """Taylor coefficients of an analytic function on the unit disc.

    ``tail`` describes the coefficients beyond the stored truncation and
    ``value_at_one`` optionally records a known boundary value at ``z = 1``
    (``math.inf`` allowed).
    """

    coeffs: CoeffSeq
    known_closed_form: ClosedForm = field(default_factory=ClosedForm)
    tail: TailModel = field(default_factory=TailModel)
    value_at_one: float | None = None

    def __post_init__(self) -> None:
        cf = self.known_closed_form
        if cf.kind == "k_power":
            ref = cesaro_array(cf.param, self.coeffs.truncation_n)
            if not np.array_equal(ref, self.coeffs.values):
                raise ValueError("k_power coefficients must equal the Cesàro numbers")

    @property
    def label(self) -> str:
        return self.coeffs.label

    @property
    def truncation_n(self) -> int:
        return self.coeffs.truncation_n

    @property
    def is_closed_form(self) -> bool:
        cf = self.known_closed_form
        if cf.kind == "one_minus_z_times":
            return cf.inner.is_closed_form
        return cf.kind != "custom"

    def coefficients(self, n_max: int) -> np.ndarray:
        """Coefficients ``0..n_max``, regenerated from the closed form if needed."""
        n_max = int(n_max)
        if n_max <= self.truncation_n:
            return self.coeffs.values[: n_max + 1]
        cf = self.known_closed_form
        if cf.kind == "k_power":
            return cesaro_array(cf.param, n_max)
        if cf.kind == "log_over_z":
            return 1.0 / np.arange(1, n_max + 2, dtype=float)
        if cf.kind == "one_minus_z_times" and cf.inner.is_closed_form:
            inner = cf.inner.coefficients(n_max)
            out = inner.copy()
            out[1:] -= inner[:-1]
            return out
        if self.tail.is_power:
            raise ValueError(
                f"only {self.truncation_n + 1} coefficients stored; a power tail cannot be padded"
            )
        out = np.zeros(n_max + 1)
        out[: self.truncation_n + 1] = self.coeffs.values
        return out

    def with_length(self, n_max: int) -> "AnalyticFn":
        vals = self.coefficients(n_max)
        return replace(self, coeffs=CoeffSeq(vals, label=self.label))

    def to_json(self) -> str:
        return json.dumps(
            {
                "label": self.label,
                "closed_form": self.known_closed_form.describe(),
                "tail": {"kind": self.tail.kind, "exponent": self.tail.exponent,
                         "coefficient": self.tail.coefficient},
                "values": [float(v) for v in self.coeffs.values],
            }
        )


# constructors ------------------------------------------------------------


def _kpower_tail(s: float) -> TailModel:
    if s <= 0 and s == math.floor(s):
        return TailModel.zero()
    sign, lg = gamma_sign_log(s)
    return TailModel.power(s - 1.0, sign * math.exp(-lg))


def k_power(s: float | FracOrder, n_max: int = 4096) -> AnalyticFn:
    """The function ``(1 - z)^(-s)`` with coefficients ``k^s``."""
    s = order_value(s)
    seq = CoeffSeq(cesaro_array(s, n_max), label=f"k^{s:g}")
    if s > 0:
        at_one = math.inf
    elif s < 0:
        at_one = 0.0
    else:
        at_one = 1.0
    return AnalyticFn(seq, ClosedForm("k_power", s), _kpower_tail(s), at_one)


def log_over_z(n_max: int = 4096) -> AnalyticFn:
    """The function ``-log(1 - z) / z`` with coefficients ``1/(n+1)``."""
    seq = CoeffSeq(1.0 / np.arange(1, n_max + 2, dtype=float), label="L")
    return AnalyticFn(seq, ClosedForm("log_over_z"), TailModel.power(-1.0, 1.0), math.inf)


def one_minus_z_times(f: AnalyticFn) -> AnalyticFn:
    """The product ``(1 - z) f(z)``."""
    vals = f.coeffs.values.copy()
    vals[1:] -= f.coeffs.values[:-1]
    if f.tail.is_power:
        p, c = f.tail.exponent, f.tail.coefficient
        tail = TailModel.power(p - 1.0, -p * c) if p != 0 else TailModel.zero()
    else:
        tail = TailModel.zero()
    at_one = None
    if f.value_at_one is not None and math.isfinite(f.value_at_one):
        at_one = 0.0
    return AnalyticFn(
        CoeffSeq(vals, label=f"(1-z)[{f.label}]"), ClosedForm("one_minus_z_times", inner=f), tail, at_one
    )


def delta0(n_max: int = 0) -> AnalyticFn:
    """The constant function 1."""
    vals = np.zeros(n_max + 1)
    vals[0] = 1.0
    return AnalyticFn(CoeffSeq(vals, label="delta0"), ClosedForm("k_power", 0.0), TailModel.zero(), 1.0)


def geometric(mu: float, n_max: int = 256) -> AnalyticFn:
    """Coefficients ``mu^-(n+1)``, i.e. the function ``1 / (mu - z)``."""
    if abs(mu) <= 1:
        raise ValueError("need |mu| > 1")
    vals = float(mu) ** -(np.arange(n_max + 1) + 1.0)
    return AnalyticFn(CoeffSeq(vals, label=f"p_{mu:g}"), ClosedForm(), TailModel.zero(), 1.0 / (mu - 1.0))


def from_coeffs(values, label: str = "", tail: TailModel | None = None,
                value_at_one: float | None = None) -> AnalyticFn:
    return AnalyticFn(CoeffSeq(np.asarray(values, dtype=float), label=label), ClosedForm(),
                      tail or TailModel.zero(), value_at_one)


def multiply(f: AnalyticFn, h: AnalyticFn, n_max: int | None = None) -> AnalyticFn:
    """Cauchy product ``f h`` truncated at ``n_max`` (default: shorter input)."""
    cf, ch = f.known_closed_form, h.known_closed_form
    if cf.kind == "k_power" and ch.kind == "k_power":
        n = n_max if n_max is not None else min(f.truncation_n, h.truncation_n)
        return k_power(cf.param + ch.param, n)
    n = n_max if n_max is not None else min(f.truncation_n, h.truncation_n)
    vals = np.convolve(f.coefficients(n), h.coefficients(n))[: n + 1]
    tail = _product_tail(f, h, vals)
    return AnalyticFn(CoeffSeq(vals, label=f"({f.label})({h.label})"), ClosedForm(), tail)


def _sum_at_one(f: AnalyticFn) -> float:
    if f.value_at_one is not None and math.isfinite(f.value_at_one):
        return float(f.value_at_one)
    return math.fsum(f.coeffs.values)


def _product_tail(f: AnalyticFn, h: AnalyticFn, vals: np.ndarray) -> TailModel:
    # (f h)(n) ~ f(1) h(n) + h(1) f(n) when both are summable
    terms = [(g.tail.exponent, g.tail.coefficient * _sum_at_one(other))
             for g, other in ((h, f), (f, h)) if g.tail.is_power]
    if not terms:
        return TailModel.zero()
    p = max(e for e, _ in terms)
    c = sum(cc for e, cc in terms if e == p)
    n = vals.size - 1
    if n < 64:
        return TailModel.power(p, c)
    idx = np.arange(n // 2, n + 1)
    model = c * idx.astype(float) ** p
    seg = vals[idx]
    if np.max(np.abs(seg - model)) <= 0.05 * np.max(np.abs(seg)):
        return TailModel.power(p, c)
    # the leading terms cancel; fall back to a fit over the last octave
    if np.all(seg > 0) or np.all(seg < 0):
        slope, icpt = np.polyfit(np.log(idx), np.log(np.abs(seg)), 1)
        return TailModel.power(float(slope), float(np.sign(seg[0]) * math.exp(icpt)))
    return TailModel.power(p, 0.0)


# Weyl coefficients -------------------------------------------------------


@dataclass(frozen=True)
class _Lengths:
    n_in: int
    n_out: int


def _lengths_for(f: AnalyticFn, alpha: float, n_out: int, config: FracDiffConfig) -> _Lengths:
    integer = alpha == math.floor(alpha)
    if integer or not f.tail.is_power:
        n_in = n_out + int(alpha) + 1
        if not f.is_closed_form:
            n_in = max(n_in, f.truncation_n)
        return _Lengths(n_in, n_out)
    n_in = int(n_out * config.ladder_factor * 2**config.levels) + n_out
    if not f.is_closed_form:
        n_in = f.truncation_n
        n_out = min(n_out, max(1, int(n_in / (config.ladder_factor * 2**config.levels + 1))))
    return _Lengths(n_in, n_out)


def weyl_coefficients(
    f: AnalyticFn,
    alpha: float | FracOrder,
    n_out: int,
    config: FracDiffConfig = FracDiffConfig(),
) -> CoeffSeq:
    r"""Coefficients :math:`W^\alpha f(n)` for ``n < n_out``.

    They are evaluated through ``D^alpha``, which coincides with the Weyl
    difference on every sequence where both are defined; for integer orders
    this is an exact finite difference.
    """
    a = order_value(alpha)
    if a < 0:
        raise ValueError("alpha must be non-negative")
    lens = _lengths_for(f, a, n_out, config)
    vals = f.coefficients(lens.n_in)
    if a == 0:
        n = min(lens.n_out, vals.size)
        return CoeffSeq(vals[:n], label=f.label, tail_err=np.zeros(n), reliable=np.ones(n, bool))
    if a == math.floor(a):
        m = int(a)
        out = forward_difference(vals, m)[: lens.n_out]
        n = out.size
        rel = np.arange(n) + m <= (f.truncation_n if not f.is_closed_form else lens.n_in)
        return CoeffSeq(out, label=f"W^{a:g}[{f.label}]", tail_err=np.zeros(n), reliable=rel)
    return d_alpha(vals, a, f.tail, n_out=lens.n_out, config=config)


# norm --------------------------------------------------------------------


@dataclass(frozen=True)
class AlgebraNormReport:
    norm_value: float
    alpha: float
    partial_at: int
    tail_bound: float
    converged: bool
    tail_method: str = "none"
    partial_sum: float = float("nan")


def _sign_stable(w: np.ndarray, start: int) -> int:
    seg = np.sign(w[start:])
    if seg.size and np.all(seg == seg[0]) and seg[0] != 0:
        return int(seg[0])
    return 0


def alpha_norm(
    f: AnalyticFn,
    alpha: float | FracOrder,
    tail: TailModel | None = None,
    *,
    n_terms: int = 2048,
    value_at_one: float | None = None,
    tail_method: str = "auto",
    rel_tol: float = 1e-8,
    config: FracDiffConfig = FracDiffConfig(),
) -> AlgebraNormReport:
    """Weighted norm with a tail estimate.

    Tail strategies:

    ``closure``
        When the boundary value ``f(1)`` is known and ``W^alpha f`` keeps one
        sign over the last half of the window, the remaining tail equals
        ``sign * (f(1) - sum_{n <= V} W^alpha f(n) k^{alpha+1}(n))`` exactly.
    ``richardson``
        When the terms decay like ``n^q`` with ``q < -1``, partial sums on a
        doubling ladder are extrapolated.

    ``auto`` tries closure first, then Richardson.  Otherwise the partial
    sum is returned as a lower bound with ``converged=False``.
    """
    a = order_value(alpha)
    if tail is not None:
        f = replace(f, tail=tail)
    if value_at_one is None:
        value_at_one = f.value_at_one
    w = weyl_coefficients(f, a, n_terms, config)
    wv = w.values
    V = wv.size
    weights = cesaro_array(a + 1.0, V - 1)
    terms = np.abs(wv) * weights
    partial = math.fsum(terms)
    w_err = float(np.sum(w.tail_err * weights)) if w.tail_err is not None else 0.0

    if not f.tail.is_power and V >= 2 and not np.any(wv[V // 2:]):
        # finitely supported coefficients: the sum is already complete
        return AlgebraNormReport(partial, a, V - 1, w_err, w_err <= rel_tol * max(partial, 1e-300),
                                 "exact", partial)

    if tail_method in ("auto", "closure") and value_at_one is not None and math.isfinite(value_at_one):
        sgn = _sign_stable(wv, V // 2)
        if sgn != 0:
            signed = math.fsum(wv * weights)
            rest = sgn * (value_at_one - signed)
            slack = 1e-12 * max(1.0, partial) + w_err
            if rest >= -slack:
                value = partial + max(rest, 0.0)
                bound = w_err + 64 * np.finfo(float).eps * (partial + abs(value_at_one))
                return AlgebraNormReport(value, a, V - 1, bound, bound <= rel_tol * value,
                                         "closure", partial)
        if tail_method == "closure":
            return AlgebraNormReport(partial, a, V - 1, math.inf, False, "none", partial)

    if tail_method in ("auto", "richardson"):
        q = f.tail.exponent if f.tail.is_power else _fit_exponent(terms)
        if q is not None and q < -1 and V >= 64:
            K = 0
            while K < config.levels and (V - 1) // 2 ** (K + 1) >= 32:
                K += 1
            m0 = (V - 1) // 2**K
            cums = np.cumsum(terms)
            ladder = [m0 * 2**k for k in range(K + 1)]
            sums = np.array([cums[M] for M in ladder])
            if K >= 2:
                value, err = richardson(sums[:, None], -(q + 1.0))
                value, err = float(value[0]), float(err[0])
                bound = err + w_err
                if value < partial:
                    # nonnegative terms: an extrapolated sum below the partial sum is pre-asymptotic
                    return AlgebraNormReport(partial, a, V - 1, math.inf, False, "none", partial)
                return AlgebraNormReport(value, a, V - 1, bound, bound <= rel_tol * value,
                                         "richardson", partial)
    return AlgebraNormReport(partial, a, V - 1, math.inf, False, "none", partial)


def _fit_exponent(terms: np.ndarray) -> float | None:
    V = terms.size
    if V < 64:
        return None
    lo, hi = terms[V // 2], terms[-1]
    if lo <= 0 or hi <= 0:
        return None
    return math.log(hi / lo) / math.log((V - 1) / (V // 2))


# inversion ---------------------------------------------------------------


def invert_series(f: AnalyticFn, n_max: int) -> AnalyticFn:
    r"""Coefficients of ``1/f`` up to ``n_max``.

    Uses :math:`g(0) = 1/f(0)` and
    :math:`g(n) = -f(0)^{-1}\sum_{j=1}^{n} f(j) g(n-j)`.
    """
    a = f.coefficients(n_max)
    if a[0] == 0:
        raise ZeroConstantTermError("f(0) = 0; 1/f is not a power series")
    g = np.empty(n_max + 1)
    g[0] = 1.0 / a[0]
    inv0 = g[0]
    for n in range(1, n_max + 1):
        g[n] = -inv0 * np.dot(a[1 : n + 1], g[n - 1 :: -1][:n])
    cf = f.known_closed_form
    tail = TailModel.zero()
    if cf.kind == "k_power":
        tail = _kpower_tail(-cf.param)
    at_one = None
    if f.value_at_one is not None:
        if math.isinf(f.value_at_one):
            at_one = 0.0
        elif f.value_at_one != 0:
            at_one = 1.0 / f.value_at_one
    return AnalyticFn(CoeffSeq(g, label=f"1/[{f.label}]"), ClosedForm(), tail, at_one)


# boundary value at one ---------------------------------------------------


@dataclass(frozen=True)
class BoundaryValue:
    status: str  # "finite" | "infinite" | "inconclusive"
    value: float
    err: float

    @property
    def is_finite(self) -> bool:
        return self.status == "finite"

    @property
    def is_infinite(self) -> bool:
        return self.status == "infinite"


def evaluate_at_one(
    f: AnalyticFn,
    alpha: float | FracOrder = 0.0,
    tail: TailModel | None = None,
    *,
    route: str = "taylor",
    n_terms: int = 1 << 16,
    tol: float = 1e-10,
    config: FracDiffConfig = FracDiffConfig(),
) -> BoundaryValue:
    """Boundary value ``f(1)`` as a three-valued result.

    ``route="taylor"`` sums the Taylor coefficients (Abel value);
    ``route="weyl"`` sums ``W^alpha f(n) k^{alpha+1}(n)``.  Both use the tail
    model for extrapolation.
    """
    a = order_value(alpha)
    if tail is not None:
        f = replace(f, tail=tail)
    if route == "taylor":
        if f.tail.is_power:
            p, c = f.tail.exponent, f.tail.coefficient
            if p >= -1:
                return BoundaryValue("infinite", math.inf, 0.0) if c > 0 else BoundaryValue(
                    "inconclusive", math.nan, math.inf)
            n = n_terms if f.is_closed_form else f.truncation_n
            vals = f.coefficients(n)
            return _ladder_sum(vals, -(p + 1.0), tol, config)
        vals = f.coeffs.values
        total = math.fsum(vals)
        err = _finite_sum_err(vals)
        status = "finite" if err <= tol * max(1.0, abs(total)) else "inconclusive"
        return BoundaryValue(status, total, err)
    if route == "weyl":
        w = weyl_coefficients(f, a, min(n_terms, 4096), config)
        terms = w.values * cesaro_array(a + 1.0, w.values.size - 1)
        if f.tail.is_power:
            p = f.tail.exponent
            if p >= -1:
                return BoundaryValue("infinite", math.inf, 0.0) if f.tail.coefficient > 0 else BoundaryValue(
                    "inconclusive", math.nan, math.inf)
            return _ladder_sum(terms, -(p + 1.0), tol, config)
        total = math.fsum(terms)
        err = _finite_sum_err(terms)
        status = "finite" if err <= tol * max(1.0, abs(total)) else "inconclusive"
        return BoundaryValue(status, total, err)
    raise ValueError(f"unknown route {route!r}")


def _finite_sum_err(vals: np.ndarray) -> float:
    # a vanishing upper half means the support ended inside the window
    if vals.size == 1 or not np.any(vals[vals.size // 2:]):
        return 4 * np.finfo(float).eps * float(np.sum(np.abs(vals)))
    return float(abs(vals[-1]) * vals.size)


def _ladder_sum(vals: np.ndarray, gamma: float, tol: float, config: FracDiffConfig) -> BoundaryValue:
    N = vals.size - 1
    K = config.levels
    while K > 0 and N // 2**K < 32:
        K -= 1
    m0 = N // 2**K
    cums = np.cumsum(vals)
    sums = np.array([cums[m0 * 2**k] for k in range(K + 1)])
    value, err = richardson(sums[:, None], gamma)
    value, err = float(value[0]), float(err[0]) + 16 * np.finfo(float).eps * float(np.sum(np.abs(vals)))
    status = "finite" if err <= tol * max(1.0, abs(value)) else "inconclusive"
    return BoundaryValue(status, value, err)


# representation ----------------------------------------------------------


def delta_z(alpha: float | FracOrder, n: int, z: complex) -> complex:
    r""":math:`\Delta^{-\alpha}\mathcal{Z}(n) = \sum_{j\le n} k^\alpha(n-j) z^j` for ``|z| <= 1``."""
    a = order_value(alpha)
    if abs(z) > 1 + 1e-15:
        raise ValueError("z must lie in the closed unit disc")
    return complex(_delta_z_all(a, n, z)[n])


def _delta_z_all(a: float, n_max: int, z: complex) -> np.ndarray:
    # y(n) = z y(n-1) + k^a(n)
    k = cesaro_array(a, n_max).astype(complex)
    return lfilter([1.0], [1.0, -complex(z)], k)


def represent(
    f: AnalyticFn,
    alpha: float | FracOrder,
    z: complex,
    tail: TailModel | None = None,
    *,
    n_terms: int = 2048,
    config: FracDiffConfig = FracDiffConfig(),
) -> complex:
    r"""Evaluate :math:`\sum_n W^\alpha f(n)\,\Delta^{-\alpha}\mathcal{Z}(n)` at ``|z| < 1``."""
    a = order_value(alpha)
    if abs(z) >= 1:
        raise ValueError("represent needs |z| < 1")
    if tail is not None:
        f = replace(f, tail=tail)
    w = weyl_coefficients(f, a, n_terms, config)
    V = w.values.size
    dz = _delta_z_all(a, V - 1, z)
    terms = w.values * dz
    cums = np.cumsum(terms)
    if not f.tail.is_power or V < 256:
        return complex(cums[-1])
    # terms ~ n^{p-1} / (1 - z) for large n
    gamma = -f.tail.exponent
    if gamma <= 0:
        from .frac_diff import DivergenceError

        raise DivergenceError("representation series does not converge under this tail")
    K = 0
    while K < config.levels and (V - 1) // 2 ** (K + 1) >= 32:
        K += 1
    m0 = (V - 1) // 2**K
    sums = np.array([cums[m0 * 2**k] for k in range(K + 1)])
    re, _ = richardson(sums.real[:, None], gamma)
    im, _ = richardson(sums.imag[:, None], gamma)
    return complex(float(re[0]), float(im[0]))
