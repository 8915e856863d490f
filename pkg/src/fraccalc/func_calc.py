r"""Functional calculus for (C, alpha)-bounded operators.

Every operator function here is a vector series of the form

.. math::
    \sum_{n\ge 0} c_n\,\Delta^{-\alpha}\mathcal T(n)x,
    \qquad \Delta^{-\alpha}\mathcal T(n)x=\sum_{j\le n}k^\alpha(n-j)T^jx,

with ``alpha = 0`` giving plain Taylor series.  Partial sums are rearranged
as ``S(M) = sum_j g_M(j) T^j x`` where ``g_M(j) = sum_{j<=n<=M} c_n
k^alpha(n-j)`` is a scalar correlation.  When the powers ``T^j x`` die out
(finitely supported vectors under the shift, contractions) only finitely many
powers are needed and ``S(M)`` can be taken on a long doubling ladder and
extrapolated.  Otherwise partial sums stop at the number of powers computed.

Verdicts:

``converged``
    Richardson error below ``rel_tol`` and decaying ladder increments.
``diverging``
    Ladder increments no longer shrink.
``inconclusive``
    Anything else, including an empty trusted window.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.signal import fftconvolve

from .cesaro_seq import FracOrder, cesaro_array, order_value
from .frac_diff import TailModel, richardson, weyl_power_coeffs
from .operators import (
    CesaroCache,
    LinOpHandle,
    WeightedVector,
    _apply_raw,
    _cesaro_stream,
    _check_same,
    mean_ergodic_probe,
)
from .series_algebra import AnalyticFn, alpha_norm, k_power, weyl_coefficients
from .special_fn import digamma, log_gamma

__all__ = [
    "FuncCalcConfig",
    "SeriesSumReport",
    "NonMembershipError",
    "SeriesDivergenceError",
    "HypothesisWarning",
    "ParameterRangeError",
    "phi_alpha_apply",
    "fractional_power",
    "poisson_coefficients",
    "poisson_solve_cesaro",
    "poisson_solve_taylor",
    "log_coefficients",
    "log_operator",
    "log_operator_taylor",
    "hilbert_transform_alpha",
    "GeneratorReport",
    "generator_check",
    "RateReport",
    "rate_check",
]


class NonMembershipError(ValueError):
    """The function is not in the algebra at the requested order."""


class SeriesDivergenceError(ArithmeticError):
    """A series needed for a value did not converge."""


class ParameterRangeError(ValueError):
    """An order lies outside the range where the series formula holds."""


class HypothesisWarning(UserWarning):
    """Computation outside the parameter range where the identity is proved."""


@dataclass(frozen=True)
class FuncCalcConfig:
    rel_tol: float = 1e-9
    levels: int = 6
    ladder_top: int = 1 << 20
    stream_top: int = 1 << 17
    max_powers: int = 4096
    power_tol: float = 1e-13
    res_tol: float = 1e-5


DEFAULT = FuncCalcConfig()


@dataclass(frozen=True, eq=False)
class SeriesSumReport:
    value: WeightedVector
    terms_used: int
    tail_norm_estimate: float
    verdict: str
    cesaro_smoothing_used: bool
    notes: tuple[str, ...] = field(default=())

    @property
    def converged(self) -> bool:
        return self.verdict == "converged"

    def to_json(self, value_ref: str | None = None) -> str:
        return json.dumps(
            {
                "verdict": self.verdict,
                "terms": self.terms_used,
                "tail": self.tail_norm_estimate,
                "value_ref": value_ref,
                "cesaro_smoothing_used": self.cesaro_smoothing_used,
                "notes": list(self.notes),
            }
        )


# ---------------------------------------------------------------------------
# series engine


def _powers(op: LinOpHandle, x: WeightedVector, cfg: FuncCalcConfig):
    """Stack of ``T^j x`` until negligible; returns ``(P, finite)``."""
    _check_same(op.space, x.space)
    scale = x.norm()
    dtype = np.result_type(x.entries, float)
    if op.kind == "dense_matrix":
        dtype = np.result_type(dtype, op.matrix)
    cap = cfg.max_powers
    if x.valid is not None and op.kind == "backward_shift":
        cap = min(cap, x.valid)
    rows = [np.asarray(x.entries, dtype=dtype)]
    if scale == 0:
        return np.stack(rows), x.valid is None
    quiet = 0
    cur = rows[0]
    for _ in range(cap):
        cur = _apply_raw(op, cur)
        if x.valid is None and op.exact_powers_vanish and not np.any(cur):
            return np.stack(rows), True
        nrm = op.space.norm(cur)
        quiet = quiet + 1 if nrm <= cfg.power_tol * scale else 0
        rows.append(cur)
        if x.valid is None and quiet >= 16:
            return np.stack(rows[: len(rows) - 16]), True
    return np.stack(rows), False


def _kernel_partials(c: np.ndarray, k: np.ndarray, J: int, ladder: list[int]) -> np.ndarray:
    """``G[i, j] = sum_{n=j}^{ladder[i]} c[n] k[n-j]`` for ``j = 0..J``."""
    G = np.zeros((len(ladder), J + 1))
    m0 = ladder[0]
    conv = fftconvolve(c[: m0 + 1][::-1], k[: m0 + 1])
    top = min(J, m0)
    G[0, : top + 1] = conv[m0 - np.arange(top + 1)]
    for i in range(1, len(ladder)):
        a, b = ladder[i - 1] + 1, ladder[i]
        lo = a - J
        kk = k[max(lo, 0): b + 1]
        if lo < 0:
            kk = np.concatenate((np.zeros(-lo), kk))
        out = fftconvolve(kk, c[a: b + 1][::-1], mode="valid")
        G[i] = G[i - 1] + out[J - np.arange(J + 1)]
    return G


def _extrapolate(S: np.ndarray, gamma: float):
    if np.iscomplexobj(S):
        vr, er = richardson(S.real, gamma)
        vi, ei = richardson(S.imag, gamma)
        return vr + 1j * vi, np.hypot(er, ei)
    return richardson(S, gamma)


def _verdict(space, S, err, value, scale, gamma, rel_tol, exact) -> tuple[str, float]:
    tail = float(space.norm(err)) if not exact else 0.0
    ref = max(float(space.norm(value)), scale)
    if exact:
        return "converged", tail
    inc = np.array([space.norm(S[i + 1] - S[i]) for i in range(S.shape[0] - 1)])
    floor = 1e3 * np.finfo(float).eps * ref
    live = inc > floor
    if inc.size >= 3 and np.all(live[-3:]):
        ratios = inc[-2:] / inc[-3:-1]
        if np.all(ratios >= 0.98):
            return "diverging", tail
    decaying = inc.size < 2 or not live[-1] or inc[-1] < inc[0]
    if decaying and tail <= rel_tol * ref:
        return "converged", tail
    return "inconclusive", tail


def _series(
    op: LinOpHandle,
    x: WeightedVector,
    alpha: float,
    coeffs,
    gamma: float,
    cfg: FuncCalcConfig,
) -> SeriesSumReport:
    """Evaluate ``sum_n c_n Delta^{-alpha} T(n) x`` with ``c = coeffs(n_max)``.

    ``gamma`` is the leading decay exponent of the partial-sum tail.
    """
    P, finite = _powers(op, x, cfg)
    J = P.shape[0] - 1
    K = cfg.levels
    notes = []
    if finite:
        top = cfg.ladder_top
        while (top >> K) < 8 * (J + 1):
            top *= 2
        if alpha == 0:
            top = max(J, 1)
    else:
        top = J
        notes.append(f"powers did not die out within {J} steps")
    c = np.asarray(coeffs(top), dtype=float)
    top = min(top, c.size - 1)
    levels = K
    while levels > 0 and (top >> levels) < 4:
        levels -= 1
    ladder = [top >> (levels - i) for i in range(levels + 1)]
    k = cesaro_array(alpha, top)
    G = _kernel_partials(c, k, J, ladder)
    S = G @ P
    exact = finite and (alpha == 0 or not np.any(c[ladder[0] + 1:]))
    if exact:
        value, err = S[-1], np.zeros(S.shape[1])
    else:
        value, err = _extrapolate(S, gamma)
    verdict, tail = _verdict(x.space, S, err, value, x.norm(), gamma, cfg.rel_tol, exact)
    valid = x.valid
    if valid is not None and op.kind == "backward_shift":
        valid = max(valid - J, 0)
        if valid == 0:
            verdict = "inconclusive"
            notes.append("no trusted entries remain after the shifts")
    return SeriesSumReport(WeightedVector(value, x.space, valid), ladder[-1] + 1, tail, verdict,
                           alpha > 0, tuple(notes))


def _streamed_series(op, x, alpha, coeffs, gamma, cfg) -> SeriesSumReport:
    """Same series by direct accumulation of the Cesàro sums (no rearrangement)."""
    top = cfg.stream_top
    K = cfg.levels
    ladder = [top >> (K - i) for i in range(K + 1)]
    marks = {m: i for i, m in enumerate(ladder)}
    c = np.asarray(coeffs(top), dtype=float)
    acc = np.zeros(x.space.dim, dtype=np.result_type(x.entries, float,
                                                     op.matrix if op.matrix is not None else 0.0))
    S = np.zeros((K + 1, x.space.dim), dtype=acc.dtype)
    for n, d in _cesaro_stream(op, alpha, x.entries, top):
        if c[n]:
            acc += c[n] * d
        if n in marks:
            S[marks[n]] = acc
    value, err = _extrapolate(S, gamma)
    verdict, tail = _verdict(x.space, S, err, value, x.norm(), gamma, cfg.rel_tol, False)
    valid = x.valid
    if valid is not None and op.kind == "backward_shift":
        valid = max(valid - top, 0)
        if valid == 0:
            verdict = "inconclusive"
    return SeriesSumReport(WeightedVector(value, x.space, valid), top + 1, tail, verdict, alpha > 0)


# ---------------------------------------------------------------------------
# Phi_alpha


def _weyl_coeffs_for(f: AnalyticFn, alpha: float):
    cf = f.known_closed_form
    if cf.kind == "k_power" and (cf.param < 1 or (cf.param <= 0 and cf.param == math.floor(cf.param))):
        return lambda n: weyl_power_coeffs(cf.param, alpha, n)

    def gen(n: int) -> np.ndarray:
        if not f.tail.is_power:
            support = f.truncation_n + int(math.ceil(alpha)) + 2
            w = weyl_coefficients(f, alpha, min(n, support) + 1).values
            out = np.zeros(n + 1)
            out[: min(w.size, n + 1)] = w[: n + 1]
            return out
        return weyl_coefficients(f, alpha, n + 1).values

    return gen


def _phi_gamma(f: AnalyticFn) -> float:
    if f.tail.is_power:
        return -f.tail.exponent
    return 1.0


def phi_alpha_apply(
    op: LinOpHandle,
    f: AnalyticFn,
    alpha: float | FracOrder,
    x: WeightedVector,
    tail: TailModel | None = None,
    *,
    k_alpha: float | None = None,
    check_membership: bool = True,
    config: FuncCalcConfig = DEFAULT,
) -> SeriesSumReport:
    r"""``Phi_alpha(f) x = sum_n W^alpha f(n) Delta^{-alpha} T(n) x``.

    With ``check_membership`` the weighted norm of ``f`` must converge.
    When ``k_alpha`` is given the bound ``||Phi(f) x|| <= K ||f|| ||x||`` is
    checked and a violation is reported in ``notes``.
    """
    a = order_value(alpha)
    if tail is not None:
        from dataclasses import replace

        f = replace(f, tail=tail)
    norm = None
    if check_membership or k_alpha is not None:
        rep = alpha_norm(f, a)
        if check_membership and not rep.converged:
            raise NonMembershipError(
                f"{f.label} has no convergent weighted norm at order {a:g}"
                " (the series calculus needs f in the algebra of that order)"
            )
        norm = rep.norm_value
    out = _series(op, x, a, _weyl_coeffs_for(f, a), _phi_gamma(f), config)
    if k_alpha is not None and norm is not None and out.converged:
        bound = k_alpha * norm * x.norm()
        if out.value.norm() > bound * (1 + 1e-9):
            from dataclasses import replace

            out = replace(out, notes=out.notes + (
                f"norm bound violated: {out.value.norm():.6g} > {bound:.6g}; K estimate too small",))
    return out


def fractional_power(
    op: LinOpHandle,
    s: float | FracOrder,
    x: WeightedVector,
    alpha: float | FracOrder = 1.0,
    config: FuncCalcConfig = DEFAULT,
) -> WeightedVector:
    """``(I - T)^s x`` as ``Phi_alpha`` of ``(1 - z)^s``; raises unless converged."""
    sv = order_value(s)
    rep = phi_alpha_apply(op, k_power(-sv), alpha, x, check_membership=False, config=config)
    if not rep.converged:
        raise SeriesDivergenceError(f"(I-T)^{sv:g} x: series verdict {rep.verdict}")
    return rep.value


# ---------------------------------------------------------------------------
# fractional Poisson equation


def poisson_coefficients(s: float, alpha: float, n_max: int) -> np.ndarray:
    r"""``sin(pi s) Gamma(1-s+alpha) / pi * Gamma(s+n) / Gamma(n+alpha+1)`` for ``n = 0..n_max``."""
    log_c = (math.log(math.sin(math.pi * s)) + float(log_gamma(1 - s + alpha)) - math.log(math.pi)
             + float(log_gamma(s)) - float(log_gamma(alpha + 1)))
    n = np.arange(n_max, dtype=float)
    logs = np.concatenate(([0.0], np.cumsum(np.log((s + n) / (n + alpha + 1)))))
    return np.exp(log_c + logs)


def _check_s(s: float) -> None:
    if not 0 < s < 1:
        raise ParameterRangeError(f"s={s:g} must lie in (0, 1)")


def poisson_solve_cesaro(
    op: LinOpHandle,
    alpha: float | FracOrder,
    s: float | FracOrder,
    x: WeightedVector,
    *,
    verify: bool = True,
    config: FuncCalcConfig = DEFAULT,
) -> SeriesSumReport:
    """Solve ``(I - T)^s u = x`` with the Cesàro-weighted series.

    When converged and ``verify`` is set, ``u`` is mapped back by
    :func:`fractional_power`; a residual above ``res_tol ||x||`` downgrades
    the verdict to inconclusive.
    """
    a, sv = order_value(alpha), order_value(s)
    _check_s(sv)
    rep = _series(op, x, a, lambda n: poisson_coefficients(sv, a, n), 1.0 - sv, config)
    if verify and rep.converged:
        res = _poisson_residual(op, sv, a, rep.value, x, config)
        if not res <= config.res_tol * x.norm():
            from dataclasses import replace

            rep = replace(rep, verdict="inconclusive", notes=rep.notes + (f"residual {res:.3g}",))
    return rep


def _poisson_residual(op, s, alpha, u, x, cfg) -> float:
    try:
        back = fractional_power(op, s, u, alpha, cfg)
    except SeriesDivergenceError:
        return math.inf
    w = min(back.window, x.window)
    return float(x.space.norm((back.entries - x.entries)[:w]))


def poisson_solve_taylor(
    op: LinOpHandle,
    s: float | FracOrder,
    x: WeightedVector,
    *,
    alpha: float | FracOrder | None = None,
    config: FuncCalcConfig = DEFAULT,
) -> SeriesSumReport:
    """Solve ``(I - T)^s u = x`` by ``u = sum_n k^s(n) T^n x``.

    ``alpha`` is the order at which the operator is known to be bounded; the
    route is only justified for ``alpha < 1 - s`` and warns otherwise.
    """
    sv = order_value(s)
    _check_s(sv)
    if alpha is not None and order_value(alpha) >= 1 - sv:
        warnings.warn(f"alpha={order_value(alpha):g} >= 1-s={1 - sv:g}: Taylor route is unproved here",
                      HypothesisWarning, stacklevel=2)
    return _series(op, x, 0.0, lambda n: cesaro_array(sv, n), 1.0 - sv, config)


# ---------------------------------------------------------------------------
# logarithm and Hilbert transform


def log_coefficients(alpha: float, n_max: int) -> np.ndarray:
    """``B(alpha+1, n) = Gamma(alpha+1) Gamma(n) / Gamma(n+alpha+1)`` for ``n >= 1``; zero at ``n = 0``."""
    out = np.zeros(n_max + 1)
    if n_max >= 1:
        n = np.arange(1, n_max + 1, dtype=float)
        out[1:] = np.exp(log_gamma(alpha + 1) + log_gamma(n) - log_gamma(n + alpha + 1))
    return out


def log_operator(
    op: LinOpHandle,
    alpha: float | FracOrder,
    x: WeightedVector,
    config: FuncCalcConfig = DEFAULT,
) -> SeriesSumReport:
    r"""``log(I-T)x = (psi(alpha+1) - psi(1)) x - sum_{n>=1} B(alpha+1,n) Delta^{-alpha}T(n)x``."""
    from dataclasses import replace

    a = order_value(alpha)
    rep = _series(op, x, a, lambda n: log_coefficients(a, n), 1.0, config)
    const = float(digamma(a + 1.0) - digamma(1.0))
    value = x.with_entries(const * x.entries - rep.value.entries, rep.value.valid)
    return replace(rep, value=value)


def log_operator_taylor(
    op: LinOpHandle,
    x: WeightedVector,
    *,
    alpha: float | FracOrder | None = None,
    config: FuncCalcConfig = DEFAULT,
) -> SeriesSumReport:
    """``log(I - T) x = -sum_{n>=1} T^n x / n``; warns when ``alpha >= 1``."""
    if alpha is not None and order_value(alpha) >= 1:
        warnings.warn(f"alpha={order_value(alpha):g} >= 1: Taylor logarithm is unproved here",
                      HypothesisWarning, stacklevel=2)

    def coeffs(n: int) -> np.ndarray:
        out = np.zeros(n + 1)
        out[1:] = -1.0 / np.arange(1, n + 1, dtype=float)
        return out

    return _series(op, x, 0.0, coeffs, 0.0, config)


def _hilbert_constant(alpha: float) -> float:
    # u = exp(-t) keeps the integrand free of cancellation near u = 1
    def integrand(t: float) -> float:
        if t == 0:
            return alpha
        return math.expm1(-alpha * t) / math.expm1(-t) * math.exp(-t)

    val, _ = quad(integrand, 0.0, math.inf, epsabs=1e-14, epsrel=1e-13, limit=200)
    return -val


def hilbert_transform_alpha(
    op: LinOpHandle,
    alpha: float | FracOrder,
    x: WeightedVector,
    config: FuncCalcConfig = DEFAULT,
) -> SeriesSumReport:
    r"""``H^{(alpha)} x = sum_{n>=1} B(alpha+1,n) Delta^{-alpha}T(n)x + c_alpha x``.

    Computed independently of :func:`log_operator`: the Cesàro sums are
    accumulated directly, the beta weights come from the ratio
    ``n / (n + alpha + 1)`` and ``c_alpha`` from quadrature.
    """
    from dataclasses import replace

    a = order_value(alpha)

    def coeffs(n: int) -> np.ndarray:
        out = np.zeros(n + 1)
        if n >= 1:
            m = np.arange(1, n, dtype=float)
            out[1] = 1.0 / (a + 1.0)
            out[2:] = out[1] * np.cumprod(m / (m + a + 1.0))
        return out

    rep = _streamed_series(op, x, a, coeffs, 1.0, config)
    value = x.with_entries(rep.value.entries + _hilbert_constant(a) * x.entries, rep.value.valid)
    return replace(rep, value=value)


# ---------------------------------------------------------------------------
# generator and rates


@dataclass(frozen=True)
class GeneratorReport:
    hs: np.ndarray
    errors: np.ndarray
    slope: float

    @property
    def passed(self) -> bool:
        return 0.9 <= self.slope <= 1.1


def generator_check(
    op: LinOpHandle,
    alpha: float | FracOrder,
    x: WeightedVector,
    hs=(0.1, 0.05, 0.025),
    config: FuncCalcConfig = DEFAULT,
) -> GeneratorReport:
    """Errors of ``((I-T)^h x - x)/h`` against ``log(I-T) x`` and their log-log slope in ``h``."""
    lg = log_operator(op, alpha, x, config)
    if not lg.converged:
        raise SeriesDivergenceError(f"log(I-T)x: series verdict {lg.verdict}")
    hs = np.asarray(hs, dtype=float)
    errs = []
    for h in hs:
        ph = fractional_power(op, h, x, alpha, config)
        w = min(ph.window, lg.value.window)
        diff = (ph.entries - x.entries) / h - lg.value.entries
        errs.append(float(x.space.norm(diff[:w])))
    errs = np.array(errs)
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return GeneratorReport(hs, errs, slope)


@dataclass(frozen=True)
class RateReport:
    n_list: np.ndarray
    values: np.ndarray
    variant: str

    @property
    def ratio(self) -> float:
        return float(self.values[-1] / self.values[0])

    @property
    def decreasing(self) -> bool:
        return self.ratio < 0.25


def rate_check(
    op: LinOpHandle,
    alpha: float | FracOrder,
    s: float | FracOrder,
    x_in_range: WeightedVector,
    n_list,
    variant: str = "cesaro",
) -> RateReport:
    """Trajectory ``n^s ||M^{alpha+1}(n) x||`` (``variant="cesaro"``) or
    ``n^s ||(1/n) sum_{j=1}^n T^j x||`` (``variant="mean"``)."""
    a, sv = order_value(alpha), order_value(s)
    n_arr = np.asarray(sorted(int(n) for n in n_list))
    if variant == "cesaro":
        vals = mean_ergodic_probe(op, a + 1.0, x_in_range, n_arr)
    elif variant == "mean":
        cache = CesaroCache(op, 1.0, x_in_range, int(n_arr[-1]))
        vals = []
        for n in n_arr:
            d = cache.partial_sums[n] - x_in_range.entries
            w = x_in_range.window if cache.valid_at(n) is None else cache.valid_at(n)
            vals.append(float(x_in_range.space.norm(d[:w])) / n)
        vals = np.array(vals)
    else:
        raise ValueError("variant must be 'cesaro' or 'mean'")
    return RateReport(n_arr, vals * n_arr.astype(float) ** sv, variant)
