"""Approximate-identity families built from an admissible function.

Three kinds share one construction, ``member = (1/f) * P_n`` for a
polynomial ``P_n`` of degree ``n - 1``:

``fractional_gn``
    ``P_n(z) = sum_{j<n} D^alpha f(j) Delta^{-alpha}Z(j)``.
``taylor_g0n``
    ``P_n`` is the Taylor polynomial of ``f`` of degree ``n - 1``.
``log_gLn``
    ``taylor_g0n`` for ``f = -log(1 - z)/z``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .admissibility import AdmissibilityConfig, HypothesisViolation, check_admissible
from .cesaro_seq import CoeffSeq, FracOrder, cesaro_array, order_value
from .frac_diff import FracDiffConfig, TailModel
from .series_algebra import (
    AlgebraNormReport,
    AnalyticFn,
    ClosedForm,
    alpha_norm,
    invert_series,
    log_over_z,
    weyl_coefficients,
)

__all__ = [
    "KINDS",
    "ApproxIdFamily",
    "SPieces",
    "member_coeffs",
    "member_norm",
    "unboundedness_probe",
    "convergence_to_unit",
    "h_r_decomposition",
    "s_pieces",
]

KINDS = ("fractional_gn", "taylor_g0n", "log_gLn")


@dataclass(eq=False)
class ApproxIdFamily:
    base_fn: AnalyticFn
    alpha: float
    kind: str
    inverse_len: int = 1 << 14
    frac: FracDiffConfig = field(default_factory=FracDiffConfig)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _g: np.ndarray | None = field(default=None, repr=False)
    _d: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.alpha = order_value(self.alpha)
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == "log_gLn" and self.base_fn.known_closed_form.kind != "log_over_z":
            raise ValueError("log_gLn needs the base function -log(1 - z)/z")
        if self.base_fn.coefficients(0)[0] == 0:
            raise ValueError("base function must not vanish at 0")

    @classmethod
    def create(cls, base_fn: AnalyticFn | None, alpha, kind: str, *, certify: bool = False,
               n_check: int = 32, **kw) -> "ApproxIdFamily":
        """Build a family; ``certify=True`` first checks admissibility at ``alpha``."""
        if kind == "log_gLn" and base_fn is None:
            base_fn = log_over_z()
        fam = cls(base_fn, alpha, kind, **kw)
        if certify and kind == "fractional_gn":
            cert = check_admissible(base_fn, fam.alpha, n_check, config=AdmissibilityConfig(frac=fam.frac))
            if not cert.admissible:
                raise HypothesisViolation(f"base function is not admissible at alpha={fam.alpha:g}")
        return fam

    # cached ingredients ---------------------------------------------------

    @property
    def base_at_one(self) -> float:
        v = self.base_fn.value_at_one
        return math.nan if v is None else float(v)

    def inverse_coeffs(self, n: int) -> np.ndarray:
        cf = self.base_fn.known_closed_form
        if cf.kind == "k_power":
            return cesaro_array(-cf.param, n)
        with self._lock:
            if self._g is None or self._g.size <= n:
                size = max(n, self.inverse_len)
                self._g = invert_series(self.base_fn, size).coeffs.values
            return self._g[: n + 1]

    def inverse_tail(self) -> TailModel:
        cf = self.base_fn.known_closed_form
        if cf.kind == "k_power" and cf.param > 0 and cf.param != math.floor(cf.param):
            return TailModel.power(-cf.param - 1.0, 1.0 / math.gamma(-cf.param))
        return TailModel.zero()

    def base_dalpha(self, n: int) -> np.ndarray:
        """``D^alpha f(0..n-1)``."""
        with self._lock:
            if self._d is None or self._d.size < n:
                size = max(n, 64)
                w = weyl_coefficients(self.base_fn, self.alpha, size, self.frac)
                self._d = np.asarray(w.values[:size])
            return self._d[:n]

    def polynomial(self, n: int) -> np.ndarray:
        """Coefficients of the degree ``n - 1`` numerator polynomial."""
        if n < 1:
            raise ValueError("n must be at least 1")
        if self.kind == "fractional_gn":
            d = self.base_dalpha(n)
            k = cesaro_array(self.alpha, n - 1)
            # P(i) = sum_{j=i}^{n-1} k^alpha(j - i) d(j)
            return np.convolve(d[::-1], k)[:n][::-1].copy()
        return np.array(self.base_fn.coefficients(n - 1), dtype=float)

    def member_value_at_one(self, n: int) -> float:
        at1 = self.base_at_one
        if math.isinf(at1):
            return 0.0
        if math.isnan(at1):
            return math.nan
        return float(np.sum(self.polynomial(n))) / at1


def member_coeffs(family: ApproxIdFamily, n: int, n_out: int | None = None) -> AnalyticFn:
    """Taylor coefficients of the ``n``-th member up to index ``n_out`` (default ``4 n``)."""
    n_out = 4 * n if n_out is None else int(n_out)
    poly = family.polynomial(n)
    g = family.inverse_coeffs(n_out)
    if g.size * poly.size > 3e7:
        vals = fftconvolve(g, poly)[: n_out + 1]
    else:
        vals = np.convolve(g, poly)[: n_out + 1]
    gt = family.inverse_tail()
    tail = TailModel.power(gt.exponent, gt.coefficient * float(np.sum(poly))) if gt.is_power else TailModel.zero()
    label = f"{family.kind}[{family.base_fn.label}, n={n}]"
    return AnalyticFn(CoeffSeq(vals, label=label), ClosedForm(), tail, family.member_value_at_one(n))


def _member_length(family: ApproxIdFamily, alpha_eval: float, n_terms: int) -> int:
    integer = alpha_eval == math.floor(alpha_eval)
    if integer or not family.inverse_tail().is_power:
        if integer:
            return n_terms + int(alpha_eval) + 2
        return max(family.inverse_len, n_terms + 64)
    cfg = family.frac
    return int(n_terms * (cfg.ladder_factor * 2**cfg.levels + 1)) + 8


def member_norm(
    family: ApproxIdFamily,
    n: int,
    alpha_eval: float | FracOrder | None = None,
    tail: TailModel | None = None,
    *,
    n_terms: int | None = None,
    tail_method: str = "auto",
    rel_tol: float = 1e-8,
) -> AlgebraNormReport:
    """Norm of the ``n``-th member in the algebra of order ``alpha_eval``."""
    a = family.alpha if alpha_eval is None else order_value(alpha_eval)
    n_terms = max(2048, 8 * n) if n_terms is None else n_terms
    mem = member_coeffs(family, n, _member_length(family, a, n_terms))
    return alpha_norm(mem, a, tail, n_terms=n_terms, tail_method=tail_method, rel_tol=rel_tol,
                      config=family.frac)


def unboundedness_probe(
    s: float | FracOrder,
    alpha: float | FracOrder,
    n_list,
    *,
    n_terms: int | None = None,
) -> list[float]:
    """Norms of the Taylor family of ``(1 - z)^(-s)`` over ``n_list``."""
    from .series_algebra import k_power

    s = order_value(s)
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    fam = ApproxIdFamily(k_power(s, 64), alpha, "taylor_g0n")
    out = []
    for n in n_list:
        nt = max(2048, 8 * n) if n_terms is None else n_terms
        out.append(member_norm(fam, n, n_terms=nt).norm_value)
    return out


def _unit_error_fn(family: ApproxIdFamily, n: int, alpha_eval: float, n_terms: int) -> AnalyticFn:
    mem = member_coeffs(family, n, _member_length(family, alpha_eval, n_terms))
    vals = np.array(mem.coeffs.values)
    if not math.isinf(family.base_at_one):
        vals[0] -= 1.0
        at1 = mem.value_at_one - 1.0
        tail = mem.tail
    else:
        h = vals.copy()
        h[1:] -= vals[:-1]
        h[0] -= 1.0
        h[1] += 1.0
        vals = h
        at1 = 0.0
        t = mem.tail
        tail = TailModel.power(t.exponent - 1.0, -t.exponent * t.coefficient) if t.is_power else TailModel.zero()
    return AnalyticFn(CoeffSeq(vals, label=f"err[{mem.label}]"), ClosedForm(), tail, at1)


def convergence_to_unit(
    family: ApproxIdFamily,
    n_list,
    alpha_eval: float | FracOrder | None = None,
    tail: TailModel | None = None,
    *,
    n_terms: int | None = None,
    check_hypotheses: bool = True,
) -> list[AlgebraNormReport]:
    """Distance of members to the unit.

    When ``f(1)`` is finite this is ``||g_n - 1||``; otherwise it is
    ``||(1 - z) g_n - (1 - z)||``.
    """
    a = family.alpha if alpha_eval is None else order_value(alpha_eval)
    if check_hypotheses:
        _check_unit_hypotheses(family, a)
    out = []
    for n in n_list:
        nt = max(2048, 8 * n) if n_terms is None else n_terms
        err_fn = _unit_error_fn(family, n, a, nt)
        out.append(alpha_norm(err_fn, a, tail, n_terms=nt, config=family.frac))
    return out


def _check_unit_hypotheses(family: ApproxIdFamily, a: float) -> None:
    if family.kind == "log_gLn" and not 0 <= a < 1:
        raise HypothesisViolation("the logarithmic family converges only for 0 <= alpha < 1")
    if family.kind == "taylor_g0n":
        cf = family.base_fn.known_closed_form
        if cf.kind == "k_power" and not 0 <= a < 1 - cf.param:
            raise HypothesisViolation("the Taylor family of (1-z)^-s converges only for alpha < 1 - s")
    if family.kind == "fractional_gn" and math.isinf(family.base_at_one):
        d = family.base_dalpha(1024)
        j = np.arange(100, 1024, dtype=float)
        prod = d[100:] * j**family.alpha
        if not np.all(np.diff(prod) <= 0):
            raise HypothesisViolation("D^alpha f(j) j^alpha does not decay on the sampled window")


# proof decompositions -----------------------------------------------------


def _delta_z_coeffs(alpha: float, n: int, length: int) -> np.ndarray:
    # Taylor coefficients of Delta^{-alpha}Z(n): k^alpha(n - j) for j <= n
    out = np.zeros(length)
    m = min(n, length - 1)
    out[: m + 1] = cesaro_array(alpha, n)[::-1][: m + 1]
    return out


@dataclass(frozen=True)
class HRDecomposition:
    h: np.ndarray
    r: np.ndarray
    one_minus_z_member: np.ndarray
    residual: float
    r_norm: float
    r_bound_factor: float
    r_norm_converged: bool = True


def _norm_window(family: ApproxIdFamily, n: int) -> tuple[int, int]:
    # (norm terms, coefficient length): the tail of r_n follows that of g
    # only once the index is well past n
    a = family.alpha
    if a == math.floor(a) or not family.inverse_tail().is_power:
        nt = max(2048, 64 * n)
        return nt, nt + int(a) + 2
    cfg = family.frac
    nt = max(256, 32 * n)
    return nt, int(nt * (cfg.ladder_factor * 2**cfg.levels + 1)) + 8


def h_r_decomposition(family: ApproxIdFamily, n: int, n_out: int | None = None) -> HRDecomposition:
    """Split ``(1 - z) g_n = h_n - r_n`` for the fractional family.

    ``r_n = D^alpha f(n-1) Delta^{-alpha}Z(n) / f``; its norm is reported
    together with ``D^alpha f(n-1) k^{alpha+1}(n)``.  The coefficient arrays
    cover ``0..n_out``; the norm uses a longer internal window when needed.
    """
    if family.kind != "fractional_gn":
        raise ValueError("decomposition applies to the fractional family")
    a = family.alpha
    nt, length = _norm_window(family, n)
    n_out = 4 * n if n_out is None else n_out
    L = max(n_out, length) + 1
    g = family.inverse_coeffs(L - 1)
    d = family.base_dalpha(n + 1)
    k = cesaro_array(a, n)
    # numerators are polynomials of degree n
    num_h = np.zeros(n + 1)
    num_h[0] = d[0] + float(np.dot(d[:n], k[1: n + 1]))
    for j in range(1, n):
        num_h[: j + 1] += (d[j] - d[j - 1]) * k[: j + 1][::-1]
    num_r = d[n - 1] * k[::-1]
    h = fftconvolve(g, num_h)[:L]
    r = fftconvolve(g, num_r)[:L]
    mem = member_coeffs(family, n, L - 1).coeffs.values
    omz = mem.copy()
    omz[1:] -= mem[:-1]
    resid = float(np.max(np.abs(omz - (h - r))))
    factor = float(d[n - 1] * cesaro_array(a + 1, n)[n])
    gt = family.inverse_tail()
    tail = TailModel.power(gt.exponent, gt.coefficient * factor) if gt.is_power else TailModel.zero()
    r_fn = AnalyticFn(CoeffSeq(r), ClosedForm(), tail)
    rep = alpha_norm(r_fn, a, n_terms=nt, config=family.frac)
    m = n_out + 1
    return HRDecomposition(h[:m], r[:m], omz[:m], resid, rep.norm_value, factor, bool(rep.converged))


@dataclass(frozen=True)
class SPieces:
    n: int
    s1: float
    s2: float
    s3: float

    @property
    def total(self) -> float:
        return self.s1 + self.s2 + self.s3


def s_pieces(family: ApproxIdFamily, n: int) -> SPieces:
    r"""Norms of the three pieces of ``f * s_n``, where
    ``(1 - z) g^0_n = (1 - z) g_n - s_n`` links the Taylor and fractional families.

    Each piece is a combination of ``Delta^{-alpha}Z(l)``, whose norm is
    ``k^{alpha+1}(l)``, so the norms are exact weighted sums of the
    coefficients below.
    """
    a = family.alpha
    f = family.base_fn
    # tails T_q(m) = sum_{j >= n} k^{-q}(j - m) f(j), for m <= n, via D^q f(m)
    need = n + 2
    fv = f.coefficients(n + 1)

    def tail_sum(q: float, m: int) -> float:
        dq = _dalpha_at(f, q, need, family.frac)[m]
        ks = cesaro_array(-q, n)
        js = np.arange(m, n)
        return float(dq - np.dot(ks[js - m], fv[js]))

    ka = cesaro_array(a, n)
    ka1 = cesaro_array(a + 1, n)
    s1 = tail_sum(a, 0) + sum(ka[l] * tail_sum(a, l - 1) for l in range(1, n + 1))
    s2 = sum(abs(tail_sum(a + 1, l - 1)) * ka1[l] for l in range(1, n + 1))
    s3 = ka1[n] * abs(tail_sum(a, n - 1))
    return SPieces(n, abs(s1), s2, s3)


_DCACHE: dict = {}


def _dalpha_at(f: AnalyticFn, q: float, n: int, cfg: FracDiffConfig) -> np.ndarray:
    key = (id(f), q, n)
    if key not in _DCACHE:
        _DCACHE.clear() if len(_DCACHE) > 64 else None
        _DCACHE[key] = weyl_coefficients(f, q, n, cfg).values
    return _DCACHE[key]
