r"""Weyl sums, Weyl differences and the fractional difference ``D^alpha``.

All three operators are infinite one-sided sums over ``j >= n``.  On a
truncated sequence ``f(0..N)`` they are evaluated by a tail policy:

* ``zero_tail``: ``f`` vanishes beyond ``N``; the per-entry error estimate is
  the size of the last retained term times the number of terms.
* ``power_tail``: ``f(j) ~ C j^p`` beyond ``N``.  Partial sums are taken on a
  doubling ladder of cutoffs and extrapolated with Richardson elimination of
  the exponents ``gamma, gamma+1, ...`` where ``gamma`` is fixed by ``p`` and
  the kernel order.

Every result carries ``tail_err`` and a ``reliable`` mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .cesaro_seq import CoeffSeq, FracOrder, cesaro_array, order_value
from .special_fn import log_gamma

__all__ = [
    "extrapolate_powers",
    "TailModel",
    "FracDiffConfig",
    "DivergenceError",
    "richardson",
    "kernel_tail_sums",
    "weyl_sum",
    "weyl_diff",
    "d_alpha",
    "forward_difference",
    "inversion_residual",
    "weyl_power_coeffs",
]

_EPS = np.finfo(float).eps


class DivergenceError(ValueError):
    """The weighted tail implied by the tail model does not converge."""


@dataclass(frozen=True)
class TailModel:
    """Assumed behaviour of ``f(j)`` beyond the truncation.

    ``kind="power_tail"`` means ``f(j) ~ coefficient * j**exponent``.
    """

    kind: str = "zero_tail"
    exponent: float = 0.0
    coefficient: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("zero_tail", "power_tail"):
            raise ValueError(f"unknown tail kind {self.kind!r}")

    @classmethod
    def zero(cls) -> "TailModel":
        return cls("zero_tail")

    @classmethod
    def power(cls, exponent: float, coefficient: float = 1.0) -> "TailModel":
        return cls("power_tail", float(exponent), float(coefficient))

    @property
    def is_power(self) -> bool:
        return self.kind == "power_tail"


@dataclass(frozen=True)
class FracDiffConfig:
    rel_tol: float = 1e-12
    levels: int = 6
    ladder_factor: float = 4.0
    min_ladder: int = 32
    fft_threshold: float = 3e7


DEFAULT_CONFIG = FracDiffConfig()


# ---------------------------------------------------------------------------
# extrapolation


def richardson(partials: np.ndarray, gamma: float, ratio: float = 2.0):
    """Extrapolate partial sums on a geometric ladder.

    ``partials[k]`` is the partial sum at cutoff ``M_0 * ratio**k`` and the
    error is assumed to expand in ``M**-(gamma + j)``, ``j = 0, 1, ...``.

    Returns ``(value, err)`` where ``err`` compares the final extrapolant with
    the best one of the previous elimination stage.
    """
    t = np.asarray(partials, dtype=float)
    if t.shape[0] == 1:
        return t[0], np.full(t.shape[1:], np.inf)
    prev_best = t[-1]
    for j in range(t.shape[0] - 1):
        r = ratio ** (gamma + j)
        prev_best = t[-1]
        t = (r * t[1:] - t[:-1]) / (r - 1.0)
    value = t[0]
    err = np.abs(value - prev_best)
    return value, err


def extrapolate_powers(cutoffs, partials, exponents):
    """Fit ``S(M) = S + sum_i c_i M**-exponents[i]`` exactly through the
    last ``len(exponents) + 1`` points and return ``(S, err)``.

    ``err`` is the change from dropping the last exponent, a practical
    estimate of the remaining error.  Exponents must be distinct.
    """
    M = np.asarray(cutoffs, dtype=float)
    y = np.asarray(partials, dtype=float)
    ex = list(exponents)

    def solve(k: int) -> float:
        rows = np.column_stack([np.ones(k + 1)] + [M[-(k + 1):] ** -g for g in ex[:k]])
        return float(np.linalg.solve(rows, y[-(k + 1):])[0])

    k = min(len(ex), M.size - 1)
    if k < 1:
        return float(y[-1]), math.inf
    best = solve(k)
    return best, abs(best - solve(k - 1))


# ---------------------------------------------------------------------------
# core correlation engine


def _correlate_valid(f: np.ndarray, kern: np.ndarray, n_out: int, cfg: FracDiffConfig):
    # out[n] = sum_{i < len(kern)} kern[i] * f[n + i], n < n_out
    seg = f[: n_out + kern.size - 1]
    if float(n_out) * kern.size > cfg.fft_threshold:
        return fftconvolve(seg, kern[::-1], mode="valid")
    return np.correlate(seg, kern, mode="valid")


def _kernel_is_finite(kappa: float) -> bool:
    return kappa <= 0 and kappa == math.floor(kappa)


def kernel_tail_sums(
    f: np.ndarray,
    kappa: float,
    tail: TailModel,
    n_out: int | None = None,
    config: FracDiffConfig = DEFAULT_CONFIG,
):
    r"""Evaluate :math:`S(n) = \sum_{i\ge0} k^\kappa(i) f(n+i)` for ``n < n_out``.

    Returns ``(values, err, reliable)``.
    """
    f = np.asarray(f, dtype=float)
    N = f.size - 1
    margin = int(math.floor(abs(kappa))) + int(math.ceil(abs(kappa)))

    if _kernel_is_finite(kappa):
        m = int(-kappa)
        if n_out is None:
            n_out = max(1, N + 1 - m)
        kern = cesaro_array(kappa, m)
        fpad = np.concatenate([f, np.zeros(max(0, n_out + m - f.size))])
        vals = np.correlate(fpad[: n_out + m], kern, mode="valid")
        err = np.zeros(n_out)
        reliable = np.arange(n_out) + m <= N
        if tail.is_power:
            # entries reaching past N used zeros; estimate with the model
            late = ~reliable
            if np.any(late):
                idx = np.arange(n_out)[late]
                err[late] = np.abs(tail.coefficient) * np.maximum(idx, 1.0) ** tail.exponent
        return vals, err, reliable

    if not tail.is_power:
        return _zero_tail_sums(f, kappa, n_out, margin, config)

    gamma = -(kappa + tail.exponent)
    if gamma <= 0:
        raise DivergenceError(
            f"sum against k^{kappa:g} diverges for a tail ~ j^{tail.exponent:g}"
        )
    return _power_tail_sums(f, kappa, gamma, n_out, config)


def _zero_tail_sums(f, kappa, n_out, margin, cfg):
    N = f.size - 1
    if n_out is None:
        n_out = max(1, N + 1 - margin)
    n_out = min(n_out, N + 1)
    kern = cesaro_array(kappa, N)
    if float(N + 1) * n_out > cfg.fft_threshold:
        full = fftconvolve(f[::-1], kern)[: N + 1]
    else:
        full = np.convolve(f[::-1], kern)[: N + 1]
    # full[N - n] = sum_{i <= N - n} k(i) f(n + i)
    vals = full[::-1][:n_out].copy()
    nz = np.flatnonzero(f)
    # beyond the support every term vanishes; drop FFT round-off there
    vals[(nz[-1] + 1 if nz.size else 0):] = 0.0
    n = np.arange(n_out)
    M = N - n
    err = np.abs(kern[M] * f[N]) * (M + 1.0)
    scale = np.maximum(np.abs(vals), np.abs(kern[0] * f[:n_out]))
    reliable = (n <= N - margin) & (err <= cfg.rel_tol * np.maximum(scale, 1e-300))
    return vals, err, reliable


def _power_tail_sums(f, kappa, gamma, n_out, cfg):
    N = f.size - 1
    K = cfg.levels
    if n_out is None:
        n_out = max(1, int(N / (cfg.ladder_factor * 2**K + 1)))
    n_out = min(n_out, N + 1)
    m_avail = N - (n_out - 1)
    while K > 0 and m_avail // 2**K < cfg.min_ladder:
        K -= 1
    m0 = m_avail // 2**K
    if m0 < 1:
        raise ValueError("sequence too short for the requested output length")
    ladder = [m0 * 2**k for k in range(K + 1)]
    kern = cesaro_array(kappa, ladder[-1])
    partials = np.empty((K + 1, n_out))
    for k, M in enumerate(ladder):
        partials[k] = _correlate_valid(f, kern[: M + 1], n_out, cfg)

    n = np.arange(n_out)
    # the expansion in 1/M is only effective once M is well above n
    first = np.zeros(n_out, dtype=int)
    for k, M in enumerate(ladder):
        first[(M < cfg.ladder_factor * n)] = k + 1
    first = np.minimum(first, K)

    vals = np.empty(n_out)
    err = np.empty(n_out)
    for k0 in np.unique(first):
        sel = first == k0
        v, e = richardson(partials[k0:, sel], gamma)
        if K - k0 < 1:
            # no elimination possible: a single partial sum
            e = np.abs(partials[-1, sel] - partials[-2, sel]) if K >= 1 else np.full(sel.sum(), np.inf)
        vals[sel] = v
        err[sel] = e
    err = err + 16 * _EPS * np.abs(partials[-1])
    reliable = (K - first >= 2) & (err <= cfg.rel_tol * np.maximum(np.abs(vals), 1e-300) + 1e-300)
    return vals, err, reliable


# ---------------------------------------------------------------------------
# public operators


def _as_seq(f) -> CoeffSeq:
    return f if isinstance(f, CoeffSeq) else CoeffSeq(np.asarray(f, dtype=float))


def weyl_sum(
    f,
    alpha: float | FracOrder,
    tail: TailModel = TailModel(),
    n_out: int | None = None,
    config: FracDiffConfig = DEFAULT_CONFIG,
) -> CoeffSeq:
    r"""Weyl sum :math:`W^{-\alpha}f(n)=\sum_{j\ge n}k^\alpha(j-n)f(j)`."""
    a = order_value(alpha)
    if a <= 0:
        raise ValueError("weyl_sum needs alpha > 0")
    seq = _as_seq(f)
    vals, err, rel = kernel_tail_sums(seq.values, a, tail, n_out, config)
    return CoeffSeq(vals, label=f"W^-{a:g}[{seq.label}]", tail_err=err, reliable=rel)


def forward_difference(values: np.ndarray, m: int) -> np.ndarray:
    """Integer forward difference ``sum_j (-1)^j C(m, j) h(n + j)``."""
    h = np.asarray(values, dtype=float)
    if m == 0:
        return h.copy()
    coeffs = np.array([(-1) ** j * math.comb(m, j) for j in range(m + 1)], dtype=float)
    return np.correlate(h, coeffs, mode="valid")


def weyl_diff(
    f,
    alpha: float | FracOrder,
    tail: TailModel = TailModel(),
    n_out: int | None = None,
    config: FracDiffConfig = DEFAULT_CONFIG,
) -> CoeffSeq:
    r"""Weyl difference :math:`W^\alpha = W^m W^{-(m-\alpha)}` with ``m = floor(alpha) + 1``."""
    a = order_value(alpha)
    if a <= 0:
        raise ValueError("weyl_diff needs alpha > 0")
    seq = _as_seq(f)
    m = int(math.floor(a)) + 1
    inner = weyl_sum(seq, m - a, tail, None if n_out is None else n_out + m, config)
    vals = forward_difference(inner.values, m)
    binom = np.array([math.comb(m, j) for j in range(m + 1)], dtype=float)
    err = np.correlate(inner.tail_err, binom, mode="valid")
    rel = np.correlate(inner.reliable.astype(float), np.ones(m + 1), mode="valid") == m + 1
    if n_out is not None:
        vals, err, rel = vals[:n_out], err[:n_out], rel[:n_out]
    return CoeffSeq(vals, label=f"W^{a:g}[{seq.label}]", tail_err=err, reliable=rel)


def d_alpha(
    f,
    alpha: float | FracOrder,
    tail: TailModel = TailModel(),
    n_out: int | None = None,
    config: FracDiffConfig = DEFAULT_CONFIG,
) -> CoeffSeq:
    r"""Fractional difference :math:`D^\alpha f(n)=\sum_{j\ge n}k^{-\alpha}(j-n)f(j)`.

    ``alpha = 0`` returns ``f`` itself.
    """
    a = order_value(alpha)
    if a < 0:
        raise ValueError("d_alpha needs alpha >= 0")
    seq = _as_seq(f)
    if a == 0:
        n = seq.values.size if n_out is None else n_out
        return CoeffSeq(
            seq.values[:n], label=seq.label, tail_err=np.zeros(n), reliable=np.ones(n, bool)
        )
    vals, err, rel = kernel_tail_sums(seq.values, -a, tail, n_out, config)
    return CoeffSeq(vals, label=f"D^{a:g}[{seq.label}]", tail_err=err, reliable=rel)


def inversion_residual(
    f,
    alpha: float | FracOrder,
    tail: TailModel = TailModel(),
    config: FracDiffConfig = DEFAULT_CONFIG,
) -> float:
    r"""Max of :math:`|D^\alpha(W^{-\alpha}f)(n) - f(n)|` over the reliable window."""
    a = order_value(alpha)
    seq = _as_seq(f)
    h = weyl_sum(seq, a, tail, config=config)
    h_tail = TailModel.power(tail.exponent + a, tail.coefficient) if tail.is_power else tail
    if tail.is_power:
        back = d_alpha(h, a, h_tail, config=config)
    else:
        back = d_alpha(h, a, h_tail, n_out=h.values.size, config=config)
    n = back.values.size
    ok = back.reliable & h.reliable[:n]
    if not np.any(ok):
        ok = np.zeros(n, bool)
        ok[0] = True
    diff = np.abs(back.values - seq.values[:n])
    return float(np.max(diff[ok]))


# ---------------------------------------------------------------------------
# closed-form coefficients for powers of (1 - z)


def weyl_power_coeffs(sigma: float, alpha: float, n_max: int) -> np.ndarray:
    r"""Coefficients :math:`W^\alpha k^\sigma(n)` for ``n = 0..n_max``.

    Uses :math:`W^\alpha k^\sigma(0) = \Gamma(1-\sigma+\alpha)/(\Gamma(1-\sigma)\Gamma(1+\alpha))`
    and the ratio ``(sigma + n) / (n + alpha + 1)``; valid for ``sigma < 1``
    or any non-positive integer ``sigma`` and ``alpha >= 0``.
    """
    sigma = float(sigma)
    alpha = float(alpha)
    if sigma >= 1 and sigma == math.floor(sigma):
        # 1/Gamma(1 - sigma) vanishes
        return np.zeros(n_max + 1)
    if sigma >= 1:
        raise ValueError("closed form requires sigma < 1")
    log_c0 = log_gamma(1 - sigma + alpha) - log_gamma(1 - sigma) - log_gamma(1 + alpha)
    n = np.arange(n_max, dtype=float)
    ratios = (sigma + n) / (n + alpha + 1.0)
    out = np.empty(n_max + 1)
    out[0] = math.exp(log_c0)
    out[1:] = out[0] * np.cumprod(ratios)
    return out
