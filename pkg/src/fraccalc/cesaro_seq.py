r"""Cesàro numbers and truncated one-sided sequences.

The Cesàro numbers :math:`k^\alpha(n)` are the Taylor coefficients of
:math:`(1-z)^{-\alpha}`.  They are generated by the multiplicative recurrence
:math:`k^\alpha(n) = k^\alpha(n-1)\,(n+\alpha-1)/n` and form a convolution
group, :math:`k^\alpha * k^\beta = k^{\alpha+\beta}`.
"""

from __future__ import annotations

import csv
import io
import json
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .special_fn import gamma_sign_log

__all__ = [
    "FracOrder",
    "CoeffSeq",
    "PoleError",
    "order_value",
    "cesaro_numbers",
    "cesaro_array",
    "convolve",
    "cesaro_asymptotic",
    "sign_pattern",
    "kernel_identity_check",
]


class PoleError(ValueError):
    """Raised when an order hits a pole of the gamma function."""


@dataclass(frozen=True)
class FracOrder:
    """A real order parameter (alpha, beta or s); negative values are legal."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if not math.isfinite(v):
            raise ValueError("order must be finite")
        object.__setattr__(self, "value", v)

    @property
    def is_nonpositive_integer(self) -> bool:
        return self.value <= 0 and self.value == math.floor(self.value)

    @property
    def is_integer(self) -> bool:
        return self.value == math.floor(self.value)

    def __float__(self) -> float:
        return self.value


def order_value(alpha: float | FracOrder) -> float:
    """Coerce a float or FracOrder to a finite float."""
    if isinstance(alpha, FracOrder):
        return alpha.value
    return FracOrder(alpha).value


@dataclass(frozen=True, eq=False)
class CoeffSeq:
    """Finite truncation ``f(0..N)`` of a one-sided real sequence.

    ``tail_err`` and ``reliable`` are optional per-entry diagnostics attached
    by operations that truncate infinite sums.
    """

    values: np.ndarray
    label: str = ""
    tail_err: np.ndarray | None = None
    reliable: np.ndarray | None = None

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if vals.size == 0:
            raise ValueError("a CoeffSeq needs at least one entry")
        if not np.all(np.isfinite(vals)):
            raise ValueError("CoeffSeq entries must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        for name in ("tail_err", "reliable"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, copy=True).reshape(-1)
                if arr.size != vals.size:
                    raise ValueError(f"{name} must match the length of values")
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def truncation_n(self) -> int:
        return self.values.size - 1

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, idx):
        return self.values[idx]

    # serialization -------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "value"])
        for i, v in enumerate(self.values):
            w.writerow([i, repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, label: str = "") -> "CoeffSeq":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["index", "value"]:
            raise ValueError("expected header 'index,value'")
        body = [r for r in rows[1:] if r]
        idx = [int(r[0]) for r in body]
        if idx != list(range(len(idx))):
            raise ValueError("indices must be 0..N in order")
        return cls(np.array([float(r[1]) for r in body]), label=label)

    def to_json(self) -> str:
        return json.dumps({"label": self.label, "values": [float(v) for v in self.values]})

    @classmethod
    def from_json(cls, text: str) -> "CoeffSeq":
        obj = json.loads(text)
        return cls(np.asarray(obj["values"], dtype=float), label=obj.get("label", ""))


# memoized rows of Cesàro numbers ------------------------------------------


@dataclass
class _CesaroTable:
    rows: dict[float, np.ndarray] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)
    max_cached: int = 1 << 21

    def get(self, alpha: float, n_max: int) -> np.ndarray:
        row = self.rows.get(alpha)
        if row is not None and row.size > n_max:
            return row[: n_max + 1]
        out = _cesaro_recurrence(alpha, n_max)
        if n_max < self.max_cached:
            with self.lock:
                cur = self.rows.get(alpha)
                if cur is None or cur.size < out.size:
                    out.setflags(write=False)
                    self.rows[alpha] = out
        return out


def _cesaro_recurrence(alpha: float, n_max: int) -> np.ndarray:
    n = np.arange(1, n_max + 1, dtype=float)
    ratios = (n + alpha - 1.0) / n
    out = np.empty(n_max + 1)
    out[0] = 1.0
    out[1:] = np.cumprod(ratios)
    return out


_TABLE = _CesaroTable()


def cesaro_array(alpha: float | FracOrder, n_max: int) -> np.ndarray:
    """Read-only array ``k^alpha(0..n_max)`` from the shared memo table."""
    a = order_value(alpha)
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    return _TABLE.get(a, int(n_max))


def cesaro_numbers(alpha: float | FracOrder, n_max: int) -> CoeffSeq:
    """Cesàro numbers ``k^alpha(0..n_max)`` by the multiplicative recurrence.

    For ``alpha = -m`` a non-positive integer the entries beyond ``m`` are
    exactly zero, matching the binomial formula ``(-1)^n C(m, n)``.
    """
    a = order_value(alpha)
    return CoeffSeq(cesaro_array(a, n_max), label=f"k^{a:g}")


def convolve(a: CoeffSeq, b: CoeffSeq, method: str = "direct") -> CoeffSeq:
    """Cauchy product truncated at ``min(N_a, N_b)``.

    ``method="fft"`` is an accelerated path; ``"direct"`` is exact up to
    floating-point rounding and is the default.
    """
    n = min(a.truncation_n, b.truncation_n)
    x = a.values[: n + 1]
    y = b.values[: n + 1]
    if method == "direct":
        out = np.convolve(x, y)[: n + 1]
    elif method == "fft":
        from scipy.signal import fftconvolve

        out = fftconvolve(x, y)[: n + 1]
    else:
        raise ValueError(f"unknown method {method!r}")
    label = f"({a.label})*({b.label})" if (a.label or b.label) else ""
    return CoeffSeq(out, label=label)


def cesaro_asymptotic(alpha: float | FracOrder, n: int) -> float:
    """Leading asymptotic ``n^(alpha-1) / Gamma(alpha)`` of ``k^alpha(n)``."""
    a = order_value(alpha)
    if a <= 0 and a == math.floor(a):
        raise PoleError(f"no power asymptotic at the pole alpha={a:g}")
    if n < 1:
        raise ValueError("n must be at least 1")
    sign, lg = gamma_sign_log(a)
    return sign * math.exp((a - 1.0) * math.log(n) - lg)


def sign_pattern(alpha: float | FracOrder, n_max: int) -> np.ndarray:
    """Signs of ``k^{-alpha}(0..n_max)`` as integers in ``{-1, 0, 1}``."""
    a = order_value(alpha)
    return np.sign(cesaro_array(-a, n_max)).astype(int)


def kernel_identity_check(alpha: float | FracOrder, q: int, h: int) -> float:
    r"""Residual of the Cesàro kernel identity

    .. math::
        k^\alpha(q+h) = -\sum_{p=0}^{q-1} k^\alpha(p)
        \sum_{j=q-p}^{h+q-p} k^{-\alpha}(j)\, k^\alpha(h+q-p-j).
    """
    a = order_value(alpha)
    if q < 1 or h < 0:
        raise ValueError("need q >= 1 and h >= 0")
    top = q + h
    # terms reach k^a(top)^2 in size and cancel; extended precision keeps
    # the residual at the level of the rounding in k^a(top) itself
    n = np.arange(1, top + 1, dtype=np.longdouble)
    la = np.longdouble(a)
    kp = np.concatenate(([np.longdouble(1)], np.cumprod((n + la - 1) / n)))
    km = np.concatenate(([np.longdouble(1)], np.cumprod((n - la - 1) / n)))
    acc = np.longdouble(0)
    for p in range(q):
        j = np.arange(q - p, h + q - p + 1)
        acc += kp[p] * np.sum(km[j] * kp[h + q - p - j])
    return float(abs(kp[top] + acc))
