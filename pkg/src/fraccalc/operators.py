"""Concrete operator models, Cesàro sums of their powers and probe diagnostics.

Three models are provided:

* ``backward_shift`` on the weighted space with norm
  ``sum |f(j)|^2 k^beta(j)``.  Vectors are truncations ``f(0..N)``; values
  beyond ``N`` are zero unless the vector carries a ``valid`` bound, in which
  case only ``f(0..valid-1)`` is trusted and every shift shrinks the window.
* ``volterra_complement`` ``T_V = I - V`` on a uniform grid of ``[0, 1]`` with
  ``V f(t) = int_0^t f`` by the trapezoid rule.
* ``dense_matrix`` acting on ``C^d`` with the Euclidean norm.

Array helpers accept ``(N,)`` vectors or ``(N, P)`` stacks of ``P`` probes.
"""

from __future__ import annotations

import csv
import io
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .cesaro_seq import FracOrder, cesaro_array, order_value
from .special_fn import laguerre

__all__ = [
    "SpaceTag",
    "WeightedVector",
    "LinOpHandle",
    "SpaceMismatchError",
    "apply",
    "CesaroCache",
    "cesaro_sum",
    "cesaro_mean",
    "KEstimate",
    "estimate_K_alpha",
    "ergodic_identity_residual",
    "range_identity_residual",
    "mean_ergodic_probe",
    "spectrum_condition_check",
    "ResolventReport",
    "resolvent_bound_check",
    "volterra_cesaro_mean",
    "PowerNormReport",
    "power_norm_estimate",
    "loglog_slope",
    "load_matrix_csv",
    "load_grid_csv",
    "load_sequence_csv",
]


class SpaceMismatchError(ValueError):
    """Operator and vector live on different spaces."""


# ---------------------------------------------------------------------------
# spaces and vectors


@dataclass(frozen=True)
class SpaceTag:
    kind: str
    dim: int
    beta: float | None = None
    p_exponent: float = 2.0

    def __post_init__(self) -> None:
        if self.kind not in ("ell2_beta", "grid01", "plain"):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.kind == "ell2_beta":
            if self.beta is None or not 0 < self.beta < 1:
                raise ValueError("ell2_beta needs beta in (0, 1)")
        if self.kind == "grid01":
            if self.dim < 2:
                raise ValueError("grid01 needs at least two nodes")
            if not self.p_exponent >= 1:
                raise ValueError("grid01 needs p >= 1")

    @classmethod
    def ell2_beta(cls, beta: float | FracOrder, n_max: int) -> "SpaceTag":
        return cls("ell2_beta", int(n_max) + 1, beta=order_value(beta))

    @classmethod
    def grid01(cls, grid_n: int, p_exponent: float = 2.0) -> "SpaceTag":
        return cls("grid01", int(grid_n) + 1, p_exponent=float(p_exponent))

    @classmethod
    def plain(cls, dim: int) -> "SpaceTag":
        return cls("plain", int(dim))

    @property
    def grid_n(self) -> int:
        return self.dim - 1

    @property
    def nodes(self) -> np.ndarray:
        if self.kind != "grid01":
            raise SpaceMismatchError("only grid01 spaces have nodes")
        return np.linspace(0.0, 1.0, self.dim)

    def weights(self) -> np.ndarray:
        """Per-entry weights of the norm (before the p-th root)."""
        if self.kind == "ell2_beta":
            return cesaro_array(self.beta, self.dim - 1)
        if self.kind == "grid01":
            h = 1.0 / self.grid_n
            w = np.full(self.dim, h)
            w[0] = w[-1] = h / 2
            return w
        return np.ones(self.dim)

    def norm(self, arr: np.ndarray) -> np.ndarray | float:
        """Norm along axis 0; trailing axes index separate vectors."""
        a = np.abs(np.asarray(arr))
        n = a.shape[0]
        w = self.weights()[:n].reshape((n,) + (1,) * (a.ndim - 1))
        if self.kind == "grid01":
            p = self.p_exponent
            if math.isinf(p):
                out = np.max(a, axis=0)
            else:
                out = np.sum(w * a**p, axis=0) ** (1.0 / p)
        else:
            out = np.sqrt(np.sum(w * a**2, axis=0))
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class WeightedVector:
    """A vector of a model space.

    ``valid`` is ``None`` when the entries are exact (the zero extension of
    a shift-space truncation is the true vector); otherwise only the first
    ``valid`` entries are trusted.
    """

    entries: np.ndarray
    space: SpaceTag
    valid: int | None = None

    def __post_init__(self) -> None:
        arr = np.array(self.entries, copy=True)
        if arr.dtype.kind not in "fc":
            arr = arr.astype(float)
        arr = arr.reshape(-1)
        if arr.size != self.space.dim:
            raise SpaceMismatchError(
                f"vector of length {arr.size} does not fit a space of dimension {self.space.dim}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        if self.valid is not None:
            object.__setattr__(self, "valid", max(0, min(int(self.valid), arr.size)))

    @property
    def window(self) -> int:
        return self.space.dim if self.valid is None else self.valid

    def norm(self) -> float:
        return float(self.space.norm(self.entries[: self.window]))

    def with_entries(self, entries: np.ndarray, valid: int | None = None) -> "WeightedVector":
        return WeightedVector(entries, self.space, valid)

    def __add__(self, other: "WeightedVector") -> "WeightedVector":
        _check_same(self.space, other.space)
        return self.with_entries(self.entries + other.entries, _min_valid(self.valid, other.valid))

    def __sub__(self, other: "WeightedVector") -> "WeightedVector":
        _check_same(self.space, other.space)
        return self.with_entries(self.entries - other.entries, _min_valid(self.valid, other.valid))

    def __mul__(self, c) -> "WeightedVector":
        return self.with_entries(self.entries * c, self.valid)

    __rmul__ = __mul__


def _min_valid(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _check_same(a: SpaceTag, b: SpaceTag) -> None:
    if a != b:
        raise SpaceMismatchError(f"space {a} does not match {b}")


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True, eq=False)
class LinOpHandle:
    kind: str
    space: SpaceTag
    matrix: np.ndarray | None = None

    def __post_init__(self) -> None:
        need = {"backward_shift": "ell2_beta", "volterra_complement": "grid01", "dense_matrix": "plain"}
        if self.kind not in need:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.space.kind != need[self.kind]:
            raise SpaceMismatchError(f"{self.kind} acts on {need[self.kind]}, not {self.space.kind}")
        if self.kind == "dense_matrix":
            m = np.array(self.matrix, copy=True)
            if m.dtype.kind not in "fc":
                m = m.astype(float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("dense matrix must be square")
            if m.shape[0] != self.space.dim:
                raise SpaceMismatchError("matrix size does not match the space")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    @classmethod
    def backward_shift(cls, beta: float | FracOrder, n_max: int) -> "LinOpHandle":
        return cls("backward_shift", SpaceTag.ell2_beta(beta, n_max))

    @classmethod
    def volterra_complement(cls, grid_n: int, p_exponent: float = 2.0) -> "LinOpHandle":
        return cls("volterra_complement", SpaceTag.grid01(grid_n, p_exponent))

    @classmethod
    def dense(cls, matrix) -> "LinOpHandle":
        m = np.asarray(matrix)
        return cls("dense_matrix", SpaceTag.plain(m.shape[0]), m)

    def vector(self, entries, valid: int | None = None) -> WeightedVector:
        return WeightedVector(entries, self.space, valid)

    def zeros(self) -> WeightedVector:
        return WeightedVector(np.zeros(self.space.dim), self.space)

    @property
    def exact_powers_vanish(self) -> bool:
        """Whether ``T^n x`` reaches exact zero for every exact vector."""
        return self.kind == "backward_shift"


def _apply_raw(op: LinOpHandle, arr: np.ndarray) -> np.ndarray:
    if op.kind == "backward_shift":
        out = np.zeros_like(arr)
        out[:-1] = arr[1:]
        return out
    if op.kind == "volterra_complement":
        h = 1.0 / op.space.grid_n
        return arr - cumulative_trapezoid(arr, dx=h, axis=0, initial=0)
    return op.matrix @ arr


def apply(op: LinOpHandle, x: WeightedVector) -> WeightedVector:
    """``T x``.  For the shift the new last entry comes from the zero extension."""
    _check_same(op.space, x.space)
    valid = x.valid
    if op.kind == "backward_shift" and valid is not None:
        valid = max(valid - 1, 0)
    return WeightedVector(_apply_raw(op, x.entries), x.space, valid)


# ---------------------------------------------------------------------------
# Cesàro sums


def _cesaro_stream(op: LinOpHandle, alpha: float, x: np.ndarray, n_max: int):
    """Yield ``(n, Delta^{-alpha} T(n) x)`` for ``n = 0..n_max``.

    Uses ``D(n+1) = T D(n) + k^alpha(n+1) x``.
    """
    k = cesaro_array(alpha, n_max)
    cur = np.array(x, dtype=np.result_type(x, float), copy=True)
    yield 0, cur
    for n in range(1, n_max + 1):
        cur = _apply_raw(op, cur)
        cur += k[n] * x
        yield n, cur


class CesaroCache:
    """Append-only store of ``Delta^{-alpha} T(n) x`` for ``n = 0..n_max``.

    Extension is guarded by a lock; completed rows are never modified, so
    readers may use any ``n`` below :attr:`n_max` without locking.
    """

    def __init__(self, op: LinOpHandle, alpha: float | FracOrder, x: WeightedVector, n_max: int = 0):
        _check_same(op.space, x.space)
        a = order_value(alpha)
        if a < 0:
            raise ValueError("alpha must be non-negative")
        self.op = op
        self.alpha = a
        self.x = x
        self._lock = threading.Lock()
        dtype = np.result_type(x.entries, float)
        if op.kind == "dense_matrix":
            dtype = np.result_type(dtype, op.matrix)
        self._rows = np.empty((max(n_max, 0) + 1, x.space.dim), dtype=dtype)
        self._rows[0] = x.entries
        self._count = 1
        self.extend(n_max)

    @property
    def n_max(self) -> int:
        return self._count - 1

    def extend(self, n_max: int) -> None:
        if n_max <= self.n_max:
            return
        with self._lock:
            if n_max <= self.n_max:
                return
            if self._rows.shape[0] <= n_max:
                grown = np.empty((max(n_max + 1, 2 * self._rows.shape[0]), self._rows.shape[1]),
                                 dtype=self._rows.dtype)
                grown[: self._count] = self._rows[: self._count]
                self._rows = grown
            k = cesaro_array(self.alpha, n_max)
            x = self.x.entries
            cur = self._rows[self._count - 1]
            for n in range(self._count, n_max + 1):
                cur = _apply_raw(self.op, cur) + k[n] * x
                self._rows[n] = cur
            self._count = n_max + 1

    @property
    def partial_sums(self) -> np.ndarray:
        view = self._rows[: self._count]
        view = view.view()
        view.setflags(write=False)
        return view

    def valid_at(self, n: int) -> int | None:
        """Trusted window of ``Delta^{-alpha} T(n) x``."""
        if self.x.valid is None or self.op.kind != "backward_shift":
            return self.x.valid
        return max(self.x.valid - n, 0)

    def get(self, n: int) -> WeightedVector:
        if n < 0:
            raise IndexError("n must be non-negative")
        self.extend(n)
        return WeightedVector(self._rows[n], self.x.space, self.valid_at(n))


def cesaro_sum(cache: CesaroCache, n: int) -> WeightedVector:
    r"""``Delta^{-alpha} T(n) x = sum_{j<=n} k^alpha(n-j) T^j x``."""
    return cache.get(n)


def cesaro_mean(cache: CesaroCache, n: int) -> WeightedVector:
    r"""Cesàro mean ``M^alpha(n) x = Delta^{-alpha} T(n) x / k^{alpha+1}(n)``."""
    s = cache.get(n)
    return s * (1.0 / cesaro_array(cache.alpha + 1.0, n)[n])


# ---------------------------------------------------------------------------
# boundedness constants and growth probes


def loglog_slope(n: np.ndarray, values: np.ndarray) -> float:
    """Least-squares slope of ``log values`` against ``log n``."""
    n = np.asarray(n, dtype=float)
    v = np.asarray(values, dtype=float)
    return float(np.polyfit(np.log(n), np.log(v), 1)[0])


def _probe_stack(op: LinOpHandle, probe_count: int, seed: int, basis_at=()) -> np.ndarray:
    rng = np.random.default_rng(seed)
    d = op.space.dim
    cols = []
    for j in sorted(set(int(i) for i in basis_at if 0 <= i < d)):
        e = np.zeros(d)
        e[j] = 1.0
        cols.append(e)
    if op.kind == "backward_shift":
        idx = np.arange(d, dtype=float)
        for g in (-1.0, -0.5, 0.0, 0.5):
            cols.append((idx + 1.0) ** g)
    elif op.kind == "volterra_complement":
        t = op.space.nodes
        cols += [np.ones(d), t, 1.0 - t, np.cos(np.pi * t)]
    else:
        cols += list(np.eye(d))
    for _ in range(probe_count):
        v = rng.standard_normal(d)
        if op.kind == "backward_shift":
            # finite-energy random profile with a random support length
            cut = int(rng.integers(1, d + 1))
            v[cut:] = 0.0
        cols.append(v)
    stack = np.stack(cols, axis=1)
    norms = op.space.norm(stack)
    return stack[:, norms > 0] / norms[norms > 0]


@dataclass(frozen=True)
class KEstimate:
    value: float
    n_grid: np.ndarray
    sup_by_n: np.ndarray
    trend_slope: float
    growing: bool


def estimate_K_alpha(
    op: LinOpHandle,
    alpha: float | FracOrder,
    n_max: int,
    probe_count: int = 16,
    *,
    seed: int = 0,
    growth_tol: float = 0.05,
) -> KEstimate:
    """Lower bound for ``sup_n ||M^alpha(n)||`` by probe maximization.

    The growth trend is the log-log slope of the per-``n`` supremum over the
    upper half of a geometric grid of ``n``.  For the shift the probes are
    unit vectors at the grid points, power profiles and random finitely
    supported vectors; the space must be at least ``2 n_max`` long so that
    probes are not cut by the truncation.
    """
    a = order_value(alpha)
    grid = np.unique(np.geomspace(1, n_max, num=max(2, int(4 * math.log2(max(n_max, 2))) + 1)).astype(int))
    basis = grid if op.kind == "backward_shift" else ()
    probes = _probe_stack(op, probe_count, seed, basis)
    k1 = cesaro_array(a + 1.0, n_max)
    want = set(grid.tolist())
    sup = []
    for n, d in _cesaro_stream(op, a, probes, n_max):
        if n in want:
            sup.append(float(np.max(op.space.norm(d))) / k1[n])
    sup = np.array(sup)
    upper = grid >= max(grid[len(grid) // 2], 2)
    slope = loglog_slope(grid[upper], sup[upper]) if np.sum(upper) >= 3 else 0.0
    value = float(max(1.0 if a == 0 else 0.0, np.max(sup)))
    return KEstimate(value, grid, sup, slope, slope > growth_tol)


@dataclass(frozen=True)
class PowerNormReport:
    n_list: np.ndarray
    norms: np.ndarray
    slope_squared: float


def power_norm_estimate(
    op: LinOpHandle, n_list, probe_count: int = 8, *, seed: int = 0
) -> PowerNormReport:
    """Probe lower bounds for ``||T^n||`` and the log-log slope of ``||T^n||^2`` against ``n+1``."""
    n_arr = np.asarray(sorted(set(int(n) for n in n_list)))
    basis = n_arr if op.kind == "backward_shift" else ()
    probes = _probe_stack(op, probe_count, seed, basis)
    want = set(n_arr.tolist())
    norms = []
    cur = probes
    for n in range(int(n_arr[-1]) + 1):
        if n:
            cur = _apply_raw(op, cur)
        if n in want:
            norms.append(float(np.max(op.space.norm(cur))))
    norms = np.array(norms)
    slope = loglog_slope(n_arr + 1.0, norms**2) if n_arr.size >= 2 else float("nan")
    return PowerNormReport(n_arr, norms, slope)


# ---------------------------------------------------------------------------
# identities


def ergodic_identity_residual(
    op: LinOpHandle,
    alpha: float | FracOrder,
    beta: float | FracOrder,
    n: int,
    x: WeightedVector,
) -> float:
    r"""Residual of

    .. math::
        (I-T)\Delta^{-\beta}\mathcal T(n)x = k^\beta(n+1)x
        - \sum_{j=0}^{n+1} k^{\beta-\alpha-1}(n+1-j)\,\Delta^{-\alpha}\mathcal T(j)x,

    measured as ``||lhs - rhs|| / max(1, ||x||)`` on the trusted window.
    """
    a, b = order_value(alpha), order_value(beta)
    if not b > a:
        raise ValueError("need beta > alpha")
    cb = CesaroCache(op, b, x, n)
    ca = CesaroCache(op, a, x, n + 1)
    db = cb.partial_sums[n]
    lhs = db - _apply_raw(op, db)
    kern = cesaro_array(b - a - 1.0, n + 1)[::-1]
    rhs = cesaro_array(b, n + 1)[n + 1] * x.entries - kern @ ca.partial_sums
    return _window_norm(op, x, lhs - rhs, n + 1) / max(1.0, x.norm())


def range_identity_residual(op: LinOpHandle, alpha: float | FracOrder, n: int, x: WeightedVector) -> float:
    r"""Residual of ``Delta^{-(alpha+1)} T(n-1)(T-I)x = Delta^{-alpha} T(n)x - k^{alpha+1}(n)x``."""
    a = order_value(alpha)
    if n < 1:
        raise ValueError("n must be at least 1")
    tx = apply(op, x)
    y = tx - x
    lhs = CesaroCache(op, a + 1.0, y, n - 1).partial_sums[n - 1]
    rhs = CesaroCache(op, a, x, n).partial_sums[n] - cesaro_array(a + 1.0, n)[n] * x.entries
    return _window_norm(op, x, lhs - rhs, n) / max(1.0, x.norm())


def _window_norm(op: LinOpHandle, x: WeightedVector, diff: np.ndarray, steps: int) -> float:
    w = x.space.dim
    if x.valid is not None and op.kind == "backward_shift":
        w = max(x.valid - steps, 0)
    if w == 0:
        return 0.0
    return float(x.space.norm(diff[:w]))


def mean_ergodic_probe(op: LinOpHandle, beta: float | FracOrder, x: WeightedVector, n_list) -> np.ndarray:
    """Norms ``||M^beta(n) x||`` for ``n`` in ``n_list``."""
    b = order_value(beta)
    n_arr = [int(n) for n in n_list]
    want = {n: i for i, n in enumerate(n_arr)}
    out = np.empty(len(n_arr))
    k1 = cesaro_array(b + 1.0, max(n_arr))
    for n, d in _cesaro_stream(op, b, x.entries, max(n_arr)):
        if n in want:
            out[want[n]] = _window_norm(op, x, d, n) / k1[n]
    return out


# ---------------------------------------------------------------------------
# matrix-only checks


def _require_dense(op: LinOpHandle) -> None:
    if op.kind != "dense_matrix":
        raise SpaceMismatchError("this check needs a dense matrix operator")


def spectrum_condition_check(op: LinOpHandle, eig_tol: float = 1e-8) -> bool:
    """True iff every eigenvalue has modulus below ``1 - eig_tol`` or lies within ``eig_tol`` of 1."""
    _require_dense(op)
    ev = np.linalg.eigvals(op.matrix)
    ok = (np.abs(ev) < 1 - eig_tol) | (np.abs(ev - 1) <= eig_tol)
    return bool(np.all(ok))


@dataclass(frozen=True)
class ResolventReport:
    lambdas: np.ndarray
    resolvent_norms: np.ndarray
    bounds: np.ndarray
    worst_slack: float
    holds: bool


def resolvent_bound_check(
    op: LinOpHandle,
    alpha: float | FracOrder,
    K_alpha: float,
    lambda_samples,
    rtol: float = 1e-10,
) -> ResolventReport:
    r"""Check ``||(lambda - A)^{-1}|| <= K |lambda|^alpha / (|lambda-1|-1)^{alpha+1}`` with ``A = I - T``.

    ``worst_slack`` is the smallest ``(bound - lhs) / bound``.
    """
    _require_dense(op)
    a = order_value(alpha)
    lam = np.asarray(lambda_samples, dtype=complex).reshape(-1)
    if np.any(lam.real >= 0):
        raise ValueError("samples need Re(lambda) < 0")
    d = op.space.dim
    A = np.eye(d) - op.matrix
    lhs = np.empty(lam.size)
    for i, l in enumerate(lam):
        M = l * np.eye(d) - A
        if np.linalg.cond(M) > 1e14:
            raise np.linalg.LinAlgError(f"resolvent is numerically singular at lambda={l}")
        lhs[i] = np.linalg.norm(np.linalg.solve(M, np.eye(d)), 2)
    bounds = K_alpha * np.abs(lam) ** a / (np.abs(lam - 1) - 1) ** (a + 1)
    slack = (bounds - lhs) / bounds
    worst = float(np.min(slack))
    return ResolventReport(lam, lhs, bounds, worst, worst >= -rtol)


# ---------------------------------------------------------------------------
# Volterra means


def volterra_cesaro_mean(op: LinOpHandle, alpha: float | FracOrder, n: int, f: WeightedVector) -> WeightedVector:
    r"""``M^alpha(n) f = f - k^{alpha+1}(n)^{-1} int_0^t L_{n-1}^{(alpha+1)}(t-u) f(u) du``.

    The convolution uses the trapezoid rule on the grid with the Laguerre
    kernel sampled at the nodes.
    """
    if op.kind != "volterra_complement":
        raise SpaceMismatchError("volterra_cesaro_mean needs the Volterra model")
    _check_same(op.space, f.space)
    a = order_value(alpha)
    if n < 1:
        raise ValueError("n must be at least 1")
    t = op.space.nodes
    h = 1.0 / op.space.grid_n
    kern = laguerre(n - 1, a + 1.0, t)
    vals = f.entries
    full = np.convolve(kern, vals)[: t.size]
    conv = h * (full - 0.5 * kern * vals[0] - 0.5 * kern[0] * vals)
    conv[0] = 0.0
    scale = cesaro_array(a + 1.0, n)[n]
    return f.with_entries(vals - conv / scale)


# ---------------------------------------------------------------------------
# CSV loaders


def _read_text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        return Path(source).read_text(encoding="utf-8")
    return str(source)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_matrix_csv(source) -> LinOpHandle:
    """Square matrix from CSV text or a path; a non-numeric first row is a header."""
    rows = [r for r in csv.reader(io.StringIO(_read_text(source))) if r]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    m = np.array([[complex(c.strip().replace("i", "j")) for c in r] for r in rows])
    if np.all(m.imag == 0):
        m = m.real
    return LinOpHandle.dense(m)


def load_grid_csv(source, p_exponent: float = 2.0) -> WeightedVector:
    """Grid function from CSV with header ``t,value`` on a uniform grid of [0, 1]."""
    rows = [r for r in csv.reader(io.StringIO(_read_text(source))) if r]
    if not rows or [c.strip() for c in rows[0]] != ["t", "value"]:
        raise ValueError("expected header 't,value'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    grid_n = data.shape[0] - 1
    if grid_n < 1 or not np.allclose(data[:, 0], np.linspace(0, 1, grid_n + 1), atol=1e-9):
        raise ValueError("t must be a uniform grid from 0 to 1")
    return WeightedVector(data[:, 1], SpaceTag.grid01(grid_n, p_exponent))


def load_sequence_csv(source, beta: float, n_max: int | None = None) -> WeightedVector:
    """Sequence from CSV with header ``index,value``, zero-padded to ``n_max + 1`` entries."""
    from .cesaro_seq import CoeffSeq

    seq = CoeffSeq.from_csv(_read_text(source))
    n = seq.truncation_n if n_max is None else int(n_max)
    if n < seq.truncation_n:
        raise ValueError("n_max is shorter than the data")
    vals = np.zeros(n + 1)
    vals[: seq.values.size] = seq.values
    return WeightedVector(vals, SpaceTag.ell2_beta(beta, n))
