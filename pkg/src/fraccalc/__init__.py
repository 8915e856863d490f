"""Fractional Cesàro calculus: Cesàro numbers, fractional differences, the
weighted algebras A^alpha and the operator functional calculus built on them.

Submodules load on first attribute access, so ``import fraccalc`` stays cheap.
"""

from __future__ import annotations

import importlib

__version__ = "0.1.0"

_SUBMODULES = (
    "special_fn",
    "cesaro_seq",
    "frac_diff",
    "series_algebra",
    "admissibility",
    "approx_id",
    "operators",
    "func_calc",
    "selftest",
    "cli",
)

__all__ = list(_SUBMODULES) + ["__version__"]


def __getattr__(name: str):
    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
