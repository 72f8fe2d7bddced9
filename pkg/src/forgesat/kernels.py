"""Kernel dispatch: compiled extension when importable, numpy fallback otherwise.

Set ``FORGESAT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from forgesat import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("FORGESAT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from forgesat import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

dpll_flat = _impl.dpll_flat
segment_mean = _impl.segment_mean
segment_mean_backward = _impl.segment_mean_backward

__all__ = ["BACKEND", "dpll_flat", "segment_mean", "segment_mean_backward"]
