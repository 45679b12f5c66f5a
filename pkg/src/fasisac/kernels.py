"""Backend selection for the hot kernels (environment physics, optimizer updates).

The compiled extension ``_ckernels`` is used when it imports; otherwise the
numpy implementation in ``_pykernels`` is used. Setting ``FASISAC_PURE_PYTHON=1``
forces the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("FASISAC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

response_matrix = _impl.response_matrix
channel_row = _impl.channel_row
quad_form = _impl.quad_form
trace_sandwich = _impl.trace_sandwich
min_pairwise_distance = _impl.min_pairwise_distance
settle_positions = _impl.settle_positions
adam_update = _impl.adam_update
soft_update = _impl.soft_update

__all__ = [
    "BACKEND",
    "response_matrix",
    "channel_row",
    "quad_form",
    "trace_sandwich",
    "min_pairwise_distance",
    "settle_positions",
    "adam_update",
    "soft_update",
]
