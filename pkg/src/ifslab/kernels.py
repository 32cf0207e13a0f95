"""Kernel backend dispatch.

The numba path is the default; set IFSLAB_NO_NUMBA=1 to force the pure-numpy
fallback. Both backends implement the same functions with identical numeric
semantics (see benchmarks/bench_kernels.py for a speed comparison).
"""

from __future__ import annotations

import os

_flag = os.environ.get("IFSLAB_NO_NUMBA", "").strip().lower()
if _flag in ("1", "true", "yes"):
    from . import _kernels_numpy as _impl
else:
    try:
        from . import _kernels_numba as _impl
    except ImportError:  # numba unavailable: silently fall back
        from . import _kernels_numpy as _impl

BACKEND = _impl.BACKEND

distinct_count_batch = _impl.distinct_count_batch
collision_stat_batch = _impl.collision_stat_batch
window_log_sums_batch = _impl.window_log_sums_batch
first_window_mask_batch = _impl.first_window_mask_batch
good_windows_batch = _impl.good_windows_batch
bad_window_count_batch = _impl.bad_window_count_batch
tail_ratio_products = _impl.tail_ratio_products
extension_scan_batch = _impl.extension_scan_batch
assemble_cylinders = _impl.assemble_cylinders


def supports_packing(m: int, k: int, n: int) -> bool:
    """True when base-m window codes fused with window indexes fit in int64."""
    return (m ** k) * (n - k + 2) < 2 ** 62
