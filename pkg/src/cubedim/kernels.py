"""Kernel backend selection.

Prefers the compiled extension (``cubedim._kernels``, built from Cython)
and falls back to the pure NumPy reference implementation. Set
``CUBEDIM_PURE=1`` to force the fallback; ``cubedim.kernels.BACKEND``
reports which one is active. Both backends are importable side by side
(``impl_pure`` / ``impl_compiled``) so benchmarks and tests can compare them.
"""

from __future__ import annotations

import os

from . import _reference as impl_pure

impl_compiled = None
if os.environ.get("CUBEDIM_PURE", "0") != "1":
    try:
        from . import _kernels as impl_compiled  # type: ignore[attr-defined]
    except ImportError:
        impl_compiled = None

_active = impl_compiled if impl_compiled is not None else impl_pure

BACKEND = "compiled" if impl_compiled is not None else "pure"

pairwise_distances = _active.pairwise_distances
greedy_net_coords = _active.greedy_net_coords
greedy_net_matrix = _active.greedy_net_matrix
nearest_center_coords = _active.nearest_center_coords
nearest_center_matrix = _active.nearest_center_matrix
