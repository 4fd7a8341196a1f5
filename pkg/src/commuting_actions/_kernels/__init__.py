"""Hot kernels of the path solver: compiled core with a pure-Python fallback.

The compiled extension is used when it was built; setting
``COMMUTING_ACTIONS_KERNELS=python`` in the environment forces the
fallback (used by the benchmark).
"""

from __future__ import annotations

import os

from . import _fallback

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

if _core is not None and os.environ.get("COMMUTING_ACTIONS_KERNELS", "").lower() != "python":
    BACKEND = "compiled"
    assemble_path_system = _core.assemble_path_system
    solve_block_tridiagonal = _core.solve_block_tridiagonal
else:
    BACKEND = "python"
    assemble_path_system = _fallback.assemble_path_system
    solve_block_tridiagonal = _fallback.solve_block_tridiagonal

__all__ = ["BACKEND", "assemble_path_system", "solve_block_tridiagonal"]
