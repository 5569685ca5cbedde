"""Kernel backend selection.

The compiled extension ``rwlab._core`` is used when it imports; otherwise the
numpy fallback in ``rwlab._core_py`` is used.  Setting ``RWLAB_PURE=1`` forces
the fallback.
"""

import os

from . import _core_py

BACKEND = "python"
core = _core_py

if os.environ.get("RWLAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core as core  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        core = _core_py

cell_weights = core.cell_weights
stieltjes_matrix = core.stieltjes_matrix
stieltjes_apply = core.stieltjes_apply
series_horner = core.series_horner
