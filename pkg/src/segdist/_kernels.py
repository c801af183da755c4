"""Backend selection for the EDT kernel.

The compiled extension is used when importable; setting
``SEGDIST_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

import numpy as np

from . import _edt_py

try:
    if os.environ.get("SEGDIST_PURE_PYTHON") == "1":
        raise ImportError("pure-Python backend requested")
    from . import _edt_core
except ImportError:
    _edt_core = None

BACKENDS = {"python": _edt_py.edt_lines}
if _edt_core is not None:
    BACKENDS["compiled"] = _edt_core.edt_lines

BACKEND = "compiled" if "compiled" in BACKENDS else "python"


def squared_edt(source, spacing, backend=None):
    """Squared Euclidean distance (mm^2) from every element centre to the nearest source.

    Axes are processed in order 0, 1, 2 so a result is the left-to-right sum of
    per-axis squared offsets. Returns an all-inf array for an empty source.
    """
    source = np.asarray(source, dtype=bool)
    edt_lines = BACKENDS[backend or BACKEND]
    f = np.where(source, 0.0, np.inf)
    if not source.any():
        return f
    for axis, s in enumerate(spacing):
        moved = np.moveaxis(f, axis, -1)
        lines = np.ascontiguousarray(moved).reshape(-1, moved.shape[-1])
        edt_lines(lines, float(s))
        f = np.moveaxis(lines.reshape(moved.shape), -1, axis)
    return np.ascontiguousarray(f)
