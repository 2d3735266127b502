"""Backend selection for the run labeling kernel.

The compiled Cython kernel is preferred; the pure NumPy/Python fallback is
used when the extension is unavailable or when ``LFTAG_FORCE_PURE=1`` is set
(useful for benchmarking and debugging). Both expose an identical
``label_runs`` and produce bit-identical output.
"""

from __future__ import annotations

import os

from . import _runlabel_py

if os.environ.get("LFTAG_FORCE_PURE") == "1":
    _backend = _runlabel_py
    COMPILED = False
else:
    try:
        from . import _runlabel_cy as _backend  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:
        _backend = _runlabel_py
        COMPILED = False

label_runs = _backend.label_runs
label_runs_pure = _runlabel_py.label_runs

__all__ = ["label_runs", "label_runs_pure", "COMPILED"]
