"""Max-flow kernel selection.

The compiled push-relabel is used when the extension was built; setting
``VPCA_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

import os

from . import _maxflow_py

python_push_relabel = _maxflow_py.push_relabel

try:
    from ._maxflow import push_relabel as compiled_push_relabel
except ImportError:  # extension not built
    compiled_push_relabel = None

if compiled_push_relabel is not None and os.environ.get("VPCA_PURE_PYTHON", "") in ("", "0"):
    push_relabel = compiled_push_relabel
    BACKEND = "compiled"
else:
    push_relabel = python_push_relabel
    BACKEND = "python"
