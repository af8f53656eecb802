"""Backend selection for the numerical kernels.

The compiled extension is used when importable.  Setting the environment
variable ``CAVITRAP_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("CAVITRAP_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

hermite_table = _active.hermite_table
gh_overlap = _active.gh_overlap
stack_matrices = _active.stack_matrices

__all__ = ["BACKEND", "hermite_table", "gh_overlap", "stack_matrices",
           "python_backend", "compiled_backend"]
