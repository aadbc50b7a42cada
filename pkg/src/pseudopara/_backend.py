"""Pick the compiled kernel module when it is importable."""
import os

if os.environ.get("PSEUDOPARA_PURE_PYTHON"):
    from . import _core_py as core
else:
    try:
        from . import _core as core
    except ImportError:  # extension not built
        from . import _core_py as core

BACKEND = "python" if core.__name__.endswith("_core_py") else "cython"
