"""Pick the compiled kernels when available, else the NumPy fallback.

Set ``IWNYSTROM_PURE_PYTHON=1`` before import to force the fallback.
"""
import os

from . import _pure

if os.environ.get("IWNYSTROM_PURE_PYTHON"):
    _impl = _pure
else:
    try:
        from . import _core as _impl
    except ImportError:  # extension not built
        _impl = _pure

NAME = "cython" if _impl is not _pure else "numpy"

rbf_gram = _impl.rbf_gram
rbf_predict = _impl.rbf_predict
