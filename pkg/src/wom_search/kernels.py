"""Kernel backend selection.

The compiled extension is used when it imports; set ``WOM_PURE_PYTHON=1`` to
force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("WOM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

sample_friends = _impl.sample_friends
friend_quote_mask = _impl.friend_quote_mask

__all__ = ["BACKEND", "sample_friends", "friend_quote_mask"]
