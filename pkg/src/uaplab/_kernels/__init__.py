"""Kernel backend selection.

The compiled Cython extension is preferred when present; the pure-numpy
module is the reference fallback.  Set ``UAPLAB_PURE=1`` to force the
fallback (used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os

from . import pure

if os.environ.get("UAPLAB_PURE"):
    _impl = pure
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = pure

BACKEND = _impl.BACKEND_NAME

act_eval = _impl.act_eval
act_deriv = _impl.act_deriv
act_invert = _impl.act_invert
s_iter = _impl.s_iter
s_inv_iter = _impl.s_inv_iter
tree_eval = _impl.tree_eval

KIND_AFFINE = pure.KIND_AFFINE
KIND_POWER = pure.KIND_POWER
