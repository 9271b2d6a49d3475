"""Backend selection for the vector-field kernels.

The compiled extension is used when it imports; set ``CURVED_RNBP_PURE=1``
to force the pure-Python implementation.
"""

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

_impl = _kernels_py
if os.environ.get("CURVED_RNBP_PURE", "").strip() not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError as exc:  # pragma: no cover - depends on build
        log.debug("compiled kernels unavailable (%s); using pure Python", exc)
        _impl = _kernels_py

System = _impl.System
nbody_deriv = _impl.nbody_deriv
BACKEND = _impl.BACKEND

IDENTITY = _kernels_py.IDENTITY
LOCAL = _kernels_py.LOCAL
GLOBAL = _kernels_py.GLOBAL
EPS_SING = _kernels_py.EPS_SING
W_MIN = _kernels_py.W_MIN

BACKENDS = {"python": _kernels_py}
try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover
    pass
else:
    BACKENDS["cython"] = _compiled
