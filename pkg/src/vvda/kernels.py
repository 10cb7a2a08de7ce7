"""Kernel backend selection.

The compiled extension is preferred when built; the numpy fallback is
mathematically identical.  Set VVDA_KERNELS=python or =compiled to force
a backend (``compiled`` raises if the extension is missing).
"""

import os

from . import _kernels_np
from .errors import UnsupportedConfiguration

_requested = os.environ.get("VVDA_KERNELS", "auto").lower()

_compiled = None
if _requested in ("auto", "compiled"):
    try:
        from . import _speedups as _compiled
    except ImportError:
        _compiled = None

if _requested == "compiled" and _compiled is None:
    raise UnsupportedConfiguration(
        "VVDA_KERNELS=compiled but the vvda._speedups extension is not built")

if _requested == "python" or _compiled is None:
    backend_name = "python"
    _impl = _kernels_np
else:
    backend_name = "compiled"
    _impl = _compiled

weighted_mass_local = _impl.weighted_mass_local
convection_local = _impl.convection_local
scatter_add = _impl.scatter_add


def get_backends():
    """Return {name: module} of the available kernel implementations."""
    out = {"python": _kernels_np}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out
