"""Hot kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it was built and importable; setting
``CLRUIN_PURE_PYTHON=1`` forces the fallback.  ``BACKEND`` names the
active choice.
"""

import os

from . import _py

if os.environ.get("CLRUIN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _py
else:
    try:
        from . import _c as _impl
    except ImportError:  # extension not built
        _impl = _py

BACKEND = "cython" if _impl is not _py else "python"

volterra_march = _impl.volterra_march
panjer_geometric = _impl.panjer_geometric
simulate_paths = _impl.simulate_paths

KIND_EXPONENTIAL = _py.KIND_EXPONENTIAL
KIND_GAMMA2 = _py.KIND_GAMMA2
KIND_DISCRETE = _py.KIND_DISCRETE


def backends():
    """Mapping of every importable backend name to its module."""
    found = {"python": _py}
    try:
        from . import _c

        found["cython"] = _c
    except ImportError:
        pass
    return found
