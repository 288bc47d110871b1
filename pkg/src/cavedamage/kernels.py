"""Backend selection for the element kernels.

The compiled extension is used when it was built and importable; setting
``CAVEDAMAGE_PURE_PYTHON=1`` forces the numpy backend.
"""

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

_NAMES = ("element_strains", "scatter_add", "bulk_value_grad", "bulk_curvature", "bulk_hessp", "bulk_difference")


def _load_compiled():
    if os.environ.get("CAVEDAMAGE_PURE_PYTHON", "").strip() not in ("", "0"):
        return None
    try:
        from . import _ckernels
    except ImportError as exc:  # extension not built
        log.debug("compiled kernels unavailable: %s", exc)
        return None
    return _ckernels


compiled = _load_compiled()
BACKEND = "cython" if compiled is not None else "numpy"
_impl = compiled if compiled is not None else _kernels_py

element_strains = _impl.element_strains
scatter_add = _impl.scatter_add
bulk_value_grad = _impl.bulk_value_grad
bulk_curvature = _impl.bulk_curvature
bulk_hessp = _impl.bulk_hessp
bulk_difference = _impl.bulk_difference


def backends() -> dict:
    """Every importable backend by name, for cross-checks and benchmarks."""
    out = {"numpy": _kernels_py}
    if compiled is not None:
        out["cython"] = compiled
    else:
        try:
            from . import _ckernels

            out["cython"] = _ckernels
        except ImportError:
            pass
    return out
