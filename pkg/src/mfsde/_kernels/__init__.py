"""Hot pairwise-reduction kernels with backend selection at import.

The compiled Cython extension is preferred; the numpy fallback is picked
when the extension is unavailable or when the environment variable
``MFSDE_NO_EXT`` is set to a non-empty value.  Both backends implement
the same signatures and agree to floating-point roundoff (accumulation
order differs, so the last bits may not match across backends; results
are bit-reproducible within a backend).
"""

import os

from . import _fallback

if os.environ.get("MFSDE_NO_EXT"):
    _impl = _fallback
    HAVE_COMPILED = False
else:
    try:
        from . import _pairwise as _impl

        HAVE_COMPILED = True
    except ImportError:
        _impl = _fallback
        HAVE_COMPILED = False


def backend_name():
    return "compiled" if HAVE_COMPILED and _impl is not _fallback else "fallback"


def sin_product_mean(x, y, w, scale=1.0):
    """For every x_i: sum_j w_j * sin(scale * x_i * y_j)."""
    return _impl.sin_product_mean(x, y, w, scale)


def fallback_sin_product_mean(x, y, w, scale=1.0):
    """Always-numpy variant, used by equivalence tests and benchmarks."""
    return _fallback.sin_product_mean(x, y, w, scale)
