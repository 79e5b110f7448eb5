"""Hot-loop kernels with a compiled core and a pure-Python fallback.

The backend is selected once at import: the Cython extension
``odtomo._kernels._native`` if it was built, otherwise the reference
implementation in ``_pyref``. Setting the environment variable
``ODTOMO_PURE_PYTHON=1`` forces the fallback, which is what
``benchmarks/bench_kernels.py`` uses to compare the two.

Both backends expose the same three functions:

* ``subset_means(data)``            - empirical subset-product moments
* ``centered_product_stats(data, means)`` - row-product mean/variance
* ``poisson_fill(out, mean, state)``      - seeded Poisson draws

``poisson_fill`` is bit-identical across backends; the moment kernels
agree to floating-point reduction order.
"""

import os

from . import _pyref

if os.environ.get("ODTOMO_PURE_PYTHON"):
    _impl = _pyref
    BACKEND = "python"
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        _impl = _pyref
        BACKEND = "python"

subset_means = _impl.subset_means
centered_product_stats = _impl.centered_product_stats
poisson_fill = _impl.poisson_fill

__all__ = [
    "BACKEND",
    "subset_means",
    "centered_product_stats",
    "poisson_fill",
]
