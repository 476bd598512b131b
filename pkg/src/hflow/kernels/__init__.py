"""Hot per-node kernels with a numba backend and a pure-numpy fallback.

Backend selection, checked once at import:
  * ``HFLOW_KERNELS=numpy``  force the numpy fallback,
  * ``HFLOW_KERNELS=numba``  require numba (raise if unavailable),
  * unset                    use numba when it imports, else numpy.

``benchmarks/bench_kernels.py`` compares the two on representative loads.
"""

import os

from . import _numpy

_choice = os.environ.get("HFLOW_KERNELS", "").strip().lower()

if _choice == "numpy":
    _impl = _numpy
elif _choice == "numba":
    from . import _numba as _impl
else:
    try:
        from . import _numba as _impl
    except ImportError:  # pragma: no cover - depends on environment
        _impl = _numpy

MINKOWSKI = _numpy.MINKOWSKI
SCHWARZSCHILD_STANDARD = _numpy.SCHWARZSCHILD_STANDARD
SCHWARZSCHILD_ISOTROPIC = _numpy.SCHWARZSCHILD_ISOTROPIC
DE_SITTER_STATIC = _numpy.DE_SITTER_STATIC

metric_batch = _impl.metric_batch
dmetric_batch = _impl.dmetric_batch
christoffel_batch = _impl.christoffel_batch
extrinsic_core = _impl.extrinsic_core


def backend_name():
    return "numba" if _impl.__name__.endswith("_numba") else "numpy"
