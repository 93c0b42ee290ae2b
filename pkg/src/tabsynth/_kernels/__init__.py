"""Hot kernels with a compiled backend and a numpy fallback.

The compiled module is used when it was built and ``TABSYNTH_PURE_PYTHON``
is unset; otherwise the numpy implementations are loaded.
"""
import os

from . import _pykernels

if os.environ.get("TABSYNTH_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

sq_dists = _impl.sq_dists
contingency = _impl.contingency
kth_neighbor_sq = _impl.kth_neighbor_sq
nearest_sq = _impl.nearest_sq
prdc_counts = _impl.prdc_counts
rbf_sum = _impl.rbf_sum
concordance_counts = _impl.concordance_counts
sample_categorical = _impl.sample_categorical

__all__ = [
    "BACKEND", "concordance_counts", "contingency", "kth_neighbor_sq", "nearest_sq", "prdc_counts",
    "rbf_sum", "sample_categorical", "sq_dists",
]
