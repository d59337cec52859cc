"""Pointwise numerical kernels with a compiled core and a numpy fallback.

The Cython extension ``_ckernels`` is used when it has been built; otherwise
(or when ``FRAC_NLS_KERNELS=python`` is set) the numpy implementations in
``_pykernels`` are used.  Both expose the same functions.
"""
import os

from . import _pykernels as python

NAMES = (
    "nonlinear_coefficients",
    "nonlinear_phase_step",
    "power_sums",
    "gagliardo_double_sum_1d",
)

try:
    from . import _ckernels as compiled
except ImportError:  # extension not built
    compiled = None

if compiled is not None and os.environ.get("FRAC_NLS_KERNELS", "").lower() != "python":
    BACKEND = "cython"
    _impl = compiled
else:
    BACKEND = "python"
    _impl = python

nonlinear_coefficients = _impl.nonlinear_coefficients
nonlinear_phase_step = _impl.nonlinear_phase_step
power_sums = _impl.power_sums
gagliardo_double_sum_1d = _impl.gagliardo_double_sum_1d


def backends():
    """Mapping of available backend name to module."""
    out = {"python": python}
    if compiled is not None:
        out["cython"] = compiled
    return out
