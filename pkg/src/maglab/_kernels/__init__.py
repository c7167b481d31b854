"""Covariant lattice kernels: compiled core with a pure-numpy fallback.

The hot loops of every minimizer in this package reduce to evaluating the
gauge-covariant kinetic energy

    E = sum_x-edges wx |px * u_east - u|^2  +  sum_y-edges wy |py * u_north - u|^2

and its Wirtinger gradient dE/d(conj u) on a rectangular grid.  A Cython
implementation is used when the compiled extension is available; otherwise a
vectorized numpy fallback with identical semantics is selected at import.
"""

from . import _numpy as _np_impl

try:
    from . import _core as _impl

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    _impl = _np_impl
    BACKEND = "numpy"

kinetic_energy = _impl.kinetic_energy
kinetic_energy_grad = _impl.kinetic_energy_grad
bilinear_interp = getattr(_impl, "bilinear_interp", _np_impl.bilinear_interp)

# always importable by name, for tests and benchmarks
numpy_backend = _np_impl

__all__ = ["BACKEND", "kinetic_energy", "kinetic_energy_grad",
           "bilinear_interp", "numpy_backend"]
