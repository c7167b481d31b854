"""maglab: numerical laboratory for magnetic-field averaging, magnetic
Laplacian spectra and Ginzburg-Landau energies on planar domains."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .fields import Cell, Domain, ScalarField, VectorField

__version__ = "0.1.0"

__all__ = ["Cell", "Domain", "ScalarField", "VectorField", "KERNEL_BACKEND",
           "__version__"]
