"""dwlab: spectral laboratory for damped wave equations on the torus and on radial R^3."""
from . import exponents, fields, propagator, radial, nldw, odi

__version__ = "0.1.0"

__all__ = ["exponents", "fields", "propagator", "radial", "nldw", "odi", "__version__"]
