"""latscat: transmission determinants, Jost asymptotics and entropy scans
for discrete Schrodinger operators on the lattice."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .lattice import Potential

__all__ = ["BACKEND", "Potential", "__version__"]
