"""Two-scale P1 Galerkin solver for a distributed-microstructure reaction-diffusion system."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
