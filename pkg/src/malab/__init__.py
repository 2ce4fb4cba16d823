"""Numerical laboratory for uniform estimates of complex Monge-Ampere equations."""

from ._kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
