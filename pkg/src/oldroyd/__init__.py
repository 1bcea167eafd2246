"""Pseudo-spectral Oldroyd-B solver on the periodic torus."""

from .grid import GridSpec
from .fields import (
    ScalarField,
    VectorField,
    TensorField,
    SymTensorField,
    SpectralCoeffs,
)
from .leray import PhysicalParams, derive_alpha
from .kernels import BACKEND_NAME, COMPILED

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "ScalarField",
    "VectorField",
    "TensorField",
    "SymTensorField",
    "SpectralCoeffs",
    "PhysicalParams",
    "derive_alpha",
    "BACKEND_NAME",
    "COMPILED",
    "__version__",
]
