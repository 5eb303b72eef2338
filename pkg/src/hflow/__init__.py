"""Convex analysis and gradient flows on Hadamard spaces."""

from . import errors, flows, functionals, geometry, harness, mosco, prox, varying, weak
from .errors import (
    CertificationFailure,
    DomainError,
    HflowError,
    InvalidInput,
    SolverFailure,
    UnsupportedVariant,
)

__version__ = "0.1.0"

__all__ = [
    "CertificationFailure",
    "DomainError",
    "HflowError",
    "InvalidInput",
    "SolverFailure",
    "UnsupportedVariant",
    "errors",
    "flows",
    "functionals",
    "geometry",
    "harness",
    "mosco",
    "prox",
    "varying",
    "weak",
]
