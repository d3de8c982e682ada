"""Executable constructions for Lipschitz-free spaces over metric graphs."""

from .errors import DomainError, LipfreeError, PreconditionError, VerificationError
from .metric_graph import TOL, GraphPath, GraphPoint, MetricGraph

__version__ = "0.1.0"

__all__ = [
    "TOL",
    "DomainError",
    "GraphPath",
    "GraphPoint",
    "LipfreeError",
    "MetricGraph",
    "PreconditionError",
    "VerificationError",
]
