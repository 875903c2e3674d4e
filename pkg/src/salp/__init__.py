"""salp: exact semi-algebraic analysis and parallelization of polynomial loop nests."""

from .errors import (
    BudgetExceeded,
    IntegerValidityFailed,
    NoScheduleError,
    ParseError,
    PrecisionExhausted,
    SalpError,
    StructureError,
    TransformFailed,
)

__all__ = [
    "BudgetExceeded",
    "IntegerValidityFailed",
    "NoScheduleError",
    "ParseError",
    "PrecisionExhausted",
    "SalpError",
    "StructureError",
    "TransformFailed",
]

__version__ = "0.1.0"
