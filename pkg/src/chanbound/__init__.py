"""Resource monotones of quantum channels and states, and distillation bounds."""

from . import bounds, channels, comm, conic, figures, measures, qla, stab, theories
from .channels import Channel
from .config import DEFAULT, Tolerances
from .errors import DimensionError, DomainError, NumericalError, SolverError, UnsupportedError
from .measures import INFINITE, free_fidelity, robustness, weight
from .qla import DensityOperator

__version__ = "0.1.0"

__all__ = [
    "bounds",
    "channels",
    "comm",
    "conic",
    "figures",
    "measures",
    "qla",
    "stab",
    "theories",
    "Channel",
    "DensityOperator",
    "DEFAULT",
    "Tolerances",
    "INFINITE",
    "robustness",
    "weight",
    "free_fidelity",
    "DimensionError",
    "DomainError",
    "NumericalError",
    "SolverError",
    "UnsupportedError",
]
