"""Disguised secure 2-/3-party matrix protocols with randomized result checks."""

from .errors import (
                     DegenerateMatrixError,
                     MetricError,
                     NonFiniteError,
                     S3PCError,
                     ShapeError,
                     SingularMatrixError,
                     TransportError,
                     UnknownSessionError,
                     UnsupportedDimensionsError,
                     WireFormatError,
)
from .matrix import DynamicRange, make_rng
from .protocols import Engine, Fault, SessionResult, VerifyConfig
from .roles import ProtocolId, Role
from .transport import InProcNetwork, TcpNetwork

__version__ = "0.1.0"

__all__ = [
    "DegenerateMatrixError", "DynamicRange", "Engine", "Fault", "InProcNetwork", "MetricError",
    "NonFiniteError", "ProtocolId", "Role", "S3PCError", "SessionResult", "ShapeError",
    "SingularMatrixError", "TcpNetwork", "TransportError", "UnknownSessionError",
    "UnsupportedDimensionsError", "VerifyConfig", "WireFormatError", "make_rng",
]
