"""Party programs for every protocol and the session engine that runs them."""

from .context import (
    AppliedFault,
    Fault,
    Share,
    Verdict,
    VerifyConfig,
    residual_check,
    verify_shares,
)
from .engine import Engine, SessionResult

__all__ = [
    "AppliedFault", "Engine", "Fault", "SessionResult", "Share", "Verdict", "VerifyConfig",
    "residual_check", "verify_shares",
]
