"""Exception hierarchy.

Every error carries a short ``tag`` so that sweeps and the CLI can record
failures as data instead of aborting.
"""

from __future__ import annotations


class TangleError(Exception):
    tag = "Error"

    def to_dict(self) -> dict:
        return {"error": self.tag, "message": str(self)}


class ConfigError(TangleError, ValueError):
    tag = "ConfigError"


class PoleProximity(TangleError):
    tag = "PoleProximity"


class NonPositive(TangleError):
    tag = "NonPositive"


class SingularInterval(TangleError):
    tag = "SingularInterval"


class OutOfNeighbourhood(TangleError):
    tag = "OutOfNeighbourhood"


class Escaped(TangleError):
    """Orbit left the working chart of the local map."""

    tag = "Escaped"

    def __init__(self, at_step: int, message: str | None = None):
        self.at_step = at_step
        super().__init__(message or f"orbit left the chart at step {at_step}")

    def to_dict(self) -> dict:
        return {**super().to_dict(), "at_step": self.at_step}


class MissedWindow(TangleError):
    tag = "MissedWindow"


class NoConvergence(TangleError):
    tag = "NoConvergence"


class NoSaddle(TangleError):
    tag = "NoSaddle"


class BracketFailure(TangleError):
    tag = "BracketFailure"


class OnBoundary(TangleError):
    tag = "OnBoundary"


class SeedFailure(TangleError):
    tag = "SeedFailure"


class OutsideRD(TangleError):
    tag = "OutsideRD"


class DLSRegion(TangleError):
    """Sample lies where the rescaled limit is invalid; tracing skips it."""

    tag = "DLS_Region"
