"""HTTP service wrapping the core library."""

from .app import app
from .schemas import (
    ScenarioConfig,
    SimulateResponse,
    StabilityResponse,
    SweepResponse,
)

__all__ = [
    "app",
    "ScenarioConfig",
    "SimulateResponse",
    "StabilityResponse",
    "SweepResponse",
]
