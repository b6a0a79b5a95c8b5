"""HTTP application exposing the three scenario commands."""

from __future__ import annotations

from fastapi import FastAPI

from .. import __version__
from .runner import run_simulate, run_stability, run_sweep
from .schemas import ScenarioConfig, SimulateResponse, StabilityResponse, SweepResponse

app = FastAPI(
    title="fracstab",
    version=__version__,
    description=(
        "Stability analysis and feedback synthesis for fractional-order "
        "systems: trajectory simulation, equilibrium spectrum reports, "
        "and gain-grid sweeps."
    ),
)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/simulate", response_model=SimulateResponse)
def simulate(config: ScenarioConfig) -> SimulateResponse:
    return run_simulate(config)


@app.post("/stability", response_model=StabilityResponse)
def stability(config: ScenarioConfig) -> StabilityResponse:
    return run_stability(config)


@app.post("/sweep", response_model=SweepResponse)
def sweep(config: ScenarioConfig) -> SweepResponse:
    return run_sweep(config)
