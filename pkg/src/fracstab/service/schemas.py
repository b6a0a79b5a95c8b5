"""Request and response models for the HTTP surface.

The request side is a single ScenarioConfig shared by all three
endpoints; which optional fields must be present depends on the command
and is enforced in the runner so rejection messages can name the field.
Model selection is a tagged union on "name".
"""

from __future__ import annotations

import math
from typing import Literal, Optional, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _require_finite(name: str, v: float) -> float:
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite")
    return v


class TodaLatticeModel(_StrictModel):
    """Open lattice with n particles; state dimension 2n - 1."""

    name: Literal["toda_lattice"]
    n: int = Field(ge=2)


class Toda2Model(_StrictModel):
    """Three-state reduced lattice; m selects the target equilibrium (0, m, 0)."""

    name: Literal["toda2"]
    k: float
    m: float = 0.0

    @field_validator("k")
    @classmethod
    def _k_nonzero(cls, v: float) -> float:
        _require_finite("k", v)
        if v == 0.0:
            raise ValueError("k must be nonzero")
        return v

    @field_validator("m")
    @classmethod
    def _m_finite(cls, v: float) -> float:
        return _require_finite("m", v)


class Toda2ControlledModel(_StrictModel):
    """Three-state lattice with the feedback loop (c1, c2, 0) closed at (0, m, 0)."""

    name: Literal["toda2_controlled"]
    k: float
    c1: float
    c2: float
    m: float = 0.0

    @field_validator("k")
    @classmethod
    def _k_nonzero(cls, v: float) -> float:
        _require_finite("k", v)
        if v == 0.0:
            raise ValueError("k must be nonzero")
        return v

    @field_validator("c1", "c2", "m")
    @classmethod
    def _finite(cls, v: float, info) -> float:
        return _require_finite(info.field_name, v)


class PolyTerm(_StrictModel):
    """One monomial: coef * prod_i x_i ** powers[i]."""

    coef: float
    powers: list[int]

    @field_validator("coef")
    @classmethod
    def _coef_finite(cls, v: float) -> float:
        return _require_finite("coef", v)

    @field_validator("powers")
    @classmethod
    def _powers_nonneg(cls, v: list[int]) -> list[int]:
        if any(p < 0 for p in v):
            raise ValueError("powers must be nonnegative integers")
        return v


class CustomPolynomialModel(_StrictModel):
    """Arbitrary polynomial field: components[i] lists the monomials of f_i."""

    name: Literal["custom_polynomial"]
    n: int = Field(ge=1, le=16)
    components: list[list[PolyTerm]]

    @model_validator(mode="after")
    def _shapes(self) -> "CustomPolynomialModel":
        if len(self.components) != self.n:
            raise ValueError(
                f"components must list {self.n} equations, got {len(self.components)}"
            )
        for i, terms in enumerate(self.components):
            for t in terms:
                if len(t.powers) != self.n:
                    raise ValueError(
                        f"components[{i}]: powers must have length {self.n}"
                    )
        return self


ModelSpec = Union[TodaLatticeModel, Toda2Model, Toda2ControlledModel, CustomPolynomialModel]


class AxisSpec(_StrictModel):
    """Inclusive arithmetic progression min, min+step, ..., up to max."""

    min: float
    max: float
    step: float = Field(gt=0)

    @model_validator(mode="after")
    def _ordered(self) -> "AxisSpec":
        for name, v in (("min", self.min), ("max", self.max), ("step", self.step)):
            _require_finite(name, v)
        if self.max < self.min:
            raise ValueError("max must be >= min")
        return self

    def values(self) -> tuple[float, ...]:
        count = int(math.floor((self.max - self.min) / self.step + 1e-9)) + 1
        return tuple(self.min + i * self.step for i in range(count))


class SweepGrid(_StrictModel):
    """Gain grid over the first two state coordinates."""

    c1: AxisSpec
    c2: AxisSpec


class ScenarioConfig(_StrictModel):
    """One scenario: a model plus whatever the chosen command needs.

    simulate needs x0, h, t_end; stability needs an equilibrium source
    (seeds, or a Toda-family model whose m picks it); sweep needs the
    sweep grid.  gains closes a feedback loop around the resolved
    equilibrium before simulate/stability run (not valid with the
    toda2_controlled model, which carries its own gains).
    """

    model: ModelSpec = Field(discriminator="name")
    q: float = Field(gt=0.0, le=1.0)
    x0: Optional[list[float]] = None
    h: Optional[float] = Field(default=None, gt=0)
    t_end: Optional[float] = Field(default=None, gt=0)
    seeds: Optional[list[list[float]]] = None
    gains: Optional[list[float]] = None
    sweep: Optional[SweepGrid] = None
    blowup_guard: float = Field(default=1e8, gt=0)
    corrector_iterations: int = Field(default=1, ge=1)
    trajectory_csv: str = "trajectory.csv"
    report_json: str = "report.json"
    report_txt: str = "report.txt"
    sweep_csv: str = "sweep.csv"

    @field_validator("q", "h", "t_end", "blowup_guard")
    @classmethod
    def _finite(cls, v, info):
        if v is not None:
            _require_finite(info.field_name, v)
        return v

    @field_validator("x0", "gains")
    @classmethod
    def _finite_vector(cls, v, info):
        if v is not None and any(not math.isfinite(x) for x in v):
            raise ValueError(f"{info.field_name} entries must be finite")
        return v

    @field_validator("seeds")
    @classmethod
    def _finite_seeds(cls, v):
        if v is not None:
            if not v:
                raise ValueError("seeds must be non-empty when given")
            for i, s in enumerate(v):
                if any(not math.isfinite(x) for x in s):
                    raise ValueError(f"seeds[{i}] entries must be finite")
        return v


class SimulateResponse(BaseModel):
    """Trajectory run outcome plus the rendered CSV text."""

    status: Literal["completed", "diverged"]
    n_steps: int
    final_time: float
    final_state: list[float]
    csv: str


class StabilityResponse(BaseModel):
    """Spectrum report for the resolved equilibrium."""

    equilibrium: list[float]
    residual: float
    q: float
    eigenvalues: list[list[float]]
    args_abs: list[float]
    critical_order: float
    verdict: str
    report_text: str


class SweepResponse(BaseModel):
    """Gain-grid classification outcome plus the rendered CSV text."""

    n_points: int
    stabilizing_count: int
    csv: str
