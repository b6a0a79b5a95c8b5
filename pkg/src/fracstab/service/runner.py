"""Executes validated scenario configs against the core library.

All domain rejections raise HTTPException(422) with a message naming the
offending field; a stability/sweep request whose seeds yield no
equilibrium raises 409 so clients can distinguish "bad config" from
"nothing found".  CSV text is rendered here, on the service side, so
byte-level determinism has a single owner.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from fastapi import HTTPException

from ..control import GainGrid, gain_sweep, make_controlled
from ..integrator import IntegrationConfig, Trajectory, integrate
from ..stability import StabilityReport, Verdict, analyze, find_equilibria
from ..systems import (
    ControlGains,
    EquilibriumState,
    FractionalSystem,
    make_system,
    toda2_controlled,
    toda_lattice,
)
from .schemas import (
    CustomPolynomialModel,
    ScenarioConfig,
    SimulateResponse,
    StabilityResponse,
    SweepResponse,
    Toda2ControlledModel,
    Toda2Model,
    TodaLatticeModel,
)


def _fail(message: str) -> HTTPException:
    return HTTPException(status_code=422, detail=message)


def _fmt(v: float) -> str:
    # 17 significant digits: round-trips every double exactly
    return f"{v:.16e}"


def _poly_callables(n: int, components):
    terms = [
        [(t.coef, tuple(t.powers)) for t in eq_terms] for eq_terms in components
    ]

    def f(x: np.ndarray) -> np.ndarray:
        out = np.zeros(n)
        for i, eq in enumerate(terms):
            acc = 0.0
            for coef, powers in eq:
                v = coef
                for xv, p in zip(x, powers):
                    if p:
                        v *= xv**p
                acc += v
            out[i] = acc
        return out

    def jac(x: np.ndarray) -> np.ndarray:
        J = np.zeros((n, n))
        for i, eq in enumerate(terms):
            for coef, powers in eq:
                for j, pj in enumerate(powers):
                    if pj == 0:
                        continue
                    v = coef * pj
                    for l, pl in enumerate(powers):
                        e = pl - 1 if l == j else pl
                        if e:
                            v *= x[l] ** e
                    J[i, j] += v
        return J

    return f, jac


def build_base_system(config: ScenarioConfig) -> FractionalSystem:
    """The model's flow before any top-level gains are applied."""
    model = config.model
    if isinstance(model, TodaLatticeModel):
        return toda_lattice(model.n)
    if isinstance(model, (Toda2Model, Toda2ControlledModel)):
        return toda2_controlled(model.k)
    if isinstance(model, CustomPolynomialModel):
        f, jac = _poly_callables(model.n, model.components)
        return make_system(model.n, f, jac)
    raise _fail(f"model: unsupported model {model!r}")


def _family_equilibrium(model, system: FractionalSystem) -> Optional[EquilibriumState]:
    if isinstance(model, (Toda2Model, Toda2ControlledModel)):
        x = np.array([0.0, model.m, 0.0])
        return EquilibriumState(x=x, residual=float(np.linalg.norm(system.f(x))))
    return None


def resolve_equilibrium(
    config: ScenarioConfig, system: FractionalSystem
) -> EquilibriumState:
    """Equilibrium from seeds when given, else the model's built-in family."""
    if config.seeds is not None:
        for i, s in enumerate(config.seeds):
            if len(s) != system.n:
                raise _fail(f"seeds[{i}]: expected length {system.n}, got {len(s)}")
        found = find_equilibria(system, config.seeds)
        if not found:
            raise HTTPException(
                status_code=409, detail="no equilibrium found from the provided seeds"
            )
        return found[0]
    x_e = _family_equilibrium(config.model, system)
    if x_e is None:
        raise _fail(
            "seeds: required for this model (no built-in equilibrium family)"
        )
    return x_e


def _closed_loop(config: ScenarioConfig, system: FractionalSystem):
    """Apply model-level or top-level gains; returns (system, x_e or None)."""
    model = config.model
    if isinstance(model, Toda2ControlledModel):
        if config.gains is not None:
            raise _fail(
                "gains: not allowed with the toda2_controlled model, "
                "which already carries c1 and c2"
            )
        x_e = _family_equilibrium(model, system)
        gains = ControlGains(np.array([model.c1, model.c2, 0.0]))
        return make_controlled(system, x_e, gains).system, x_e
    if config.gains is not None:
        if len(config.gains) != system.n:
            raise _fail(
                f"gains: expected length {system.n}, got {len(config.gains)}"
            )
        x_e = resolve_equilibrium(config, system)
        gains = ControlGains(np.array(config.gains, dtype=float))
        return make_controlled(system, x_e, gains).system, x_e
    return system, None


def run_simulate(config: ScenarioConfig) -> SimulateResponse:
    if config.x0 is None:
        raise _fail("x0: required for simulate")
    if config.h is None:
        raise _fail("h: required for simulate")
    if config.t_end is None:
        raise _fail("t_end: required for simulate")
    base = build_base_system(config)
    system, _ = _closed_loop(config, base)
    if len(config.x0) != system.n:
        raise _fail(f"x0: expected length {system.n}, got {len(config.x0)}")
    try:
        run_cfg = IntegrationConfig(
            h=config.h,
            t_end=config.t_end,
            blowup_guard=config.blowup_guard,
            corrector_iterations=config.corrector_iterations,
        )
    except ValueError as e:
        raise _fail(str(e))
    traj = integrate(system, config.q, config.x0, run_cfg)
    return SimulateResponse(
        status="diverged" if traj.terminated_early else "completed",
        n_steps=len(traj.times) - 1,
        final_time=float(traj.times[-1]),
        final_state=[float(v) for v in traj.states[-1]],
        csv=_trajectory_csv(traj),
    )


def _trajectory_csv(traj: Trajectory) -> str:
    n = traj.states.shape[1]
    lines = ["t," + ",".join(f"x{i + 1}" for i in range(n))]
    for t, row in zip(traj.times, traj.states):
        lines.append(",".join([_fmt(float(t))] + [_fmt(float(v)) for v in row]))
    return "\n".join(lines) + "\n"


def run_stability(config: ScenarioConfig) -> StabilityResponse:
    base = build_base_system(config)
    system, loop_target = _closed_loop(config, base)
    if loop_target is None:
        x_e = resolve_equilibrium(config, system)
    elif isinstance(config.model, Toda2ControlledModel) and config.seeds is not None:
        # seeds may point at equilibria of the closed loop other than (0, m, 0)
        x_e = resolve_equilibrium(config, system)
    else:
        x_e = loop_target
    try:
        report = analyze(system, x_e, config.q)
    except (ValueError, ArithmeticError) as e:
        raise _fail(str(e))
    return _stability_response(config, x_e, report)


def _stability_response(
    config: ScenarioConfig, x_e: EquilibriumState, report: StabilityReport
) -> StabilityResponse:
    eig_pairs = [[z.real, z.imag] for z in report.eigenvalues]
    text_lines = [
        "stability report",
        f"model: {config.model.name}",
        f"q: {_fmt(config.q)}",
        "equilibrium: [" + ", ".join(_fmt(float(v)) for v in x_e.x) + "]",
        f"residual: {x_e.residual:.3e}",
        "eigenvalues (re, im, |arg|):",
    ]
    for z, a in zip(report.eigenvalues, report.args_abs):
        text_lines.append(f"  {_fmt(z.real)}  {_fmt(z.imag)}  {_fmt(a)}")
    text_lines.append(f"critical_order: {_fmt(report.critical_order)}")
    text_lines.append(f"verdict: {report.verdict.value}")
    return StabilityResponse(
        equilibrium=[float(v) for v in x_e.x],
        residual=float(x_e.residual),
        q=config.q,
        eigenvalues=eig_pairs,
        args_abs=list(report.args_abs),
        critical_order=report.critical_order,
        verdict=report.verdict.value,
        report_text="\n".join(text_lines) + "\n",
    )


def run_sweep(config: ScenarioConfig) -> SweepResponse:
    if config.sweep is None:
        raise _fail("sweep: required for sweep")
    if config.gains is not None:
        raise _fail("gains: not allowed for sweep (the grid supplies them)")
    base = build_base_system(config)
    model = config.model
    if isinstance(model, Toda2ControlledModel):
        raise _fail(
            "model: sweep expects an uncontrolled model (toda2, toda_lattice, "
            "or custom_polynomial); the grid supplies the gains"
        )
    if base.n < 2:
        raise _fail("model: sweep needs at least two state coordinates")
    x_e = resolve_equilibrium(config, base)
    v1 = config.sweep.c1.values()
    v2 = config.sweep.c2.values()
    grid = GainGrid(axes=((0, v1), (1, v2)))
    try:
        points = gain_sweep(base, x_e, config.q, grid)
    except (ValueError, ArithmeticError) as e:
        raise _fail(str(e))
    lines = ["c1,c2,verdict,q_tilde"]
    stabilizing = 0
    for p in points:
        stable = p.verdict is not Verdict.UNSTABLE
        stabilizing += stable
        lines.append(
            f"{_fmt(p.gains[0])},{_fmt(p.gains[1])},{p.verdict.value},{_fmt(p.critical_order)}"
        )
    return SweepResponse(
        n_points=len(points),
        stabilizing_count=stabilizing,
        csv="\n".join(lines) + "\n",
    )


