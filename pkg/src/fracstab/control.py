"""Linear state feedback around an equilibrium and the synthesis helpers.

The control recipe is: pick a target equilibrium x_e, add the feedback
u(x) = c * (x - x_e) componentwise, and choose c so that the controlled
Jacobian J(x_e) + diag(c) passes the argument test.  Everything here is
a thin layer over the stability module; the only model-specific piece is
the closed-form classifier for the three-state lattice, whose controlled
spectrum at (0, m, 0) is {c1 - m, c2, -k} and therefore admits an exact
parameter-space answer: stabilizable iff k > 0, c2 < 0 and m > c1.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .integrator import IntegrationConfig, Trajectory, integrate
from .stability import Verdict, eigenvalues, jacobian, matignon_classify
from .systems import (
    ControlGains,
    EquilibriumState,
    FractionalSystem,
    OrderLike,
    as_order,
    make_system,
)


@dataclass(frozen=True)
class ControlledSystem:
    """A base flow with linear feedback closed around a target equilibrium.

    system is the closed-loop flow g(x) = f(x) + c * (x - x_e); it shares
    the equilibrium x_e with the base flow by construction.
    """

    base: FractionalSystem
    x_e: EquilibriumState
    gains: ControlGains
    system: FractionalSystem


def make_controlled(
    system: FractionalSystem,
    x_e: EquilibriumState,
    gains: ControlGains,
) -> ControlledSystem:
    """Close the feedback loop g(x) = f(x) + c * (x - x_e) around x_e.

    x_e must actually be an equilibrium of the base flow (residual below
    1e-10, recomputed here); the feedback vanishes at x_e, so the closed
    loop inherits it.  The closed-loop Jacobian is J_f(x) + diag(c).
    """
    if len(gains) != system.n:
        raise ValueError(f"got {len(gains)} gains for an n={system.n} system")
    residual = float(np.linalg.norm(system.f(x_e.x)))
    if not residual < 1e-10:
        raise ValueError(
            f"x_e is not a certified equilibrium: ||f(x_e)|| = {residual:.3e} >= 1e-10"
        )
    c = gains.c
    target = np.array(x_e.x, dtype=float)
    base_f = system.f
    base_jac = system.jac

    def g(x: np.ndarray) -> np.ndarray:
        return base_f(x) + c * (x - target)

    jac_g = None
    if base_jac is not None:
        diag_c = np.diag(c)

        def jac_g(x: np.ndarray) -> np.ndarray:
            return base_jac(x) + diag_c

    params = dict(system.params)
    params.update({f"c{i + 1}": float(ci) for i, ci in enumerate(c)})
    closed = make_system(system.n, g, jac_g, params=params)
    return ControlledSystem(base=system, x_e=x_e, gains=gains, system=closed)


def toda2_prop41_classify(
    k: float, c1: float, c2: float, m: float
) -> tuple[Verdict, tuple[float, float, float]]:
    """Closed-form verdict for the controlled three-state lattice at (0, m, 0).

    The controlled Jacobian there is diag-like with spectrum
    {c1 - m, c2, -k}; all three are real, so the verdict holds for every
    order in (0, 1): asymptotically stable iff k > 0, c2 < 0 and m > c1
    (m = c1 puts a zero eigenvalue in the spectrum, hence unstable).
    Gains must be nonzero; the zero-gain flow is handled by the generic
    pipeline instead.
    """
    for name, v in (("k", k), ("c1", c1), ("c2", c2)):
        v = float(v)
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")
        if v == 0.0:
            raise ValueError(f"{name} must be nonzero for the closed-form classifier")
    m = float(m)
    if not math.isfinite(m):
        raise ValueError(f"m must be finite, got {m!r}")
    spectrum = (float(c1) - m, float(c2), -float(k))
    if k > 0.0 and c2 < 0.0 and m > c1:
        return Verdict.ASYMPTOTICALLY_STABLE, spectrum
    return Verdict.UNSTABLE, spectrum


@dataclass(frozen=True)
class GainGrid:
    """Cartesian grid over a subset of gain coordinates.

    axes maps a 0-based state coordinate to the gain values swept along
    it; unspecified coordinates keep gain 0.  Iteration order is
    row-major in the order the axes were given, which makes sweep output
    deterministic.
    """

    axes: tuple[tuple[int, tuple[float, ...]], ...]

    def __post_init__(self) -> None:
        seen = set()
        for coord, values in self.axes:
            if not isinstance(coord, int) or coord < 0:
                raise ValueError(f"axis coordinate must be a nonnegative integer, got {coord!r}")
            if coord in seen:
                raise ValueError(f"duplicate axis for coordinate {coord}")
            seen.add(coord)
            if any(not math.isfinite(v) for v in values):
                raise ValueError(f"axis {coord} contains non-finite values")

    @property
    def size(self) -> int:
        if not self.axes:
            return 0
        total = 1
        for _, values in self.axes:
            total *= len(values)
        return total

    def points(self, n: int) -> list[np.ndarray]:
        """Full gain vectors (length n), row-major over the axis values."""
        for coord, _ in self.axes:
            if coord >= n:
                raise ValueError(f"axis coordinate {coord} out of range for n={n}")
        out = []
        for combo in product(*(values for _, values in self.axes)):
            c = np.zeros(n)
            for (coord, _), v in zip(self.axes, combo):
                c[coord] = v
            out.append(c)
        return out


@dataclass(frozen=True)
class SweepPoint:
    """One grid point of a gain sweep: the gains tried and what they yield."""

    gains: tuple[float, ...]
    verdict: Verdict
    critical_order: float


_MAX_GRID = 10**6


def gain_sweep(
    system: FractionalSystem,
    x_e: EquilibriumState,
    q: OrderLike,
    c_grid: GainGrid,
    max_workers: Optional[int] = None,
) -> list[SweepPoint]:
    """Classify the controlled Jacobian J(x_e) + diag(c) over a gain grid.

    The base Jacobian is evaluated once; each grid point only shifts the
    diagonal.  Points are returned in grid order.  max_workers > 1 splits
    the grid across threads (classification is pure); the default honors
    the FRACSTAB_THREADS environment variable, falling back to serial.
    """
    if c_grid.size > _MAX_GRID:
        raise ValueError(f"grid has {c_grid.size} points, cap is {_MAX_GRID}")
    order = as_order(q)
    J0 = jacobian(system, x_e.x)
    points = c_grid.points(system.n)

    if max_workers is None:
        env = os.environ.get("FRACSTAB_THREADS", "").strip()
        if env:
            try:
                max_workers = int(env)
            except ValueError:
                raise ValueError(f"FRACSTAB_THREADS must be an integer, got {env!r}")
    if max_workers is not None and max_workers < 1:
        raise ValueError("max_workers must be >= 1")

    def classify(c: np.ndarray) -> SweepPoint:
        J = J0 + np.diag(c)
        eigs = eigenvalues(J)
        report = matignon_classify(eigs, order, matrix=J)
        return SweepPoint(
            gains=tuple(float(v) for v in c),
            verdict=report.verdict,
            critical_order=report.critical_order,
        )

    if max_workers is None or max_workers == 1 or len(points) <= 1:
        return [classify(c) for c in points]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(classify, points))


@dataclass(frozen=True)
class ConvergenceCheck:
    """Outcome of a closed-loop simulation toward the target equilibrium."""

    converged: bool
    final_distance: float
    monotone_tail: bool
    diverged: bool
    trajectory: Trajectory


def verify_convergence(
    controlled: ControlledSystem,
    q: OrderLike,
    x0: Sequence[float],
    config: IntegrationConfig,
    tol: float = 0.05,
) -> ConvergenceCheck:
    """Integrate the closed loop and check it approaches x_e.

    converged means the run finished and the final Euclidean distance to
    x_e is below tol; monotone_tail reports whether the distance is
    non-increasing over the last fifth of the samples (a practical
    stand-in for the asymptotic statement, which no finite run can
    verify).
    """
    if not (math.isfinite(tol) and tol > 0.0):
        raise ValueError(f"tol must be positive, got {tol!r}")
    traj = integrate(controlled.system, q, x0, config)
    dist = np.linalg.norm(traj.states - controlled.x_e.x, axis=1)
    final_distance = float(dist[-1])
    tail_len = max(2, len(dist) // 5)
    tail = dist[-tail_len:]
    # tiny slack absorbs rounding jitter in flat stretches
    monotone_tail = bool(np.all(np.diff(tail) <= 1e-12))
    diverged = traj.terminated_early
    converged = (not diverged) and final_distance < tol
    return ConvergenceCheck(
        converged=converged,
        final_distance=final_distance,
        monotone_tail=monotone_tail,
        diverged=diverged,
        trajectory=traj,
    )
