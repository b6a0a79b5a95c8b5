"""Predictor-corrector time stepping for Caputo initial value problems.

The scheme is the fractional Adams-Bashforth-Moulton method on a uniform
grid t_j = j h.  The Caputo problem D^q x = f(x), x(0) = x0, is recast as
the Volterra equation

    x(t) = x0 + (1 / Gamma(q)) * integral_0^t (t - s)^(q-1) f(x(s)) ds

and the memory integral is discretized twice per step: a rectangle-rule
predictor followed by a trapezoid-rule corrector built on the product
integration weights

    predictor weights  b_{j,k+1} = (h^q / q) ((k+1-j)^q - (k-j)^q)
    corrector weights  a_{0,k+1} = k^(q+1) - (k - q)(k+1)^q
                       a_{j,k+1} = (k-j+2)^(q+1) + (k-j)^(q+1)
                                   - 2 (k-j+1)^(q+1),   1 <= j <= k.

Every step sums over the full history (the Caputo kernel has no
semigroup shortcut), so an N-step run costs O(N^2) weight dot products.
At q = 1 the weights collapse to the classical Euler predictor plus
trapezoid corrector, which is what the convergence probe checks.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .systems import FractionalSystem, OrderLike, as_order

# Hook signature: (index_of_new_sample, writable_view_of_f_history).
HistoryHook = Callable[[int, np.ndarray], None]


@dataclass(frozen=True)
class IntegrationConfig:
    """Grid and safety settings for a single run.

    h : step size, must divide t_end into at least one step
    t_end : final time
    blowup_guard : state-norm ceiling; crossing it truncates the run
    corrector_iterations : number of corrector sweeps per step (>= 1)
    """

    h: float
    t_end: float
    blowup_guard: float = 1e8
    corrector_iterations: int = 1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.h) and self.h > 0.0):
            raise ValueError(f"step size h must be positive, got {self.h!r}")
        if not (math.isfinite(self.t_end) and self.t_end > 0.0):
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        if self.t_end < self.h:
            raise ValueError("t_end must be at least one step long")
        if not (math.isfinite(self.blowup_guard) and self.blowup_guard > 0.0):
            raise ValueError("blowup_guard must be positive")
        if not isinstance(self.corrector_iterations, int) or self.corrector_iterations < 1:
            raise ValueError("corrector_iterations must be an integer >= 1")


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: times[i] = i h, states[i] the state at times[i].

    terminated_early is set when the blowup guard truncated the run; the
    arrays then hold only the finite prefix.
    """

    times: np.ndarray
    states: np.ndarray
    terminated_early: bool = False
    reason: Optional[str] = None


def integrate(
    system: FractionalSystem,
    q: OrderLike,
    x0: Sequence[float],
    config: IntegrationConfig,
    history_hook: Optional[HistoryHook] = None,
) -> Trajectory:
    """Run the predictor-corrector from x0 over the grid in config.

    history_hook, when given, is called after each stored field sample
    with (sample_index, f_history_prefix); the prefix is the live array,
    so mutating it perturbs the memory term of every later step.  That is
    deliberate: it is how the full-memory property is probed from tests.
    """
    order = as_order(q).q
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (system.n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({system.n},)")
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial state must be finite")

    h = config.h
    n_steps = max(1, int(round(config.t_end / h)))

    # i^q and i^(q+1) tables; all per-step weights are differences of these.
    idx = np.arange(n_steps + 2, dtype=float)
    pow_q = idx**order
    pow_q1 = idx ** (order + 1.0)
    dq = pow_q[1:] - pow_q[:-1]
    # second difference of i^(q+1): interior corrector weights
    d2q1 = pow_q1[2:] + pow_q1[:-2] - 2.0 * pow_q1[1:-1]

    pred_scale = h**order / math.gamma(order + 1.0)
    corr_scale = h**order / math.gamma(order + 2.0)
    guard = config.blowup_guard
    sweeps = config.corrector_iterations

    states = np.empty((n_steps + 1, system.n))
    fhist = np.empty((n_steps + 1, system.n))
    states[0] = x0
    fhist[0] = system.f(x0)

    stored = 1
    terminated = False
    if np.all(np.isfinite(fhist[0])):
        if history_hook is not None:
            history_hook(0, fhist[:1])
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(n_steps):
                hist_f = fhist[: k + 1]
                # predictor: rectangle rule over the full memory
                bw = dq[: k + 1][::-1]
                x_pred = x0 + pred_scale * (bw @ hist_f)
                # corrector: trapezoid weights, a_0 special-cased
                a0 = pow_q1[k] - (k - order) * pow_q[k + 1]
                mem = a0 * hist_f[0]
                if k >= 1:
                    mem = mem + d2q1[:k][::-1] @ hist_f[1 : k + 1]
                x_new = x0 + corr_scale * (system.f(x_pred) + mem)
                for _ in range(sweeps - 1):
                    x_new = x0 + corr_scale * (system.f(x_new) + mem)
                if not np.all(np.isfinite(x_new)) or np.linalg.norm(x_new) > guard:
                    terminated = True
                    break
                f_new = system.f(x_new)
                if not np.all(np.isfinite(f_new)):
                    terminated = True
                    break
                states[k + 1] = x_new
                fhist[k + 1] = f_new
                stored = k + 2
                if history_hook is not None:
                    history_hook(k + 1, fhist[:stored])
    else:
        terminated = True

    return Trajectory(
        times=h * np.arange(stored),
        states=states[:stored].copy(),
        terminated_early=terminated,
        reason="divergence" if terminated else None,
    )


def mittag_leffler(alpha: float, z: float, tol: float = 1e-14) -> float:
    """One-parameter Mittag-Leffler function E_alpha(z) for real arguments.

    Direct power series sum_j z^j / Gamma(alpha j + 1), term magnitudes
    formed in log space so large-alpha gamma values cannot overflow.
    Truncates when the next term drops below tol * |partial sum|.  Only
    the direct-summation regime is supported: alpha in (0, 2], |z| <= 5.
    """
    alpha = float(alpha)
    if not (math.isfinite(alpha) and 0.0 < alpha <= 2.0):
        raise ValueError(f"alpha must lie in (0, 2], got {alpha!r}")
    z = float(z)
    if not math.isfinite(z) or abs(z) > 5.0:
        raise ValueError(f"|z| <= 5 required for direct summation, got {z!r}")
    if not (math.isfinite(tol) and tol > 0.0):
        raise ValueError(f"tol must be positive, got {tol!r}")

    if z == 0.0:
        return 1.0
    log_abs_z = math.log(abs(z))
    total = 1.0
    for j in range(1, 301):
        mag = math.exp(j * log_abs_z - math.lgamma(alpha * j + 1.0))
        if mag < tol * abs(total):
            return total
        total += -mag if (z < 0.0 and j % 2 == 1) else mag
    raise ArithmeticError(
        f"Mittag-Leffler series did not converge within 300 terms (alpha={alpha}, z={z})"
    )


@dataclass(frozen=True)
class ConvergenceReport:
    """Grid-refinement study against the finest grid in the batch.

    entries : (h, error) pairs, error = ||x_h(T) - x_finest(T)||
    orders : observed order for each adjacent coarse pair
    order_estimate : median of the finite pairwise orders
    """

    entries: tuple[tuple[float, float], ...]
    orders: tuple[float, ...]
    order_estimate: float


def convergence_probe(
    system: FractionalSystem,
    q: OrderLike,
    x0: Sequence[float],
    h_list: Sequence[float],
    t_end: float = 1.0,
) -> ConvergenceReport:
    """Integrate over each step size and estimate the empirical order.

    h_list must be strictly decreasing with at least three entries, each
    dividing t_end.  The finest run serves as the reference, so the pair
    involving it is excluded from the order list (its error is zero).
    """
    hs = [float(h) for h in h_list]
    if len(hs) < 3:
        raise ValueError("need at least three step sizes")
    if any(h <= 0.0 for h in hs) or any(nxt >= prev for nxt, prev in zip(hs[1:], hs)):
        raise ValueError("step sizes must be positive and strictly decreasing")
    t_end = float(t_end)
    for h in hs:
        steps = t_end / h
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError(f"step size {h} does not divide t_end={t_end}")

    finals = []
    for h in hs:
        traj = integrate(system, q, x0, IntegrationConfig(h=h, t_end=t_end))
        if traj.terminated_early:
            raise ArithmeticError(f"probe run diverged at h={h}")
        finals.append(traj.states[-1])

    ref = finals[-1]
    errors = [float(np.linalg.norm(s - ref)) for s in finals]
    entries = tuple(zip(hs, errors))

    orders = []
    for i in range(len(hs) - 2):
        e_coarse, e_fine = errors[i], errors[i + 1]
        if e_coarse > 0.0 and e_fine > 0.0:
            orders.append(math.log(e_coarse / e_fine) / math.log(hs[i] / hs[i + 1]))
        else:
            orders.append(math.nan)
    finite = [o for o in orders if math.isfinite(o)]
    estimate = statistics.median(finite) if finite else math.nan
    return ConvergenceReport(entries=entries, orders=tuple(orders), order_estimate=estimate)
