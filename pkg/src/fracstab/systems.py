"""System definitions: plain-data containers for fractional-order flows.

A system is a state dimension, a vector field, an optional analytic
Jacobian, and a bag of named real parameters.  The Caputo derivative
order lives in its own value type so that the 0 < q <= 1 restriction is
checked once, at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

VectorField = Callable[[np.ndarray], np.ndarray]
JacobianFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FractionalOrder:
    """Caputo derivative order q, restricted to 0 < q <= 1."""

    q: float

    def __post_init__(self) -> None:
        q = float(self.q)
        if not (math.isfinite(q) and 0.0 < q <= 1.0):
            raise ValueError(f"fractional order must satisfy 0 < q <= 1, got {self.q!r}")
        object.__setattr__(self, "q", q)

    def __float__(self) -> float:
        return self.q


OrderLike = Union[FractionalOrder, float, int]


def as_order(q: OrderLike) -> FractionalOrder:
    """Coerce a float or FractionalOrder to FractionalOrder, validating the range."""
    if isinstance(q, FractionalOrder):
        return q
    return FractionalOrder(float(q))


@dataclass(frozen=True)
class FractionalSystem:
    """An n-dimensional autonomous flow x' = f(x) under a Caputo derivative.

    Attributes
    ----------
    n : int
        State dimension.
    f : callable
        Vector field; maps a length-n array to a length-n array.
    jac : callable or None
        Analytic Jacobian of f, returning an (n, n) array.  When absent,
        consumers fall back to central finite differences.
    params : mapping
        Named real parameters the field was built with (k, c1, ...).
    """

    n: int
    f: VectorField
    jac: Optional[JacobianFn] = None
    params: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class EquilibriumState:
    """A certified root of the vector field: ||f(x)|| = residual < 1e-10."""

    x: np.ndarray
    residual: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))


@dataclass(frozen=True)
class ControlGains:
    """Per-coordinate linear feedback gains c for u = c * (x - x_e)."""

    c: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("gains must form a non-empty 1-d vector")
        if not np.all(np.isfinite(c)):
            raise ValueError("gains must be finite")
        object.__setattr__(self, "c", c)

    def __len__(self) -> int:
        return int(self.c.size)


def make_system(
    n: int,
    f: Callable[[np.ndarray], Sequence[float]],
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    params: Optional[Mapping[str, float]] = None,
) -> FractionalSystem:
    """Wrap a raw callable pair into a FractionalSystem with shape checks.

    The field and Jacobian are probed once at the origin; a field whose
    output length disagrees with n is rejected here rather than deep
    inside an integration loop.
    """
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"state dimension must be a positive integer, got {n!r}")

    def wrapped_f(x: np.ndarray) -> np.ndarray:
        return np.asarray(f(np.asarray(x, dtype=float)), dtype=float)

    probe = wrapped_f(np.zeros(n))
    if probe.shape != (n,):
        raise ValueError(
            f"vector field returned shape {probe.shape} for state dimension {n}"
        )

    wrapped_jac: Optional[JacobianFn] = None
    if jac is not None:

        def wrapped_jac_fn(x: np.ndarray) -> np.ndarray:
            return np.asarray(jac(np.asarray(x, dtype=float)), dtype=float)

        jprobe = wrapped_jac_fn(np.zeros(n))
        if jprobe.shape != (n, n):
            raise ValueError(
                f"Jacobian returned shape {jprobe.shape}, expected {(n, n)}"
            )
        wrapped_jac = wrapped_jac_fn

    return FractionalSystem(n=n, f=wrapped_f, jac=wrapped_jac, params=dict(params or {}))


def toda_lattice(n: int) -> FractionalSystem:
    """Open-ended nonperiodic Toda lattice with n particles, state dim 2n - 1.

    State layout is (x^1, ..., x^{n-1}, y^1, ..., y^n) with the boundary
    convention x^0 = x^n = 0:

        (x^i)' = x^i (y^{i+1} - y^i)            i = 1..n-1
        (y^j)' = 2 ((x^j)^2 - (x^{j-1})^2)      j = 1..n
    """
    if not isinstance(n, int) or n < 2:
        raise ValueError(f"lattice size must be an integer >= 2, got {n!r}")
    dim = 2 * n - 1

    def f(s: np.ndarray) -> np.ndarray:
        x = s[: n - 1]
        y = s[n - 1 :]
        dx = x * (y[1:] - y[:-1])
        # pad x with the fixed boundary values so y updates index uniformly
        xa = np.concatenate(([0.0], x, [0.0]))
        dy = 2.0 * (xa[1:] ** 2 - xa[:-1] ** 2)
        return np.concatenate((dx, dy))

    def jac(s: np.ndarray) -> np.ndarray:
        x = s[: n - 1]
        y = s[n - 1 :]
        J = np.zeros((dim, dim))
        for i in range(n - 1):
            J[i, i] = y[i + 1] - y[i]
            J[i, (n - 1) + i] = -x[i]
            J[i, (n - 1) + i + 1] = x[i]
        for j in range(1, n + 1):
            r = (n - 1) + (j - 1)
            if j <= n - 1:
                J[r, j - 1] = 4.0 * x[j - 1]
            if j >= 2:
                J[r, j - 2] = -4.0 * x[j - 2]
        return J

    return make_system(dim, f, jac, params={"n": float(n)})


def toda2_controlled(k: float) -> FractionalSystem:
    """Two-particle Toda lattice prepared for a single linear control.

    The reduced three-state flow

        f1 = x^1 (-x^2 + x^3)
        f2 = 2 (x^1)^2
        f3 = -2 (x^1)^2 - k x^3

    has the equilibrium family (0, m, 0); k != 0 keeps the third state
    contracting toward that family for k > 0.
    """
    k = float(k)
    if k == 0.0 or not math.isfinite(k):
        raise ValueError(f"damping parameter k must be nonzero and finite, got {k!r}")

    def f(s: np.ndarray) -> np.ndarray:
        x1, x2, x3 = s
        sq = 2.0 * x1 * x1
        return np.array([x1 * (-x2 + x3), sq, -sq - k * x3])

    def jac(s: np.ndarray) -> np.ndarray:
        x1, x2, x3 = s
        return np.array(
            [
                [-x2 + x3, -x1, x1],
                [4.0 * x1, 0.0, 0.0],
                [-4.0 * x1, 0.0, -k],
            ]
        )

    return make_system(3, f, jac, params={"k": k})


def toda2_matrix_form(k: float) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic/linear splitting of the three-state flow: f(x) = x^1 A x + B x.

    A carries the quadratic coupling (Frobenius norm sqrt(10)), B the linear
    damping (Frobenius norm |k|).  The splitting feeds the Lipschitz bound.
    """
    k = float(k)
    if k == 0.0 or not math.isfinite(k):
        raise ValueError(f"damping parameter k must be nonzero and finite, got {k!r}")
    A = np.array(
        [
            [0.0, -1.0, 1.0],
            [2.0, 0.0, 0.0],
            [-2.0, 0.0, 0.0],
        ]
    )
    B = np.zeros((3, 3))
    B[2, 2] = -k
    return A, B


def lipschitz_bound(x0: Sequence[float], delta: float, k: float) -> float:
    """Lipschitz constant certificate for the three-state flow on B(x0, delta).

    L = sqrt(10) + |k| + 2 (||x0|| + delta): the quadratic coupling norm,
    the linear damping norm, and twice the largest state norm reachable
    inside the ball.
    """
    delta = float(delta)
    if delta <= 0.0 or not math.isfinite(delta):
        raise ValueError(f"ball radius delta must be positive, got {delta!r}")
    k = float(k)
    if k == 0.0 or not math.isfinite(k):
        raise ValueError(f"damping parameter k must be nonzero and finite, got {k!r}")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (3,):
        raise ValueError(f"x0 must be a 3-vector, got shape {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    r = float(np.linalg.norm(x0))
    return math.sqrt(10.0) + abs(k) + 2.0 * (r + delta)
