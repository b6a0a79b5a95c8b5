"""Equilibria, spectra, and the argument-based stability test.

The classification rule: an equilibrium of a Caputo system of order q is
asymptotically stable when every Jacobian eigenvalue satisfies
|arg(lambda)| > q pi/2.  Eigenvalues on the critical ray (within tol)
yield a marginal verdict only when their geometric multiplicity is one.
The argument of a zero eigenvalue is defined as 0, so any zero eigenvalue
is unstable at every positive order.

Eigenvalues are computed without external solvers: Faddeev-LeVerrier for
the characteristic polynomial, Aberth-Ehrlich simultaneous iteration for
its roots, then a few Newton polish steps.  Intended for desk-scale
matrices (n <= 16); conditioning of the coefficient route is acceptable
there and the polish absorbs most of the sensitivity.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .systems import EquilibriumState, FractionalSystem, FractionalOrder, OrderLike, as_order

# |lambda| at or below this snaps to exactly zero before taking arguments;
# a numerically tiny root has a meaningless phase.
ZERO_SNAP = 1e-9

_MAX_DIM = 16
_RESIDUAL_RTOL = 1e-8
_PIVOT_TOL = 1e-10


class Verdict(enum.Enum):
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    MARGINALLY_STABLE = "MarginallyStable"
    UNSTABLE = "Unstable"

    def __str__(self) -> str:  # serialization uses the canonical label
        return self.value


@dataclass(frozen=True)
class StabilityReport:
    """Spectrum, arguments, critical order, and the verdict at q_used."""

    eigenvalues: tuple[complex, ...]
    args_abs: tuple[float, ...]
    critical_order: float
    verdict: Verdict
    q_used: FractionalOrder


def jacobian(system: FractionalSystem, x: Sequence[float]) -> np.ndarray:
    """Jacobian of the field at x: analytic when available, else central differences."""
    x = np.asarray(x, dtype=float)
    if x.shape != (system.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({system.n},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    if system.jac is not None:
        J = np.asarray(system.jac(x), dtype=float)
        if J.shape != (system.n, system.n):
            raise ValueError(f"analytic Jacobian has shape {J.shape}")
        return J

    n = system.n
    J = np.empty((n, n))
    for j in range(n):
        step = 1e-6 * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += step
        xm[j] -= step
        fp = system.f(xp)
        fm = system.f(xm)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise ValueError(f"field is non-finite near x when perturbing coordinate {j}")
        J[:, j] = (fp - fm) / (2.0 * step)
    return J


def _char_poly(M: np.ndarray) -> np.ndarray:
    """Monic characteristic polynomial coefficients via Faddeev-LeVerrier.

    Returns [1, c1, ..., cn] with det(t I - M) = t^n + c1 t^(n-1) + ... + cn.
    """
    n = M.shape[0]
    coeffs = np.empty(n + 1)
    coeffs[0] = 1.0
    Mk = M.copy()
    eye = np.eye(n)
    for k in range(1, n + 1):
        ck = -np.trace(Mk) / k
        coeffs[k] = ck
        if k < n:
            Mk = M @ (Mk + ck * eye)
    return coeffs


def _horner(coeffs: Sequence[float], z: complex) -> complex:
    acc = 0j
    for c in coeffs:
        acc = acc * z + c
    return acc


def _horner_with_gauge(coeffs: Sequence[float], z: complex) -> tuple[complex, float]:
    """Polynomial value plus the magnitude sum gauging its rounding floor."""
    acc = 0j
    gauge = 0.0
    mag = abs(z)
    for c in coeffs:
        acc = acc * z + c
        gauge = gauge * mag + abs(c)
    return acc, gauge


def _aberth_roots(coeffs: np.ndarray, max_sweeps: int = 500) -> list[complex]:
    """All roots of a monic real polynomial by simultaneous iteration."""
    n = len(coeffs) - 1
    cs = [float(c) for c in coeffs]
    dcs = [cs[i] * (n - i) for i in range(n)]

    if n == 1:
        return [complex(-cs[1], 0.0)]

    # start on a circle: Cauchy bound radius, centroid center, asymmetric phase
    center = complex(-cs[1] / n, 0.0)
    radius = 1.0 + max(abs(c) for c in cs[1:])
    roots = [
        center + radius * cmath.exp(2j * math.pi * (k + 0.25) / n + 0.4j)
        for k in range(n)
    ]

    # a root is frozen once |p| reaches its evaluation rounding floor;
    # without the freeze, close root pairs limit-cycle across the last bit
    floor_scale = 1e-15 * (2 * n + 1)
    frozen = [False] * n
    converged = False
    for _ in range(max_sweeps):
        shift_max = 0.0
        for k in range(n):
            if frozen[k]:
                continue
            zk = roots[k]
            pv, gauge = _horner_with_gauge(cs, zk)
            if abs(pv) <= floor_scale * gauge:
                frozen[k] = True
                continue
            pd = _horner(dcs, zk)
            if pd == 0:
                # sitting on a stationary point; nudge off it
                roots[k] = zk + (1e-6 + 1e-6j) * (1.0 + abs(zk))
                shift_max = math.inf
                continue
            w = pv / pd
            s = 0j
            for j in range(n):
                if j == k:
                    continue
                diff = zk - roots[j]
                if diff == 0:
                    diff = (1e-12 + 1e-12j) * (1.0 + abs(zk))
                s += 1.0 / diff
            denom = 1.0 - w * s
            delta = w if denom == 0 else w / denom
            roots[k] = zk - delta
            rel = abs(delta) / (1.0 + abs(roots[k]))
            if rel > shift_max:
                shift_max = rel
        if all(frozen) or shift_max <= 1e-14:
            converged = True
            break
    if not converged:
        raise ArithmeticError(f"root iteration did not converge within {max_sweeps} sweeps")

    # Newton polish, kept only while the residual improves
    for k in range(n):
        z = roots[k]
        best = abs(_horner(cs, z))
        for _ in range(3):
            pd = _horner(dcs, z)
            if pd == 0:
                break
            z_new = z - _horner(cs, z) / pd
            r_new = abs(_horner(cs, z_new))
            if r_new <= best:
                z, best = z_new, r_new
            else:
                break
        roots[k] = z
    return roots


def eigenvalues(M: Sequence[Sequence[float]]) -> list[complex]:
    """Eigenvalues (with multiplicity) of a real matrix, n <= 16.

    Characteristic polynomial route with a per-root residual guarantee:
    |p(lambda)| <= 1e-8 relative to the coefficient magnitude at lambda.
    Tiny imaginary parts left over from complex iteration are cleaned so
    real spectra come back exactly real.  Sorted by (real, imag).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if n == 0 or n > _MAX_DIM:
        raise ValueError(f"matrix dimension must be in 1..{_MAX_DIM}, got {n}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")

    scale = float(np.linalg.norm(M))
    if scale == 0.0:
        return [0j] * n

    coeffs = _char_poly(M / scale)
    roots = _aberth_roots(coeffs)

    # residual gauge: coefficient norm of the unit-scaled polynomial, inflated
    # for roots outside the unit disk; |p| at a converged root sits many
    # orders below this, a stray iterate many orders above
    coeff_norm = float(np.linalg.norm(coeffs))
    cleaned = []
    for z in roots:
        mag = abs(z)
        bound = coeff_norm * max(1.0, mag) ** n
        if abs(_horner(coeffs, z)) > _RESIDUAL_RTOL * bound:
            raise ArithmeticError("eigenvalue residual check failed after polishing")
        if abs(z.imag) <= 1e-12 * (1.0 + mag):
            z = complex(z.real, 0.0)
        cleaned.append(z * scale)
    cleaned.sort(key=lambda w: (w.real, w.imag))
    return cleaned


def _abs_args(eigs: Sequence[complex], zero_tol: float) -> list[float]:
    return [0.0 if abs(l) <= zero_tol else abs(cmath.phase(complex(l))) for l in eigs]


def critical_order(eigs: Sequence[complex], zero_tol: float = ZERO_SNAP) -> float:
    """Largest order below which the spectrum passes the argument test.

    q_tilde = (2/pi) min_i |arg(lambda_i)|, clamped to [0, 2].  A zero
    eigenvalue (argument 0) forces q_tilde = 0; an all-negative real
    spectrum (argument pi) gives the clamp ceiling 2.
    """
    if len(eigs) == 0:
        raise ValueError("need at least one eigenvalue")
    q_tilde = (2.0 / math.pi) * min(_abs_args(eigs, zero_tol))
    return min(2.0, max(0.0, q_tilde))


def _numerical_rank(A: np.ndarray, pivot_tol: float = _PIVOT_TOL) -> int:
    """Rank by complex Gaussian elimination with partial pivoting."""
    B = np.array(A, dtype=complex)
    rows, cols = B.shape
    rank = 0
    scale = max(1.0, float(np.max(np.abs(B))) if B.size else 1.0)
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        pivot_row = r + int(np.argmax(np.abs(B[r:, c])))
        pivot = B[pivot_row, c]
        if abs(pivot) <= pivot_tol * scale:
            continue
        if pivot_row != r:
            B[[r, pivot_row]] = B[[pivot_row, r]]
        B[r] = B[r] / pivot
        for rr in range(r + 1, rows):
            B[rr] = B[rr] - B[rr, c] * B[r]
        rank += 1
        r += 1
    return rank


def _geometric_multiplicity(M: np.ndarray, lam: complex) -> int:
    n = M.shape[0]
    shifted = np.asarray(M, dtype=complex) - lam * np.eye(n)
    return n - _numerical_rank(shifted)


def matignon_classify(
    eigs: Sequence[complex],
    q: OrderLike,
    tol: float = 1e-9,
    matrix: Optional[Sequence[Sequence[float]]] = None,
    zero_tol: float = ZERO_SNAP,
) -> StabilityReport:
    """Argument test at order q: compare each |arg(lambda)| against q pi/2.

    Strictly above the threshold (by tol) for every eigenvalue yields
    AsymptoticallyStable; strictly below for any eigenvalue yields
    Unstable.  Eigenvalues within tol of the threshold put the spectrum
    on the critical ray: the verdict is MarginallyStable only when each
    such eigenvalue has geometric multiplicity one, which requires the
    matrix itself (pass matrix=...); without it the boundary case raises.

    Eigenvalues with |lambda| <= zero_tol are treated as exactly zero
    (argument 0), hence Unstable at every admissible order.
    """
    eigs = [complex(l) for l in eigs]
    if not eigs:
        raise ValueError("need at least one eigenvalue")
    q_used = as_order(q)
    threshold = q_used.q * math.pi / 2.0
    args = _abs_args(eigs, zero_tol)
    q_tilde = min(2.0, max(0.0, (2.0 / math.pi) * min(args)))

    if any(a < threshold - tol for a in args):
        verdict = Verdict.UNSTABLE
    elif all(a > threshold + tol for a in args):
        verdict = Verdict.ASYMPTOTICALLY_STABLE
    else:
        boundary = [l for l, a in zip(eigs, args) if abs(a - threshold) <= tol]
        if matrix is None:
            raise ValueError(
                "eigenvalues on the critical ray: the matrix is required "
                "for the geometric-multiplicity check"
            )
        M = np.asarray(matrix, dtype=float)
        # distinct boundary eigenvalues only; conjugates share multiplicity
        distinct: list[complex] = []
        for l in boundary:
            if all(abs(l - d) > 1e-9 * (1.0 + abs(l)) for d in distinct):
                distinct.append(l)
        if all(_geometric_multiplicity(M, l) == 1 for l in distinct):
            verdict = Verdict.MARGINALLY_STABLE
        else:
            verdict = Verdict.UNSTABLE

    return StabilityReport(
        eigenvalues=tuple(eigs),
        args_abs=tuple(args),
        critical_order=q_tilde,
        verdict=verdict,
        q_used=q_used,
    )


def sign_shortcut(eigs: Sequence[complex], reals_only: bool = True) -> Optional[Verdict]:
    """Order-independent verdict for real spectra.

    Any nonnegative real eigenvalue is unstable at every q in (0,1); an
    all-negative real spectrum is asymptotically stable at every such q.
    Complex input (|Im| >= 1e-10) is outside the shortcut's domain: with
    reals_only=True (the default) it raises, with reals_only=False it
    returns None so callers can fall back to the full argument test.
    """
    eigs = [complex(l) for l in eigs]
    if not eigs:
        raise ValueError("need at least one eigenvalue")
    if any(abs(l.imag) >= 1e-10 for l in eigs):
        if reals_only:
            raise ValueError("sign shortcut applies to real spectra only")
        return None
    if any(l.real >= 0.0 for l in eigs):
        return Verdict.UNSTABLE
    return Verdict.ASYMPTOTICALLY_STABLE


def find_equilibria(
    system: FractionalSystem,
    seeds: Sequence[Sequence[float]],
    newton_tol: float = 1e-12,
    max_iter: int = 100,
) -> list[EquilibriumState]:
    """Damped Newton search for roots of the field, one run per seed.

    The step solves the Levenberg-regularized normal equations
    (J^T J + mu I) s = -J^T f with mu tied to the current residual, so
    near-singular Jacobians (an equilibrium continuum has one by
    definition) do not throw the iterate along the null direction: the
    search settles on the family point nearest the seed.  Steps that fail
    to shrink the residual are halved up to 30 times; seeds whose
    iteration stalls are dropped silently (the return value only carries
    certified roots).  Converged roots within 1e-8 of each other collapse
    to the first found.
    """
    found: list[EquilibriumState] = []
    for seed in seeds:
        x = np.asarray(seed, dtype=float)
        if x.shape != (system.n,) or not np.all(np.isfinite(x)):
            raise ValueError(f"seed {seed!r} is not a finite length-{system.n} vector")
        fx = system.f(x)
        res = float(np.linalg.norm(fx))
        ok = True
        for _ in range(max_iter):
            if res < newton_tol:
                break
            try:
                J = jacobian(system, x)
                mu = min(res, 1.0) + 1e-14
                step = np.linalg.solve(
                    J.T @ J + mu * np.eye(system.n), -(J.T @ fx)
                )
            except (np.linalg.LinAlgError, ValueError):
                ok = False
                break
            t = 1.0
            for _ in range(30):
                x_try = x + t * step
                f_try = system.f(x_try)
                r_try = float(np.linalg.norm(f_try))
                if math.isfinite(r_try) and r_try < res:
                    x, fx, res = x_try, f_try, r_try
                    break
                t *= 0.5
            else:
                ok = False
                break
        if not ok or not res < 1e-10:
            continue
        if any(np.linalg.norm(x - e.x) <= 1e-8 for e in found):
            continue
        found.append(EquilibriumState(x=x, residual=res))
    return found


def analyze(system: FractionalSystem, x_e: EquilibriumState, q: OrderLike) -> StabilityReport:
    """Full pipeline at a certified equilibrium: Jacobian, spectrum, verdict."""
    residual = float(np.linalg.norm(system.f(x_e.x)))
    if not residual < 1e-10:
        raise ValueError(
            f"x_e is not a certified equilibrium: ||f(x_e)|| = {residual:.3e} >= 1e-10"
        )
    J = jacobian(system, x_e.x)
    eigs = eigenvalues(J)
    return matignon_classify(eigs, q, matrix=J)
