"""Quadratic-map iteration, escape tests, and Newton solvers.

Everything in this module works on plain Python complex scalars; the
vectorized kernels used by the renderer live next to the renderer.  P_c
denotes the map z -> z**2 + c and "critical orbit" means the orbit of
z = 0, whose images are 0, c, c**2 + c, ...
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

# Escape radius 4 instead of the classical 2: one squaring of headroom so
# derivative accumulators stay clean; membership is identical for radius >= 2.
DEFAULT_ESCAPE_RADIUS = 4.0

# Newton guards: every root we care about lies in D(2), so a step longer
# than 1 or an iterate outside D(4) means the iteration is lost.
NEWTON_STEP_LIMIT = 1.0
NEWTON_DOMAIN_RADIUS = 4.0

# |z| beyond this counts as overflow regardless of the escape radius; one
# more squaring stays finite in double precision.
_OVERFLOW_RADIUS = 1e150


class ConvergenceError(RuntimeError):
    """A Newton iteration failed to converge or left its guard region."""


class MinimalPeriodError(RuntimeError):
    """Newton converged, but onto a cycle of strictly smaller period."""

    def __init__(self, message: str, value: complex, minimal_period: int):
        super().__init__(message)
        self.value = value
        self.minimal_period = minimal_period


@dataclass(frozen=True)
class OrbitRecord:
    """A finite orbit of P_c together with accumulated first derivatives.

    z_derivative is d/dz of the composition evaluated along the orbit and
    c_derivative is d/dc (seeded for the critical orbit, dc_0 = 0).  Both
    are accumulated only over the points actually produced, so they match
    the composition of the same length as ``points``.
    """

    c: complex
    points: tuple[complex, ...]
    escaped: bool
    escape_index: int | None
    z_derivative: complex
    c_derivative: complex


class EscapeResult(NamedTuple):
    escaped: bool
    iterations: int
    final: complex


def iterate(c: complex, z0: complex, n: int,
            escape_radius: float = DEFAULT_ESCAPE_RADIUS) -> OrbitRecord:
    """Iterate P_c from z0 for at most n steps, recording the orbit.

    Stops early when a point leaves the escape radius (or overflows, which
    is reported as an escape rather than propagated as inf/nan).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if escape_radius < 2:
        raise ValueError("escape_radius must be >= 2")
    c = complex(c)
    z = complex(z0)
    points = [z]
    dz = 1 + 0j
    dc = 0j
    escaped = abs(z) > escape_radius
    escape_index: int | None = 0 if escaped else None
    if not escaped:
        for _ in range(n):
            dz = 2 * z * dz
            dc = 2 * z * dc + 1
            z = z * z + c
            points.append(z)
            if abs(z) > escape_radius or abs(z) > _OVERFLOW_RADIUS:
                escaped = True
                escape_index = len(points) - 1
                break
    return OrbitRecord(c, tuple(points), escaped, escape_index, dz, dc)


def escape_time(c: complex, z0: complex, max_iter: int,
                escape_radius: float = DEFAULT_ESCAPE_RADIUS) -> EscapeResult:
    """Bounded membership test: does the orbit of z0 leave the radius?"""
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    c = complex(c)
    z = complex(z0)
    if abs(z) > escape_radius:
        return EscapeResult(True, 0, z)
    for i in range(1, max_iter + 1):
        z = z * z + c
        if abs(z) > escape_radius:
            return EscapeResult(True, i, z)
    return EscapeResult(False, max_iter, z)


def critical_value_and_derivative(c: complex, period: int) -> tuple[complex, complex]:
    """P_c^period(0) and its c-derivative, or raise on overflow."""
    z = 0j
    d = 0j
    for _ in range(period):
        d = 2 * z * d + 1
        z = z * z + c
        if abs(z) > _OVERFLOW_RADIUS:
            raise ConvergenceError("critical orbit overflowed")
    return z, d


def _minimal_critical_period(c: complex, period: int, tol: float) -> int:
    z = 0j
    for d in range(1, period + 1):
        z = z * z + c
        if abs(z) < tol:
            return d
    return period


def solve_superattracting_center(period: int, seed: complex, tol: float = 1e-13,
                                 max_steps: int = 64) -> complex:
    """Newton in c for P_c^period(0) = 0 (a hyperbolic-component center).

    Raises ConvergenceError when the iteration diverges (guarded by step
    length and by D(4)) and MinimalPeriodError when the root found is a
    center whose minimal period is a proper divisor of ``period``.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    c = complex(seed)
    for _ in range(max_steps):
        try:
            v, d = critical_value_and_derivative(c, period)
        except ConvergenceError:
            raise ConvergenceError(f"orbit overflow near c={c}")
        if abs(v) < tol:
            minimal = _minimal_critical_period(c, period, 1e-8)
            if minimal != period:
                raise MinimalPeriodError(
                    f"converged to a period-{minimal} center {c}", c, minimal)
            return c
        if d == 0:
            raise ConvergenceError(f"zero derivative at c={c}")
        step = v / d
        if abs(step) > NEWTON_STEP_LIMIT:
            raise ConvergenceError(f"step {abs(step):.3g} exceeds guard at c={c}")
        c = c - step
        if abs(c) > NEWTON_DOMAIN_RADIUS:
            raise ConvergenceError(f"iterate left D(4): c={c}")
    raise ConvergenceError(f"no convergence within {max_steps} steps from {seed}")


@dataclass(frozen=True)
class PeriodicPointResult:
    location: complex
    period: int
    multiplier: complex
    residual: float


def periodic_orbit_derivatives(c: complex, z: complex, period: int
                               ) -> tuple[complex, complex, complex]:
    """(P_c^period(z), first and second z-derivatives) at z."""
    d = 1 + 0j
    s = 0j
    for _ in range(period):
        s = 2 * (d * d + z * s)
        d = 2 * z * d
        z = z * z + c
        if abs(z) > _OVERFLOW_RADIUS:
            raise ConvergenceError("orbit overflowed")
    return z, d, s


def solve_periodic_point(c: complex, period: int, seed: complex,
                         tol: float = 1e-12, max_steps: int = 80) -> PeriodicPointResult:
    """Newton for a periodic point of P_c with the given (minimal) period.

    Converges by residual even at parabolic parameters, where the root of
    P^period(z) - z is multiple and the convergence is only linear.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    c = complex(c)
    z = complex(seed)
    for _ in range(max_steps):
        v, d, _ = periodic_orbit_derivatives(c, z, period)
        f = v - z
        if abs(f) < tol:
            break
        df = d - 1
        if df == 0:
            raise ConvergenceError(f"degenerate Newton derivative at z={z}")
        step = f / df
        if abs(step) > NEWTON_STEP_LIMIT:
            raise ConvergenceError(f"step {abs(step):.3g} exceeds guard at z={z}")
        z = z - step
        if abs(z) > NEWTON_DOMAIN_RADIUS:
            raise ConvergenceError(f"iterate left D(4): z={z}")
    else:
        raise ConvergenceError(f"no convergence within {max_steps} steps from {seed}")

    for div in range(1, period):
        if period % div == 0:
            w = z
            for _ in range(div):
                w = w * w + c
            if abs(w - z) < 1e-8:
                raise MinimalPeriodError(
                    f"point {z} has minimal period {div} < {period}", z, div)
    v, d, _ = periodic_orbit_derivatives(c, z, period)
    return PeriodicPointResult(z, period, d, abs(v - z))
