"""Green's functions and Boettcher coordinates for quadratic maps and for M.

The potential of a point z under P_c is G_c(z) = lim 2**-n log|P_c^n(z)|,
zero exactly on the filled Julia set.  The parameter-plane objects follow
from the dynamical ones through the critical value: the Mandelbrot
potential is G_M(c) = G_c(c) and the conformal map Phi_M from the
complement of M to the complement of the closed unit disk is the Boettcher
coordinate of the critical value, Phi_M(c) = phi_c(c).

phi_c is computed the stable way: run the orbit of the critical value
forward to large modulus, evaluate the Boettcher coordinate there with a
principal-branch tail product, then pull it back through square roots
whose branch is chosen by continuity against the recorded orbit point.
A naive (P^n)**(2**-n) picks branch cuts at random; this walk does not.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ConvergenceError, escape_time

# Orbit modulus at which 2**-n log|z_n| has converged far below 1e-9.
GREEN_BAILOUT = 1e9
# Modulus at which the principal-branch tail product is safe: every factor
# 1 + c/z**2 then lies in D(1, 1/8) for the parameters that get here.
BRANCH_SAFE_RADIUS = 8.0
# Below this Mandelbrot potential we refuse to evaluate Phi_M; callers that
# rasterize resolve such points toward M (they are within a pixel of it).
DEFAULT_POTENTIAL_FLOOR = 1e-5

_TAIL_BAILOUT = 1e12
_INVERSE_FLOOR = 1e-4


class PotentialTooSmallError(ValueError):
    """The requested point is in M or too close to it for branch tracking."""


class NonEscapingPointError(ValueError):
    """An operation that needs an escaping orbit was given a bounded one."""


@dataclass(frozen=True)
class PotentialResult:
    """Bundled parameter-plane potential data at one c.

    green is G_M(c); boettcher is Phi_M(c) when the potential is above the
    branch-safety floor, else None; gradient is the derivative of
    log Phi_M(c) (its modulus is |grad G_M|), None on M.
    """

    green: float
    boettcher: complex | None
    gradient: complex | None


def green_julia(c: complex, z: complex, max_iter: int = 2048) -> float:
    """Dynamical potential G_c(z); 0 for orbits that stay bounded."""
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    w = complex(z)
    if abs(w) > GREEN_BAILOUT:
        return math.log(abs(w))
    for n in range(1, max_iter + 1):
        w = w * w + c
        if abs(w) > GREEN_BAILOUT:
            # ldexp underflows to 0.0 for very late escapes, the honest
            # double-precision value of the potential there
            return math.ldexp(math.log(abs(w)), -n)
    return 0.0


def green_M(c: complex, max_iter: int = 2048) -> float:
    """Mandelbrot potential G_M(c) = G_c(c); 0 on M."""
    return green_julia(c, c, max_iter)


def _phi_orbit(c: complex, max_len: int = 512) -> list[complex]:
    """Critical-value orbit c, P(c), ... up to the first branch-safe point."""
    orbit = [c]
    z = c
    while abs(z) <= BRANCH_SAFE_RADIUS:
        z = z * z + c
        orbit.append(z)
        if len(orbit) > max_len:
            raise PotentialTooSmallError(
                f"orbit of {c} did not reach modulus {BRANCH_SAFE_RADIUS} "
                f"within {max_len} steps")
    return orbit


def _phi_tail(c: complex, z: complex) -> complex:
    """Boettcher coordinate at a branch-safe orbit point (|z| > 8)."""
    w = z
    zt = z
    weight = 0.5
    for _ in range(48):
        w *= cmath.exp(weight * cmath.log(1 + c / (zt * zt)))
        zt = zt * zt + c
        weight *= 0.5
        if abs(zt) > _TAIL_BAILOUT:
            break
    return w


def phi_M(c: complex, potential_floor: float = DEFAULT_POTENTIAL_FLOOR,
          max_iter: int = 4096) -> complex:
    """Phi_M(c) for c outside M, with G_M(c) above the branch-safety floor."""
    c = complex(c)
    if not escape_time(c, 0j, max_iter).escaped:
        raise PotentialTooSmallError(
            f"c={c} did not escape within {max_iter} iterations (c in M?)")
    g = green_M(c, max_iter)
    if g < potential_floor:
        raise PotentialTooSmallError(
            f"potential too small: G_M({c}) = {g:.3g} < {potential_floor:.3g}")
    orbit = _phi_orbit(c)
    w = _phi_tail(c, orbit[-1])
    for zi in reversed(orbit[:-1]):
        s = cmath.sqrt(w)
        if abs(s - zi) > abs(s + zi):
            s = -s
        w = s
    return w


def mandel_potential(c: complex, max_iter: int = 2048,
                     potential_floor: float = DEFAULT_POTENTIAL_FLOOR) -> PotentialResult:
    """G_M, Phi_M and the log-derivative of Phi_M bundled for one c."""
    c = complex(c)
    z = 0j
    d = 0j
    for n in range(1, max_iter + 1):
        d = 2 * z * d + 1
        z = z * z + c
        if abs(z) > GREEN_BAILOUT:
            # z is P^n(0) = P^(n-1) of the critical value, whose potential
            # is what G_M(c) = log|Phi_M(c)| means
            scale = math.ldexp(1.0, -(n - 1))
            green = scale * math.log(abs(z))
            gradient = scale * d / z
            boettcher = None
            if green >= potential_floor:
                boettcher = phi_M(c, potential_floor, max_iter)
            return PotentialResult(green, boettcher, gradient)
    return PotentialResult(0.0, None, None)


def phi_M_inverse(w: complex, tol: float = 1e-9, max_steps: int = 48) -> complex:
    """Solve Phi_M(c) = w by Newton with a finite-difference derivative.

    Newton alone loses its way near the slivers of the M-complement (the
    seed c = w may even land inside M), so the solve walks a potential
    ladder: start at potential >= 1.2 on the same external angle, where
    the asymptotic identity seed is reliable, then halve the potential
    toward the target, reseeding each Newton at the previous solution and
    bisecting the ladder adaptively when a rung fails.
    """
    w = complex(w)
    if abs(w) <= 1 + _INVERSE_FLOOR:
        raise ValueError(f"|w| must exceed 1 + {_INVERSE_FLOOR}; got {abs(w)}")

    g_target = math.log(abs(w))
    theta = cmath.phase(w)
    g_start = max(g_target, 1.2)
    c = cmath.exp(g_start + 1j * theta)

    pending = [g_target]
    g = g_target
    while g < g_start:
        g = min(2 * g, g_start)
        pending.append(g)
    g_done = g_start

    attempts = 0
    while pending:
        g_next = pending[-1]
        target = cmath.exp(g_next + 1j * theta)
        found = _phi_inverse_from(c, target, tol, max_steps)
        attempts += 1
        if found is not None:
            c = found
            g_done = g_next
            pending.pop()
            continue
        if attempts > 80 or (g_done - g_next) < 1e-12:
            raise ConvergenceError(
                f"phi_M_inverse({w}) stalled at potential {g_next:.3g}")
        pending.append((g_done + g_next) / 2)
    return c


def _phi_inverse_from(seed: complex, w: complex, tol: float,
                      max_steps: int) -> complex | None:
    c = complex(seed)
    for _ in range(max_steps):
        try:
            f = phi_M(c) - w
        except PotentialTooSmallError:
            return None
        if abs(f) < tol:
            return c
        h = 1e-7 * max(1.0, abs(c))
        try:
            d = (phi_M(c + h) - phi_M(c - h)) / (2 * h)
        except PotentialTooSmallError:
            return None
        if d == 0:
            return None
        step = f / d
        # Damp into the domain of Phi_M if a full step overshoots into M.
        for _ in range(8):
            trial = c - step
            try:
                phi_M(trial)
                break
            except PotentialTooSmallError:
                step /= 2
        else:
            return None
        c = trial
    return None


def julia_distance_estimate(c: complex, z: complex, max_iter: int = 10000) -> float:
    """Exterior distance estimate from z to J(P_c).

    Milnor-style |z_n| log|z_n| / |dz_n/dz|; the true distance lies within
    a factor of 4 for the escaping points we feed it (used as a rendering
    and membership heuristic, validated statistically in the tests).
    """
    w = complex(z)
    dw = 1 + 0j
    if abs(w) > GREEN_BAILOUT:
        return abs(w) * math.log(abs(w))
    for _ in range(max_iter):
        dw = 2 * w * dw
        w = w * w + c
        if abs(w) > GREEN_BAILOUT:
            aw = abs(w)
            return aw * math.log(aw) / abs(dw)
    raise NonEscapingPointError(f"z={z} did not escape under P_{c}")


# ---------------------------------------------------------------------------
# Vectorized kernels (shared by the decoration tests and the renderer)
# ---------------------------------------------------------------------------

def julia_distance_grid(c: complex, z: np.ndarray, max_iter: int = 512) -> np.ndarray:
    """Vectorized julia_distance_estimate; +inf where the orbit stays bounded."""
    w = np.array(z, dtype=complex)
    shape = w.shape
    w = w.ravel()
    dw = np.ones_like(w)
    dist = np.full(w.shape, np.inf)
    live = np.abs(w) <= GREEN_BAILOUT
    done = ~live
    dist[done] = np.abs(w[done]) * np.log(np.abs(w[done]))
    for _ in range(max_iter):
        if not live.any():
            break
        dw[live] = 2 * w[live] * dw[live]
        w[live] = w[live] ** 2 + c
        out = live & (np.abs(w) > GREEN_BAILOUT)
        if out.any():
            aw = np.abs(w[out])
            dist[out] = aw * np.log(aw) / np.abs(dw[out])
            live &= ~out
    return dist.reshape(shape)


def phi_M_grid(c: np.ndarray, active: np.ndarray | None = None,
               max_depth: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Phi_M over an array of parameters.

    Returns (w, ok).  ok is False where the critical-value orbit fails to
    reach the branch-safe radius within max_depth steps (points in M or
    with potential below roughly log(8) * 2**-max_depth); w is undefined
    there.  Scalar phi_M and this kernel agree to rounding; the test suite
    pins that down.
    """
    c = np.asarray(c, dtype=complex)
    shape = c.shape
    c = c.ravel()
    n_pts = c.size
    if active is None:
        act = np.ones(n_pts, dtype=bool)
    else:
        act = np.asarray(active, dtype=bool).ravel().copy()

    orbit = np.zeros((max_depth, n_pts), dtype=complex)
    depth = np.zeros(n_pts, dtype=np.int64)
    z = np.where(act, c, 0j)
    orbit[0] = z
    pending = act & (np.abs(z) <= BRANCH_SAFE_RADIUS)
    done = act & ~pending
    for i in range(1, max_depth):
        if not pending.any():
            break
        z[pending] = z[pending] ** 2 + c[pending]
        orbit[i, pending] = z[pending]
        newly = pending & (np.abs(z) > BRANCH_SAFE_RADIUS)
        depth[newly] = i
        done |= newly
        pending &= ~newly
    ok = done

    w = np.ones(n_pts, dtype=complex)
    w[ok] = orbit[depth[ok], np.flatnonzero(ok)]
    zt = w.copy()
    weight = 0.5
    for _ in range(48):
        live = ok & (np.abs(zt) <= _TAIL_BAILOUT)
        if not live.any():
            break
        w[live] *= np.exp(weight * np.log1p(c[live] / zt[live] ** 2))
        zt[live] = zt[live] ** 2 + c[live]
        weight *= 0.5

    max_n = int(depth[ok].max()) if ok.any() else 0
    for i in range(max_n - 1, -1, -1):
        sel = ok & (depth > i)
        if not sel.any():
            continue
        s = np.sqrt(w[sel])
        zi = orbit[i, sel]
        flip = np.abs(s - zi) > np.abs(s + zi)
        w[sel] = np.where(flip, -s, s)
    return w.reshape(shape), ok.reshape(shape)
