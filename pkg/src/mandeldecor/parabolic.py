"""Parabolic-point data, multiplier expansions, and gate asymptotics.

A parabolic parameter c1 carries a periodic point q whose cycle multiplier
is a root of unity e**(2 pi i nu'/nu).  Perturbing c off c1 splits the
parabolic point and opens a narrow gate that the critical orbit must crawl
through; the crawl length diverges like a reciprocal square root (single
petal) or a reciprocal (several petals) of c - c1.  This module measures
the expansion constants of the multiplier map, evaluates the leading term
of the lifted phase, counts gate transits directly, and converts the phase
law into predicted centers of the superattracting windows that the atlas
module then refines.

Conventions (the expansions leave a sign/branch free and we pin it):
  * A0 is fitted on the branch with Im((mu - 1)/u) > 0 at the largest
    step, matching the sector condition arg(mu - 1) ~ pi/2.
  * sqrt(c - c1) in the lifted phase takes the branch that puts
    A0 * sqrt(c - c1) in the upper half plane.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dynamics import (
    ConvergenceError,
    MinimalPeriodError,
    periodic_orbit_derivatives,
    solve_periodic_point,
)

DEFAULT_SECTOR_RADIUS = 0.1
_UNITY_TOL = 1e-6
_MAX_PETAL_ORDER = 64
_ESCAPE_EXIT_RADIUS = 4.0
_HUGE = 1e100


class FitError(ConvergenceError):
    """A multiplier-expansion fit lost its branch or failed to converge."""


@dataclass(frozen=True)
class SectorConstants:
    """Local data of a parabolic parameter c1 for the renormalization P^p.

    q is the parabolic periodic point, cycle_period its minimal period in
    the P-dynamics, k its minimal period under f = P^p.  nu is the petal
    count and mu_c1 = e**(2 pi i nu'/nu) the root-of-unity multiplier of
    the P-cycle.  Exactly one of A0 (single petal) / B0 (several petals)
    is fitted on a complete instance.
    """

    c1: complex
    p: int
    k: int
    nu: int
    nu_prime: int
    mu_c1: complex
    q: complex
    cycle_period: int
    A0: complex | None = None
    B0: complex | None = None
    r0: float = DEFAULT_SECTOR_RADIUS

    def __post_init__(self):
        if min(self.p, self.k, self.nu, self.cycle_period) < 1:
            raise ValueError("p, k, nu, cycle_period must be >= 1")
        if math.gcd(self.nu, self.nu_prime) != 1:
            raise ValueError(f"nu'={self.nu_prime} not coprime to nu={self.nu}")
        target = cmath.exp(2j * math.pi * self.nu_prime / self.nu)
        if abs(self.mu_c1 - target) >= 1e-9:
            raise ValueError("mu_c1 is not the root of unity e^(2 pi i nu'/nu)")
        if self.A0 is not None and self.B0 is not None:
            raise ValueError("at most one of A0/B0 may be set")
        if self.A0 is not None and self.nu != 1:
            raise ValueError("A0 belongs to the single-petal case (nu=1)")
        if self.B0 is not None and self.nu < 2:
            raise ValueError("B0 belongs to the multi-petal case (nu>=2)")
        if (self.p * self.k) % self.cycle_period != 0:
            raise ValueError("cycle_period must divide p*k")
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")

    @property
    def is_complete(self) -> bool:
        return self.A0 is not None or self.B0 is not None

    @property
    def multiplier_exponent(self) -> int:
        """Power turning the P-cycle multiplier into the f^k multiplier."""
        return (self.p * self.k) // self.cycle_period

    @property
    def step_period(self) -> int:
        """P-iterations in one f^(k nu) step, the gate step map."""
        return self.p * self.k * self.nu

    def mu_base(self) -> complex:
        """f^k multiplier at c1 (exact root of unity; 1 at satellite roots)."""
        e = self.multiplier_exponent
        return cmath.exp(2j * math.pi * self.nu_prime * e / self.nu)


@dataclass(frozen=True)
class WindowPrediction:
    n: int
    center: complex
    radius: float


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------

def _refine_parabolic(c: complex, period: int, z0: complex,
                      max_steps: int = 64) -> complex:
    """Polish a periodic point of P^period to machine precision.

    Away from multiplier 1 the fixed-point equation has a simple root;
    at a cusp (multiplier ~ 1) the root is multiple, so solve the simple
    equation (P^period)'(z) = 1 instead.
    """
    z = complex(z0)
    v, d, _ = periodic_orbit_derivatives(c, z, period)
    if abs(d - 1) > 0.1:
        for _ in range(max_steps):
            v, d, _ = periodic_orbit_derivatives(c, z, period)
            f = v - z
            if abs(f) < 1e-14:
                return z
            z = z - f / (d - 1)
            if abs(z - z0) > 1.0:
                raise ConvergenceError("refinement left the seed neighborhood")
        return z
    for _ in range(max_steps):
        v, d, s = periodic_orbit_derivatives(c, z, period)
        f = d - 1
        if abs(f) < 1e-14:
            return z
        if s == 0:
            raise ConvergenceError("degenerate second derivative")
        z = z - f / s
        if abs(z - z0) > 1.0:
            raise ConvergenceError("refinement left the seed neighborhood")
    return z


def _divisors(m: int) -> list[int]:
    return [d for d in range(1, m + 1) if m % d == 0]


def _locate_parabolic_point(c1: complex, m: int, q_rough: complex
                            ) -> tuple[complex, int]:
    """Refined parabolic point near q_rough and its minimal P-period."""
    for d in _divisors(m):
        try:
            q = _refine_parabolic(c1, d, q_rough)
        except ConvergenceError:
            continue
        if abs(q - q_rough) > 0.1:
            continue
        v, _, _ = periodic_orbit_derivatives(c1, q, d)
        if abs(v - q) < 1e-10:
            return q, d
    raise ConvergenceError(f"no parabolic cycle found near {q_rough}")


def _root_of_unity(lam: complex, tol: float, max_order: int) -> tuple[int, int]:
    """Minimal coprime (nu, nu') with lam ~ e^(2 pi i nu'/nu)."""
    angle = cmath.phase(lam)
    for nu in range(1, max_order + 1):
        m = round(nu * angle / (2 * math.pi)) % nu
        if nu == 1:
            m = 1  # convention: mu = 1 is written e^(2 pi i * 1/1)
        elif math.gcd(nu, m) != 1:
            continue
        if abs(lam - cmath.exp(2j * math.pi * m / nu)) < tol:
            return nu, m
    raise ConvergenceError(
        f"multiplier {lam} is not within {tol} of a root of unity of order <= {max_order}")


def _poly_iterate_coeffs(c: complex, period: int) -> np.ndarray:
    """Ascending coefficients of P_c^period(z) as a polynomial in z."""
    coeffs = np.array([c, 0, 1], dtype=complex)
    for _ in range(period - 1):
        coeffs = np.convolve(coeffs, coeffs)
        coeffs[0] += c
    return coeffs


def _scan_parabolic_seed(c1: complex, max_cycle: int = 6) -> complex:
    """Find a seed near a root-of-unity cycle of P_c1 by polynomial roots."""
    best: tuple[float, complex] | None = None
    for kp in range(1, max_cycle + 1):
        coeffs = _poly_iterate_coeffs(c1, kp)
        coeffs[1] -= 1  # P^kp(z) - z
        roots = np.roots(coeffs[::-1])
        for z in roots:
            z = complex(z)
            # keep minimal-period kp cycles only
            w = z
            minimal = kp
            for d in range(1, kp):
                w = w * w + c1
                if abs(w - z) < 1e-4:
                    minimal = d
                    break
            if minimal != kp:
                continue
            _, lam, _ = periodic_orbit_derivatives(c1, z, kp)
            try:
                nu, nup = _root_of_unity(lam, 1e-3, _MAX_PETAL_ORDER)
            except ConvergenceError:
                continue
            dev = abs(lam - cmath.exp(2j * math.pi * nup / nu))
            if best is None or dev < best[0]:
                best = (dev, z)
    if best is None:
        raise ConvergenceError(f"no root-of-unity cycle of order <= {max_cycle} at c1={c1}")
    return best[1]


def detect_parabolic_data(c1: complex, p: int, q_seed: complex | None = None,
                          r0: float = DEFAULT_SECTOR_RADIUS,
                          unity_tol: float = _UNITY_TOL) -> SectorConstants:
    """Identify (k, nu, nu', mu) of the parabolic point near q_seed.

    With q_seed omitted, scans low-period cycles of P_c1 for one whose
    multiplier sits near a root of unity.  A0/B0 are left unset; fit them
    with fit_A0/fit_B0 (or use fit_constants for the whole pipeline).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    c1 = complex(c1)
    if q_seed is None:
        q_seed = _scan_parabolic_seed(c1)

    q_hat = None
    for k_try in range(1, 9):
        m = p * k_try
        try:
            res = solve_periodic_point(c1, m, q_seed, tol=1e-9, max_steps=120)
            cand = res.location
        except MinimalPeriodError as err:
            cand = err.value
        except ConvergenceError:
            continue
        if abs(cand - q_seed) <= 1.0:
            q_hat = cand
            trial_period = m
            break
    if q_hat is None:
        raise ConvergenceError(f"no periodic point of P^(p*k) found near {q_seed}")

    q, cycle_period = _locate_parabolic_point(c1, trial_period, q_hat)
    _, lam, _ = periodic_orbit_derivatives(c1, q, cycle_period)
    nu, nu_prime = _root_of_unity(lam, unity_tol, _MAX_PETAL_ORDER)
    k = cycle_period // math.gcd(cycle_period, p)
    mu = cmath.exp(2j * math.pi * nu_prime / nu)
    return SectorConstants(c1, p, k, nu, nu_prime, mu, q=q,
                           cycle_period=cycle_period, r0=r0)


# ---------------------------------------------------------------------------
# Multiplier-expansion fits
# ---------------------------------------------------------------------------

def _check_steps(step_list) -> list[float]:
    steps = [float(s) for s in step_list]
    if len(steps) < 3:
        raise ValueError("need >= 3 steps for extrapolation")
    if any(s <= 0 for s in steps) or any(b >= a for a, b in zip(steps, steps[1:])):
        raise ValueError("step_list must be positive and strictly decreasing")
    return steps


def _extrapolate_to_zero(xs: list[float], ys: list[complex]) -> tuple[complex, float]:
    """Neville polynomial extrapolation of (xs, ys) to x = 0.

    Returns the full-order extrapolant and the change from the one-order-
    lower estimate (a cheap residual for the fit).
    """
    tab = list(ys)
    n = len(xs)
    prev = tab[0]
    for j in range(1, n):
        prev = tab[0]
        for i in range(n - j):
            tab[i] = (xs[i + j] * tab[i] - xs[i] * tab[i + 1]) / (xs[i + j] - xs[i])
    return tab[0], abs(tab[0] - prev)


def _cycle_root_near(c: complex, period: int, seed: complex) -> tuple[complex, complex]:
    """Simple-root Newton for P_c^period(z) = z near seed; (point, multiplier)."""
    z = complex(seed)
    for _ in range(64):
        v, d, _ = periodic_orbit_derivatives(c, z, period)
        f = v - z
        if abs(f) < 1e-14:
            return z, d
        df = d - 1
        if df == 0:
            raise ConvergenceError("degenerate continuation derivative")
        z = z - f / df
        if abs(z - seed) > 0.5:
            raise ConvergenceError("continuation lost the cycle")
    v, d, _ = periodic_orbit_derivatives(c, z, period)
    if abs(v - z) > 1e-10:
        raise ConvergenceError("continuation did not converge")
    return z, d


def _split_pair(constants: SectorConstants, c: complex
                ) -> tuple[tuple[complex, complex], tuple[complex, complex]]:
    """The two cycle points into which the nu=1 parabolic point splits at c.

    Seeds come from the local quadratic model of P^cycle_period(z) - z at
    the unperturbed point, then each root is Newton-polished.
    """
    kp = constants.cycle_period
    q = constants.q
    v, d, s = periodic_orbit_derivatives(c, q, kp)
    f0 = v - q
    f1 = d - 1
    f2 = s
    if f2 == 0:
        raise FitError("vanishing quadratic coefficient in the local model")
    disc = cmath.sqrt(f1 * f1 - 2 * f0 * f2)
    roots = ((-f1 + disc) / f2, (-f1 - disc) / f2)
    out = []
    for delta in roots:
        z, lam = _cycle_root_near(c, kp, q + delta)
        out.append((z, lam))
    if abs(out[0][0] - out[1][0]) < 1e-13:
        raise FitError("fixed-point pair did not split (branch lost)")
    return out[0], out[1]


def fit_A0(constants: SectorConstants, step_list=None) -> complex:
    """Expansion constant of mu(u) = 1 + A0*u + O(u^2) at a single petal.

    u parametrizes c = c1 + u**2; the tracked branch starts with
    Im((mu - 1)/u) > 0 and is continued through the step list, then
    extrapolated to u = 0.
    """
    if constants.nu != 1:
        raise ValueError("fit_A0 requires the single-petal case nu=1 (use fit_B0)")
    steps = _check_steps(step_list if step_list is not None
                         else [0.05 * 0.5 ** j for j in range(6)])
    e = constants.multiplier_exponent
    xs: list[float] = []
    ys: list[complex] = []
    prev: complex | None = None
    for u in steps:
        c = constants.c1 + u * u
        (z_a, lam_a), (z_b, lam_b) = _split_pair(constants, c)
        g_a = (lam_a ** e - 1) / u
        g_b = (lam_b ** e - 1) / u
        if prev is None:
            g = g_a if g_a.imag > g_b.imag else g_b
        else:
            g = g_a if abs(g_a - prev) < abs(g_b - prev) else g_b
        prev = g
        xs.append(u)
        ys.append(g)
    value, _residual = _extrapolate_to_zero(xs, ys)
    return value


def fit_B0(constants: SectorConstants, step_list=None) -> complex:
    """Expansion constant of mu(c) = mu(c1) * (1 + B0*(c-c1) + O((c-c1)^2)).

    Continues the persistent cycle from q through c = c1 + h for the real
    steps h, forms (mu/mu_base - 1)/h, and extrapolates to h = 0.
    """
    if constants.nu < 2:
        raise ValueError("fit_B0 requires the multi-petal case nu>=2 (use fit_A0)")
    steps = _check_steps(step_list if step_list is not None
                         else [1e-2 * 0.5 ** j for j in range(6)])
    mu0 = constants.mu_base()
    e = constants.multiplier_exponent
    kp = constants.cycle_period
    seed = constants.q
    xs: list[float] = []
    ys: list[complex] = []
    for h in steps:
        c = constants.c1 + h
        try:
            z, lam = _cycle_root_near(c, kp, seed)
        except ConvergenceError as err:
            raise FitError(f"cycle continuation failed at h={h}: {err}") from err
        seed = z
        xs.append(h)
        ys.append((lam ** e / mu0 - 1) / h)
    value, _residual = _extrapolate_to_zero(xs, ys)
    return value


def fit_expansion_residual(constants: SectorConstants, step_list=None) -> float:
    """Extrapolation residual of the fit that applies to these constants."""
    if constants.nu == 1:
        fit, steps = fit_A0, step_list if step_list is not None else [0.05 * 0.5 ** j for j in range(6)]
    else:
        fit, steps = fit_B0, step_list if step_list is not None else [1e-2 * 0.5 ** j for j in range(6)]
    full = fit(constants, steps)
    halved = fit(constants, [s / 2 for s in steps])
    return abs(full - halved)


def fit_constants(c1: complex, p: int, q_seed: complex | None = None,
                  step_list=None, r0: float = DEFAULT_SECTOR_RADIUS) -> SectorConstants:
    """detect_parabolic_data plus the matching expansion fit."""
    base = detect_parabolic_data(c1, p, q_seed, r0=r0)
    if base.nu == 1:
        return replace(base, A0=fit_A0(base, step_list))
    return replace(base, B0=fit_B0(base, step_list))


# ---------------------------------------------------------------------------
# Sector and lifted phase
# ---------------------------------------------------------------------------

def _in_mu_sector(ratio_minus_1: complex, r0: float) -> bool:
    a = abs(ratio_minus_1)
    if not (0 < a < r0):
        return False
    return abs(cmath.phase(ratio_minus_1) - math.pi / 2) < math.pi / 8


def sector_contains(constants: SectorConstants, c: complex) -> bool:
    """Does c lie in the sector attached to c1 (multiplier-ratio test)?"""
    if not constants.is_complete:
        raise ValueError("fit A0/B0 before sector tests")
    c = complex(c)
    if c == constants.c1:
        return False
    mu0 = constants.mu_base()
    e = constants.multiplier_exponent
    try:
        if constants.nu == 1:
            pair = _split_pair(constants, c)
            ratios = [(lam ** e) / mu0 - 1 for _z, lam in pair]
        else:
            _z, lam = _cycle_root_near(c, constants.cycle_period, constants.q)
            ratios = [(lam ** e) / mu0 - 1]
    except ConvergenceError:
        return False
    return any(_in_mu_sector(r, constants.r0) for r in ratios)


def tau_leading(constants: SectorConstants, c: complex) -> complex:
    """Leading term of the lifted phase at c.

    -2*pi*i / (A0 * sqrt(c - c1)) for one petal, with the square root
    branch putting A0*sqrt(c-c1) in the upper half plane;
    -2*pi*i / (nu^2 * B0 * (c - c1)) for several petals.
    """
    c = complex(c)
    if c == constants.c1:
        raise ValueError("tau has a pole at c1")
    if constants.nu == 1:
        if constants.A0 is None:
            raise ValueError("A0 not fitted")
        u = cmath.sqrt(c - constants.c1)
        if (constants.A0 * u).imag < 0:
            u = -u
        return -2j * math.pi / (constants.A0 * u)
    if constants.B0 is None:
        raise ValueError("B0 not fitted")
    return -2j * math.pi / (constants.nu ** 2 * constants.B0 * (c - constants.c1))


def gate_transit_count(c: complex, p: int, entry_test=None, exit_test=None,
                       max_iter: int = 1_000_000) -> int:
    """Steps of P^p taken by the critical orbit between entry and exit.

    entry_test/exit_test are predicates on orbit points; entry defaults to
    "armed immediately" and exit to escape past the standard radius, which
    makes the count the full crawl of the critical orbit through the gate.
    The count is (first exit index) - (first entry index).  Orbits that
    never exit (e.g. the attracting side of the parabolic) fail.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if entry_test is None:
        entry_test = lambda z: True
    if exit_test is None:
        exit_test = lambda z: abs(z) > _ESCAPE_EXIT_RADIUS
    c = complex(c)
    z = 0j
    entered = False
    entry_index = 0
    for i in range(max_iter + 1):
        if not entered:
            if entry_test(z):
                entered = True
                entry_index = i
        elif exit_test(z):
            return i - entry_index
        for _ in range(p):
            if abs(z) > _HUGE:
                break
            z = z * z + c
    if not entered:
        raise ConvergenceError("orbit never satisfied the entry test")
    raise ConvergenceError(
        f"orbit trapped: exit test not met within {max_iter} steps (attracting side?)")


def predict_window_center(constants: SectorConstants, n: int,
                          v: float | complex = 0.0) -> WindowPrediction:
    """Predicted center (and scale) of the n-th superattracting window.

    c1 - 4 pi^2 / (A0^2 (n-v)^2) for one petal,
    c1 + 2 pi i / (nu^2 B0 (n-v)) for several; the offset v defaults to 0
    and is absorbed by the Newton refinement in the atlas module.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not constants.is_complete:
        raise ValueError("fit A0/B0 before predicting windows")
    t = n - v
    if constants.nu == 1:
        center = constants.c1 - 4 * math.pi ** 2 / (constants.A0 ** 2 * t * t)
    else:
        center = constants.c1 + 2j * math.pi / (constants.nu ** 2 * constants.B0 * t)
    return WindowPrediction(n, center, abs(center - constants.c1))


# ---------------------------------------------------------------------------
# Serialization and CSV emitters
# ---------------------------------------------------------------------------

def save_constants(constants: SectorConstants, path: str | Path) -> None:
    lines = ["# mandeldecor sector constants"]
    for name, value in [
        ("c1_re", constants.c1.real), ("c1_im", constants.c1.imag),
        ("p", constants.p), ("k", constants.k),
        ("nu", constants.nu), ("nu_prime", constants.nu_prime),
        ("mu_re", constants.mu_c1.real), ("mu_im", constants.mu_c1.imag),
        ("q_re", constants.q.real), ("q_im", constants.q.imag),
        ("cycle_period", constants.cycle_period), ("r0", constants.r0),
    ]:
        lines.append(f"{name} = {value!r}")
    if constants.A0 is not None:
        lines.append(f"A0_re = {constants.A0.real!r}")
        lines.append(f"A0_im = {constants.A0.imag!r}")
    if constants.B0 is not None:
        lines.append(f"B0_re = {constants.B0.real!r}")
        lines.append(f"B0_im = {constants.B0.imag!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_constants(path: str | Path) -> SectorConstants:
    fields: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    a0 = b0 = None
    if "A0_re" in fields:
        a0 = complex(float(fields["A0_re"]), float(fields["A0_im"]))
    if "B0_re" in fields:
        b0 = complex(float(fields["B0_re"]), float(fields["B0_im"]))
    return SectorConstants(
        c1=complex(float(fields["c1_re"]), float(fields["c1_im"])),
        p=int(fields["p"]), k=int(fields["k"]),
        nu=int(fields["nu"]), nu_prime=int(fields["nu_prime"]),
        mu_c1=complex(float(fields["mu_re"]), float(fields["mu_im"])),
        q=complex(float(fields["q_re"]), float(fields["q_im"])),
        cycle_period=int(fields["cycle_period"]),
        A0=a0, B0=b0, r0=float(fields["r0"]),
    )


def write_phase_law_csv(path: str | Path, rows, meta: dict | None = None) -> None:
    """CSV of (eps, transit, transit*sqrt(eps)); meta goes into '#' headers."""
    with open(path, "w", newline="") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key} = {value}\n")
        writer = csv.writer(fh)
        writer.writerow(["eps", "transit", "transit_sqrt_eps"])
        for eps, transit in rows:
            writer.writerow([repr(float(eps)), transit,
                             repr(transit * math.sqrt(eps))])


def write_window_predictions_csv(constants: SectorConstants, n_range: tuple[int, int],
                                 path: str | Path, v: float | complex = 0.0) -> None:
    """Table of predicted window centers (n, Re c_n, Im c_n, radius)."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# c1 = {constants.c1}\n# nu = {constants.nu}\n# v = {v}\n")
        writer = csv.writer(fh)
        writer.writerow(["n", "re", "im", "radius"])
        for n in range(n_range[0], n_range[1] + 1):
            pred = predict_window_center(constants, n, v)
            writer.writerow([n, repr(pred.center.real), repr(pred.center.imag),
                             repr(pred.radius)])
