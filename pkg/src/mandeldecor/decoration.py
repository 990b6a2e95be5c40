"""The rescaled Julia set, its square-root preimages, and decorated membership.

A decoration model fixes a Cantor parameter sigma outside M and a scale
R > 1 with J(P_sigma) inside the annulus A(R**-1/2, R**1/2).  The level-0
decoration is J(P_sigma) blown up by R**3/2 (so it sits in A(R, R**2));
level m is its preimage under z -> z**(2**m), which lives in the annulus
A(R**2**-m, R**2**-(m-1)).  Pulling all levels back through Phi_M glues
them onto M: that union is the decorated Mandelbrot set this module
classifies points against.

Membership in the level-0 set is a distance-threshold test (the set is a
measure-zero Cantor set; exact membership is meaningless per pixel).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boettcher import (
    NonEscapingPointError,
    PotentialTooSmallError,
    green_M,
    julia_distance_estimate,
    julia_distance_grid,
    phi_M,
)
from .dynamics import escape_time

DEFAULT_SAMPLE_COUNT = 4096
DEFAULT_SAMPLE_SEED = 1
DEFAULT_MARGIN = 1.1
DEFAULT_PROXIMITY_TOL = 1e-3
# Below R**2**-12 the level annuli are thinner than double-precision pixels.
DEFAULT_MAX_LEVEL = 12
_BURN_IN = 128


class Membership(enum.Enum):
    IN_M = "in_m"
    ON_DECORATION = "on_decoration"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class MembershipVerdict:
    kind: Membership
    level: int | None
    witness_potential: float


@dataclass(frozen=True)
class DecorationModel:
    sigma: complex
    R: float
    julia_points: np.ndarray
    proximity_tol: float
    sample_seed: int
    sample_count: int

    def __post_init__(self):
        if self.R <= 1:
            raise ValueError("R must exceed 1")
        mods = np.abs(self.julia_points)
        lo, hi = self.R ** -0.5, self.R ** 0.5
        if not ((mods > lo).all() and (mods < hi).all()):
            raise ValueError("julia_points violate the A(R^-1/2, R^1/2) containment")

    @property
    def log_R(self) -> float:
        return math.log(self.R)


def julia_sample(sigma: complex, count: int = DEFAULT_SAMPLE_COUNT,
                 seed: int = DEFAULT_SAMPLE_SEED) -> np.ndarray:
    """Sample J(P_sigma) by inverse iteration z <- +-sqrt(z - sigma).

    Deterministic for a fixed seed.  Requires sigma outside M (Cantor
    Julia set); the random-sign backward orbit then equidistributes over
    the dust after a burn-in.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    sigma = complex(sigma)
    if not escape_time(sigma, 0j, 10000).escaped:
        raise ValueError(f"sigma={sigma} lies in M; its Julia set is not a Cantor set")
    rng = np.random.default_rng(seed)
    beta = (1 + np.sqrt(1 - 4 * sigma)) / 2  # repelling fixed point, on J
    z = np.full(count, beta, dtype=complex)
    for _ in range(_BURN_IN):
        signs = rng.integers(0, 2, count) * 2 - 1
        z = signs * np.sqrt(z - sigma)
    return z


def choose_R(sigma: complex, margin: float = DEFAULT_MARGIN,
             count: int = DEFAULT_SAMPLE_COUNT,
             seed: int = DEFAULT_SAMPLE_SEED) -> float:
    """Smallest sampled scale R (times margin) with J inside A(R^-1/2, R^1/2)."""
    if margin <= 1:
        raise ValueError("margin must be > 1 for strict containment")
    mods = np.abs(julia_sample(sigma, count, seed))
    hi = float(mods.max())
    lo = float(mods.min())
    if lo == 0.0:
        raise ValueError("sampled Julia point at the origin")  # cannot happen off M
    return margin * max(hi * hi, lo ** -2)


def build_model(sigma: complex, margin: float = DEFAULT_MARGIN,
                count: int = DEFAULT_SAMPLE_COUNT, seed: int = DEFAULT_SAMPLE_SEED,
                proximity_tol: float = DEFAULT_PROXIMITY_TOL) -> DecorationModel:
    points = julia_sample(sigma, count, seed)
    mods = np.abs(points)
    R = margin * max(float(mods.max()) ** 2, float(mods.min()) ** -2)
    return DecorationModel(complex(sigma), R, points, proximity_tol, seed, count)


def gamma0_contains(model: DecorationModel, Z: complex) -> bool:
    """Is Z within the proximity tolerance of the rescaled Julia set?"""
    z = Z * model.R ** -1.5
    try:
        d = julia_distance_estimate(model.sigma, z)
    except NonEscapingPointError:
        d = 0.0  # impossible for Cantor J, guarded anyway
    return d < model.proximity_tol


def gamma0_distance_many(model: DecorationModel, Z: np.ndarray) -> np.ndarray:
    """Vectorized distance from Z to the rescaled Julia set (in J coordinates)."""
    return julia_distance_grid(model.sigma, np.asarray(Z, dtype=complex) * model.R ** -1.5)


def level_from_modulus(modulus, R: float, m_max: int = DEFAULT_MAX_LEVEL):
    """Level index m with R**2**-m < modulus <= R**2**-(m-1), else -1.

    Works on scalars and arrays; -1 encodes "no level" (|w| <= 1, beyond
    R**2, or deeper than m_max).
    """
    a = np.asarray(modulus, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.log(a) / math.log(R)
        t = -np.log2(np.where(g > 0, g, 1.0))
    m = np.where((g > 0) & (t >= -1), np.floor(t).astype(np.int64) + 1, -1)
    m = np.where(m > m_max, -1, m)
    if np.isscalar(modulus) or m.ndim == 0:
        return int(m)
    return m


def gamma_level(model: DecorationModel, w: complex,
                m_max: int = DEFAULT_MAX_LEVEL) -> int | None:
    """The unique decoration level whose annulus contains |w|, if any."""
    m = level_from_modulus(abs(w), model.R, m_max)
    return None if m < 0 else m


def gamma_m_contains(model: DecorationModel, w: complex,
                     m_max: int = DEFAULT_MAX_LEVEL) -> bool:
    """Is w in the level-m decoration for m = gamma_level(w)?"""
    m = gamma_level(model, w, m_max)
    if m is None:
        return False
    return gamma0_contains(model, w ** (2 ** m))


def decorated_membership(model: DecorationModel, c: complex,
                         max_iter: int = 512,
                         m_max: int = DEFAULT_MAX_LEVEL) -> MembershipVerdict:
    """Classify a parameter against M union the pulled-back decorations.

    Points whose potential is below the Phi_M branch-safety floor resolve
    toward M: at rendering resolution they are indistinguishable from it,
    and the decorations never overpaint M.
    """
    c = complex(c)
    if not escape_time(c, 0j, max_iter).escaped:
        return MembershipVerdict(Membership.IN_M, None, 0.0)
    g = green_M(c, 2 * max_iter)
    if g >= 2 * model.log_R:
        return MembershipVerdict(Membership.OUTSIDE, None, g)
    try:
        w = phi_M(c)
    except PotentialTooSmallError:
        return MembershipVerdict(Membership.IN_M, None, 0.0)
    m = gamma_level(model, w, m_max)
    if m is not None and gamma0_contains(model, w ** (2 ** m)):
        return MembershipVerdict(Membership.ON_DECORATION, m, g)
    return MembershipVerdict(Membership.OUTSIDE, None, g)


# ---------------------------------------------------------------------------
# Serialization: enough to rebuild the model bit-for-bit (points come from
# the recorded seed, not from the file).
# ---------------------------------------------------------------------------

def save_model(model: DecorationModel, path: str | Path) -> None:
    lines = [
        "# mandeldecor decoration model",
        f"sigma_re = {model.sigma.real!r}",
        f"sigma_im = {model.sigma.imag!r}",
        f"R = {model.R!r}",
        f"proximity_tol = {model.proximity_tol!r}",
        f"sample_seed = {model.sample_seed}",
        f"sample_count = {model.sample_count}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path: str | Path) -> DecorationModel:
    fields: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    sigma = complex(float(fields["sigma_re"]), float(fields["sigma_im"]))
    seed = int(fields["sample_seed"])
    count = int(fields["sample_count"])
    points = julia_sample(sigma, count, seed)
    return DecorationModel(sigma, float(fields["R"]), points,
                           float(fields["proximity_tol"]), seed, count)
