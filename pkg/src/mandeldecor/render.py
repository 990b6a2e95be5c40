"""Deterministic tile-parallel rasterization of M, Julia sets, and M(sigma).

Every pixel's value is a pure function of its center coordinate and the
settings, never of the tile layout, so output bytes are identical for any
worker count or tile size.  Tiles are written into disjoint regions of the
output array, which makes a thread pool safe without locks; the numeric
kernels are vectorized per tile and spend their time inside numpy.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boettcher import DEFAULT_POTENTIAL_FLOOR, GREEN_BAILOUT, julia_distance_grid, phi_M_grid
from .decoration import DEFAULT_MAX_LEVEL, DecorationModel, level_from_modulus

# Pixels smaller than this are below double-precision resolution for the
# dynamics involved; deeper zooms need arbitrary precision (out of scope).
MIN_PIXEL_SIZE = 1e-13

ENV_THREADS = "MANDELDECOR_THREADS"

# Verdict codes in classification grids.
CLASS_IN_M = 0
CLASS_DECORATION = 1
CLASS_OUTSIDE = 2

LEVEL_PALETTE = (
    (230, 60, 50), (250, 160, 30), (240, 220, 60), (110, 200, 70),
    (40, 170, 160), (70, 120, 220), (150, 80, 220), (220, 80, 170),
)


@dataclass(frozen=True)
class Viewport:
    """A pixel grid embedded in the complex plane (square pixels)."""

    center: complex
    width: float
    pixels_x: int
    pixels_y: int

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")
        if self.pixels_x < 1 or self.pixels_y < 1:
            raise ValueError("pixel counts must be >= 1")
        if self.pixel_size <= MIN_PIXEL_SIZE:
            raise ValueError(
                f"pixel size {self.pixel_size:.3g} below the double-precision cap "
                f"{MIN_PIXEL_SIZE:.0e}; deeper zooms are unsupported")

    @property
    def pixel_size(self) -> float:
        return self.width / self.pixels_x

    def grid(self, y0: int = 0, y1: int | None = None,
             x0: int = 0, x1: int | None = None) -> np.ndarray:
        """Complex pixel centers for a sub-rectangle (row 0 at +imag)."""
        y1 = self.pixels_y if y1 is None else y1
        x1 = self.pixels_x if x1 is None else x1
        step = self.pixel_size
        xs = self.center.real + (np.arange(x0, x1) - (self.pixels_x - 1) / 2) * step
        ys = self.center.imag + ((self.pixels_y - 1) / 2 - np.arange(y0, y1)) * step
        return xs[None, :] + 1j * ys[:, None]


@dataclass(frozen=True)
class Raster:
    """Row-major 8-bit RGB image."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        if len(self.pixels) != 3 * self.width * self.height:
            raise ValueError("pixel buffer length must be 3*width*height")

    @classmethod
    def from_array(cls, rgb: np.ndarray) -> "Raster":
        if rgb.dtype != np.uint8 or rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError("expected (h, w, 3) uint8 array")
        return cls(rgb.shape[1], rgb.shape[0], rgb.tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, 3)


@dataclass(frozen=True)
class RenderSettings:
    max_iter: int = 512
    escape_radius: float = 4.0
    tile_size: int = 64
    workers: int | None = None
    boundary_px: float = 0.75        # distance-estimate band width, in pixels
    proximity_scale: float = 0.5     # decoration thickness, in pixels
    potential_floor: float = DEFAULT_POTENTIAL_FLOOR
    m_max: int = DEFAULT_MAX_LEVEL
    shade_period: float = 8.0        # potential bands per palette cycle
    level_palette: tuple = field(default=LEVEL_PALETTE)


def resolve_workers(requested: int | None) -> int:
    """Worker count: explicit request (or cpu count), capped by the env var."""
    count = requested if requested and requested > 0 else (os.cpu_count() or 1)
    env = os.environ.get(ENV_THREADS)
    if env:
        count = min(count, max(1, int(env)))
    return max(1, count)


# ---------------------------------------------------------------------------
# Field kernels
# ---------------------------------------------------------------------------

@dataclass
class EscapeField:
    """Per-pixel escape data: radius escape time plus smooth potential."""

    escaped: np.ndarray      # bool: left the escape radius within max_iter
    iterations: np.ndarray   # int64: first index past the radius (0 if bounded)
    potential: np.ndarray    # float: Green potential, 0 where bounded
    gradient: np.ndarray     # float: |grad log Phi| analogue, 0 where bounded
    distance: np.ndarray     # float: exterior distance estimate, inf where bounded


def _escape_field(C: np.ndarray, escape_radius: float, max_iter: int,
                  parameter_plane: bool, c_fixed: complex = 0j) -> EscapeField:
    """Iterate a grid to the potential bailout, accumulating derivatives.

    parameter_plane=True iterates the critical orbit of each pixel-as-c
    (derivative in c, Mandelbrot case); otherwise each pixel is a z0 for
    the fixed c (derivative in z, Julia case).
    """
    shape = C.shape
    if parameter_plane:
        z = np.zeros(shape, dtype=complex)
        dz = np.zeros(shape, dtype=complex)
        cs = C
    else:
        z = C.astype(complex).copy()
        dz = np.ones(shape, dtype=complex)
        cs = np.full(shape, complex(c_fixed))

    esc_it = np.zeros(shape, dtype=np.int64)
    bail_it = np.zeros(shape, dtype=np.int64)
    az = np.abs(z)
    seen_radius = az > escape_radius
    bailed = az > GREEN_BAILOUT
    alive = ~bailed

    def step(sel: np.ndarray) -> None:
        if parameter_plane:
            dz[sel] = 2 * z[sel] * dz[sel] + 1
        else:
            dz[sel] = 2 * z[sel] * dz[sel]
        z[sel] = z[sel] ** 2 + cs[sel]

    i = 0
    for i in range(1, max_iter + 1):
        if not alive.any():
            break
        step(alive)
        az = np.abs(z)
        newly_radius = alive & ~seen_radius & (az > escape_radius)
        esc_it[newly_radius] = i
        seen_radius |= newly_radius
        newly_bail = alive & (az > GREEN_BAILOUT)
        bail_it[newly_bail] = i
        bailed |= newly_bail
        alive &= ~newly_bail

    # Pixels past the escape radius but short of the potential bailout at
    # max_iter: a few more squarings always finish the job.
    strag = alive & seen_radius
    while strag.any() and i < max_iter + 16:
        i += 1
        step(strag)
        newly_bail = strag & (np.abs(z) > GREEN_BAILOUT)
        bail_it[newly_bail] = i
        bailed |= newly_bail
        strag &= ~newly_bail

    escaped = seen_radius & bailed
    potential = np.zeros(shape)
    gradient = np.zeros(shape)
    distance = np.full(shape, np.inf)
    if escaped.any():
        # parameter plane: z is P^n(0), one step past the critical value
        # whose potential G_M is; julia plane: z0 is the point itself
        shift = 1 if parameter_plane else 0
        scale = np.exp2(-(bail_it[escaped] - shift).astype(float))
        azf = np.abs(z[escaped])
        adz = np.abs(dz[escaped])
        logz = np.log(azf)
        potential[escaped] = scale * logz
        with np.errstate(divide="ignore"):
            gradient[escaped] = scale * adz / azf
            distance[escaped] = azf * logz / adz
    return EscapeField(escaped, esc_it, potential, gradient, distance)


def mandel_field(vp: Viewport, settings: RenderSettings,
                 y0: int = 0, y1: int | None = None,
                 x0: int = 0, x1: int | None = None) -> EscapeField:
    return _escape_field(vp.grid(y0, y1, x0, x1), settings.escape_radius,
                         settings.max_iter, parameter_plane=True)


def julia_field(c: complex, vp: Viewport, settings: RenderSettings,
                y0: int = 0, y1: int | None = None,
                x0: int = 0, x1: int | None = None) -> EscapeField:
    # |z| > max(2, |c|) guarantees monotone growth, so widen the radius for
    # parameters outside the default disk.
    radius = max(settings.escape_radius, abs(c) + 0.5)
    return _escape_field(vp.grid(y0, y1, x0, x1), radius,
                         settings.max_iter, parameter_plane=False, c_fixed=c)


def classify_grid(model: DecorationModel, C: np.ndarray, pixel_size: float,
                  settings: RenderSettings) -> tuple[np.ndarray, np.ndarray, EscapeField]:
    """Decorated-set classification of a grid of parameters.

    Returns (verdict, level, field): verdict holds CLASS_* codes, level the
    decoration index (-1 off the decorations).  Sub-floor potentials
    resolve to CLASS_IN_M, matching decorated_membership.  The decoration
    thickness is proximity_scale pixels transported to rescaled-Julia
    coordinates through the local derivative of the level map.
    """
    f = _escape_field(C, settings.escape_radius, settings.max_iter,
                      parameter_plane=True)
    verdict = np.full(C.shape, CLASS_IN_M, dtype=np.int8)
    level = np.full(C.shape, -1, dtype=np.int64)
    two_log_R = 2 * math.log(model.R)
    pot = f.potential
    far = f.escaped & (pot >= two_log_R)
    zone = f.escaped & (pot >= settings.potential_floor) & (pot < two_log_R)

    w, ok = phi_M_grid(C, active=zone)
    zone &= ok
    mods = np.where(zone, np.abs(w), 0.5)
    m = level_from_modulus(mods, model.R, settings.m_max)
    m = np.where(zone, m, -1)

    Z = np.where(zone, w, 0j)
    for j in range(settings.m_max):
        sq = m > j
        if not sq.any():
            break
        Z[sq] = Z[sq] ** 2
    y = Z * model.R ** -1.5
    cand = m >= 0
    dist = julia_distance_grid(model.sigma, np.where(cand, y, 3.0))
    with np.errstate(over="ignore"):
        tol = (settings.proximity_scale * pixel_size * np.abs(y)
               * np.exp2(np.maximum(m, 0).astype(float)) * f.gradient)
    dec = cand & (dist < tol)

    verdict[far] = CLASS_OUTSIDE
    verdict[zone & ~dec] = CLASS_OUTSIDE
    verdict[dec] = CLASS_DECORATION
    level[dec] = m[dec]
    return verdict, level, f


# ---------------------------------------------------------------------------
# Coloring
# ---------------------------------------------------------------------------

def _exterior_shade(potential: np.ndarray, shade_period: float) -> np.ndarray:
    """Smooth cyclic shading of exterior pixels from the potential."""
    v = -np.log2(np.maximum(potential, 1e-300))
    ang = 2 * math.pi * v / shade_period
    rgb = np.empty(potential.shape + (3,))
    rgb[..., 0] = 0.5 + 0.42 * np.cos(ang)
    rgb[..., 1] = 0.5 + 0.42 * np.cos(ang + 0.9)
    rgb[..., 2] = 0.55 + 0.42 * np.cos(ang + 1.8)
    return rgb


def _boundary_darken(rgb: np.ndarray, distance: np.ndarray,
                     pixel_size: float, boundary_px: float) -> np.ndarray:
    band = boundary_px * pixel_size
    factor = np.clip(np.where(np.isfinite(distance), distance, band) / band, 0.0, 1.0)
    return rgb * factor[..., None]


def _to_bytes(rgb: np.ndarray, escaped: np.ndarray) -> np.ndarray:
    out = (np.clip(rgb, 0.0, 1.0) * 255).astype(np.uint8)
    # Escaped pixels never collide with the pure-black interior color.
    out[escaped] = np.maximum(out[escaped], 1)
    out[~escaped] = 0
    return out


def _tile_bounds(h: int, w: int, tile: int):
    for y0 in range(0, h, tile):
        for x0 in range(0, w, tile):
            yield y0, min(y0 + tile, h), x0, min(x0 + tile, w)


def _run_tiles(vp: Viewport, settings: RenderSettings, kernel) -> Raster:
    out = np.empty((vp.pixels_y, vp.pixels_x, 3), dtype=np.uint8)
    bounds = list(_tile_bounds(vp.pixels_y, vp.pixels_x, settings.tile_size))

    def work(b):
        y0, y1, x0, x1 = b
        out[y0:y1, x0:x1] = kernel(y0, y1, x0, x1)

    workers = resolve_workers(settings.workers)
    if workers == 1 or len(bounds) == 1:
        for b in bounds:
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, bounds))
    return Raster.from_array(out)


def render_mandelbrot(vp: Viewport, settings: RenderSettings | None = None) -> Raster:
    """Escape-time rendering of M with potential shading and boundary bands."""
    settings = settings or RenderSettings()

    def kernel(y0, y1, x0, x1):
        f = mandel_field(vp, settings, y0, y1, x0, x1)
        rgb = _exterior_shade(f.potential, settings.shade_period)
        rgb = _boundary_darken(rgb, f.distance, vp.pixel_size, settings.boundary_px)
        return _to_bytes(rgb, f.escaped)

    return _run_tiles(vp, settings, kernel)


def render_julia(c: complex, vp: Viewport, settings: RenderSettings | None = None) -> Raster:
    """Escape-time rendering of J(P_c) (distance-banded; dust has no interior)."""
    settings = settings or RenderSettings()

    def kernel(y0, y1, x0, x1):
        f = julia_field(c, vp, settings, y0, y1, x0, x1)
        rgb = _exterior_shade(f.potential, settings.shade_period)
        rgb = _boundary_darken(rgb, f.distance, vp.pixel_size, settings.boundary_px)
        return _to_bytes(rgb, f.escaped)

    return _run_tiles(vp, settings, kernel)


def render_decorated(model: DecorationModel, vp: Viewport,
                     settings: RenderSettings | None = None) -> Raster:
    """Rendering of the decorated set: M black, levels by palette, exterior shaded."""
    settings = settings or RenderSettings()
    palette = np.array(settings.level_palette, dtype=np.uint8)

    def kernel(y0, y1, x0, x1):
        C = vp.grid(y0, y1, x0, x1)
        verdict, level, f = classify_grid(model, C, vp.pixel_size, settings)
        rgb = _exterior_shade(f.potential, settings.shade_period)
        out = (np.clip(rgb, 0.0, 1.0) * 255).astype(np.uint8)
        out = np.maximum(out, 1)
        out[verdict == CLASS_IN_M] = 0
        dec = verdict == CLASS_DECORATION
        out[dec] = palette[level[dec] % len(palette)]
        return out

    return _run_tiles(vp, settings, kernel)


# ---------------------------------------------------------------------------
# Image I/O
# ---------------------------------------------------------------------------

def write_image(raster: Raster, path: str | Path, fmt: str = "ppm") -> None:
    """Write PPM-P6 (bit-exact: 'P6\\n<w> <h>\\n255\\n' + raw RGB) or PNG."""
    path = Path(path)
    if fmt == "ppm":
        header = f"P6\n{raster.width} {raster.height}\n255\n".encode("ascii")
        try:
            path.write_bytes(header + raster.pixels)
        except OSError as err:
            raise OSError(f"writing {path}: {err}") from err
    elif fmt == "png":
        try:
            from PIL import Image
        except ImportError as err:
            raise RuntimeError("PNG output needs Pillow (pip install Pillow)") from err
        img = Image.frombytes("RGB", (raster.width, raster.height), raster.pixels)
        img.save(path, format="PNG")
    else:
        raise ValueError(f"unsupported format {fmt!r}; use 'ppm' or 'png'")


def read_image(path: str | Path) -> Raster:
    """Read back a PPM-P6 file written by write_image."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P6"):
        raise ValueError(f"{path}: not a P6 PPM file")
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[2] != b"255":
        raise ValueError(f"{path}: unexpected PPM header")
    w, h = (int(tok) for tok in parts[1].split())
    return Raster(w, h, parts[3][: 3 * w * h])
