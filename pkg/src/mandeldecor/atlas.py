"""Superattracting window centers near a parabolic root, and fits to them.

Each window W_n holds the center of an embedded copy of M whose critical
point is periodic with period (step_period)*n + N for a fixed offset N.
The offset reflects which return domain the construction used; it is not
computable a priori, so the scan below tries a whole interval of candidate
periods per n and then locks onto the offset that shows up for the most
values of n.  The locked family has constant period stride by
construction, which doubles as the consistency check for the scan.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import (
    ConvergenceError,
    MinimalPeriodError,
    solve_superattracting_center,
)
from .parabolic import SectorConstants, predict_window_center
from .render import resolve_workers

logger = logging.getLogger(__name__)

# Rouche-style guard: accept a center only within radius**(1+beta) of the
# predicted window center.
GUARD_EXPONENT = 1.25


@dataclass(frozen=True)
class CenterRecord:
    n: int
    period: int
    value: complex
    residual: float
    seed_distance: float


@dataclass(frozen=True)
class SequenceFit:
    slope: complex
    intercept: complex
    max_relative_residual: float


def _critical_residual(c: complex, period: int) -> float:
    z = 0j
    for _ in range(period):
        z = z * z + c
    return abs(z)


def _scan_window(constants: SectorConstants, n: int, periods: list[int],
                 tol: float) -> dict[int, tuple[complex, float, float]]:
    """All centers found near window n, keyed by period offset."""
    stride = constants.step_period
    pred = predict_window_center(constants, n)
    guard = pred.radius ** GUARD_EXPONENT
    pool: dict[int, tuple[complex, float, float]] = {}
    for m in periods:
        try:
            s = solve_superattracting_center(m, pred.center, tol=tol)
        except (ConvergenceError, MinimalPeriodError):
            continue
        dist = abs(s - pred.center)
        if dist >= guard:
            continue
        offset = m - stride * n
        if offset not in pool or dist < pool[offset][2]:
            pool[offset] = (s, _critical_residual(s, m), dist)
    return pool


def find_center_sequence(constants: SectorConstants,
                         n_range: tuple[int, int] | Iterable[int],
                         period_candidates: tuple[int, int] | Iterable[int],
                         tol: float = 1e-12,
                         workers: int | None = None) -> list[CenterRecord]:
    """Locate the superattracting centers s_n near c1, one per window index.

    n_range and period_candidates are inclusive (lo, hi) pairs (or explicit
    iterables).  For each n, Newton runs from the predicted window center
    over every candidate period; converged centers within the window guard
    form the candidate pool.  The emitted records all share one period
    offset (the one available for the most n), so consecutive records step
    by exactly k*nu*p in period.  Windows with no candidate in the locked
    family are omitted with a log diagnostic.

    Window scans are independent and run on a thread pool; records are
    merged by index, so the result does not depend on the worker count.
    """
    if not constants.is_complete:
        raise ValueError("fit A0/B0 before scanning for centers")
    ns = list(range(n_range[0], n_range[1] + 1)) if isinstance(n_range, tuple) \
        else sorted(set(int(n) for n in n_range))
    periods = list(range(period_candidates[0], period_candidates[1] + 1)) \
        if isinstance(period_candidates, tuple) \
        else sorted(set(int(m) for m in period_candidates))
    if not ns:
        return []
    stride = constants.step_period

    count = resolve_workers(workers)
    if count == 1 or len(ns) == 1:
        pools = [_scan_window(constants, n, periods, tol) for n in ns]
    else:
        with ThreadPoolExecutor(max_workers=count) as pool:
            pools = list(pool.map(
                lambda n: _scan_window(constants, n, periods, tol), ns))
    candidates = dict(zip(ns, pools))

    votes: dict[int, int] = {}
    for pool in candidates.values():
        for offset in pool:
            votes[offset] = votes.get(offset, 0) + 1
    if not votes:
        return []
    best_offset = min(votes, key=lambda off: (-votes[off], off))

    records: list[CenterRecord] = []
    for n in ns:
        pool = candidates[n]
        if best_offset not in pool:
            logger.warning("window n=%d: no center with period offset %d "
                           "(candidates: %s)", n, best_offset, sorted(pool))
            continue
        value, residual, dist = pool[best_offset]
        records.append(CenterRecord(n, stride * n + best_offset, value, residual, dist))
    return records


def fit_center_law(constants: SectorConstants,
                   records: Sequence[CenterRecord]) -> SequenceFit:
    """Affine fit of the reciprocal center transform against n.

    For several petals 1/(s_n - c1) is affine in n with slope
    nu^2*B0/(2*pi*i); for one petal 1/sqrt(s_n - c1) is affine with slope
    A0/(2*pi*i) up to sign (the square-root branches are aligned pairwise
    before fitting).
    """
    if len(records) < 5:
        raise ValueError("need at least 5 records to fit the center law")
    ns = np.array([r.n for r in sorted(records, key=lambda r: r.n)], dtype=float)
    ss = np.array([r.value for r in sorted(records, key=lambda r: r.n)], dtype=complex)
    if constants.nu >= 2:
        ys = 1.0 / (ss - constants.c1)
    else:
        ys = 1.0 / np.sqrt(ss - constants.c1)
        for i in range(1, len(ys)):
            if (ys[i] * ys[i - 1].conjugate()).real < 0:
                ys[i] = -ys[i]
    design = np.vstack([ns, np.ones_like(ns)]).T.astype(complex)
    (slope, intercept), *_ = np.linalg.lstsq(design, ys, rcond=None)
    fitted = slope * ns + intercept
    rel = np.abs(ys - fitted) / np.abs(ys)
    return SequenceFit(complex(slope), complex(intercept), float(rel.max()))


def small_filled_julia_contains(c: complex, p: int, z: complex,
                                trap_radius: float, max_iter: int = 256) -> bool:
    """Does the P^p-orbit of z stay inside the trap disk?

    The trap disk approximates the range of the renormalized map; orbits
    of points in the small filled Julia set never leave it, while nearby
    outside points are eventually thrown out.  Only the P^p-orbit points
    are tested, not the intermediate P-steps.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    w = complex(z)
    if abs(w) > trap_radius:
        return False
    for _ in range(max_iter):
        for _ in range(p):
            w = w * w + c
            if abs(w) > 1e100:
                return False
        if not (abs(w) <= trap_radius) or not (math.isfinite(w.real) and math.isfinite(w.imag)):
            return False
    return True


# ---------------------------------------------------------------------------
# CSV interface: n, period, Re s_n, Im s_n, residual, seed_distance
# ---------------------------------------------------------------------------

def write_centers_csv(records: Sequence[CenterRecord], path: str | Path,
                      meta: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key} = {value}\n")
        writer = csv.writer(fh)
        writer.writerow(["n", "period", "re", "im", "residual", "seed_distance"])
        for r in records:
            writer.writerow([r.n, r.period, repr(r.value.real), repr(r.value.imag),
                             repr(r.residual), repr(r.seed_distance)])


def read_centers_csv(path: str | Path) -> list[CenterRecord]:
    records = []
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(line for line in fh if not line.startswith("#"))]
    for row in rows[1:]:
        if not row:
            continue
        n, period, re, im, residual, seed_distance = row
        records.append(CenterRecord(int(n), int(period),
                                    complex(float(re), float(im)),
                                    float(residual), float(seed_distance)))
    return records
