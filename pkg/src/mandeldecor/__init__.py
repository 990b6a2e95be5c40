"""Numerical toolkit for decorated Mandelbrot sets and parabolic asymptotics.

Subpackages by concern: dynamics (iteration and Newton solvers), boettcher
(potentials and the conformal coordinate of the M-complement), decoration
(rescaled Julia sets and decorated membership), parabolic (multiplier
expansions, lifted-phase laws, window predictions), atlas (superattracting
center sequences), render (deterministic tile-parallel rasterization),
cli (command-line entry point).
"""

from .atlas import (
    CenterRecord,
    SequenceFit,
    find_center_sequence,
    fit_center_law,
    small_filled_julia_contains,
)
from .boettcher import (
    PotentialResult,
    PotentialTooSmallError,
    green_julia,
    green_M,
    julia_distance_estimate,
    mandel_potential,
    phi_M,
    phi_M_inverse,
)
from .decoration import (
    DecorationModel,
    Membership,
    MembershipVerdict,
    build_model,
    choose_R,
    decorated_membership,
    gamma0_contains,
    gamma_level,
    gamma_m_contains,
    julia_sample,
)
from .dynamics import (
    ConvergenceError,
    EscapeResult,
    MinimalPeriodError,
    OrbitRecord,
    PeriodicPointResult,
    escape_time,
    iterate,
    solve_periodic_point,
    solve_superattracting_center,
)
from .parabolic import (
    SectorConstants,
    WindowPrediction,
    detect_parabolic_data,
    fit_A0,
    fit_B0,
    fit_constants,
    gate_transit_count,
    predict_window_center,
    sector_contains,
    tau_leading,
)
from .render import (
    Raster,
    RenderSettings,
    Viewport,
    render_decorated,
    render_julia,
    render_mandelbrot,
    write_image,
)

__version__ = "0.1.0"

__all__ = [
    "CenterRecord", "SequenceFit", "find_center_sequence", "fit_center_law",
    "small_filled_julia_contains",
    "PotentialResult", "PotentialTooSmallError", "green_julia", "green_M",
    "julia_distance_estimate", "mandel_potential", "phi_M", "phi_M_inverse",
    "DecorationModel", "Membership", "MembershipVerdict", "build_model",
    "choose_R", "decorated_membership", "gamma0_contains", "gamma_level",
    "gamma_m_contains", "julia_sample",
    "ConvergenceError", "EscapeResult", "MinimalPeriodError", "OrbitRecord",
    "PeriodicPointResult", "escape_time", "iterate", "solve_periodic_point",
    "solve_superattracting_center",
    "SectorConstants", "WindowPrediction", "detect_parabolic_data", "fit_A0",
    "fit_B0", "fit_constants", "gate_transit_count", "predict_window_center",
    "sector_contains", "tau_leading",
    "Raster", "RenderSettings", "Viewport", "render_decorated", "render_julia",
    "render_mandelbrot", "write_image",
]
