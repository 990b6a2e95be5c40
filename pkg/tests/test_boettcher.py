"""Potentials, Boettcher coordinates, and the distance estimate."""

import cmath
import math

import numpy as np
import pytest

from mandeldecor.boettcher import (
    NonEscapingPointError,
    PotentialTooSmallError,
    green_julia,
    green_M,
    julia_distance_estimate,
    julia_distance_grid,
    mandel_potential,
    phi_M,
    phi_M_grid,
    phi_M_inverse,
)
from mandeldecor.decoration import julia_sample
from mandeldecor.dynamics import escape_time

SIGMA = -0.77 + 0.18j


def sample_exterior(rng, count, g_lo=1e-4, g_hi=3.0):
    """Random parameters outside M with potential in the given range."""
    out = []
    while len(out) < count:
        c = complex(rng.uniform(-2.2, 0.8), rng.uniform(-1.6, 1.6))
        g = green_M(c, 600)
        if g_lo < g < g_hi:
            out.append((c, g))
    return out


class TestGreenJulia:
    def test_squaring_closed_form(self):
        assert abs(green_julia(0j, 4.0) - math.log(4)) < 1e-12

    def test_inside_filled_julia(self):
        assert green_julia(0j, 0.5) == 0.0

    def test_functional_equation_single(self):
        z = 2.5 + 0j
        g = green_julia(SIGMA, z)
        assert abs(green_julia(SIGMA, z * z + SIGMA) - 2 * g) < 1e-9

    def test_functional_equation_bulk(self):
        rng = np.random.default_rng(3)
        checked = 0
        while checked < 1000:
            z = complex(rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5))
            g = green_julia(SIGMA, z)
            if g == 0.0:
                continue
            assert abs(green_julia(SIGMA, z * z + SIGMA) - 2 * g) < 1e-9
            checked += 1


class TestPhiM:
    def test_asymptotic_identity(self):
        w = phi_M(1e6 + 0j)
        assert abs(w - 1e6) / 1e6 < 1e-5

    def test_modulus_matches_potential(self):
        w = phi_M(0.3 + 0j)
        assert abs(w) > 1
        assert abs(math.log(abs(w)) - green_julia(0.3 + 0j, 0.3 + 0j)) < 1e-9

    def test_negative_real_axis_maps_to_negative_reals(self):
        w = phi_M(-2.5 + 0j)
        assert w.imag == 0 and w.real < -1

    def test_conjugation_symmetry(self):
        rng = np.random.default_rng(11)
        for c, _ in sample_exterior(rng, 60):
            w = phi_M(c)
            wc = phi_M(c.conjugate())
            assert abs(wc - w.conjugate()) <= 1e-13 * abs(w)

    def test_rejects_interior_and_low_potential(self):
        with pytest.raises(PotentialTooSmallError):
            phi_M(0j)
        with pytest.raises(PotentialTooSmallError):
            phi_M(0.26 + 0j)  # escapes, but G_M ~ 3e-9 is below the floor

    def test_grid_agrees_with_scalar(self):
        rng = np.random.default_rng(5)
        pts = [c for c, _ in sample_exterior(rng, 200, g_lo=2e-5)]
        grid, ok = phi_M_grid(np.array(pts))
        assert ok.all()
        for c, w in zip(pts, grid):
            s = phi_M(c)
            assert abs(w - s) <= 1e-12 * abs(s)


class TestPhiMInverse:
    def test_roundtrip(self):
        w = phi_M(0.5 + 0.6j)
        c = phi_M_inverse(w)
        assert abs(c - (0.5 + 0.6j)) < 1e-8

    def test_asymptotic(self):
        c = phi_M_inverse(1e6 + 0j)
        assert abs(c - 1e6) / 1e6 < 1e-4

    def test_zero_ray_is_real(self):
        c = phi_M_inverse(cmath.exp(0.2))
        assert c.imag == 0 and c.real > 0.25

    def test_floor_rejected(self):
        with pytest.raises(ValueError):
            phi_M_inverse(1.00005 + 0j)

    def test_roundtrip_bulk(self):
        rng = np.random.default_rng(17)
        count = 0
        while count < 150:
            logw = rng.uniform(0.01, 1.0)
            arg = rng.uniform(-math.pi, math.pi)
            w = cmath.exp(logw + 1j * arg)
            c = phi_M_inverse(w, tol=1e-9)
            assert abs(phi_M(c) - w) < 1e-8
            count += 1


class TestGreenM:
    def test_on_set(self):
        assert green_M(0j) == 0.0

    def test_far_field(self):
        assert abs(green_M(1e6 + 0j) - math.log(1e6)) / math.log(1e6) < 1e-4

    def test_doubles_under_critical_value_step(self):
        c = 0.26 + 0j
        g = green_M(c)
        assert g > 0
        assert abs(green_julia(c, c * c + c) - 2 * g) < 1e-9

    def test_positive_iff_escaping(self):
        # points escaping extremely late sit in an exponentially thin
        # shell around the boundary where the potential underflows double
        # precision; they are excluded, as is everything that close to M
        rng = np.random.default_rng(23)
        checked = 0
        for _ in range(10000):
            c = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            res = escape_time(c, 0j, 2000)
            if res.escaped and res.iterations > 900:
                continue
            assert (green_M(c, 4000) > 0) == res.escaped
            checked += 1
        assert checked > 9900


class TestDistanceEstimate:
    def test_circle_closed_form(self):
        d = julia_distance_estimate(0j, 2.0)
        assert abs(d - 2 * math.log(2)) < 1e-9
        assert 0.25 <= d <= 4.0  # true distance is 1

    def test_circle_near_boundary(self):
        d = julia_distance_estimate(0j, 1.0001)
        assert 0 < d < 1e-3

    def test_constructed_point_near_cantor_dust(self):
        z_j = julia_sample(SIGMA, 1, seed=5)[0]
        z = z_j * (1 + 1e-4 / abs(z_j))  # radial nudge by 1e-4
        d = julia_distance_estimate(SIGMA, z)
        assert 0 < d <= 4.1e-4  # true distance <= 1e-4, estimate within 4x

    def test_statistical_band(self):
        pts = julia_sample(SIGMA, 200, seed=9)
        nudged = pts * (1 + 1e-4 / np.abs(pts))
        dists = julia_distance_grid(SIGMA, nudged, max_iter=4096)
        assert np.isfinite(dists).all()
        assert (dists <= 4.1e-4).all()
        assert (dists > 0).all()

    def test_non_escaping_rejected(self):
        with pytest.raises(NonEscapingPointError):
            julia_distance_estimate(0j, 0.3)


class TestPotentialBundle:
    def test_green_is_log_modulus(self):
        rng = np.random.default_rng(29)
        for c, _ in sample_exterior(rng, 40, g_lo=2e-5):
            res = mandel_potential(c)
            assert res.boettcher is not None
            assert abs(res.green - math.log(abs(res.boettcher))) < 1e-9
            assert res.gradient is not None

    def test_interior(self):
        res = mandel_potential(-0.1 + 0.1j)
        assert res.green == 0.0 and res.boettcher is None and res.gradient is None
