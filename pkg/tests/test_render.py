"""Rasterization: determinism, classification counts, and image I/O."""

import numpy as np
import pytest

from mandeldecor.decoration import build_model
from mandeldecor.dynamics import escape_time
from mandeldecor.render import (
    CLASS_DECORATION,
    CLASS_IN_M,
    Raster,
    RenderSettings,
    Viewport,
    classify_grid,
    julia_field,
    mandel_field,
    read_image,
    render_decorated,
    render_julia,
    render_mandelbrot,
    write_image,
)

SIGMA = -0.77 + 0.18j


class TestWorkers:
    def test_env_variable_caps_workers(self, monkeypatch):
        from mandeldecor.render import resolve_workers
        monkeypatch.setenv("MANDELDECOR_THREADS", "2")
        assert resolve_workers(8) == 2
        assert resolve_workers(1) == 1
        monkeypatch.delenv("MANDELDECOR_THREADS")
        assert resolve_workers(8) == 8


class TestViewport:
    def test_grid_is_tile_independent(self):
        vp = Viewport(0.3 - 0.2j, 2.5, 64, 48)
        full = vp.grid()
        sub = vp.grid(10, 30, 5, 25)
        assert np.array_equal(full[10:30, 5:25], sub)

    def test_precision_cap(self):
        with pytest.raises(ValueError):
            Viewport(0j, 9e-13, 10000, 10000)

    def test_validation(self):
        with pytest.raises(ValueError):
            Viewport(0j, -1.0, 10, 10)
        with pytest.raises(ValueError):
            Viewport(0j, 1.0, 0, 10)


class TestMandelbrot:
    def test_center_pixel_is_interior(self):
        vp = Viewport(0j, 4.0, 101, 101)
        img = render_mandelbrot(vp).to_array()
        assert tuple(img[50, 50]) == (0, 0, 0)
        assert (img.reshape(-1, 3) != 0).any()

    def test_worker_count_and_tiling_invariance(self):
        vp = Viewport(-0.6 + 0j, 3.0, 150, 130)
        base = render_mandelbrot(vp, RenderSettings(max_iter=200, workers=1))
        wide = render_mandelbrot(vp, RenderSettings(max_iter=200, workers=8))
        odd = render_mandelbrot(vp, RenderSettings(max_iter=200, workers=3,
                                                   tile_size=17))
        assert base.pixels == wide.pixels == odd.pixels

    def test_interior_pixels_do_not_escape(self):
        vp = Viewport(-0.5 + 0j, 3.0, 120, 120)
        settings = RenderSettings(max_iter=300)
        img = render_mandelbrot(vp, settings).to_array()
        grid = vp.grid()
        black = np.argwhere((img == 0).all(axis=2))
        rng = np.random.default_rng(2)
        for y, x in black[rng.integers(0, len(black), 100)]:
            assert not escape_time(grid[y, x], 0j, settings.max_iter).escaped

    def test_boundary_band_present_near_sequence_center(self):
        vp = Viewport(-1.25 - 1j * np.pi / 80, 0.02, 120, 120)
        f = mandel_field(vp, RenderSettings(max_iter=1500))
        band = np.isfinite(f.distance) & (f.distance < vp.pixel_size)
        assert band.sum() > 0
        assert (~f.escaped).sum() > 0  # interior of the small copy shows


class TestJulia:
    def test_circle_case(self):
        vp = Viewport(0j, 4.0, 101, 101)
        f = julia_field(0j, vp, RenderSettings(max_iter=300))
        mods = np.abs(vp.grid())
        # interior pixels are exactly the open unit disk samples
        assert ((mods < 0.99) <= ~f.escaped).all()
        assert ((mods > 1.01) <= f.escaped).all()
        band = np.isfinite(f.distance) & (f.distance < vp.pixel_size)
        band_mods = mods[band]
        assert band.sum() > 0
        assert np.all(np.abs(band_mods - 1) < 0.1)

    def test_segment_julia_set(self):
        # J(P_-2) = [-2, 2]; the odd grid has one row exactly on it and
        # the neighboring rows exactly one pixel away
        vp = Viewport(0j, 5.0, 201, 201)
        f = julia_field(-2 + 0j, vp, RenderSettings(max_iter=600))
        grid = vp.grid()
        bounded = ~f.escaped
        assert bounded.sum() > 0
        assert np.abs(grid[bounded].imag).max() == 0.0
        assert np.abs(grid[bounded].real).max() <= 2.0
        band = np.isfinite(f.distance) & (f.distance < 1.5 * vp.pixel_size)
        ys, xs = np.nonzero(band)
        assert len(ys) > 0
        assert np.abs(grid[ys, xs].imag).max() < 2.5 * vp.pixel_size
        assert np.abs(grid[ys, xs].real).max() <= 2.05

    def test_cantor_dust_has_no_interior(self):
        vp = Viewport(0j, 4.0, 201, 201)
        f = julia_field(SIGMA, vp, RenderSettings(max_iter=2000))
        assert f.escaped.all()

    def test_render_runs(self):
        vp = Viewport(0j, 4.0, 64, 64)
        raster = render_julia(SIGMA, vp, RenderSettings(max_iter=400))
        assert len(raster.pixels) == 3 * 64 * 64


@pytest.fixture(scope="module")
def model():
    return build_model(SIGMA)


class TestDecorated:
    def test_class_counts(self, model):
        vp = Viewport(0j, 4 * model.R, 240, 240)
        settings = RenderSettings(max_iter=400)
        verdict, level, _f = classify_grid(model, vp.grid(), vp.pixel_size, settings)
        assert (verdict == CLASS_IN_M).sum() > 0
        for m in (0, 1):
            assert (level == m).sum() > 0, f"no level-{m} pixels"

    def test_decoration_pixels_sit_in_annuli(self, model):
        from mandeldecor.boettcher import phi_M
        vp = Viewport(0j, 4 * model.R, 160, 160)
        settings = RenderSettings(max_iter=400)
        grid = vp.grid()
        verdict, level, _f = classify_grid(model, grid, vp.pixel_size, settings)
        ys, xs = np.nonzero(verdict == CLASS_DECORATION)
        rng = np.random.default_rng(6)
        take = rng.integers(0, len(ys), min(40, len(ys)))
        for y, x in zip(ys[take], xs[take]):
            w = phi_M(grid[y, x])
            m = level[y, x]
            assert model.R ** (2.0 ** -m) < abs(w) <= model.R ** (2.0 ** (-m + 1)) * (1 + 1e-9)
            assert 1 < abs(w) <= model.R ** 2 * (1 + 1e-9)

    def test_worker_invariance(self, model):
        vp = Viewport(0j, 4 * model.R, 120, 96)
        a = render_decorated(model, vp, RenderSettings(max_iter=300, workers=1))
        b = render_decorated(model, vp, RenderSettings(max_iter=300, workers=6,
                                                       tile_size=41))
        assert a.pixels == b.pixels


class TestImageIO:
    def test_ppm_bit_exact(self, tmp_path):
        raster = Raster(1, 1, b"\xff\xff\xff")
        path = tmp_path / "white.ppm"
        write_image(raster, path)
        assert path.read_bytes() == b"P6\n1 1\n255\n\xff\xff\xff"

    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        rgb = rng.integers(0, 256, (7, 5, 3), dtype=np.uint8)
        raster = Raster.from_array(rgb)
        path = tmp_path / "img.ppm"
        write_image(raster, path)
        back = read_image(path)
        assert back == raster

    def test_unsupported_format(self, tmp_path):
        with pytest.raises(ValueError):
            write_image(Raster(1, 1, b"\0\0\0"), tmp_path / "x.gif", fmt="gif")

    def test_png(self, tmp_path):
        pytest.importorskip("PIL")
        from PIL import Image
        rng = np.random.default_rng(1)
        rgb = rng.integers(0, 256, (6, 9, 3), dtype=np.uint8)
        path = tmp_path / "img.png"
        write_image(Raster.from_array(rgb), path, fmt="png")
        with Image.open(path) as img:
            assert np.array_equal(np.asarray(img), rgb)

    def test_write_error_has_path_context(self, tmp_path):
        with pytest.raises(OSError, match="no/such"):
            write_image(Raster(1, 1, b"\0\0\0"), tmp_path / "no/such/dir.ppm")
