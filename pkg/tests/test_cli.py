"""Command-line interface: subcommands, config merging, reproducibility."""

import csv
import math

import pytest

from mandeldecor.atlas import read_centers_csv
from mandeldecor.cli import main, parse_complex
from mandeldecor.parabolic import load_constants


class TestParsing:
    def test_complex_forms(self):
        assert parse_complex("-0.77+0.18i") == -0.77 + 0.18j
        assert parse_complex("3") == 3 + 0j
        assert parse_complex("1e-4") == 1e-4 + 0j
        assert parse_complex("2j") == 2j

    def test_bad_complex(self):
        import argparse
        with pytest.raises(argparse.ArgumentTypeError):
            parse_complex("nope")


class TestFitConstants:
    def test_satellite_b0(self, tmp_path, capsys):
        out = tmp_path / "constants.txt"
        rc = main(["fit-constants", "--c1=-1.25", "--p", "2", "--out", str(out)])
        assert rc == 0
        constants = load_constants(out)
        assert abs(constants.B0 - (-4)) < 1e-6
        assert "B0" in capsys.readouterr().out


class TestPhaseLaw:
    def test_third_column_is_pi(self, tmp_path):
        out = tmp_path / "phase.csv"
        rc = main(["phase-law", "--eps", "1e-2,1e-4", "--out", str(out)])
        assert rc == 0
        with open(out) as fh:
            rows = list(csv.reader(line for line in fh if not line.startswith("#")))
        assert rows[0] == ["eps", "transit", "transit_sqrt_eps"]
        for row in rows[1:]:
            assert abs(float(row[2]) - math.pi) < 0.2

    def test_csv_bytes_reproducible(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["phase-law", "--eps", "1e-2,1e-3", "--out", str(a)]) == 0
        assert main(["phase-law", "--eps", "1e-2,1e-3", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestRenderCommands:
    def test_decorated_produces_valid_ppm(self, tmp_path):
        out = tmp_path / "fig1i.ppm"
        rc = main(["render-decorated", "--sigma=-0.77+0.18i",
                   "--size", "96x96", "--max-iter", "300", "--out", str(out)])
        assert rc == 0
        data = out.read_bytes()
        assert data.startswith(b"P6\n96 96\n255\n")
        assert len(data) == len(b"P6\n96 96\n255\n") + 3 * 96 * 96

    def test_mandel_reproducible_across_runs(self, tmp_path):
        args = ["render-mandel", "--size", "64x64", "--max-iter", "150"]
        out1, out2 = tmp_path / "a.ppm", tmp_path / "b.ppm"
        assert main(args + ["--out", str(out1), "--threads", "1"]) == 0
        assert main(args + ["--out", str(out2), "--threads", "7"]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_julia_requires_c(self, capsys):
        rc = main(["render-julia", "--out", "x.ppm"])
        assert rc == 1
        assert "error" in capsys.readouterr().err


class TestConfigFile:
    def test_flags_override_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("width = 2.0\nmax_iter = 99\nsize = 32x32\n"
                       f"out = {tmp_path / 'c.ppm'}\n")
        rc = main(["render-mandel", "--config", str(cfg), "--width", "3.5"])
        assert rc == 0
        echoed = capsys.readouterr().out
        assert "# width = 3.5" in echoed
        assert "# max-iter = 99" in echoed

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("bogus = 1\n")
        rc = main(["render-mandel", "--config", str(cfg)])
        assert rc == 1
        assert "unknown config keys" in capsys.readouterr().err


class TestCenterPipeline:
    def test_find_fit_zoom(self, tmp_path, capsys):
        constants_path = tmp_path / "constants.txt"
        centers_path = tmp_path / "centers.csv"
        assert main(["fit-constants", "--c1=-1.25", "--p", "2",
                     "--out", str(constants_path)]) == 0
        assert main(["find-centers", "--constants", str(constants_path),
                     "--n-min", "6", "--n-max", "10",
                     "--period-min", "15", "--period-max", "45",
                     "--out", str(centers_path)]) == 0
        records = read_centers_csv(centers_path)
        assert len(records) == 5
        strides = {b.period - a.period for a, b in zip(records, records[1:])}
        assert strides == {4}

        report = tmp_path / "law.txt"
        assert main(["center-law", "--constants", str(constants_path),
                     "--centers-csv", str(centers_path),
                     "--out", str(report)]) == 0
        assert "relative slope error" in report.read_text()

        zoom = tmp_path / "zoom.ppm"
        assert main(["zoom-copy", "--centers-csv", str(centers_path),
                     "--row", "8", "--size", "48x48", "--out", str(zoom)]) == 0
        assert zoom.read_bytes().startswith(b"P6\n48 48\n255\n")

    def test_zoom_copy_missing_row(self, tmp_path, capsys):
        rc = main(["zoom-copy", "--centers-csv", str(tmp_path / "none.csv"),
                   "--row", "3"])
        assert rc == 1
