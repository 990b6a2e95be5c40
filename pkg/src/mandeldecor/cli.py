"""Command-line interface: figure reproduction and verification tables.

Every run echoes its effective configuration (flags override config-file
values, which override defaults) so outputs are reproducible from the
printed header alone.  All randomness is seeded and recorded.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import atlas, decoration, parabolic, render
from .dynamics import ConvergenceError

_PROG = "mandeldecor"


def parse_complex(text: str) -> complex:
    """Accept '1.5', '-0.77+0.18i', '2j', '1e-3-0.25i' styles."""
    cleaned = text.strip().replace("I", "i").replace("i", "j")
    try:
        return complex(cleaned)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"cannot parse complex number {text!r}") from err


def parse_size(text: str) -> tuple[int, int]:
    try:
        if "x" in text:
            w, h = text.lower().split("x")
            return int(w), int(h)
        n = int(text)
        return n, n
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"cannot parse size {text!r} (use WxH)") from err


def parse_eps_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"cannot parse eps list {text!r}") from err


# option name -> (type, default, help); defaults applied after config merge,
# so argparse itself always uses default=None.
_COMMON = {
    "config": (str, None, "key=value config file; flags override it"),
    "threads": (int, None, "worker cap (also MANDELDECOR_THREADS)"),
}

_SPECS: dict[str, dict] = {
    "render-mandel": {
        **_COMMON,
        "center": (parse_complex, -0.6 + 0j, "viewport center"),
        "width": (float, 3.2, "viewport width in complex units"),
        "size": (parse_size, (800, 800), "pixels, WxH"),
        "max-iter": (int, 512, "iteration cap"),
        "out": (str, "mandel.ppm", "output image (.ppm or .png)"),
    },
    "render-julia": {
        **_COMMON,
        "c": (parse_complex, None, "Julia parameter (required)"),
        "center": (parse_complex, 0j, "viewport center"),
        "width": (float, 4.0, "viewport width"),
        "size": (parse_size, (800, 800), "pixels, WxH"),
        "max-iter": (int, 1024, "iteration cap"),
        "out": (str, "julia.ppm", "output image"),
    },
    "render-decorated": {
        **_COMMON,
        "sigma": (parse_complex, -0.77 + 0.18j, "Cantor parameter outside M"),
        "margin": (float, decoration.DEFAULT_MARGIN, "containment margin > 1"),
        "samples": (int, decoration.DEFAULT_SAMPLE_COUNT, "Julia sample size"),
        "sample-seed": (int, decoration.DEFAULT_SAMPLE_SEED, "sampling seed"),
        "center": (parse_complex, 0j, "viewport center"),
        "width": (float, None, "viewport width (default 4*R: shows levels 0..2)"),
        "size": (parse_size, (1000, 1000), "pixels, WxH"),
        "max-iter": (int, 512, "iteration cap"),
        "model-out": (str, None, "also save the decoration model here"),
        "out": (str, "decorated.ppm", "output image"),
    },
    "zoom-copy": {
        **_COMMON,
        "center": (parse_complex, None, "zoom center (or use --centers-csv)"),
        "centers-csv": (str, None, "CenterRecord CSV from find-centers"),
        "row": (int, None, "window index n to pick from the CSV"),
        "width": (float, None, "viewport width (default from the CSV geometry)"),
        "size": (parse_size, (500, 500), "pixels, WxH"),
        "max-iter": (int, 2048, "iteration cap"),
        "out": (str, "zoom.ppm", "output image"),
    },
    "fit-constants": {
        **_COMMON,
        "c1": (parse_complex, None, "parabolic parameter (required)"),
        "p": (int, None, "renormalization period (required)"),
        "q-seed": (parse_complex, None, "seed near the parabolic point (auto if omitted)"),
        "r0": (float, parabolic.DEFAULT_SECTOR_RADIUS, "sector radius"),
        "out": (str, "constants.txt", "output constants file"),
    },
    "find-centers": {
        **_COMMON,
        "constants": (str, None, "constants file (else pass --c1/--p)"),
        "c1": (parse_complex, None, "parabolic parameter"),
        "p": (int, None, "renormalization period"),
        "q-seed": (parse_complex, None, "seed near the parabolic point"),
        "n-min": (int, 5, "first window index"),
        "n-max": (int, 20, "last window index"),
        "period-min": (int, 10, "smallest candidate period"),
        "period-max": (int, 120, "largest candidate period"),
        "tol": (float, 1e-12, "Newton residual tolerance"),
        "out": (str, "centers.csv", "output CSV"),
    },
    "phase-law": {
        **_COMMON,
        "c1": (parse_complex, 0.25 + 0j, "cusp parameter (perturbed along +real)"),
        "p": (int, 1, "steps of P per gate step"),
        "eps": (parse_eps_list, [1e-2, 1e-4, 1e-6], "comma-separated offsets"),
        "max-steps": (int, 1_000_000, "transit cap"),
        "out": (str, "phase_law.csv", "output CSV"),
    },
    "center-law": {
        **_COMMON,
        "constants": (str, None, "constants file (required)"),
        "centers-csv": (str, None, "CenterRecord CSV (required)"),
        "out": (str, None, "optional report file (default: stdout only)"),
    },
    "figure1": {
        **_COMMON,
        "sigma": (parse_complex, -0.77 + 0.18j, "decoration parameter"),
        "c1": (parse_complex, -1.25 + 0j, "parabolic root for the window family"),
        "p": (int, 2, "renormalization period at c1"),
        "n-min": (int, 5, "first window index"),
        "n-max": (int, 20, "last window index"),
        "period-min": (int, 10, "smallest candidate period"),
        "period-max": (int, 120, "largest candidate period"),
        "size": (parse_size, (1000, 1000), "panel pixels, WxH"),
        "outdir": (str, "figure1", "output directory"),
    },
}


def _load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ValueError(f"bad config line (need key = value): {raw!r}")
        values[key.strip().replace("_", "-")] = value.strip()
    return values


def _merge_config(command: str, args: argparse.Namespace) -> dict:
    spec = _SPECS[command]
    from_file: dict[str, str] = {}
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        from_file = _load_config_file(cfg_path)
        unknown = set(from_file) - set(spec)
        if unknown:
            raise ValueError(f"unknown config keys for {command}: {sorted(unknown)}")
    merged = {}
    for name, (typ, default, _help) in spec.items():
        cli_value = getattr(args, name.replace("-", "_"))
        if cli_value is not None:
            merged[name] = cli_value
        elif name in from_file:
            merged[name] = typ(from_file[name])
        else:
            merged[name] = default
    return merged


def _echo_config(command: str, cfg: dict) -> None:
    print(f"# {_PROG} {command}")
    for key in sorted(cfg):
        if key == "config":
            continue
        print(f"# {key} = {cfg[key]}")


def _require(cfg: dict, *names: str) -> None:
    missing = [n for n in names if cfg.get(n) is None]
    if missing:
        raise ValueError(f"missing required option(s): {', '.join('--' + n for n in missing)}")


def _settings(cfg: dict, max_iter_key: str = "max-iter") -> render.RenderSettings:
    return render.RenderSettings(max_iter=cfg.get(max_iter_key) or 512,
                                 workers=cfg.get("threads"))


def _image_format(path: str) -> str:
    return "png" if path.lower().endswith(".png") else "ppm"


def _write(raster: render.Raster, out: str) -> None:
    render.write_image(raster, out, _image_format(out))
    print(f"wrote {out}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_render_mandel(cfg: dict) -> int:
    w, h = cfg["size"]
    vp = render.Viewport(cfg["center"], cfg["width"], w, h)
    _write(render.render_mandelbrot(vp, _settings(cfg)), cfg["out"])
    return 0


def _cmd_render_julia(cfg: dict) -> int:
    _require(cfg, "c")
    w, h = cfg["size"]
    vp = render.Viewport(cfg["center"], cfg["width"], w, h)
    _write(render.render_julia(cfg["c"], vp, _settings(cfg)), cfg["out"])
    return 0


def _build_model(cfg: dict) -> decoration.DecorationModel:
    return decoration.build_model(cfg["sigma"], margin=cfg["margin"],
                                  count=cfg["samples"], seed=cfg["sample-seed"])


def _cmd_render_decorated(cfg: dict) -> int:
    model = _build_model(cfg)
    print(f"# R = {model.R!r}")
    if cfg["model-out"]:
        decoration.save_model(model, cfg["model-out"])
        print(f"wrote {cfg['model-out']}")
    width = cfg["width"] if cfg["width"] is not None else 4 * model.R
    w, h = cfg["size"]
    vp = render.Viewport(cfg["center"], width, w, h)
    _write(render.render_decorated(model, vp, _settings(cfg)), cfg["out"])
    return 0


def _cmd_zoom_copy(cfg: dict) -> int:
    center = cfg["center"]
    width = cfg["width"]
    if center is None:
        _require(cfg, "centers-csv", "row")
        records = {r.n: r for r in atlas.read_centers_csv(cfg["centers-csv"])}
        if cfg["row"] not in records:
            raise ValueError(f"no record with n={cfg['row']} in {cfg['centers-csv']}")
        rec = records[cfg["row"]]
        center = rec.value
        if width is None:
            # a window-scale frame: the copy occupies the inner part
            width = max(20 * rec.seed_distance, 1e-6)
    if width is None:
        width = 0.005
    w, h = cfg["size"]
    vp = render.Viewport(center, width, w, h)
    _write(render.render_mandelbrot(vp, _settings(cfg)), cfg["out"])
    return 0


def _cmd_fit_constants(cfg: dict) -> int:
    _require(cfg, "c1", "p")
    constants = parabolic.fit_constants(cfg["c1"], cfg["p"], cfg["q-seed"], r0=cfg["r0"])
    parabolic.save_constants(constants, cfg["out"])
    kind = "A0" if constants.nu == 1 else "B0"
    value = constants.A0 if constants.nu == 1 else constants.B0
    print(f"q = {constants.q}, cycle_period = {constants.cycle_period}, "
          f"k = {constants.k}, nu = {constants.nu}, nu' = {constants.nu_prime}")
    print(f"{kind} = {value}")
    print(f"wrote {cfg['out']}")
    return 0


def _constants_from(cfg: dict) -> parabolic.SectorConstants:
    if cfg.get("constants"):
        return parabolic.load_constants(cfg["constants"])
    _require(cfg, "c1", "p")
    return parabolic.fit_constants(cfg["c1"], cfg["p"], cfg.get("q-seed"))


def _cmd_find_centers(cfg: dict) -> int:
    constants = _constants_from(cfg)
    records = atlas.find_center_sequence(
        constants, (cfg["n-min"], cfg["n-max"]),
        (cfg["period-min"], cfg["period-max"]), tol=cfg["tol"])
    meta = {"c1": constants.c1, "p": constants.p, "k": constants.k,
            "nu": constants.nu, "n_range": f"{cfg['n-min']}..{cfg['n-max']}",
            "periods": f"{cfg['period-min']}..{cfg['period-max']}", "tol": cfg["tol"]}
    atlas.write_centers_csv(records, cfg["out"], meta)
    print(f"found {len(records)} centers; wrote {cfg['out']}")
    return 0 if records else 1


def _cmd_phase_law(cfg: dict) -> int:
    rows = []
    for eps in cfg["eps"]:
        count = parabolic.gate_transit_count(cfg["c1"] + eps, cfg["p"],
                                             max_iter=cfg["max-steps"])
        rows.append((eps, count))
        print(f"eps = {eps:g}: transit = {count}, transit*sqrt(eps) = "
              f"{count * math.sqrt(eps):.6f}")
    parabolic.write_phase_law_csv(cfg["out"], rows,
                                  {"c1": cfg["c1"], "p": cfg["p"]})
    print(f"wrote {cfg['out']}")
    return 0


def _cmd_center_law(cfg: dict) -> int:
    _require(cfg, "constants", "centers-csv")
    constants = parabolic.load_constants(cfg["constants"])
    records = atlas.read_centers_csv(cfg["centers-csv"])
    fit = atlas.fit_center_law(constants, records)
    if constants.nu >= 2:
        expected = constants.nu ** 2 * constants.B0 / (2j * math.pi)
        label = "nu^2*B0/(2*pi*i)"
    else:
        expected = constants.A0 / (2j * math.pi)
        label = "A0/(2*pi*i) (sign free)"
    lines = [
        f"records: {len(records)}",
        f"slope: {fit.slope}",
        f"intercept: {fit.intercept}",
        f"max relative residual: {fit.max_relative_residual:.3e}",
        f"expected slope {label}: {expected}",
        f"relative slope error: {abs(fit.slope - expected) / abs(expected):.3e}",
    ]
    print("\n".join(lines))
    if cfg["out"]:
        Path(cfg["out"]).write_text("\n".join(lines) + "\n")
        print(f"wrote {cfg['out']}")
    return 0


def _cmd_figure1(cfg: dict) -> int:
    outdir = Path(cfg["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    w, h = cfg["size"]
    settings = render.RenderSettings(workers=cfg.get("threads"))

    model = decoration.build_model(cfg["sigma"])
    decoration.save_model(model, outdir / "decoration_model.txt")
    vp = render.Viewport(0j, 4 * model.R, w, h)
    _write(render.render_decorated(model, vp, settings), str(outdir / "fig1i.ppm"))

    constants = parabolic.fit_constants(cfg["c1"], cfg["p"])
    parabolic.save_constants(constants, outdir / "constants.txt")
    records = atlas.find_center_sequence(
        constants, (cfg["n-min"], cfg["n-max"]),
        (cfg["period-min"], cfg["period-max"]))
    atlas.write_centers_csv(records, outdir / "centers.csv",
                            {"c1": constants.c1, "p": constants.p})
    print(f"found {len(records)} centers")
    if records:
        fit = atlas.fit_center_law(constants, records)
        (outdir / "center_law.txt").write_text(
            f"slope = {fit.slope}\nintercept = {fit.intercept}\n"
            f"max_relative_residual = {fit.max_relative_residual!r}\n")
        picks = sorted({records[0].n, records[len(records) // 2].n, records[-1].n})
        for rec in records:
            if rec.n not in picks:
                continue
            pred = parabolic.predict_window_center(constants, rec.n)
            zoom = render.Viewport(rec.value, 2 * pred.radius, w // 2, h // 2)
            panel = render.render_mandelbrot(zoom, settings)
            _write(panel, str(outdir / f"fig1_zoom_n{rec.n}.ppm"))
    return 0


_HANDLERS = {
    "render-mandel": _cmd_render_mandel,
    "render-julia": _cmd_render_julia,
    "render-decorated": _cmd_render_decorated,
    "zoom-copy": _cmd_zoom_copy,
    "fit-constants": _cmd_fit_constants,
    "find-centers": _cmd_find_centers,
    "phase-law": _cmd_phase_law,
    "center-law": _cmd_center_law,
    "figure1": _cmd_figure1,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=_PROG,
        description="Decorated Mandelbrot sets, parabolic gate asymptotics, "
                    "and superattracting-center atlases for z^2 + c.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, spec in _SPECS.items():
        p = sub.add_parser(command)
        for name, (typ, _default, help_text) in spec.items():
            p.add_argument(f"--{name}", type=typ, default=None, help=help_text)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args.command, args)
        _echo_config(args.command, cfg)
        return _HANDLERS[args.command](cfg)
    except (ValueError, OSError, ConvergenceError) as err:
        print(f"{_PROG}: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
