"""Command-line driver.

    optoscatter --preset fig4b --out results/
    optoscatter --config run.ini --override params.g0=1.2 --override grid.points=4001
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import PRESETS, ConfigError, RunConfig, build, read_config_file, resolve, validate
from .model import dressed_levels, rabi_limit_levels
from .overlap import compute_overlaps
from .scattering import AUTO, ScatteringError
from .spectra import _fmt, grid_truncate, sweep, write_sweep_csv
from .wavepacket import occupation_spectra, write_occupation_csv, write_occupation_summary

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _write_overlaps(path: Path, beta: float, n_max: int) -> None:
    U = np.asarray(compute_overlaps(beta, n_max))
    with open(path, "w") as fh:
        fh.write(",".join(["n"] + [f"m{m}" for m in range(n_max + 1)]) + "\n")
        for n, row in enumerate(U):
            fh.write(",".join([str(n)] + [_fmt(v) for v in row]) + "\n")


def _write_manifest(path: Path, cfg: RunConfig, extra: dict) -> None:
    p = cfg.params
    lines = [
        f"version = {__version__}",
        f"mode = {cfg.mode}",
        f"preset = {cfg.preset or ''}",
        f"params.g0 = {_fmt(p.g0)}",
        f"params.lambda = {_fmt(p.lam)}",
        f"params.Gamma = {_fmt(p.Gamma)}",
        f"params.gamma_a = {_fmt(p.gamma_a)}",
        f"params.delta_ac = {_fmt(p.delta_ac)}",
        f"params.n0 = {p.n0}",
        f"params.geometry = {p.geometry.value}",
        f"params.delta = {_fmt(p.delta)}",
        f"grid.min = {_fmt(cfg.grid.delta_c_min)}",
        f"grid.max = {_fmt(cfg.grid.delta_c_max)}",
        f"grid.points = {cfg.grid.points}",
        f"solver.n_max = {cfg.solver.n_max}",
        f"solver.convergence_tol = {_fmt(cfg.solver.convergence_tol)}",
        f"solver.auto_nmax_step = {cfg.solver.auto_nmax_step}",
    ]
    if cfg.wavepacket is not None:
        lines += [f"wavepacket.delta_0 = {_fmt(cfg.wavepacket.delta_0)}", f"wavepacket.d = {_fmt(cfg.wavepacket.d)}"]
    for key, value in extra.items():
        lines.append(f"{key} = {_fmt(value) if isinstance(value, float) else value}")
    path.write_text("\n".join(lines) + "\n")


def run(cfg: RunConfig, dump_overlaps: bool = False, log=print) -> int:
    """Execute one run and write its outputs under ``cfg.output_path``."""
    out = Path(cfg.output_path)
    out.mkdir(parents=True, exist_ok=True)
    extra: dict = {}
    n_max = None
    try:
        if cfg.mode == "sweep":
            sw = sweep(cfg.params, cfg.grid, cfg.solver)
            with open(out / "spectrum.csv", "w") as fh:
                write_sweep_csv(sw, fh)
            n_max = sw.n_max_used
            flux = sw.flux
            extra = {
                "n_max_used": n_max,
                "residual_max": sw.residual_max,
                "flux_min": float(flux.min()),
                "flux_max": float(flux.max()),
                "flux_error_max": sw.flux_error_max,
            }
            log(f"sweep: {cfg.grid.points} points, n_max={n_max}, max|T+R-1|={sw.flux_error_max:.3e}")
        elif cfg.mode == "wavepacket":
            spec = occupation_spectra(cfg.params, cfg.wavepacket, cfg.solver)
            with open(out / "occupation.csv", "w") as fh:
                write_occupation_csv(spec, fh)
            with open(out / "occupation_summary.txt", "w") as fh:
                write_occupation_summary(spec, fh)
            n_max = spec.n_max_used
            extra = {
                "n_max_used": n_max,
                "integral_S_T": spec.total_T,
                "integral_S_R": spec.total_R,
                "loss": spec.loss,
            }
            log(f"wavepacket: int S_T={spec.total_T:.6f}, int S_R={spec.total_R:.6f}, loss={spec.loss:.3e}")
        elif cfg.mode == "levels":
            ns = range(cfg.level_count)
            exact = dressed_levels(cfg.params, ns)
            approx = rabi_limit_levels(cfg.params, ns)
            with open(out / "levels.csv", "w") as fh:
                fh.write("n,branch,energy,mixing_angle,rabi_limit_energy\n")
                for lv, ap in zip(exact, approx):
                    fh.write(f"{lv.n},{lv.branch.value},{_fmt(lv.energy)},{_fmt(lv.mixing_angle)},{_fmt(ap.energy)}\n")
            log(f"levels: {2 * cfg.level_count} dressed levels written")
        elif cfg.mode == "overlaps_dump":
            dump_overlaps = True
        if dump_overlaps:
            if n_max is None:
                if cfg.solver.n_max == AUTO:
                    n_max, _ = grid_truncate(cfg.params, cfg.grid.values(), cfg.solver)
                else:
                    n_max = int(cfg.solver.n_max)
            _write_overlaps(out / "overlaps.csv", cfg.params.g0, n_max)
            extra.setdefault("n_max_used", n_max)
            log(f"overlaps: {n_max + 1}x{n_max + 1} matrix for beta={cfg.params.g0:g}")
    except ScatteringError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _write_manifest(out / "manifest", cfg, extra)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="optoscatter",
        description="Single-photon transmission/reflection spectra of a waveguide-coupled atom-optomechanical cavity.",
    )
    ap.add_argument("--config", metavar="PATH", help="INI-style run configuration")
    ap.add_argument("--preset", metavar="NAME", help=f"built-in scenario ({', '.join(sorted(PRESETS))})")
    ap.add_argument("--out", metavar="DIR", help="output directory (overrides run.output)")
    ap.add_argument(
        "--override", metavar="KEY=VALUE", action="append", default=[], help="e.g. params.g0=1.5 (repeatable)"
    )
    ap.add_argument("--dump-overlaps", action="store_true", help="also write the overlap matrix as CSV")
    ap.add_argument("--quiet", action="store_true", help="only report errors")
    ap.add_argument("--list-presets", action="store_true", help="print preset names and exit")
    ap.add_argument("--version", action="version", version=__version__)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    log = (lambda *a, **k: None) if args.quiet else print
    if args.list_presets:
        for name in sorted(PRESETS):
            print(name)
        return EXIT_OK
    overrides = list(args.override)
    if args.out:
        overrides.append(f"run.output={args.out}")
    try:
        file_raw = read_config_file(args.config) if args.config else None
        raw = resolve(file_raw, args.preset, tuple(overrides))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    diags = validate(raw)
    for d in diags:
        if d.level == "error" or not args.quiet:
            print(d, file=sys.stderr)
    if any(d.level == "error" for d in diags):
        return EXIT_CONFIG
    return run(build(raw), dump_overlaps=args.dump_overlaps, log=log)


if __name__ == "__main__":
    sys.exit(main())
