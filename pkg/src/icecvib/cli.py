"""Command-line driver: ``icecvib {total,spectrum,validate}``.

Exit codes: 0 ok, 1 a physics check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .config import ConfigError, LoadedConfig, available_presets, load_config, load_preset
from .continuum import SolverError
from .engine import ContinuumTruncatedError, IcecEngine
from .spectrum import electron_spectrum, spectrum_csv, spectrum_sidecar, thermal_spectrum
from .validation import run_checks
from .xs_data import TableError, TableRangeError

log = logging.getLogger("icecvib")

EXIT_OK, EXIT_PHYSICS, EXIT_INPUT = 0, 1, 2
TOTAL_COLUMNS = ["eps_eV", "sigma_electronic_Mb", "sigma_bb_Mb", "sigma_bd_Mb", "sigma_total_Mb", "sigma_pr_Mb"]


def _fmt(x: float) -> str:
    return f"{x:.10e}"


def _header(cfg: LoadedConfig, what: str) -> str:
    return f"# icecvib {__version__} {what}\n# config_sha256: {cfg.config_hash()}\n"


def _total_row(engine: IcecEngine, eps: float, temperature, initial):
    try:
        if temperature is None:
            b = engine.total_breakdown(eps, initial)
        else:
            b = engine.thermal_breakdown(eps, temperature)
        return [eps, engine.electronic_xs(eps), b.bb, b.bd, b.total, engine.pr_xs(eps)]
    except TableRangeError as exc:
        return exc


def cmd_total(cfg: LoadedConfig, out: Path, threads: int = 1) -> Path:
    run = cfg.run.run.total
    grid = run.grid()
    engine = IcecEngine(cfg.engine_config, eps_max=max(grid))
    initials = [tuple(run.initial)] if run.temperature_K is None else \
        [i for i, _ in engine.thermal_weights(run.temperature_K)]
    engine.prepare(initials)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda e: _total_row(engine, e, run.temperature_K, tuple(run.initial)), grid))

    buf = io.StringIO()
    buf.write(_header(cfg, "total cross section"))
    if run.temperature_K is not None:
        buf.write(f"# temperature_K: {run.temperature_K}\n")
    else:
        buf.write(f"# initial: {run.initial[0]} {run.initial[1]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TOTAL_COLUMNS)
    for eps, row in zip(grid, rows):
        if isinstance(row, TableRangeError):
            log.warning("eps=%.6g eV omitted: %s", eps, row)
            continue
        w.writerow([_fmt(v) for v in row])
    out.mkdir(parents=True, exist_ok=True)
    path = out / "total.csv"
    path.write_text(buf.getvalue())
    return path


def cmd_spectrum(cfg: LoadedConfig, out: Path, threads: int = 1) -> list[Path]:
    run = cfg.run.run.spectrum
    eps = run.epsilon_eV
    engine = IcecEngine(cfg.engine_config, eps_max=eps)
    temps = list(run.temperatures_K) or [None]
    inits = {tuple(run.initial)}
    for t in temps:
        if t is not None:
            inits.update(i for i, _ in engine.thermal_weights(t))
    engine.prepare(sorted(inits))

    def one(t):
        if t is None:
            return electron_spectrum(engine, eps, tuple(run.initial))
        return thermal_spectrum(engine, eps, t)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        spectra = list(pool.map(one, temps))

    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for t, spec in zip(temps, spectra):
        stem = f"spectrum_eps{eps:g}" + ("" if t is None else f"_T{t:g}K")
        grid = spec.default_grid(run.gamma_eV, run.n_points)
        header = {"icecvib": __version__, "config_sha256": cfg.config_hash(), "epsilon_in_eV": f"{eps:g}",
                  "temperature_K": "none" if t is None else f"{t:g}",
                  "initial": "thermal" if t is not None else f"{run.initial[0]} {run.initial[1]}",
                  "gamma_eV": f"{run.gamma_eV:g}"}
        p = out / f"{stem}.csv"
        p.write_text(spectrum_csv(spec, grid, run.gamma_eV, header))
        side = out / f"{stem}.json"
        side.write_text(spectrum_sidecar(spec, run.gamma_eV, {"icecvib": __version__,
                                                                "config_sha256": cfg.config_hash()}) + "\n")
        paths += [p, side]
    return paths


def cmd_validate(cfg: LoadedConfig, stream=None) -> bool:
    stream = stream or sys.stdout
    eps = cfg.run.run.spectrum.epsilon_eV
    engine = IcecEngine(cfg.engine_config, eps_max=max(eps, cfg.run.run.total.eps_max_eV))
    checks = run_checks(engine, eps)
    for c in checks:
        stream.write(c.line() + "\n")
    ok = all(c.passed for c in checks)
    stream.write(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed\n")
    return ok


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="icecvib", description="ICEC cross sections with vibrational structure.")
    ap.add_argument("--version", action="version", version=f"icecvib {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (("total", "sweep the incoming energy and write total cross sections"),
                       ("spectrum", "outgoing-electron spectrum at a fixed incoming energy"),
                       ("validate", "run the internal consistency checks")):
        p = sub.add_parser(name, help=text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="YAML run configuration")
        src.add_argument("--preset", choices=available_presets(), help="bundled configuration")
        p.add_argument("--out", type=Path, help="output directory (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        log.error("--threads must be >= 1")
        return EXIT_INPUT
    try:
        cfg = load_config(args.config) if args.config else load_preset(args.preset)
        out = args.out or cfg.output_dir
        if args.command == "total":
            print(cmd_total(cfg, out, args.threads))
        elif args.command == "spectrum":
            for p in cmd_spectrum(cfg, out, args.threads):
                print(p)
        else:
            return EXIT_OK if cmd_validate(cfg) else EXIT_PHYSICS
    except SolverError as exc:
        log.error("%s", exc)
        return EXIT_PHYSICS
    except (ConfigError, TableError, TableRangeError, ContinuumTruncatedError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
