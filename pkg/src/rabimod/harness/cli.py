"""Command-line interface.

Subcommands: evolve, fidelity, pmax-sweep, flux, flux-sweep, sidebands,
spectrum, reproduce <figN>, converge <figN>.  Settings resolve as
CLI flags > config file > scenario preset.  Every run writes CSV tables
(17 significant digits) plus a JSON metadata sidecar; outputs are
byte-identical across reruns and worker counts.

Exit codes: 0 success, 2 validation error, 3 convergence failure.
"""

from __future__ import annotations

import os

# Pin BLAS threading before numpy initializes: per-point work must stay
# single-threaded so results do not depend on the worker count.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse
import dataclasses
import json
import multiprocessing
import sys
import time
from pathlib import Path

from .. import __version__
from ..errors import RabimodError
from .config import RunSettings, load_config_file, resolve_settings
from .experiments import (
    PRESETS,
    SCENARIO_RUNNERS,
    convergence_report,
    run_evolve,
    run_fidelity,
    run_flux,
    run_flux_sweep,
    run_pmax_sweep,
    run_scenario,
    run_sidebands,
    run_spectrum,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3

_AD_HOC = {
    "evolve": run_evolve,
    "fidelity": run_fidelity,
    "pmax-sweep": run_pmax_sweep,
    "flux": run_flux,
    "flux-sweep": run_flux_sweep,
    "sidebands": run_sidebands,
    "spectrum": run_spectrum,
}


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    run = common.add_argument_group("run")
    run.add_argument("--out", dest="out_dir", help="output directory")
    run.add_argument("--fock", dest="n_fock", type=int, help="field cutoff")
    run.add_argument("--nmax", dest="n_max", type=int, help="harmonic cutoff")
    run.add_argument("--tol", dest="rtol", type=float, help="relative tolerance")
    run.add_argument("--atol", dest="atol", type=float, help="absolute tolerance")
    run.add_argument("--jobs", dest="jobs", type=int, help="parallel sweep workers")
    run.add_argument("--config", dest="config", help="sectioned key=value file")
    model = common.add_argument_group("model")
    model.add_argument("--coupling", dest="coupling", type=float)
    model.add_argument("--delta", dest="delta", type=float,
                       help="qubit minus cavity frequency")
    model.add_argument("--xi", dest="mod_amplitude", type=float,
                       help="modulation amplitude")
    model.add_argument("--nu", dest="mod_freq", type=float,
                       help="modulation frequency")
    model.add_argument("--init", dest="init", choices=("g0", "e0", "coherent"))
    model.add_argument("--alpha", dest="alpha", type=float,
                       help="coherent-state amplitude")
    grid = common.add_argument_group("grid")
    grid.add_argument("--tmax", dest="t_max", type=float,
                      help="trace horizon (inverse qubit-frequency units)")
    grid.add_argument("--samples", dest="samples", type=int)
    grid.add_argument("--nu-start", dest="nu_start", type=float)
    grid.add_argument("--nu-stop", dest="nu_stop", type=float)
    grid.add_argument("--nu-step", dest="nu_step", type=float)
    grid.add_argument("--horizon", dest="horizon", type=float,
                      help="flux horizon (inverse qubit-frequency units)")
    open_sys = common.add_argument_group("dissipation")
    open_sys.add_argument("--gamma-a", dest="gamma_qubit", type=float)
    open_sys.add_argument("--gamma-c", dest="gamma_cavity", type=float)
    other = common.add_argument_group("observables")
    other.add_argument("--effective", dest="effective",
                       choices=("enhanced", "suppressed"))
    other.add_argument("--channels", dest="channels",
                       help="comma-separated basis labels, e.g. g0,e1")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="rabimod",
        description="Modulated qubit-cavity dynamics: traces, sweeps, photon flux.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _AD_HOC:
        sub.add_parser(name, parents=[common])
    rep = sub.add_parser("reproduce", parents=[common])
    rep.add_argument("scenario", choices=sorted(SCENARIO_RUNNERS))
    conv = sub.add_parser("converge", parents=[common])
    conv.add_argument("scenario", choices=sorted(SCENARIO_RUNNERS))
    return parser


def _settings_from_args(args: argparse.Namespace) -> RunSettings:
    scenario = getattr(args, "scenario", None) or "custom"
    preset = dict(PRESETS[scenario], scenario=scenario)
    file_overrides = load_config_file(args.config) if args.config else {}
    skip = {"command", "scenario", "config"}
    cli_overrides = {
        k: v for k, v in vars(args).items() if k not in skip and v is not None
    }
    return resolve_settings(preset, file_overrides, cli_overrides)


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def write_table(table, settings: RunSettings, out_dir: Path, wall_time_s: float):
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{table.name}.csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write(",".join(table.header) + "\n")
        for row in zip(*table.columns):
            fh.write(",".join(_format_cell(v) for v in row) + "\n")

    meta = {
        "figure": table.figure,
        "file": csv_path.name,
        "columns": ",".join(table.header),
        "rows": len(table.columns[0]),
        "package_version": __version__,
        "wall_time_s": round(wall_time_s, 3),
        "notices": " | ".join(table.notices),
    }
    for key, value in dataclasses.asdict(settings).items():
        meta[key] = value
    meta["n_fock_resolved"] = settings.resolved_n_fock
    meta["atol_resolved"] = settings.resolved_atol
    for key, value in table.extra_meta.items():
        meta[f"extra_{key}"] = value
    json_path = out_dir / f"{table.name}.json"
    with open(json_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def _run_with_map(settings: RunSettings, fn):
    if settings.jobs > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(settings.jobs) as pool:
            return fn(pool.map)
    return fn(map)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = _settings_from_args(args)
        out_dir = Path(settings.out_dir)

        if args.command == "converge":
            report = _run_with_map(
                settings, lambda m: convergence_report(settings, map_fn=m)
            )
            for line in report.lines():
                print(line)
            out_dir.mkdir(parents=True, exist_ok=True)
            payload = {
                "scenario": report.scenario,
                "kind": report.kind,
                "gate": report.gate,
                "passed": report.passed,
            }
            for name, (dev_fock, dev_nmax) in report.deviations.items():
                payload[f"dev_fock:{name}"] = dev_fock
                payload[f"dev_nmax:{name}"] = dev_nmax
            path = out_dir / f"converge_{report.scenario}.json"
            with open(path, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
            print(f"wrote {path}")
            return EXIT_OK if report.passed else EXIT_CONVERGENCE

        start = time.perf_counter()
        if args.command == "reproduce":
            tables = _run_with_map(
                settings, lambda m: run_scenario(settings, map_fn=m)
            )
        else:
            runner = _AD_HOC[args.command]
            tables = _run_with_map(
                settings, lambda m: runner(settings, map_fn=m)
            )
        wall = time.perf_counter() - start
        for table in tables:
            csv_path, _ = write_table(table, settings, out_dir, wall)
            print(f"wrote {csv_path}")
            for notice in table.notices:
                print(f"  notice: {notice}")
        return EXIT_OK
    except RabimodError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
