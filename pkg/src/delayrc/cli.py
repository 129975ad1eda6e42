"""Command-line interface.

Subcommands cover the single-point tools (simulate, capacity, narma10,
spectrum, lines) and the grid runner (sweep).  Every subcommand reads the
same JSON configuration, patched by positional ``key=value`` overrides.

Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 sweep
completed with per-point failures.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .capacity import memory_capacity
from .config import ConfigError, ExperimentConfig, load_config
from .laser import integrate
from .narma import run_narma10
from .reservoir import build_drive, harvest, uniform_inputs
from .spectra import (
    characteristic_system,
    pcs_spectrum,
    predictors,
    refine_spectrum,
    resonance_lines,
    solitary_spectrum,
)
from .sweep import run_sweep, write_csv, write_json

__all__ = ["main"]

_DEFAULT_OUT = {
    "simulate": "trajectory.csv",
    "capacity": "capacity.json",
    "narma10": "narma10.json",
    "spectrum": "spectrum.json",
    "sweep": "sweep.csv",
    "lines": "lines.csv",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delayrc",
        description="Delay-based laser reservoir: simulation, capacity, "
                    "benchmarks and eigenvalue predictors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH",
                       help="JSON configuration file (defaults apply "
                            "when omitted)")
        p.add_argument("--out", metavar="PATH",
                       help=f"output path (default: {_DEFAULT_OUT[name]})")
        p.add_argument("--paper-scale", action="store_true",
                       help="full-size runs: L=250000, buffer=100000, "
                            "25000 benchmark inputs")
        p.add_argument("overrides", nargs="*", metavar="key=value",
                       help="configuration overrides, e.g. laser.kappa=0.1")
        return p

    add("simulate", "integrate the driven laser and dump the trajectory")
    add("capacity", "measure memory capacity at a single operating point")
    add("narma10", "train and score the NARMA10 benchmark")
    add("spectrum", "eigenvalue spectrum and clock-cycle predictors")

    sweep = add("sweep", "evaluate a parameter grid")
    sweep.add_argument("--jobs", type=int,
                       default=int(os.environ.get("DELAYRC_JOBS", "1")),
                       help="worker processes (env DELAYRC_JOBS, default 1)")
    sweep.add_argument("--json-out", metavar="PATH",
                       help="also write the full records as JSON")

    lines = add("lines", "predictor scan over the clock cycle")
    lines.add_argument("--t-min", type=float, default=50.0)
    lines.add_argument("--t-max", type=float, default=600.0)
    lines.add_argument("--t-count", type=int, default=111)
    lines.add_argument("--band", type=float, default=0.05 * math.pi,
                       help="half-width of the resonance flag around "
                            "multiples of pi")
    return parser


def _spectrum_for(config: ExperimentConfig):
    params = config.laser_params()
    n_eigs = int(config["spectrum.N"])
    if params.kappa > 0.0:
        spectrum = pcs_spectrum(params, N=n_eigs)
        if config["spectrum.refine"]:
            spectrum = refine_spectrum(spectrum, characteristic_system(params))
    else:
        spectrum = solitary_spectrum(params)
    return params, spectrum


def _cmd_simulate(config: ExperimentConfig, out: str) -> int:
    params = config.laser_params()
    clocking = config.clocking()
    transient = float(config["simulate.transient"])
    duration = float(config["simulate.duration"])
    stride = int(config["simulate.stride"])
    n_inputs = int(math.ceil((transient + duration) / clocking.T)) + 1
    inputs = uniform_inputs(n_inputs, config.seeds["input"])
    drive = build_drive(inputs, clocking, params.dt)
    step = stride * params.dt
    sample_times = transient + np.arange(int(duration / step) + 1) * step
    samples, _ = integrate(params, drive, transient + duration,
                           sample_times, seed=config.seeds["noise"])
    with open(out, "w") as fh:
        fh.write("t,intensity\n")
        for t, s in zip(sample_times, samples):
            fh.write(f"{t:.9g},{s:.9g}\n")
    print(f"wrote {len(samples)} samples to {out}")
    return 0


def _cmd_capacity(config: ExperimentConfig, out: str) -> int:
    params = config.laser_params()
    clocking = config.clocking()
    seeds = config.seeds
    inputs = uniform_inputs(int(config["L"]), seeds["input"])
    sm = harvest(params, clocking, inputs, noise_seed=seeds["noise"],
                 buffer=int(config["buffer"]),
                 transient_time=float(config["transient_time"]), seeds=seeds)
    cap = config["capacity"]
    report = memory_capacity(
        sm, inputs,
        D_max=int(cap["D_max"]), cutoff=float(cap["cutoff"]),
        max_delay=int(cap["max_delay"]), window=int(cap["window"]),
        stall_limit=int(cap["stall_limit"]),
    )
    report.to_json(out)
    degrees = " ".join(
        f"MC{d}={report.mc(d):.3f}" for d in sorted(report.per_degree))
    print(f"MC={report.total:.3f} {degrees} "
          f"(evaluated {report.n_evaluated} tasks) -> {out}")
    return 0


def _cmd_narma10(config: ExperimentConfig, out: str) -> int:
    params = config.laser_params()
    clocking = config.clocking()
    seeds = config.seeds
    result = run_narma10(
        params, clocking,
        n_train=int(config["narma.n_train"]),
        n_test=int(config["narma.n_test"]),
        input_seed=seeds["narma_input"],
        noise_seed=seeds["noise"],
        burn_in=int(config["narma.burn_in"]),
        regularization=float(config["narma.regularization"]),
        transient_time=float(config["transient_time"]),
        baseline_lags=clocking.N_V,
    )
    doc = {
        "schema": 1,
        "nrmse_train": result.nrmse_train,
        "nrmse_test": result.nrmse_test,
        "baseline_test": result.baseline_test,
        "n_train": result.n_train,
        "n_test": result.n_test,
    }
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"NRMSE train={result.nrmse_train:.4f} test={result.nrmse_test:.4f} "
          f"linear-baseline={result.baseline_test:.4f} -> {out}")
    return 0


def _cmd_spectrum(config: ExperimentConfig, out: str) -> int:
    params, spectrum = _spectrum_for(config)
    n_used = min(int(config["spectrum.N"]), len(spectrum))
    pred = predictors(spectrum, config["clocking.T"], N=n_used)
    doc = {
        "schema": 1,
        "spectrum": json.loads(spectrum.to_json()),
        "predictors": json.loads(pred.to_json()),
    }
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{len(spectrum)} eigenvalues, T={pred.T:g}: "
          f"phi_hat={pred.phi_hat:.4f} lambda_hat={pred.lambda_hat:.4f} "
          f"-> {out}")
    return 0


def _cmd_sweep(config: ExperimentConfig, out: str, jobs: int,
               json_out: str | None) -> int:
    result = run_sweep(config, jobs=jobs)
    write_csv(result, out)
    if json_out:
        write_json(result, json_out)
    n = len(result.records)
    print(f"{n} grid points in {result.wall_seconds:.1f} s, "
          f"{result.n_failed} failed -> {out}")
    if result.n_failed:
        for record in result.records:
            if record["error"] is not None:
                print(f"  point {record['index']} "
                      f"{record['parameters']}: {record['error']}",
                      file=sys.stderr)
        return 3
    return 0


def _cmd_lines(config: ExperimentConfig, out: str, t_min: float,
               t_max: float, t_count: int, band: float) -> int:
    _, spectrum = _spectrum_for(config)
    T_values = np.linspace(t_min, t_max, t_count)
    records = resonance_lines(
        spectrum, T_values,
        N=min(int(config["spectrum.N"]), len(spectrum)), band=band)
    with open(out, "w") as fh:
        fh.write("T,phi_hat,lambda_hat,resonant,degenerate\n")
        for r in records:
            fh.write(f"{r['T']:.9g},{r['phi_hat']:.9g},{r['lambda_hat']:.9g},"
                     f"{int(r['resonant'])},{int(r['degenerate'])}\n")
    n_res = sum(r["resonant"] for r in records)
    print(f"{len(records)} clock cycles, {n_res} flagged resonant -> {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, args.overrides,
                             paper_scale=args.paper_scale)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    out = args.out or config["out"] or _DEFAULT_OUT[args.command]

    try:
        if args.command == "simulate":
            return _cmd_simulate(config, out)
        if args.command == "capacity":
            return _cmd_capacity(config, out)
        if args.command == "narma10":
            return _cmd_narma10(config, out)
        if args.command == "spectrum":
            return _cmd_spectrum(config, out)
        if args.command == "sweep":
            if args.jobs < 1:
                print("error: --jobs must be >= 1", file=sys.stderr)
                return 1
            return _cmd_sweep(config, out, args.jobs, args.json_out)
        if args.command == "lines":
            return _cmd_lines(config, out, args.t_min, args.t_max,
                              args.t_count, args.band)
        raise AssertionError(f"unhandled command {args.command}")
    except (ValueError, NotImplementedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
