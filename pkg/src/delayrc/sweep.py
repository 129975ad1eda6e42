"""Parameter-grid execution: capacity, benchmark and spectrum per point.

Every grid point is an independent experiment.  Its seeds derive from the
configured purpose seeds XOR (base seed XOR grid index), so re-running any
subset of the grid reproduces identical numbers while distinct points see
distinct input and noise streams.  Workers return plain records; the
orchestrator owns the result list and never shares mutable state with them.

Spectra-only sweeps skip the simulation stage entirely, which is what makes
scanning large predictor grids cheap compared to measuring capacity.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .capacity import memory_capacity
from .config import ExperimentConfig
from .narma import run_narma10
from .reservoir import harvest, uniform_inputs
from .spectra import (
    characteristic_system,
    pcs_spectrum,
    predictors,
    refine_spectrum,
    solitary_spectrum,
)

__all__ = ["SweepResult", "run_point", "run_sweep", "write_csv", "write_json"]

_METRIC_COLUMNS = ("mc_total", "mc1", "mc2", "mc3", "phi_hat", "lambda_hat",
                   "nrmse")


def _point_seeds(config: ExperimentConfig, index: int) -> dict[str, int]:
    point = config.seeds["base"] ^ index
    seeds = {k: v ^ point for k, v in config.seeds.items() if k != "base"}
    seeds["mask"] = config.seeds["mask"]  # one mask across the whole grid
    return seeds


def _predictor_summary(config: ExperimentConfig) -> tuple[float | None, float | None]:
    """(phi_hat, lambda_hat) at the configured clock cycle, or Nones.

    Below threshold there is no lasing mode to linearize about; such points
    carry empty predictor fields rather than failing.
    """
    params = config.laser_params()
    n_eigs = int(config["spectrum.N"])
    try:
        if params.kappa > 0.0:
            spectrum = pcs_spectrum(params, N=n_eigs)
            if config["spectrum.refine"]:
                spectrum = refine_spectrum(
                    spectrum, characteristic_system(params))
        else:
            spectrum = solitary_spectrum(params)
    except (ValueError, NotImplementedError):
        return None, None
    pred = predictors(spectrum, config["clocking.T"],
                      N=min(n_eigs, len(spectrum)))
    return pred.phi_hat, pred.lambda_hat


def run_point(config: ExperimentConfig, index: int = 0,
              parameters: dict | None = None) -> dict:
    """Evaluate one grid point and return its record.

    The record always carries every metric key; fields that were not
    computed (or failed) hold None.  Exceptions from the capacity or
    benchmark stages are caught and reported in the 'error' field.
    """
    if parameters:
        config = config.with_updates(parameters)
    seeds = _point_seeds(config, index)
    record: dict = {
        "index": index,
        "parameters": dict(parameters or {}),
        **{key: None for key in _METRIC_COLUMNS},
        "error": None,
    }
    started = time.perf_counter()
    try:
        record["phi_hat"], record["lambda_hat"] = _predictor_summary(config)
        if not config["spectra_only"]:
            params = config.laser_params()
            clocking = config.clocking()
            inputs = uniform_inputs(int(config["L"]), seeds["input"])
            sm = harvest(
                params, clocking, inputs,
                noise_seed=seeds["noise"],
                buffer=int(config["buffer"]),
                transient_time=float(config["transient_time"]),
                seeds=seeds,
            )
            cap = config["capacity"]
            report = memory_capacity(
                sm, inputs,
                D_max=int(cap["D_max"]),
                cutoff=float(cap["cutoff"]),
                max_delay=int(cap["max_delay"]),
                window=int(cap["window"]),
                stall_limit=int(cap["stall_limit"]),
            )
            record["mc_total"] = float(report.total)
            record["mc1"] = float(report.mc(1))
            record["mc2"] = float(report.mc(2))
            record["mc3"] = float(report.mc(3))
            if config["narma.enabled"]:
                # separate input stream and noise realization for the benchmark
                result = run_narma10(
                    params, clocking,
                    n_train=int(config["narma.n_train"]),
                    n_test=int(config["narma.n_test"]),
                    input_seed=seeds["narma_input"],
                    noise_seed=seeds["noise"] ^ 0x4E41,
                    burn_in=int(config["narma.burn_in"]),
                    regularization=float(config["narma.regularization"]),
                    transient_time=float(config["transient_time"]),
                )
                record["nrmse"] = float(result.nrmse_test)
    except Exception as exc:  # per-point failures stay in the grid
        record["error"] = f"{type(exc).__name__}: {exc}"
    record["wall_seconds"] = time.perf_counter() - started
    return record


def _worker(doc: dict, index: int, parameters: dict) -> dict:
    return run_point(ExperimentConfig(doc), index, parameters)


@dataclass
class SweepResult:
    config: ExperimentConfig
    records: list[dict] = field(default_factory=list)
    wall_seconds: float = 0.0

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.records if r["error"] is not None)

    def parameter_columns(self) -> list[str]:
        return [axis.parameter for axis in self.config.sweep_axes]


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> SweepResult:
    """Evaluate the whole grid, optionally across a process pool.

    Records come back in grid order regardless of completion order.  A
    failed point is recorded, not fatal.
    """
    points = list(config.grid())
    started = time.perf_counter()
    if jobs <= 1 or len(points) <= 1:
        records = [run_point(config, idx, params) for idx, params in points]
    else:
        records = [None] * len(points)  # type: ignore[list-item]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(_worker, config.doc, idx, params): idx
                for idx, params in points
            }
            for future, idx in futures.items():
                records[idx] = future.result()
    return SweepResult(
        config=config,
        records=list(records),
        wall_seconds=time.perf_counter() - started,
    )


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def write_csv(result: SweepResult, path: str) -> None:
    """One row per grid point; floats carry 9 significant digits.

    Wall-clock times stay out of the table (they differ between identical
    runs); re-running the same config and seeds reproduces the file byte for
    byte except for the generated-at comment.
    """
    param_cols = result.parameter_columns()
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    with open(path, "w", newline="") as fh:
        fh.write(f"# delayrc-sweep schema=1 generated={stamp}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", *param_cols, *_METRIC_COLUMNS, "error"])
        for record in result.records:
            row = [str(record["index"])]
            row += [_cell(record["parameters"].get(c)) for c in param_cols]
            row += [_cell(record[c]) for c in _METRIC_COLUMNS]
            row.append(record["error"] or "")
            writer.writerow(row)


def write_json(result: SweepResult, path: str) -> None:
    doc = {
        "schema": 1,
        "config": result.config.doc,
        "wall_seconds": result.wall_seconds,
        "n_failed": result.n_failed,
        "records": result.records,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
