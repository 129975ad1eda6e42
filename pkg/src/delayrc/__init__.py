"""Delay-based reservoir computing with a semiconductor laser.

A single laser with delayed optical feedback, driven by a time-multiplexed
input mask, acts as the reservoir; virtual nodes are samples within one
clock cycle.  The package integrates the delay system, measures memory
capacity and NARMA10 performance, and predicts both from the eigenvalue
spectrum of the linearized dynamics.
"""

from .capacity import (
    CapacityReport,
    TaskSpec,
    capacity,
    capacity_dambre,
    enumerate_tasks,
    legendre_normalized,
    memory_capacity,
    target_from_task,
)
from .config import ConfigError, ExperimentConfig, SweepAxis, load_config
from .laser import LaserParams, SystemState, integrate, rk4_step
from .narma import NarmaResult, baseline_linear, narma10, narma_sequence, run_narma10
from .reservoir import (
    ReservoirClocking,
    StateMatrix,
    build_drive,
    harvest,
    make_mask,
    nrmse,
    train_readout,
    uniform_inputs,
)
from .spectra import (
    ECM,
    CharacteristicSystem,
    Predictors,
    Spectrum,
    characteristic_system,
    characteristic_value,
    class_b_onset,
    ecm,
    newton_refine,
    pcs_gamma,
    pcs_spectrum,
    predictors,
    refine_spectrum,
    resonance_lines,
    solitary_eigenvalues,
    solitary_jacobian,
    solitary_spectrum,
)
from .sweep import SweepResult, run_point, run_sweep, write_csv, write_json

__version__ = "0.1.0"

__all__ = [
    "CapacityReport",
    "TaskSpec",
    "capacity",
    "capacity_dambre",
    "enumerate_tasks",
    "legendre_normalized",
    "memory_capacity",
    "target_from_task",
    "ConfigError",
    "ExperimentConfig",
    "SweepAxis",
    "load_config",
    "LaserParams",
    "SystemState",
    "integrate",
    "rk4_step",
    "NarmaResult",
    "baseline_linear",
    "narma10",
    "narma_sequence",
    "run_narma10",
    "ReservoirClocking",
    "StateMatrix",
    "build_drive",
    "harvest",
    "make_mask",
    "nrmse",
    "train_readout",
    "uniform_inputs",
    "ECM",
    "CharacteristicSystem",
    "Predictors",
    "Spectrum",
    "characteristic_system",
    "characteristic_value",
    "class_b_onset",
    "ecm",
    "newton_refine",
    "pcs_gamma",
    "pcs_spectrum",
    "predictors",
    "refine_spectrum",
    "resonance_lines",
    "solitary_eigenvalues",
    "solitary_jacobian",
    "solitary_spectrum",
    "SweepResult",
    "run_point",
    "run_sweep",
    "write_csv",
    "write_json",
    "__version__",
]
