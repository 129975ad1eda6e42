"""Time-multiplexed reservoir pipeline.

One input value u_l enters the laser per clock cycle T.  Within the cycle a
T-periodic piecewise-constant mask g chops the drive into N_V intervals of
length theta = T/N_V (the virtual nodes).  The intensity |E|^2 sampled at the
end of each node interval forms one row of the state matrix, so row l holds
the reservoir response to u_l and, through the system memory, to earlier
inputs.  A linear readout trained on the state matrix approximates targets.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .laser import DriveSignal, LaserParams, integrate

__all__ = [
    "ReservoirClocking",
    "InputSequence",
    "StateMatrix",
    "ReadoutWeights",
    "make_mask",
    "uniform_inputs",
    "build_drive",
    "harvest",
    "train_readout",
    "nrmse",
]

DEFAULT_TRANSIENT = 1e5  # input-free settling time before the drive starts


@dataclass(frozen=True)
class ReservoirClocking:
    """Clock cycle T split into N_V node intervals of length theta, with mask."""

    T: float
    N_V: int
    mask: np.ndarray

    def __post_init__(self) -> None:
        if self.N_V < 1:
            raise ValueError("N_V must be >= 1")
        if self.T <= 0.0:
            raise ValueError("T must be positive")
        mask = np.ascontiguousarray(self.mask, dtype=float)
        if mask.shape != (self.N_V,):
            raise ValueError(f"mask must have length N_V={self.N_V}")
        object.__setattr__(self, "mask", mask)

    @property
    def theta(self) -> float:
        return self.T / self.N_V

    def theta_steps(self, dt: float) -> int:
        steps = self.theta / dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError(
                f"theta={self.theta} must be an integer multiple of dt={dt}"
            )
        return int(round(steps))


def make_mask(N_V: int, seed: int) -> np.ndarray:
    """N_V iid uniform [0,1] mask weights, deterministic in the seed."""
    if N_V < 1:
        raise ValueError("N_V must be >= 1")
    return np.random.default_rng(seed).uniform(0.0, 1.0, N_V)


@dataclass(frozen=True)
class InputSequence:
    """Input values with the seed they came from (None for external data)."""

    values: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", np.ascontiguousarray(self.values, dtype=float)
        )

    def __len__(self) -> int:
        return len(self.values)


def uniform_inputs(
    n: int, seed: int, low: float = -1.0, high: float = 1.0
) -> InputSequence:
    values = np.random.default_rng(seed).uniform(low, high, n)
    return InputSequence(values, seed)


def build_drive(
    inputs: InputSequence,
    clocking: ReservoirClocking,
    dt: float,
    start_step: int = 0,
) -> DriveSignal:
    """Flatten inputs x mask into the piecewise-constant drive I(t)g(t).

    Segment l*N_V + n carries u_l * mask_n and spans [lT + n*theta,
    lT + (n+1)*theta) relative to the drive start.
    """
    theta_steps = clocking.theta_steps(dt)
    values = np.outer(inputs.values, clocking.mask).ravel()
    return DriveSignal(values, theta_steps, start_step)


@dataclass
class StateMatrix:
    """L x N_V reservoir responses plus the metadata needed to reuse them.

    Row j collects |E|^2 at the ends of the N_V node intervals of the clock
    cycle driven by input ``offset + j``; the first ``offset`` cycles are the
    discarded washout buffer.
    """

    S: np.ndarray
    T: float
    N_V: int
    offset: int = 0
    seeds: dict = field(default_factory=dict)
    centered: bool = False
    column_means: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.S = np.ascontiguousarray(self.S, dtype=float)
        if self.S.ndim != 2 or self.S.shape[1] != self.N_V:
            raise ValueError(f"state matrix must be L x N_V={self.N_V}")
        if not np.all(np.isfinite(self.S)):
            raise ValueError("state matrix has non-finite entries")

    @property
    def L(self) -> int:
        return self.S.shape[0]

    def centered_copy(self) -> "StateMatrix":
        means = self.S.mean(axis=0)
        return StateMatrix(
            self.S - means,
            self.T,
            self.N_V,
            self.offset,
            dict(self.seeds),
            centered=True,
            column_means=means,
        )

    def to_csv(self, path: str) -> None:
        seeds = " ".join(f"{k}_seed={v}" for k, v in sorted(self.seeds.items()))
        header = (
            f"delayrc-state-matrix schema=1 L={self.L} N_V={self.N_V} "
            f"T={self.T!r} offset={self.offset} centered={int(self.centered)}"
        )
        if seeds:
            header += " " + seeds
        np.savetxt(path, self.S, delimiter=",", fmt="%.17g", header=header)

    @classmethod
    def from_csv(cls, path: str) -> "StateMatrix":
        with open(path) as fh:
            first = fh.readline()
            if not first.startswith("# delayrc-state-matrix"):
                raise ValueError(f"{path}: not a state matrix file")
            meta: dict[str, str] = {}
            for tok in first[1:].split():
                if "=" in tok:
                    key, val = tok.split("=", 1)
                    meta[key] = val
            S = np.loadtxt(fh, delimiter=",", ndmin=2)
        seeds = {
            k[: -len("_seed")]: int(v)
            for k, v in meta.items()
            if k.endswith("_seed")
        }
        sm = cls(
            S,
            T=float(meta["T"]),
            N_V=int(meta["N_V"]),
            offset=int(meta.get("offset", 0)),
            seeds=seeds,
            centered=bool(int(meta.get("centered", 0))),
        )
        if sm.L != int(meta["L"]):
            raise ValueError(f"{path}: row count {sm.L} != header L={meta['L']}")
        return sm


def harvest(
    params: LaserParams,
    clocking: ReservoirClocking,
    inputs: InputSequence,
    noise_seed: int = 0,
    buffer: int = 5000,
    transient_time: float = DEFAULT_TRANSIENT,
    seeds: dict | None = None,
) -> StateMatrix:
    """Drive the laser with the masked inputs and collect the state matrix.

    The laser first settles without drive for ``transient_time``, then all
    inputs are applied back to back.  The first ``buffer`` input cycles are
    excluded from the returned matrix (washout), so the result has
    L = len(inputs) - buffer rows and ``offset = buffer``.
    """
    n_inputs = len(inputs)
    if not 0 <= buffer < n_inputs:
        raise ValueError(f"buffer={buffer} must lie in [0, {n_inputs})")
    theta_steps = clocking.theta_steps(params.dt)
    t_steps = theta_steps * clocking.N_V
    expected = clocking.N_V * clocking.theta
    if abs(expected - clocking.T) > 1e-9 * max(1.0, clocking.T):
        raise ValueError("clock cycle must equal N_V * theta")
    transient_steps = int(round(transient_time / params.dt))
    if abs(transient_steps * params.dt - transient_time) > 1e-6:
        raise ValueError("transient_time must be a multiple of dt")
    drive = build_drive(inputs, clocking, params.dt, start_step=transient_steps)
    n_steps = transient_steps + n_inputs * t_steps
    L = n_inputs - buffer
    cycle = np.arange(buffer, n_inputs, dtype=np.int64)
    node_end = (np.arange(clocking.N_V, dtype=np.int64) + 1) * theta_steps
    sample_steps = (transient_steps + cycle[:, None] * t_steps + node_end[None, :]).ravel()
    samples, _ = integrate(
        params,
        drive,
        n_steps * params.dt,
        sample_steps * params.dt,
        seed=noise_seed,
    )
    meta = dict(seeds or {})
    if inputs.seed is not None:
        meta.setdefault("input", inputs.seed)
    meta.setdefault("noise", noise_seed)
    return StateMatrix(
        samples.reshape(L, clocking.N_V),
        T=clocking.T,
        N_V=clocking.N_V,
        offset=buffer,
        seeds=meta,
    )


@dataclass(frozen=True)
class ReadoutWeights:
    """Trained linear readout: y = S @ w + bias."""

    w: np.ndarray
    bias: float = 0.0
    regularization: float = 0.0

    def predict(self, S: np.ndarray) -> np.ndarray:
        return S @ self.w + self.bias


def train_readout(
    S: np.ndarray | StateMatrix,
    targets: np.ndarray,
    regularization: float = 0.0,
    bias: bool = True,
) -> ReadoutWeights:
    """Least-squares readout, ridge-regularized when requested.

    With regularization 0 the minimum-norm solution is used (pseudoinverse),
    so rank-deficient state matrices are handled.  The bias column, when
    enabled, is regularized together with the weights.
    """
    X = S.S if isinstance(S, StateMatrix) else np.asarray(S, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(
            f"need S of shape (L, N_V) and targets of length L, "
            f"got {X.shape} and {y.shape}"
        )
    if bias:
        X = np.hstack([X, np.ones((X.shape[0], 1))])
    if regularization < 0.0:
        raise ValueError("regularization must be non-negative")
    if regularization == 0.0:
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    else:
        gram = X.T @ X + regularization * np.eye(X.shape[1])
        coef = np.linalg.solve(gram, X.T @ y)
    if bias:
        return ReadoutWeights(coef[:-1], float(coef[-1]), regularization)
    return ReadoutWeights(coef, 0.0, regularization)


def nrmse(predicted: np.ndarray, target: np.ndarray) -> float:
    """Root mean square error normalized by the target standard deviation."""
    y = np.asarray(predicted, dtype=float)
    yhat = np.asarray(target, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise ValueError("predicted and target must be equal-length vectors")
    var = yhat.var()
    if var <= 0.0:
        raise ValueError("target variance must be positive")
    return math.sqrt(np.sum((yhat - y) ** 2) / (len(y) * var))
