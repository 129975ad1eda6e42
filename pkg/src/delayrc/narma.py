"""NARMA10 benchmark: target generation, reservoir runs, linear baseline.

The tenth-order nonlinear autoregressive moving average sequence

    A_{n+1} = 0.3 A_n + 0.05 A_n (Σ_{i=0}^{9} A_{n-i}) + 1.5 u_{n-9} u_n + 0.1

driven by iid inputs u_n ~ U[0, 0.5] is a standard fading-memory benchmark.
The reservoir is trained to output A_{n+1} from its response to inputs up to
u_n; performance is the NRMSE on a held-out test segment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .laser import LaserParams
from .reservoir import (
    DEFAULT_TRANSIENT,
    InputSequence,
    ReservoirClocking,
    harvest,
    make_mask,
    nrmse,
    train_readout,
)

__all__ = ["NarmaSequence", "NarmaResult", "narma10", "run_narma10", "baseline_linear"]

DIVERGENCE_LIMIT = 1e3


@dataclass(frozen=True)
class NarmaSequence:
    """Inputs u in [0, 0.5] and the aligned targets A.

    ``targets[n]`` is the sequence value produced after consuming
    ``inputs[n]``, i.e. the quantity a model that has seen u_0..u_n should
    predict.  ``burn_in`` rows at the start should be excluded from training
    to wash out the zero initialization.
    """

    inputs: np.ndarray
    targets: np.ndarray
    burn_in: int = 100


def narma10(u: np.ndarray) -> np.ndarray:
    """Iterate the NARMA10 recurrence over u; A and u history start at zero.

    Returns A aligned so that A[n] is the output after input u[n].  Raises on
    divergence (|A| > 1e3), which the recurrence exhibits for inputs outside
    the standard [0, 0.5] regime.
    """
    u = np.asarray(u, dtype=float)
    n = len(u)
    if n < 10:
        raise ValueError("need at least 10 inputs")
    # state A_k for k = n-9..n kept in a sliding window, zero-initialized
    window = np.zeros(10)
    out = np.empty(n)
    for k in range(n):
        a_n = window[-1]
        u_lag = u[k - 9] if k >= 9 else 0.0
        a_next = 0.3 * a_n + 0.05 * a_n * window.sum() + 1.5 * u_lag * u[k] + 0.1
        if not np.isfinite(a_next) or abs(a_next) > DIVERGENCE_LIMIT:
            raise FloatingPointError(f"NARMA10 diverged at step {k}")
        window[:-1] = window[1:]
        window[-1] = a_next
        out[k] = a_next
    return out


def narma_sequence(n: int, seed: int, burn_in: int = 100) -> NarmaSequence:
    """Fresh uniform [0, 0.5] inputs of length n with their NARMA10 targets."""
    u = np.random.default_rng(seed).uniform(0.0, 0.5, n)
    return NarmaSequence(u, narma10(u), burn_in)


@dataclass(frozen=True)
class NarmaResult:
    nrmse_train: float
    nrmse_test: float
    n_train: int
    n_test: int
    baseline_test: float | None = None


def run_narma10(
    params: LaserParams,
    clocking: ReservoirClocking,
    n_train: int,
    n_test: int,
    input_seed: int = 0,
    noise_seed: int = 0,
    buffer: int = 1000,
    burn_in: int = 100,
    regularization: float = 0.0,
    transient_time: float = DEFAULT_TRANSIENT,
    baseline_lags: int | None = None,
) -> NarmaResult:
    """End-to-end NARMA10 run: harvest, train with bias, test on held-out data.

    The input stream is buffer + burn_in + n_train + n_test values; the
    buffer washes out the reservoir, the burn-in additionally washes out the
    target recurrence.  When ``baseline_lags`` is set, the no-reservoir
    linear regression on that many input lags is evaluated on the same split.
    """
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be positive")
    total = buffer + burn_in + n_train + n_test
    seq = narma_sequence(total, input_seed, burn_in)
    sm = harvest(
        params,
        clocking,
        InputSequence(seq.inputs, input_seed),
        noise_seed=noise_seed,
        buffer=buffer,
        transient_time=transient_time,
    )
    # row j of sm answers inputs up to u[buffer + j]; drop the burn-in rows
    S = sm.S[burn_in:]
    y = seq.targets[buffer + burn_in :]
    S_train, S_test = S[:n_train], S[n_train:]
    y_train, y_test = y[:n_train], y[n_train:]
    weights = train_readout(S_train, y_train, regularization, bias=True)
    result_train = nrmse(weights.predict(S_train), y_train)
    result_test = nrmse(weights.predict(S_test), y_test)
    baseline = None
    if baseline_lags is not None:
        baseline = baseline_linear(
            seq.inputs[buffer:],
            baseline_lags,
            split=n_train,
            burn_in=burn_in,
            regularization=regularization,
        )
    return NarmaResult(result_train, result_test, n_train, n_test, baseline)


def baseline_linear(
    u: np.ndarray,
    n_lags: int,
    split: int | None = None,
    burn_in: int = 100,
    regularization: float = 0.0,
) -> float:
    """Test NRMSE of regressing the NARMA10 target directly on input lags.

    The regressor for row n is (u_n, u_{n-1}, ..., u_{n-n_lags+1}) plus a
    bias; no reservoir involved.  Rows split half/half into train and test
    unless ``split`` (the number of training rows) is given.
    """
    if n_lags < 1:
        raise ValueError("n_lags must be >= 1")
    u = np.asarray(u, dtype=float)
    targets = narma10(u)
    start = max(burn_in, n_lags - 1)
    rows = len(u) - start
    if rows < 4:
        raise ValueError("sequence too short for the requested lags/burn-in")
    X = np.empty((rows, n_lags))
    for lag in range(n_lags):
        X[:, lag] = u[start - lag : len(u) - lag]
    y = targets[start:]
    n_train = rows // 2 if split is None else split
    if not 0 < n_train < rows:
        raise ValueError("train segment must leave room for a test segment")
    weights = train_readout(X[:n_train], y[:n_train], regularization, bias=True)
    return nrmse(weights.predict(X[n_train:]), y[n_train:])
