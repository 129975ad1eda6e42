"""NARMA10 recurrence, alignment, divergence handling, end-to-end run."""

import numpy as np
import pytest

from delayrc.laser import LaserParams
from delayrc.narma import (
    DIVERGENCE_LIMIT,
    baseline_linear,
    narma10,
    narma_sequence,
    run_narma10,
)
from delayrc.reservoir import ReservoirClocking, make_mask


def test_first_iterate_and_zero_input_fixed_point():
    targets = narma10(np.zeros(400))
    assert targets[0] == pytest.approx(0.1)
    # u = 0: A* solves 0.5 A^2 - 0.7 A + 0.1 = 0, the stable root
    a_star = (0.7 - np.sqrt(0.49 - 0.2)) / 1.0
    assert targets[-1] == pytest.approx(a_star, abs=1e-10)


def test_standard_sequence_bounded():
    seq = narma_sequence(20000, seed=0)
    assert np.all(np.isfinite(seq.targets))
    assert np.abs(seq.targets).max() < 2.0
    assert np.all((seq.inputs >= 0.0) & (seq.inputs <= 0.5))
    assert seq.burn_in == 100
    np.testing.assert_array_equal(seq.targets, narma_sequence(20000, 0).targets)


def test_causal_alignment():
    # targets[n] depends on u[0..n] only
    u = np.random.default_rng(5).uniform(0, 0.5, 300)
    t_full = narma10(u)
    u2 = u.copy()
    u2[200:] = 0.0
    t_cut = narma10(u2)
    np.testing.assert_array_equal(t_full[:200], t_cut[:200])
    assert np.any(t_full[200:] != t_cut[200:])


def test_divergence_raises():
    with pytest.raises(FloatingPointError, match="diverged"):
        narma10(np.full(4000, 0.5))  # constant max input destabilizes NARMA10
    with pytest.raises(ValueError):
        narma10(np.zeros(5))  # too short
    assert DIVERGENCE_LIMIT == 1e3


def test_baseline_recovers_linear_target(monkeypatch):
    # when the target is exactly linear in the lags the baseline is perfect
    rng = np.random.default_rng(6)
    u = rng.uniform(0, 0.5, 2000)

    def fake_targets(v):
        return 2.0 * v - 0.5 * np.concatenate([[0.0], v[:-1]]) + 0.25

    monkeypatch.setattr("delayrc.narma.narma10", fake_targets)
    err = baseline_linear(u, n_lags=3, burn_in=10)
    assert err < 1e-10


def test_baseline_on_narma():
    u = np.random.default_rng(7).uniform(0, 0.5, 4000)
    err = baseline_linear(u, n_lags=10, split=2000)
    assert 0.3 < err < 0.8  # linear-in-inputs fit is decent but imperfect
    with pytest.raises(ValueError):
        baseline_linear(u, n_lags=0)
    with pytest.raises(ValueError):
        baseline_linear(u, n_lags=5, split=len(u))


def test_run_narma10_end_to_end():
    params = LaserParams(kappa=0.0, P=0.05, T_LK=100.0, D_noise=1e-7)
    clocking = ReservoirClocking(T=20.0, N_V=10, mask=make_mask(10, 1))
    result = run_narma10(
        params, clocking, n_train=400, n_test=200,
        input_seed=5, noise_seed=3, buffer=50, transient_time=100.0,
        baseline_lags=10,
    )
    assert result.n_train == 400 and result.n_test == 200
    assert 0.0 < result.nrmse_train <= result.nrmse_test * 1.5
    assert np.isfinite(result.baseline_test)
    again = run_narma10(
        params, clocking, n_train=400, n_test=200,
        input_seed=5, noise_seed=3, buffer=50, transient_time=100.0,
        baseline_lags=10,
    )
    assert again.nrmse_test == result.nrmse_test

    with pytest.raises(ValueError):
        run_narma10(params, clocking, n_train=0, n_test=100)
