"""Integrator unit tests: parameter validation, ring buffer, RK4 kernel."""

import math

import numpy as np
import pytest

from delayrc.laser import (
    DriveSignal,
    History,
    LaserParams,
    SystemState,
    default_initial,
    integrate,
    lk_rhs,
    rk4_step,
)


def test_params_validation():
    with pytest.raises(ValueError):
        LaserParams(dt=0.0)
    with pytest.raises(ValueError):
        LaserParams(dt=-0.01)
    with pytest.raises(ValueError):
        LaserParams(T_LK=0.0)
    with pytest.raises(ValueError):
        LaserParams(tau=-1.0)
    with pytest.raises(ValueError):
        LaserParams(D_noise=-1e-9)
    with pytest.raises(ValueError):
        LaserParams(tau=0.015, dt=0.01)  # off the step grid


def test_params_derived():
    p = LaserParams(T_LK=100.0, tau=5.0, dt=0.01)
    assert p.eps == pytest.approx(0.01)
    assert p.tau_steps == 500
    assert LaserParams(tau=0.0).tau_steps == 0


def test_rhs_solitary_fixed_point():
    p = LaserParams(kappa=0.0, P=0.05, D_noise=0.0)
    a = math.sqrt(p.P)
    state = SystemState(a, 0.0, 0.0)
    dre, dim, dn = lk_rhs(state, state, p)
    assert dre == pytest.approx(0.0, abs=1e-15)
    assert dim == pytest.approx(0.0, abs=1e-15)
    assert dn == pytest.approx(0.0, abs=1e-15)


def test_rhs_ecm_fixed_point():
    # N* = -kappa, A^2 = (P + kappa)/(1 - 2 kappa) is stationary
    p = LaserParams(kappa=0.1, P=0.05, tau=1.0, D_noise=0.0)
    a = math.sqrt((p.P + p.kappa) / (1.0 - 2.0 * p.kappa))
    state = SystemState(a, 0.0, -p.kappa)
    dre, dim, dn = lk_rhs(state, state, p)
    assert abs(dre) < 1e-15 and abs(dim) < 1e-15 and abs(dn) < 1e-15


def test_rhs_rejects_non_finite():
    p = LaserParams()
    good = SystemState(0.1, 0.0, 0.0)
    with pytest.raises(FloatingPointError):
        lk_rhs(SystemState(math.nan, 0.0, 0.0), good, p)
    with pytest.raises(FloatingPointError):
        lk_rhs(good, good, p, drive=math.inf)


def test_drive_signal_lookup():
    d = DriveSignal(np.array([1.0, 2.0, 3.0]), steps_per_segment=10,
                    start_step=5)
    assert d.value_at_step(4) == 0.0  # before the drive starts
    assert d.value_at_step(5) == 1.0
    assert d.value_at_step(14) == 1.0
    assert d.value_at_step(15) == 2.0
    assert d.value_at_step(34) == 3.0
    assert d.value_at_step(35) == 0.0  # past the end
    assert d.end_step == 35
    with pytest.raises(ValueError):
        DriveSignal(np.array([1.0]), steps_per_segment=0)


def test_history_window():
    h = History(3, 1.0, 0.0)
    assert h.delayed() == (1.0, 0.0)
    for k in range(1, 5):
        h.push(float(k), -float(k))
    # newest step is 4; delayed value is step 1
    assert h.delayed() == (1.0, -1.0)
    assert h.delayed_next() == (2.0, -2.0)
    with pytest.raises(IndexError):
        h._at(0)  # fell out of the window
    with pytest.raises(IndexError):
        h._at(5)  # not stored yet


def test_history_tau_zero():
    h = History(0, 0.5, 0.1)
    h.push(0.7, 0.2)
    assert h.delayed() == (0.7, 0.2)
    assert h.delayed_next() == (0.7, 0.2)


@pytest.mark.parametrize("tau_steps", [0, 1, 2, 7])
def test_kernel_matches_reference_step(tau_steps):
    # the compiled kernel and rk4_step must produce the same noiseless orbit
    p = LaserParams(
        kappa=0.12, phi=0.3, alpha=0.0, P=0.08, T_LK=5.0,
        tau=tau_steps * 0.01, dt=0.01, D_noise=0.0,
    )
    drive = DriveSignal(np.array([2.0, -1.0, 0.5]), steps_per_segment=20)
    n_steps = 60
    state = default_initial(p)
    hist = History(p.tau_steps, state.E_re, state.E_im)
    for s in range(n_steps):
        state = rk4_step(state, hist, p, drive.value_at_step(s))
        hist.push(state.E_re, state.E_im)
    times = np.arange(n_steps + 1) * p.dt
    samples, final = integrate(p, drive, n_steps * p.dt, times, seed=0)
    assert final.E_re == pytest.approx(state.E_re, rel=1e-13, abs=1e-15)
    assert final.E_im == pytest.approx(state.E_im, rel=1e-13, abs=1e-15)
    assert final.N == pytest.approx(state.N, rel=1e-13, abs=1e-15)
    assert samples[-1] == pytest.approx(state.intensity, rel=1e-13)


def test_alpha_phase_coupling_matches_reference():
    p = LaserParams(alpha=2.5, kappa=0.05, tau=0.03, P=0.05, D_noise=0.0)
    state = default_initial(p)
    hist = History(p.tau_steps, state.E_re, state.E_im)
    for _ in range(40):
        state = rk4_step(state, hist, p)
        hist.push(state.E_re, state.E_im)
    samples, final = integrate(p, None, 0.4, np.array([0.4]), seed=0)
    assert final.E_im == pytest.approx(state.E_im, rel=1e-12)
    assert samples[0] == pytest.approx(state.intensity, rel=1e-12)


def test_integrate_deterministic_in_seed():
    p = LaserParams(kappa=0.1, tau=2.0, P=0.05, D_noise=1e-5)
    times = np.arange(0.0, 50.0, 0.5)
    a, _ = integrate(p, None, 50.0, times, seed=7)
    b, _ = integrate(p, None, 50.0, times, seed=7)
    c, _ = integrate(p, None, 50.0, times, seed=8)
    np.testing.assert_array_equal(a, b)
    assert np.any(a != c)


def test_integrate_noiseless_ignores_seed():
    p = LaserParams(kappa=0.1, tau=2.0, P=0.05, D_noise=0.0)
    times = np.array([10.0, 20.0])
    a, _ = integrate(p, None, 20.0, times, seed=1)
    b, _ = integrate(p, None, 20.0, times, seed=99)
    np.testing.assert_array_equal(a, b)


def test_ecm_is_stationary_over_long_run():
    p = LaserParams(kappa=0.1, P=0.05, tau=1.0, D_noise=0.0)
    a = math.sqrt((p.P + p.kappa) / (1.0 - 2.0 * p.kappa))
    start = SystemState(a, 0.0, -p.kappa)
    times = np.array([100.0])  # 1e4 steps
    samples, final = integrate(p, None, 100.0, times, seed=0, initial=start,
                               initial_kick=False)
    assert samples[0] == pytest.approx(a * a, abs=1e-10)
    assert final.N == pytest.approx(-p.kappa, abs=1e-10)


def test_integrate_validates_grid_and_order():
    p = LaserParams()
    with pytest.raises(ValueError):
        integrate(p, None, 1.005, np.array([1.0]))  # duration off grid
    with pytest.raises(ValueError):
        integrate(p, None, 1.0, np.array([0.505]))  # sample off grid
    with pytest.raises(ValueError):
        integrate(p, None, 1.0, np.array([2.0]))  # sample beyond duration
    with pytest.raises(ValueError):
        integrate(p, None, 1.0, np.array([0.5, 0.2]))  # not increasing


def test_sample_at_time_zero_is_initial_intensity():
    p = LaserParams(D_noise=0.0)
    start = default_initial(p)
    samples, _ = integrate(p, None, 1.0, np.array([0.0, 1.0]), seed=0,
                           initial=start, initial_kick=False)
    assert samples[0] == pytest.approx(start.intensity, rel=1e-15)


def test_relaxation_oscillation_period():
    # class B: damped oscillation at Im(lambda) = sqrt(2 eps P - ...) ~ 0.0311
    p = LaserParams(kappa=0.0, P=0.05, T_LK=100.0, D_noise=0.0)
    start = SystemState(math.sqrt(p.P) * 1.05, 0.0, 0.0)
    times = np.arange(0.0, 1200.0, 0.01)
    samples, _ = integrate(p, None, 1200.0, times, seed=0, initial=start,
                           initial_kick=False)
    x = samples - p.P
    crossings = np.where((x[:-1] > 0) & (x[1:] <= 0))[0]
    period = np.mean(np.diff(crossings)) * 0.01
    # |E|^2 oscillates at the relaxation frequency 0.031141
    assert period == pytest.approx(2.0 * math.pi / 0.031141, rel=0.01)
