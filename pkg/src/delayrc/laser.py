"""Lang-Kobayashi laser integration.

Dimensionless rate equations for the slowly varying field amplitude E and
carrier inversion N, time measured in photon lifetimes:

    dE/dt = (1 + i*alpha) * N * E + kappa * exp(i*phi) * E(t - tau)
    dN/dt = (P + eta * I(t)g(t) - N - (2N + 1) * |E|^2) / T_LK

kappa is the feedback rate of the external cavity, tau the round-trip delay,
P the pump above the solitary threshold (the threshold moves to P_th = -kappa
with feedback), and I(t)g(t) a piecewise-constant pump modulation used to
inject information.  Spontaneous emission enters as an additive complex
Gaussian increment D_noise * sqrt(dt) * (xi1 + i*xi2) on E after every step.

The integrator is classical RK4 with the delayed field read from a ring
buffer on the dt grid.  tau must be an integer multiple of dt, so delayed
values at full steps are exact stored samples; the half-step delayed value is
the average of the two neighboring grid points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = [
    "LaserParams",
    "SystemState",
    "History",
    "DriveSignal",
    "lk_rhs",
    "rk4_step",
    "integrate",
]


@dataclass(frozen=True)
class LaserParams:
    """Physical and numerical parameters of the Lang-Kobayashi system.

    All rates are in units of the inverse photon lifetime.  ``eps`` is the
    carrier relaxation prefactor 1/T_LK.
    """

    alpha: float = 0.0
    kappa: float = 0.0
    phi: float = 0.0
    tau: float = 0.0
    P: float = 0.05
    eta: float = 0.01
    T_LK: float = 1.0
    D_noise: float = 1e-7
    dt: float = 0.01

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.T_LK <= 0.0:
            raise ValueError(f"T_LK must be positive, got {self.T_LK}")
        if self.tau < 0.0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")
        if self.D_noise < 0.0:
            raise ValueError(f"D_noise must be non-negative, got {self.D_noise}")
        steps = self.tau / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError(
                f"tau must be an integer multiple of dt, got tau={self.tau}, dt={self.dt}"
            )

    @property
    def eps(self) -> float:
        return 1.0 / self.T_LK

    @property
    def tau_steps(self) -> int:
        return int(round(self.tau / self.dt))


@dataclass
class SystemState:
    """Field quadratures, inversion, and the current time."""

    E_re: float
    E_im: float
    N: float
    t: float = 0.0

    @property
    def intensity(self) -> float:
        return self.E_re * self.E_re + self.E_im * self.E_im

    def require_finite(self) -> None:
        if not (
            math.isfinite(self.E_re)
            and math.isfinite(self.E_im)
            and math.isfinite(self.N)
        ):
            raise FloatingPointError(f"non-finite state at t={self.t}")


class History:
    """Ring buffer of (E_re, E_im) samples on the dt grid spanning [t-tau, t].

    Holds tau/dt + 1 samples so the oldest entry is exactly the delayed value.
    With tau = 0 it degenerates to a single slot and delayed lookups return
    the newest sample.
    """

    def __init__(self, tau_steps: int, e_re: float, e_im: float):
        if tau_steps < 0:
            raise ValueError("tau_steps must be non-negative")
        self.tau_steps = tau_steps
        n = tau_steps + 1
        self._re = np.full(n, e_re, dtype=float)
        self._im = np.full(n, e_im, dtype=float)
        self._step = 0  # step index of the newest stored sample

    def push(self, e_re: float, e_im: float) -> None:
        self._step += 1
        i = self._step % len(self._re)
        self._re[i] = e_re
        self._im[i] = e_im

    def _at(self, step: int) -> tuple[float, float]:
        if step > self._step or step < self._step - self.tau_steps:
            raise IndexError(
                f"step {step} outside stored window "
                f"[{self._step - self.tau_steps}, {self._step}]"
            )
        i = step % len(self._re)
        return self._re[i], self._im[i]

    def delayed(self) -> tuple[float, float]:
        """E at t - tau (the oldest stored sample)."""
        return self._at(self._step - self.tau_steps)

    def delayed_next(self) -> tuple[float, float]:
        """E at t - tau + dt (one sample newer than the oldest)."""
        return self._at(self._step - self.tau_steps + min(self.tau_steps, 1))


@dataclass(frozen=True)
class DriveSignal:
    """Piecewise-constant drive I(t)g(t) on a uniform segment grid.

    ``values[k]`` applies on steps [start_step + k*steps_per_segment,
    start_step + (k+1)*steps_per_segment); outside all segments the drive
    is zero.
    """

    values: np.ndarray
    steps_per_segment: int
    start_step: int = 0

    def __post_init__(self) -> None:
        if self.steps_per_segment < 1:
            raise ValueError("steps_per_segment must be >= 1")
        object.__setattr__(
            self, "values", np.ascontiguousarray(self.values, dtype=float)
        )

    def value_at_step(self, step: int) -> float:
        k = (step - self.start_step) // self.steps_per_segment
        if k < 0 or k >= len(self.values):
            return 0.0
        return float(self.values[k])

    @property
    def end_step(self) -> int:
        return self.start_step + len(self.values) * self.steps_per_segment


_EMPTY_DRIVE = np.zeros(0)


def lk_rhs(
    state: SystemState,
    delayed: SystemState,
    params: LaserParams,
    drive: float = 0.0,
) -> tuple[float, float, float]:
    """Deterministic right-hand side, split into quadratures.

    Returns (dE_re/dt, dE_im/dt, dN/dt) for the instantaneous state and the
    state delayed by tau.  The noise term is handled by the integrator, not
    here.
    """
    state.require_finite()
    delayed.require_finite()
    if not math.isfinite(drive):
        raise FloatingPointError("non-finite drive")
    c = math.cos(params.phi)
    s = math.sin(params.phi)
    fb_re = params.kappa * (c * delayed.E_re - s * delayed.E_im)
    fb_im = params.kappa * (s * delayed.E_re + c * delayed.E_im)
    de_re = state.N * (state.E_re - params.alpha * state.E_im) + fb_re
    de_im = state.N * (state.E_im + params.alpha * state.E_re) + fb_im
    isq = state.E_re * state.E_re + state.E_im * state.E_im
    dn = params.eps * (params.P + params.eta * drive - state.N - (2.0 * state.N + 1.0) * isq)
    return de_re, de_im, dn


def rk4_step(
    state: SystemState,
    history: History,
    params: LaserParams,
    drive: float = 0.0,
    rng: np.random.Generator | None = None,
) -> SystemState:
    """Advance one dt by classical RK4, then apply the additive noise kick.

    The drive is held at its value on [t, t+dt) for all four stages, matching
    the piecewise-constant modulation whose segment boundaries fall on the
    grid.  For tau = 0 the delayed field equals the running stage value.

    Reference implementation; `integrate` uses a compiled kernel with the
    same arithmetic.
    """
    if history.tau_steps != params.tau_steps:
        raise ValueError("history span does not match params.tau")
    p = params
    dt = p.dt
    instant = p.tau_steps == 0
    d0 = history.delayed()
    d1 = history.delayed_next() if p.tau_steps >= 2 else (state.E_re, state.E_im)
    dh = (0.5 * (d0[0] + d1[0]), 0.5 * (d0[1] + d1[1]))

    def stage(e_re, e_im, n, dly):
        if instant:
            dly = (e_re, e_im)
        st = SystemState(e_re, e_im, n, state.t)
        dl = SystemState(dly[0], dly[1], 0.0, state.t - p.tau)
        return lk_rhs(st, dl, p, drive)

    k1 = stage(state.E_re, state.E_im, state.N, d0)
    k2 = stage(
        state.E_re + 0.5 * dt * k1[0],
        state.E_im + 0.5 * dt * k1[1],
        state.N + 0.5 * dt * k1[2],
        dh,
    )
    k3 = stage(
        state.E_re + 0.5 * dt * k2[0],
        state.E_im + 0.5 * dt * k2[1],
        state.N + 0.5 * dt * k2[2],
        dh,
    )
    k4 = stage(
        state.E_re + dt * k3[0],
        state.E_im + dt * k3[1],
        state.N + dt * k3[2],
        d1,
    )
    e_re = state.E_re + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    e_im = state.E_im + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    n = state.N + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    if rng is not None and p.D_noise > 0.0:
        sq = math.sqrt(dt)
        e_re += p.D_noise * sq * rng.standard_normal()
        e_im += p.D_noise * sq * rng.standard_normal()
    out = SystemState(e_re, e_im, n, state.t + dt)
    out.require_finite()
    return out


@njit(cache=True)
def _lk_kernel(
    e_re0,
    e_im0,
    n0,
    alpha,
    kappa,
    phi,
    eps,
    P,
    eta,
    dnoise,
    dt,
    tau_steps,
    n_steps,
    seg_values,
    seg_steps,
    seg_start,
    sample_steps,
    seed,
    initial_kick,
):  # pragma: no cover - exercised through integrate()
    np.random.seed(seed)
    m = tau_steps
    sq = np.sqrt(dt)
    noisy = dnoise > 0.0
    e_re = e_re0
    e_im = e_im0
    n = n0
    if noisy and initial_kick:
        e_re += dnoise * sq * np.random.normal()
        e_im += dnoise * sq * np.random.normal()
    buf_re = np.full(m + 1, e_re)
    buf_im = np.full(m + 1, e_im)
    cphi = np.cos(phi)
    sphi = np.sin(phi)
    n_segments = len(seg_values)
    out = np.empty(len(sample_steps))
    nxt = 0
    while nxt < len(sample_steps) and sample_steps[nxt] == 0:
        out[nxt] = e_re * e_re + e_im * e_im
        nxt += 1
    for s in range(n_steps):
        d = 0.0
        if s >= seg_start:
            k = (s - seg_start) // seg_steps
            if k < n_segments:
                d = seg_values[k]
        if m >= 1:
            i0 = (s + 1) % (m + 1)
            dr0 = buf_re[i0]
            di0 = buf_im[i0]
            if m >= 2:
                i1 = (s + 2) % (m + 1)
                dr1 = buf_re[i1]
                di1 = buf_im[i1]
            else:
                dr1 = e_re
                di1 = e_im
            drh = 0.5 * (dr0 + dr1)
            dih = 0.5 * (di0 + di1)
        else:
            dr0 = di0 = drh = dih = dr1 = di1 = 0.0

        if m == 0:
            fr = kappa * (cphi * e_re - sphi * e_im)
            fi = kappa * (sphi * e_re + cphi * e_im)
        else:
            fr = kappa * (cphi * dr0 - sphi * di0)
            fi = kappa * (sphi * dr0 + cphi * di0)
        k1r = n * (e_re - alpha * e_im) + fr
        k1i = n * (e_im + alpha * e_re) + fi
        k1n = eps * (P + eta * d - n - (2.0 * n + 1.0) * (e_re * e_re + e_im * e_im))

        yr = e_re + 0.5 * dt * k1r
        yi = e_im + 0.5 * dt * k1i
        yn = n + 0.5 * dt * k1n
        if m == 0:
            fr = kappa * (cphi * yr - sphi * yi)
            fi = kappa * (sphi * yr + cphi * yi)
        else:
            fr = kappa * (cphi * drh - sphi * dih)
            fi = kappa * (sphi * drh + cphi * dih)
        k2r = yn * (yr - alpha * yi) + fr
        k2i = yn * (yi + alpha * yr) + fi
        k2n = eps * (P + eta * d - yn - (2.0 * yn + 1.0) * (yr * yr + yi * yi))

        yr = e_re + 0.5 * dt * k2r
        yi = e_im + 0.5 * dt * k2i
        yn = n + 0.5 * dt * k2n
        if m == 0:
            fr = kappa * (cphi * yr - sphi * yi)
            fi = kappa * (sphi * yr + cphi * yi)
        else:
            fr = kappa * (cphi * drh - sphi * dih)
            fi = kappa * (sphi * drh + cphi * dih)
        k3r = yn * (yr - alpha * yi) + fr
        k3i = yn * (yi + alpha * yr) + fi
        k3n = eps * (P + eta * d - yn - (2.0 * yn + 1.0) * (yr * yr + yi * yi))

        yr = e_re + dt * k3r
        yi = e_im + dt * k3i
        yn = n + dt * k3n
        if m == 0:
            fr = kappa * (cphi * yr - sphi * yi)
            fi = kappa * (sphi * yr + cphi * yi)
        else:
            fr = kappa * (cphi * dr1 - sphi * di1)
            fi = kappa * (sphi * dr1 + cphi * di1)
        k4r = yn * (yr - alpha * yi) + fr
        k4i = yn * (yi + alpha * yr) + fi
        k4n = eps * (P + eta * d - yn - (2.0 * yn + 1.0) * (yr * yr + yi * yi))

        e_re += dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        e_im += dt / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
        n += dt / 6.0 * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)
        if noisy:
            e_re += dnoise * sq * np.random.normal()
            e_im += dnoise * sq * np.random.normal()
        buf_re[(s + 1) % (m + 1)] = e_re
        buf_im[(s + 1) % (m + 1)] = e_im
        if nxt < len(sample_steps) and s + 1 == sample_steps[nxt]:
            out[nxt] = e_re * e_re + e_im * e_im
            nxt += 1
    return out, e_re, e_im, n


def default_initial(params: LaserParams) -> SystemState:
    """Startup point: small real field above threshold, zero inversion."""
    return SystemState(math.sqrt(max(params.P, 0.01)) + 1e-3, 0.0, 0.0, 0.0)


def _steps_from_times(times: np.ndarray, dt: float, what: str) -> np.ndarray:
    steps = np.asarray(times, dtype=float) / dt
    rounded = np.rint(steps)
    if np.any(np.abs(steps - rounded) > 1e-6):
        bad = np.asarray(times)[np.abs(steps - rounded) > 1e-6][0]
        raise ValueError(f"{what} must be multiples of dt={dt}; offending value {bad}")
    return rounded.astype(np.int64)


def integrate(
    params: LaserParams,
    drive: DriveSignal | None,
    duration: float,
    sample_times: np.ndarray,
    seed: int = 0,
    initial: SystemState | None = None,
    initial_kick: bool = True,
) -> tuple[np.ndarray, SystemState]:
    """Integrate for ``duration`` time units and sample the intensity |E|^2.

    Parameters
    ----------
    params : LaserParams
    drive : DriveSignal or None
        Piecewise-constant pump modulation; None means no drive.
    duration : float
        Total integration time, a multiple of dt.
    sample_times : array of floats
        Times (multiples of dt, within [0, duration]) at which to record
        |E|^2, in increasing order.
    seed : int
        Noise stream seed; the run is deterministic in (params, drive, seed).
    initial : SystemState, optional
        Starting state; defaults to `default_initial`.  The history is
        initialized constant at the starting field.
    initial_kick : bool
        Apply one noise increment to the initial field before stepping.

    Returns
    -------
    (samples, final_state)
    """
    n_steps = _steps_from_times(np.array([duration]), params.dt, "duration")[0]
    sample_steps = _steps_from_times(sample_times, params.dt, "sample times")
    if len(sample_steps) and (sample_steps[0] < 0 or sample_steps[-1] > n_steps):
        raise ValueError("sample times must lie within [0, duration]")
    if np.any(np.diff(sample_steps) <= 0):
        raise ValueError("sample times must be strictly increasing")
    state0 = initial if initial is not None else default_initial(params)
    if drive is None:
        seg_values, seg_steps, seg_start = _EMPTY_DRIVE, 1, 0
    else:
        seg_values = drive.values
        seg_steps = drive.steps_per_segment
        seg_start = drive.start_step
    samples, e_re, e_im, n = _lk_kernel(
        state0.E_re,
        state0.E_im,
        state0.N,
        params.alpha,
        params.kappa,
        params.phi,
        params.eps,
        params.P,
        params.eta,
        params.D_noise,
        params.dt,
        params.tau_steps,
        n_steps,
        seg_values,
        seg_steps,
        seg_start,
        sample_steps,
        seed,
        initial_kick,
    )
    final = SystemState(e_re, e_im, n, n_steps * params.dt)
    final.require_finite()
    if not np.all(np.isfinite(samples)):
        raise FloatingPointError("non-finite intensity sample")
    return samples, final
