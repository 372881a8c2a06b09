"""Independent time-domain verification path.

Integrates the full nonlinear equations of motion with a fixed-step RK4
scheme and extracts tone amplitudes at 0, +-xi, +-2xi by projection, so the
frequency-domain sideband solver can be checked end to end without sharing
any linear algebra with it. Drive tones here carry the raw phases phi_l,
phi_p, phi_i; the interference phases are not inserted by hand and must
emerge from the dynamics.
"""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DivergenceError, ParameterError
from .steady_state import solve_steady

# state magnitude beyond which the integration is declared divergent
_BLOWUP = 1e200


@njit(cache=True)
def _rhs(c, b1, b2, t, delta_c, kappa, om1, om2, gam1, gam2, g, lam,
         eps_l, eps_p, phi_pl, eps_1, phi_1, eps_2, phi_2, xi):
    probe = eps_p * np.exp(-1j * (xi * t + phi_pl))
    dc = (-(1j * delta_c + kappa / 2.0) * c
          + 1j * g * (2.0 * b1.real) * c + eps_l + probe)
    db1 = (-(1j * om1 + gam1 / 2.0) * b1
           + 1j * g * (c.real * c.real + c.imag * c.imag)
           - 1j * lam * b2 + eps_1 * np.exp(-1j * (xi * t + phi_1)))
    db2 = (-(1j * om2 + gam2 / 2.0) * b2 - 1j * lam * b1
           + eps_2 * np.exp(-1j * (xi * t + phi_2)))
    return dc, db1, db2


@njit(cache=True)
def _integrate(state, dt, nsteps, rec_from, rec_stride, out,
               delta_c, kappa, om1, om2, gam1, gam2, g, lam,
               eps_l, eps_p, phi_pl, eps_1, phi_1, eps_2, phi_2, xi):
    """Fixed-step RK4 march; fills `out` with samples from step rec_from on.

    Returns (status, n_recorded, failed_step); status 1 flags the first
    non-finite state.
    """
    c, b1, b2 = state[0], state[1], state[2]
    if rec_from == 0:
        out[0, 0] = c
        out[1, 0] = b1
        out[2, 0] = b2
        nrec = 1
    else:
        nrec = 0
    for n in range(nsteps):
        t = n * dt
        kc1, k11, k21 = _rhs(c, b1, b2, t, delta_c, kappa, om1, om2,
                             gam1, gam2, g, lam, eps_l, eps_p, phi_pl,
                             eps_1, phi_1, eps_2, phi_2, xi)
        kc2, k12, k22 = _rhs(c + 0.5 * dt * kc1, b1 + 0.5 * dt * k11,
                             b2 + 0.5 * dt * k21, t + 0.5 * dt,
                             delta_c, kappa, om1, om2, gam1, gam2, g, lam,
                             eps_l, eps_p, phi_pl, eps_1, phi_1,
                             eps_2, phi_2, xi)
        kc3, k13, k23 = _rhs(c + 0.5 * dt * kc2, b1 + 0.5 * dt * k12,
                             b2 + 0.5 * dt * k22, t + 0.5 * dt,
                             delta_c, kappa, om1, om2, gam1, gam2, g, lam,
                             eps_l, eps_p, phi_pl, eps_1, phi_1,
                             eps_2, phi_2, xi)
        kc4, k14, k24 = _rhs(c + dt * kc3, b1 + dt * k13, b2 + dt * k23,
                             t + dt, delta_c, kappa, om1, om2, gam1, gam2,
                             g, lam, eps_l, eps_p, phi_pl, eps_1, phi_1,
                             eps_2, phi_2, xi)
        c = c + dt / 6.0 * (kc1 + 2.0 * kc2 + 2.0 * kc3 + kc4)
        b1 = b1 + dt / 6.0 * (k11 + 2.0 * k12 + 2.0 * k13 + k14)
        b2 = b2 + dt / 6.0 * (k21 + 2.0 * k22 + 2.0 * k23 + k24)
        bad = (c != c or b1 != b1 or b2 != b2
               or abs(c.real) > _BLOWUP or abs(c.imag) > _BLOWUP
               or abs(b1.real) > _BLOWUP or abs(b1.imag) > _BLOWUP
               or abs(b2.real) > _BLOWUP or abs(b2.imag) > _BLOWUP)
        if bad:
            state[0], state[1], state[2] = c, b1, b2
            return 1, nrec, n + 1
        step = n + 1
        if step >= rec_from and (step - rec_from) % rec_stride == 0:
            if nrec < out.shape[1]:
                out[0, nrec] = c
                out[1, nrec] = b1
                out[2, nrec] = b2
                nrec += 1
    state[0], state[1], state[2] = c, b1, b2
    return 0, nrec, nsteps


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled mean-field trajectory."""

    times: np.ndarray
    c_of_t: np.ndarray
    b1_of_t: np.ndarray
    b2_of_t: np.ndarray
    dt: float
    step_halving_error: float = None


def default_timestep(sp, dc, samples_per_period=200):
    """Fixed step resolving the fastest tone, snapped to the beat period.

    Starts from (2 pi) / (samples_per_period * f_max) with f_max covering
    both mechanical frequencies, the detuning and the second harmonic of the
    beat, then shrinks it so an integer number of steps spans one beat
    period. The snapping makes the projection integrals in
    `extract_harmonics` alias-free for tones commensurate with xi.
    """
    f_max = max(sp.omega_m[0], sp.omega_m[1], abs(dc.delta_c),
                abs(dc.xi), 2.0 * abs(dc.xi))
    dt0 = 2.0 * math.pi / (samples_per_period * f_max)
    if dc.xi != 0.0:
        t_beat = 2.0 * math.pi / abs(dc.xi)
        return t_beat / math.ceil(t_beat / dt0)
    return dt0


def integrate_eom(sp, dc, t_end, dt=None, *, y0=None, record_start=0.0,
                  record_stride=1, error_estimate=False):
    """Integrate the nonlinear equations of motion from the steady state.

    Parameters
    ----------
    t_end : float
        Final time in seconds.
    dt : float, optional
        Fixed step; defaults to `default_timestep`. Must resolve every
        oscillation period by a factor of at least 20.
    y0 : (complex, complex, complex), optional
        Initial (c, b1, b2); defaults to the pump-only steady state.
    record_start : float
        Samples before this time are not stored (the integration still
        starts at t = 0). Keeps long transients from inflating memory.
    record_stride : int
        Store every n-th step.
    error_estimate : bool
        When True, integrate again at dt/2 and attach the relative
        difference of the final states as `step_halving_error`.

    Raises DivergenceError (with the failure time) if the state becomes
    non-finite.
    """
    if dt is None:
        dt = default_timestep(sp, dc)
    limit = 0.05 * min(2.0 * math.pi / sp.omega_m[0],
                       2.0 * math.pi / sp.omega_m[1],
                       2.0 * math.pi / abs(dc.delta_c) if dc.delta_c else math.inf,
                       2.0 * math.pi / abs(dc.xi) if dc.xi else math.inf)
    if not 0.0 < dt < limit:
        raise ParameterError(
            f"dt = {dt!r} must lie in (0, {limit:.3e}) to resolve every "
            "oscillation period")
    if t_end <= 0.0:
        raise ParameterError(f"t_end must be positive, got {t_end!r}")
    if record_stride < 1:
        raise ParameterError("record_stride must be >= 1")

    if y0 is None:
        ss = solve_steady(sp, dc)
        y0 = (ss.c_s, ss.b_1s, ss.b_2s)

    nsteps = int(round(t_end / dt))
    rec_from = max(0, int(math.ceil(record_start / dt - 1e-9)))
    rec_from = min(rec_from, nsteps)  # always keep at least the final state
    n_rec = (nsteps - rec_from) // record_stride + 1
    out = np.empty((3, n_rec), dtype=np.complex128)
    state = np.array(list(y0), dtype=np.complex128)
    status, nrec, last = _integrate(
        state, dt, nsteps, rec_from, record_stride, out,
        dc.delta_c, sp.kappa, sp.omega_m[0], sp.omega_m[1],
        sp.gamma[0], sp.gamma[1], sp.g, sp.lambda_coupling,
        dc.eps_l, dc.eps_p, dc.phi_pl, dc.eps_1, dc.phi_1,
        dc.eps_2, dc.phi_2, dc.xi)
    if status != 0:
        raise DivergenceError(
            f"state became non-finite at t = {last * dt:.6e} s "
            f"(step {last})")
    times = (rec_from + record_stride * np.arange(nrec)) * dt
    halving = None
    if error_estimate:
        half = integrate_eom(sp, dc, t_end, dt / 2.0, y0=y0,
                             record_start=t_end, error_estimate=False)
        ref = np.array([half.c_of_t[-1], half.b1_of_t[-1], half.b2_of_t[-1]])
        fin = np.array([out[0, nrec - 1], out[1, nrec - 1], out[2, nrec - 1]])
        halving = float(np.max(np.abs(fin - ref) /
                               np.maximum(np.abs(ref), 1e-300)))
    return Trajectory(times=times, c_of_t=out[0, :nrec].copy(),
                      b1_of_t=out[1, :nrec].copy(),
                      b2_of_t=out[2, :nrec].copy(), dt=dt,
                      step_halving_error=halving)


def dump_trajectory(traj, path):
    """Debug dump of a trajectory as CSV rows t, re_c, im_c, re_b1, im_b1,
    re_b2, im_b2."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,re_c,im_c,re_b1,im_b1,re_b2,im_b2\n")
        for i, t in enumerate(traj.times):
            c, b1, b2 = traj.c_of_t[i], traj.b1_of_t[i], traj.b2_of_t[i]
            fh.write(",".join(format(v, ".17g")
                              for v in (t, c.real, c.imag, b1.real, b1.imag,
                                        b2.real, b2.imag)) + "\n")
    return path


@dataclass(frozen=True)
class HarmonicDecomposition:
    """Tone amplitudes of the three fields at multiples of the beat frequency.

    `amplitudes` maps field name ('c', 'b1', 'b2') to {n: amplitude} for
    n in -2..2, where n = +1 is the e^{-i xi t} component.
    """

    amplitudes: dict
    leakage_estimate: float
    window: tuple
    n_periods: int

    def amplitude(self, field, n):
        return self.amplitudes[field][n]


def extract_harmonics(traj, xi, window):
    """Project a trajectory window onto tones at n * xi, n in -2..2.

    The window (t_start, t_stop) is snapped to the sample grid and trimmed
    to an integer number of beat periods; shorter than one period is an
    error. Projections use trapezoidal quadrature, which is exact for
    commensurate tones when the grid divides the beat period (the default
    integrator step does). `leakage_estimate` bounds the worst-case bleed of
    the dominant amplitude into other bins for this specific grid.

    For trustworthy amplitudes start the window after at least
    10 / min(gamma_1, gamma_2, kappa) of settling and span at least 20 beat
    periods.
    """
    if xi == 0.0:
        raise ParameterError("xi must be nonzero to define beat harmonics")
    t = traj.times
    dt = traj.dt
    t_start, t_stop = window
    t_beat = 2.0 * math.pi / abs(xi)
    if t_stop - t_start < t_beat:
        raise ParameterError(
            f"window {window!r} is shorter than one beat period "
            f"({t_beat:.3e} s)")
    i0 = int(math.ceil((t_start - t[0]) / dt - 1e-9))
    if i0 < 0 or i0 >= len(t):
        raise ParameterError(f"window start {t_start!r} outside trajectory")
    n_periods = int(math.floor((t_stop - t[i0]) / t_beat + 1e-9))
    if n_periods < 1:
        raise ParameterError("window spans less than one beat period after "
                             "snapping to the sample grid")
    nsteps = int(round(n_periods * t_beat / dt))
    i1 = i0 + nsteps
    if i1 >= len(t):
        nsteps = len(t) - 1 - i0
        n_periods = max(1, int(math.floor(nsteps * dt / t_beat + 1e-9)))
        nsteps = int(round(n_periods * t_beat / dt))
        i1 = i0 + nsteps
        if nsteps < 1 or i1 >= len(t):
            raise ParameterError("trajectory too short for the requested window")

    tw = t[i0:i1 + 1]
    w = np.ones(len(tw))
    w[0] = w[-1] = 0.5
    big_t = nsteps * dt

    def proj(series, n):
        return complex(np.sum(w * series[i0:i1 + 1]
                              * np.exp(1j * n * xi * tw)) * dt / big_t)

    fields = {"c": traj.c_of_t, "b1": traj.b1_of_t, "b2": traj.b2_of_t}
    amplitudes = {}
    for name, series in fields.items():
        amplitudes[name] = {n: proj(series, n) for n in (-2, -1, 0, 1, 2)}

    # worst-case bleed between bins: how this quadrature integrates pure
    # tones at 1..4 beat harmonics (exact zero on a period-snapped grid)
    tone_err = max(abs(np.sum(w * np.exp(1j * k * xi * tw)) * dt / big_t)
                   for k in (1, 2, 3, 4))
    dominant = max(abs(a) for amps in amplitudes.values()
                   for a in amps.values())
    return HarmonicDecomposition(amplitudes=amplitudes,
                                 leakage_estimate=tone_err * dominant,
                                 window=(float(tw[0]), float(tw[-1])),
                                 n_periods=n_periods)
