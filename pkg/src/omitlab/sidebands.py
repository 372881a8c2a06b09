"""First- and second-order sideband response, transmission, delay, efficiency.

The probe and the mechanical drives imprint tones at the beat frequency xi on
the fluctuations around the steady state. Collecting e^{-i xi t}, e^{+i xi t}
and their second harmonics yields two 6x6 complex linear systems over the
unknowns (A1-, A1+*, B1-, B1+*, D1-, D1+*) and their second-order analogues.
The direct dense solve is authoritative; the closed-form expressions for A1-
and A2- are evaluated alongside and their relative deviation is recorded.

Sign conventions were fixed by re-substituting the tone ansatz into the
equations of motion; the time-domain integrator in `omitlab.timedomain`
verifies them end to end.
"""
import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (ParameterError, PerturbativeRegimeWarning,
                     PhaseUndefinedError, SingularResponseError,
                     UndefinedRatioError)
from .steady_state import solve_steady

# fraction of eps_l above which the linearized expansion is suspect
PERTURBATIVE_RATIO = 0.1

# |t| below this is treated as a transmission zero with undefined phase
PHASE_MIN_ABS_T = 1e-12


@dataclass(frozen=True)
class HarmonicCoefficients:
    """Response denominators h1..h6 (+/-) and their composites.

    The +/- pair of each h belongs to the e^{-i xi t} / conjugated
    e^{+i xi t} component; h4..h6 are the second-harmonic versions of h1..h3.
    """

    h1_plus: complex
    h1_minus: complex
    h2_plus: complex
    h2_minus: complex
    h3_plus: complex
    h3_minus: complex
    h4_plus: complex
    h4_minus: complex
    h5_plus: complex
    h5_minus: complex
    h6_plus: complex
    h6_minus: complex
    U1_plus: complex
    U1_minus: complex
    U2_plus: complex
    U2_minus: complex
    Pi: complex
    Gamma: complex
    G: complex
    delta: float
    xi: float


def h_coeffs(sp, ss, xi):
    """Harmonic response coefficients at beat frequency xi for a steady state."""
    delta = ss.delta_eff
    om1, om2 = sp.omega_m
    g1, g2 = sp.gamma
    kap = sp.kappa
    lam = sp.lambda_coupling
    h1p = 1j * delta + kap / 2 - 1j * xi
    h1m = -1j * delta + kap / 2 - 1j * xi
    h2p = 1j * om1 + g1 / 2 - 1j * xi
    h2m = -1j * om1 + g1 / 2 - 1j * xi
    h3p = 1j * om2 + g2 / 2 - 1j * xi
    h3m = -1j * om2 + g2 / 2 - 1j * xi
    h4p = 1j * delta + kap / 2 - 2j * xi
    h4m = -1j * delta + kap / 2 - 2j * xi
    h5p = 1j * om1 + g1 / 2 - 2j * xi
    h5m = -1j * om1 + g1 / 2 - 2j * xi
    h6p = 1j * om2 + g2 / 2 - 2j * xi
    h6m = -1j * om2 + g2 / 2 - 2j * xi
    lam2 = lam * lam
    u1p = h2p * h3p + lam2
    u1m = h2m * h3m + lam2
    u2p = h5p * h6p + lam2
    u2m = h5m * h6m + lam2
    return HarmonicCoefficients(
        h1_plus=h1p, h1_minus=h1m, h2_plus=h2p, h2_minus=h2m,
        h3_plus=h3p, h3_minus=h3m, h4_plus=h4p, h4_minus=h4m,
        h5_plus=h5p, h5_minus=h5m, h6_plus=h6p, h6_minus=h6m,
        U1_plus=u1p, U1_minus=u1m, U2_plus=u2p, U2_minus=u2m,
        Pi=h3m * u1p - h3p * u1m,
        Gamma=u2p * h6m - u2m * h6p,
        G=sp.g * ss.c_s, delta=delta, xi=xi)


_H_NAMES_FIRST = ("h1+", "h1-", "h2+", "h2-", "h3+", "h3-")
_H_NAMES_SECOND = ("h4+", "h4-", "h5+", "h5-", "h6+", "h6-")


def _block_matrix(ha_p, ha_m, hb_p, hb_m, hc_p, hc_m, G, lam):
    """Coefficient matrix shared by both sideband orders.

    Rows: optical (-), optical conjugated (+), resonator 1 (-, +),
    resonator 2 (-, +).
    """
    Gc = np.conj(G)
    return np.array([
        [ha_p, 0, -1j * G, -1j * G, 0, 0],
        [0, ha_m, 1j * Gc, 1j * Gc, 0, 0],
        [-1j * Gc, -1j * G, hb_p, 0, 1j * lam, 0],
        [1j * Gc, 1j * G, 0, hb_m, 0, -1j * lam],
        [0, 0, 1j * lam, 0, hc_p, 0],
        [0, 0, 0, -1j * lam, 0, hc_m],
    ], dtype=complex)


def _check_singular(hs, names):
    scale = max(abs(h) for h in hs)
    for h, name in zip(hs, names):
        if abs(h) <= 1e-300 or (scale > 0 and abs(h) < 1e-15 * scale):
            raise SingularResponseError(
                f"response denominator {name} vanishes at this frequency; "
                "the system is singular")


def _relative_residual(m, v, rhs):
    r = m @ v - rhs
    scale = max(np.abs(rhs).max(), np.abs(m).max() * np.abs(v).max(), 1e-300)
    return float(np.abs(r).max() / scale)


@dataclass(frozen=True)
class FirstOrderSideband:
    """Amplitudes of the first-order tones (the '+' entries are the
    conjugated unknowns of the e^{+i xi t} components)."""

    A1m: complex
    A1p: complex
    B1m: complex
    B1p: complex
    D1m: complex
    D1p: complex
    residual: float
    closed_form_A1m: complex
    closed_form_rel_diff: float


@dataclass(frozen=True)
class SecondOrderSideband:
    """Amplitudes of the second-order tones, sourced by first-order products."""

    A2m: complex
    A2p: complex
    B2m: complex
    B2p: complex
    D2m: complex
    D2p: complex
    residual: float
    closed_form_A2m: complex
    closed_form_rel_diff: float


@dataclass(frozen=True)
class SidebandSolution:
    """Both sideband orders plus the derived transmission and efficiency."""

    A1m: complex
    A1p: complex
    B1m: complex
    B1p: complex
    D1m: complex
    D1p: complex
    A2m: complex
    A2p: complex
    B2m: complex
    B2p: complex
    D2m: complex
    D2p: complex
    transmission_t: complex
    efficiency_eta: float
    first_residual: float
    second_residual: float
    closed_form_rel_diff_1: float
    closed_form_rel_diff_2: float


def _warn_if_nonperturbative(dc):
    limit = PERTURBATIVE_RATIO * dc.eps_l
    for name, val in (("eps_p", dc.eps_p), ("eps_1", dc.eps_1),
                      ("eps_2", dc.eps_2)):
        if dc.eps_l > 0.0 and val > limit:
            warnings.warn(
                f"{name} = {val:.3g} exceeds {PERTURBATIVE_RATIO} * eps_l; "
                "first-order theory may be inaccurate",
                PerturbativeRegimeWarning, stacklevel=3)


def solve_first_order(sp, ss, dc):
    """Solve the first-order sideband system for the given drives.

    The closed-form value of A1- is evaluated from the same coefficients and
    its relative deviation from the direct solve is stored; the direct solve
    is the value used everywhere downstream.
    """
    _warn_if_nonperturbative(dc)
    hc = h_coeffs(sp, ss, dc.xi)
    hs = (hc.h1_plus, hc.h1_minus, hc.h2_plus, hc.h2_minus,
          hc.h3_plus, hc.h3_minus)
    _check_singular(hs, _H_NAMES_FIRST)
    m = _block_matrix(*hs, hc.G, sp.lambda_coupling)
    rhs = np.array([
        dc.eps_p * cmath.exp(-1j * dc.phi_pl),
        0.0,
        dc.eps_1 * cmath.exp(-1j * dc.phi_1),
        0.0,
        dc.eps_2 * cmath.exp(-1j * dc.phi_2),
        0.0,
    ], dtype=complex)
    try:
        v = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularResponseError(f"first-order system is singular: {exc}") \
            from exc
    res = _relative_residual(m, v, rhs)
    cf = _closed_form_A1m(hc, dc, sp.lambda_coupling)
    diff = abs(v[0] - cf) / abs(v[0]) if v[0] != 0 else abs(cf)
    return FirstOrderSideband(A1m=v[0], A1p=v[1], B1m=v[2], B1p=v[3],
                              D1m=v[4], D1p=v[5], residual=res,
                              closed_form_A1m=cf, closed_form_rel_diff=diff)


def _closed_form_A1m(hc, dc, lam):
    """Closed-form A1-: the probe pathway plus the two drive-interference
    pathways (resonator 1 direct, resonator 2 through the phonon coupling)."""
    G2 = abs(hc.G) ** 2
    den = (hc.h1_plus * hc.h1_minus * hc.U1_plus * hc.U1_minus
           + 2j * hc.delta * G2 * hc.Pi)
    num = ((hc.h1_minus * hc.U1_plus * hc.U1_minus + G2 * hc.Pi) * dc.eps_p
           + 1j * hc.G * hc.h1_minus * hc.h3_plus * hc.U1_minus
           * dc.eps_1 * cmath.exp(-1j * dc.Phi_1)
           + hc.G * hc.h1_minus * hc.U1_minus * lam
           * dc.eps_2 * cmath.exp(-1j * dc.Phi_2))
    return num / den * cmath.exp(-1j * dc.phi_pl)


def solve_second_order(sp, ss, dc, first):
    """Solve the second-order sideband system sourced by first-order products."""
    hc = h_coeffs(sp, ss, dc.xi)
    hs = (hc.h4_plus, hc.h4_minus, hc.h5_plus, hc.h5_minus,
          hc.h6_plus, hc.h6_minus)
    _check_singular(hs, _H_NAMES_SECOND)
    m = _block_matrix(*hs, hc.G, sp.lambda_coupling)
    g = sp.g
    a1m, a1p, b1m, b1p = first.A1m, first.A1p, first.B1m, first.B1p
    rhs = np.array([
        1j * g * a1m * (b1p + b1m),
        -1j * g * a1p * (b1m + b1p),
        1j * g * a1m * a1p,
        -1j * g * a1m * a1p,
        0.0,
        0.0,
    ], dtype=complex)
    try:
        v = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularResponseError(f"second-order system is singular: {exc}") \
            from exc
    res = _relative_residual(m, v, rhs)
    if hc.G != 0:
        cf = _closed_form_A2m(sp, hc, a1m, a1p)
        diff = abs(v[0] - cf) / abs(v[0]) if v[0] != 0 else abs(cf)
    else:
        cf = complex(v[0])
        diff = 0.0
    return SecondOrderSideband(A2m=v[0], A2p=v[1], B2m=v[2], B2p=v[3],
                               D2m=v[4], D2p=v[5], residual=res,
                               closed_form_A2m=cf, closed_form_rel_diff=diff)


def _closed_form_A2m(sp, hc, a1m, a1p):
    """Closed-form A2- in terms of the first-order amplitudes."""
    G, Gc = hc.G, np.conj(hc.G)
    G2 = abs(G) ** 2
    den = (hc.h4_plus * hc.h4_minus * hc.U2_plus * hc.U2_minus
           + 2j * hc.delta * G2 * hc.Gamma)
    mixed = (-1j * hc.xi * sp.g * G * hc.Gamma
             - sp.g * hc.h4_minus * hc.U2_plus * hc.U2_minus
             * (hc.h1_minus / Gc)) / den
    squared = sp.g * G**2 * hc.Gamma * (hc.h1_minus / Gc) / den
    return mixed * a1m * a1p + squared * a1p**2


def solve_sidebands(sp, ss, dc):
    """Convenience wrapper: both orders plus transmission and efficiency."""
    first = solve_first_order(sp, ss, dc)
    second = solve_second_order(sp, ss, dc, first)
    t = transmission_coefficient(sp, dc, first)
    eta = _efficiency_from_A2m(sp, dc, second.A2m)
    return SidebandSolution(
        A1m=first.A1m, A1p=first.A1p, B1m=first.B1m, B1p=first.B1p,
        D1m=first.D1m, D1p=first.D1p,
        A2m=second.A2m, A2p=second.A2p, B2m=second.B2m, B2p=second.B2p,
        D2m=second.D2m, D2p=second.D2p,
        transmission_t=t, efficiency_eta=eta,
        first_residual=first.residual, second_residual=second.residual,
        closed_form_rel_diff_1=first.closed_form_rel_diff,
        closed_form_rel_diff_2=second.closed_form_rel_diff)


def transmission_coefficient(sp, dc, solution):
    """Complex probe transmission t; |t|^2 may exceed 1 (amplification)."""
    if dc.eps_p == 0.0:
        raise UndefinedRatioError(
            "transmission is undefined with zero probe amplitude")
    a1m = solution.A1m
    return 1.0 - sp.eta_c * sp.kappa * a1m / (dc.eps_p
                                              * cmath.exp(-1j * dc.phi_pl))


def transmission(sp, dc, solution):
    """Probe power transmission |t|^2."""
    return abs(transmission_coefficient(sp, dc, solution)) ** 2


def _efficiency_from_A2m(sp, dc, a2m):
    if dc.eps_p == 0.0:
        raise UndefinedRatioError(
            "second-order efficiency is undefined with zero probe amplitude")
    return abs(-sp.eta_c * sp.kappa * a2m
               / (dc.eps_p * cmath.exp(-1j * dc.phi_pl)))


def efficiency_2nd(sp, dc, solution):
    """Second-order upper-sideband conversion efficiency (dimensionless).

    Multiply by 100 for the percentage form used in scan outputs.
    """
    return _efficiency_from_A2m(sp, dc, solution.A2m)


@dataclass(frozen=True)
class TurningPoint:
    """Drive ratio (and phase) at which the on-resonance probe transmission
    vanishes."""

    ratio: float            # eps_1 / eps_p
    phase: float            # Phi_1 at the exact zero, in (-pi, pi]
    complex_ratio: complex  # (eps_1/eps_p) e^{-i Phi_1} solving t = 0
    xi: float


def turning_point(sp, ss):
    """Resonator-1 drive ratio that nulls the probe transmission at xi = omega_m1.

    Setting t = 0 in the single-resonator configuration is one complex-linear
    equation in z = (eps_1/eps_p) e^{-i Phi_1}; it is solved exactly. The
    magnitude of z is the turning-point ratio, its argument the mixing phase
    at which the zero is reached (a small value of order kappa/omega_m1).
    """
    if sp.lambda_coupling != 0.0:
        raise ParameterError(
            "turning_point requires the single-resonator configuration "
            "(lambda_coupling = 0)")
    G = sp.g * ss.c_s
    if G == 0:
        raise SingularResponseError(
            "turning point undefined with zero pump-enhanced coupling")
    xi = sp.omega_m[0]
    hc = h_coeffs(sp, ss, xi)
    om1 = sp.omega_m[0]
    G2 = abs(G) ** 2
    ek = sp.eta_c * sp.kappa
    num = (hc.h1_plus * hc.h1_minus * hc.h2_plus * hc.h2_minus
           - 4.0 * hc.delta * om1 * G2
           - ek * (hc.h1_minus * hc.h2_plus * hc.h2_minus + 2j * om1 * G2))
    den = 1j * G * hc.h1_minus * hc.h2_minus * ek
    z = num / den
    return TurningPoint(ratio=abs(z), phase=-cmath.phase(z),
                        complex_ratio=z, xi=xi)


@dataclass(frozen=True)
class GroupDelay:
    """Group delay of the transmitted probe with its evaluation metadata."""

    tau: float              # seconds; positive = delay, negative = advance
    error_estimate: float   # truncation estimate of the finite difference
    xi0: float              # beat frequency at the evaluation point
    t_at_eval: complex      # transmission there


def group_delay(sp, dc, *, ss=None, at="cavity", method="fd",
                step_factor=1e-4):
    """Group delay d arg(t) / d omega_p of the transmitted probe.

    Parameters
    ----------
    at : str
        'cavity' evaluates at omega_p = omega_c (xi = delta_c); 'resonance'
        evaluates at the mechanical sideband xi = omega_m1; 'xi' uses dc.xi
        unchanged.
    method : str
        'fd' is the two-level Richardson-extrapolated central difference with
        step step_factor * kappa (phase differences are wrapped to (-pi, pi]
        between the closely spaced evaluation points). 'analytic'
        differentiates the linear system exactly and reports a zero error
        estimate.

    Varying omega_p at fixed pump frequency varies only the beat frequency,
    so the steady state is computed once and reused.
    """
    if ss is None:
        ss = solve_steady(sp, dc)
    if at == "cavity":
        xi0 = dc.delta_c
    elif at == "resonance":
        xi0 = sp.omega_m[0]
    elif at == "xi":
        xi0 = dc.xi
    else:
        raise ParameterError(f"unknown evaluation point {at!r}")

    def t_of(xi):
        d = _with_xi(dc, xi)
        return transmission_coefficient(sp, d, solve_first_order(sp, ss, d))

    t0 = t_of(xi0)
    if abs(t0) < PHASE_MIN_ABS_T:
        raise PhaseUndefinedError(
            f"|t| = {abs(t0):.3e} at the evaluation point; phase and delay "
            "are undefined")
    if method == "analytic":
        tau = _analytic_delay(sp, ss, _with_xi(dc, xi0))
        return GroupDelay(tau=tau, error_estimate=0.0, xi0=xi0, t_at_eval=t0)
    if method != "fd":
        raise ParameterError(f"unknown method {method!r}")

    h = step_factor * sp.kappa

    def slope(hh):
        tp = t_of(xi0 + hh)
        tm = t_of(xi0 - hh)
        dphi = cmath.phase(tp) - cmath.phase(tm)
        dphi = (dphi + math.pi) % (2.0 * math.pi) - math.pi
        return dphi / (2.0 * hh)

    tau_h = slope(h)
    tau_h2 = slope(h / 2.0)
    tau = (4.0 * tau_h2 - tau_h) / 3.0
    return GroupDelay(tau=tau, error_estimate=abs(tau_h2 - tau_h) / 3.0,
                      xi0=xi0, t_at_eval=t0)


def _with_xi(dc, xi):
    from dataclasses import replace
    return replace(dc, xi=xi)


def _analytic_delay(sp, ss, dc):
    """Exact derivative of arg t: every response denominator moves as -i
    with xi, so dA/dxi = i M^{-1} A."""
    hc = h_coeffs(sp, ss, dc.xi)
    hs = (hc.h1_plus, hc.h1_minus, hc.h2_plus, hc.h2_minus,
          hc.h3_plus, hc.h3_minus)
    _check_singular(hs, _H_NAMES_FIRST)
    m = _block_matrix(*hs, hc.G, sp.lambda_coupling)
    rhs = np.array([
        dc.eps_p * cmath.exp(-1j * dc.phi_pl), 0.0,
        dc.eps_1 * cmath.exp(-1j * dc.phi_1), 0.0,
        dc.eps_2 * cmath.exp(-1j * dc.phi_2), 0.0,
    ], dtype=complex)
    v = np.linalg.solve(m, rhs)
    dv = 1j * np.linalg.solve(m, v)
    scale = sp.eta_c * sp.kappa / (dc.eps_p * cmath.exp(-1j * dc.phi_pl))
    t = 1.0 - scale * v[0]
    dt = -scale * dv[0]
    return (dt / t).imag
