"""Self-consistent mean-field steady state and bistability branch analysis.

The intracavity photon number x = |c_s|^2 satisfies a real cubic
a3 x^3 + a2 x^2 + a1 x + a0 = 0 whose coefficients follow from eliminating
the mechanical amplitudes. The elimination produces a static back-action
susceptibility W such that the effective detuning is
Delta = Delta_c - W g^2 x.
"""
import math
from dataclasses import dataclass

from .errors import BranchNotAvailableError, NumericalInconsistencyError, ParameterError
from .params import DriveConfig, pump_amplitude

BRANCH_POLICIES = ("adiabatic-lower", "lower", "middle", "upper")

# roots closer than this relative gap are treated as a fold and merged
FOLD_MERGE_RTOL = 1e-6


def detuning_susceptibility(sp):
    """Static back-action susceptibility W in Delta = Delta_c - W g^2 x.

    Derived by solving the coupled mechanical steady state exactly; for
    degenerate resonators the denominator reduces to the square of the
    single-resonator factor.
    """
    om1, om2 = sp.omega_m
    g1, g2 = sp.gamma
    lam = sp.lambda_coupling
    num = 2.0 * om1 * (om2**2 + g2**2 / 4.0) - 2.0 * lam**2 * om2
    den = ((om1**2 + g1**2 / 4.0) * (om2**2 + g2**2 / 4.0)
           - 2.0 * lam**2 * (om1 * om2 - g1 * g2 / 4.0) + lam**4)
    return num / den


@dataclass(frozen=True)
class CubicCoefficients:
    """Real coefficients of the photon-number cubic, highest power first."""

    a3: float
    a2: float
    a1: float
    a0: float
    W: float

    def __call__(self, x):
        return ((self.a3 * x + self.a2) * x + self.a1) * x + self.a0

    def sign_sequence(self):
        """Signs of (a3, a2, a1, a0) as a string like '+-+-'."""
        return "".join("+" if a > 0 else ("-" if a < 0 else "0")
                       for a in (self.a3, self.a2, self.a1, self.a0))

    def residual_scale(self, x):
        return max(abs(self.a3 * x**3), abs(self.a2 * x**2),
                   abs(self.a1 * x), abs(self.a0), 1e-300)


def cubic_coeffs(sp, dc):
    """Photon-number cubic for the given drive."""
    w = detuning_susceptibility(sp)
    g2 = sp.g**2
    return CubicCoefficients(
        a3=w**2 * g2**2,
        a2=-2.0 * dc.delta_c * w * g2,
        a1=sp.kappa**2 / 4.0 + dc.delta_c**2,
        a0=-dc.eps_l**2,
        W=w,
    )


def _cbrt(x):
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def _real_cubic_roots(a3, a2, a1, a0):
    """Real roots of a cubic with real coefficients, closed form.

    Discriminant branching selects the trigonometric (three real roots) or
    Cardano (one real root) path; each root gets one Newton polish step.
    """
    if a3 == 0.0:
        if a2 == 0.0:
            if a1 == 0.0:
                return []
            return [-a0 / a1]
        disc = a1 * a1 - 4.0 * a2 * a0
        if disc < 0.0:
            return []
        s = math.sqrt(disc)
        # numerically stable quadratic splitting
        q = -0.5 * (a1 + math.copysign(s, a1))
        roots = [q / a2]
        if q != 0.0:
            roots.append(a0 / q)
        return sorted(roots)
    if a0 == 0.0:
        # x = 0 is exact; the rest is the quadratic factor
        return sorted([0.0] + [r for r in _real_cubic_roots(0.0, a3, a2, a1)
                               if r != 0.0])

    b, c, d = a2 / a3, a1 / a3, a0 / a3
    shift = b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    disc = -4.0 * p**3 - 27.0 * q * q
    if disc > 0.0:
        # three distinct real roots: trigonometric form (p < 0 here)
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = min(1.0, max(-1.0, arg))
        theta = math.acos(arg) / 3.0
        roots = [m * math.cos(theta - 2.0 * math.pi * k / 3.0) - shift
                 for k in range(3)]
    else:
        # one real root; disc <= 0 guarantees the Cardano radicand >= 0
        half_q = q / 2.0
        s = math.sqrt(max(half_q * half_q + p**3 / 27.0, 0.0))
        u = _cbrt(-half_q + s)
        v = _cbrt(-half_q - s)
        roots = [u + v - shift]

    polished = []
    for x in roots:
        f = ((a3 * x + a2) * x + a1) * x + a0
        df = (3.0 * a3 * x + 2.0 * a2) * x + a1
        if df != 0.0:
            x = x - f / df
        polished.append(x)
    return sorted(polished)


def photon_number_branches(cc):
    """All non-negative real photon-number roots, sorted ascending.

    Roots closer than FOLD_MERGE_RTOL relative are merged (fold point).
    Every returned root satisfies the cubic to 1e-9 of the coefficient scale.
    """
    if cc.a3 < 0.0:
        raise ParameterError(f"a3 must be non-negative, got {cc.a3!r}")
    raw = _real_cubic_roots(cc.a3, cc.a2, cc.a1, cc.a0)
    scale = max(abs(r) for r in raw) if raw else 0.0
    roots = []
    for x in raw:
        if x < 0.0:
            if scale > 0.0 and x > -1e-12 * scale:
                x = 0.0
            else:
                continue
        if roots and x - roots[-1] <= FOLD_MERGE_RTOL * max(abs(x), 1e-300):
            continue
        roots.append(x)
    for x in roots:
        if abs(cc(x)) > 1e-9 * cc.residual_scale(x):
            raise NumericalInconsistencyError(
                f"cubic root x={x!r} has residual {cc(x)!r} beyond tolerance")
    return roots


def branch_labels(roots):
    """Labels for a sorted root list: unique, or lower/middle/upper."""
    if len(roots) == 1:
        return ("unique",)
    if len(roots) == 2:
        return ("lower", "upper")
    return ("lower", "middle", "upper")


@dataclass(frozen=True)
class SteadyState:
    """Mean fields of the pump-driven system (probe and mechanical drives off)."""

    c_s: complex
    b_1s: complex
    b_2s: complex
    delta_eff: float
    photon_number_x: float
    branch_label: str
    residual: float


def solve_steady(sp, dc, branch_policy="adiabatic-lower"):
    """Solve the mean-field steady state on the requested branch.

    The pump amplitude is taken real and positive; drive phases enter the
    response only through the interference combinations, never here. The
    returned state satisfies the fixed-point equations to better than 1e-10
    relative, which is re-verified by back-substitution.
    """
    if branch_policy not in BRANCH_POLICIES:
        raise ParameterError(
            f"unknown branch_policy {branch_policy!r}; expected one of "
            f"{BRANCH_POLICIES}")
    cc = cubic_coeffs(sp, dc)
    roots = photon_number_branches(cc)
    labels = branch_labels(roots)
    if branch_policy in ("adiabatic-lower", "lower"):
        idx = 0
    else:
        if branch_policy not in labels:
            raise BranchNotAvailableError(
                f"branch {branch_policy!r} not available: {len(roots)} root(s) "
                f"at this drive")
        idx = labels.index(branch_policy)
    x = roots[idx]
    label = labels[idx] if branch_policy != "adiabatic-lower" else labels[0]

    delta = dc.delta_c - cc.W * sp.g**2 * x
    c_s = dc.eps_l / (1j * delta + sp.kappa / 2.0)
    om1, om2 = sp.omega_m
    g1, g2 = sp.gamma
    lam = sp.lambda_coupling
    chi2 = 1j * om2 + g2 / 2.0
    den = (1j * om1 + g1 / 2.0) * chi2 + lam**2
    b_1s = 1j * sp.g * x * chi2 / den
    b_2s = -1j * lam * b_1s / chi2

    residual = _steady_residual(sp, dc, c_s, b_1s, b_2s)
    if residual > 1e-8:
        raise NumericalInconsistencyError(
            f"steady-state residual {residual:.3e} beyond tolerance")
    return SteadyState(c_s=c_s, b_1s=b_1s, b_2s=b_2s, delta_eff=delta,
                       photon_number_x=x, branch_label=label, residual=residual)


def _steady_residual(sp, dc, c_s, b_1s, b_2s):
    """Relative back-substitution residual of the three fixed-point equations."""
    om1, om2 = sp.omega_m
    g1, g2 = sp.gamma
    lam = sp.lambda_coupling
    x = abs(c_s) ** 2
    delta_from_b = dc.delta_c - sp.g * (2.0 * b_1s.real)
    r_c = abs((1j * delta_from_b + sp.kappa / 2.0) * c_s - dc.eps_l)
    r_1 = abs((1j * om1 + g1 / 2.0) * b_1s - (1j * sp.g * x - 1j * lam * b_2s))
    r_2 = abs((1j * om2 + g2 / 2.0) * b_2s + 1j * lam * b_1s)
    scale_c = max(dc.eps_l, abs(c_s) * sp.kappa, 1e-300)
    scale_1 = max(abs(b_1s) * om1, sp.g * x, 1e-300)
    scale_2 = max(abs(b_2s) * om2, lam * abs(b_1s), 1e-300)
    return max(r_c / scale_c, r_1 / scale_1, r_2 / scale_2)


def delta_c_for_red_sideband(sp, eps_l):
    """Bare detuning that puts the effective detuning exactly on omega_m1.

    With Delta pinned, x = eps_l^2 / (omega_m1^2 + kappa^2/4) solves the
    cubic exactly, so Delta_c = omega_m1 + W g^2 x closes the loop without
    iteration.
    """
    om1 = sp.omega_m[0]
    x = eps_l**2 / (om1**2 + sp.kappa**2 / 4.0)
    return om1 + detuning_susceptibility(sp) * sp.g**2 * x


def drive_for(sp, *, power, convention="half-kappa", eps_p_ratio=0.05,
              eps_1_ratio=0.0, eps_2_ratio=0.0, phi_l=0.0, phi_p=0.0,
              phi_1=0.0, phi_2=0.0, delta_p_over_omega_m=0.0,
              red_sideband=True, delta_c=None):
    """Resolve a complete DriveConfig for the standard operating point.

    Parameters
    ----------
    power : float
        Pump power in W.
    convention : str
        Pump amplitude convention, see `pump_amplitude`.
    eps_p_ratio : float
        Probe amplitude as a fraction of the pump amplitude.
    eps_1_ratio, eps_2_ratio : float
        Mechanical drive amplitudes as fractions of the probe amplitude
        (the natural units for drive-interference plots).
    delta_p_over_omega_m : float
        Probe detuning from the first mechanical sideband in units of
        omega_m1; sets xi = omega_m1 * (1 + value).
    red_sideband : bool
        When True (default), delta_c is adjusted so the effective detuning
        sits exactly on omega_m1 at this power. When False, `delta_c` must
        be given.

    The power-to-amplitude conversion is evaluated at the cavity frequency;
    the pump is detuned from it by parts in 1e9, far below every tolerance
    used in this package.
    """
    eps_l = pump_amplitude(power, sp.omega_c, sp.kappa, sp.eta_c, convention)
    if red_sideband:
        delta_c = delta_c_for_red_sideband(sp, eps_l)
    elif delta_c is None:
        raise ParameterError("delta_c is required when red_sideband is False")
    omega_l = sp.omega_c - delta_c
    xi = sp.omega_m[0] * (1.0 + delta_p_over_omega_m)
    eps_p = eps_p_ratio * eps_l
    return DriveConfig(pump_power=power, omega_l=omega_l, delta_c=delta_c,
                       eps_l=eps_l, eps_p=eps_p, xi=xi,
                       eps_1=eps_1_ratio * eps_p, eps_2=eps_2_ratio * eps_p,
                       phi_l=phi_l, phi_p=phi_p, phi_1=phi_1, phi_2=phi_2,
                       pump_convention=convention)


def bistability_sweep(sp, power_range, n_points, *, convention="half-kappa",
                      delta_c=None, eps_p_ratio=0.05):
    """Photon-number branches versus pump power at fixed bare detuning.

    Returns a list of (power, roots, labels) tuples with roots sorted
    ascending. The detuning defaults to the bare red sideband omega_m1,
    which is where the S-curve develops as power grows.
    """
    if n_points < 2:
        raise ParameterError(f"n_points must be >= 2, got {n_points}")
    p_lo, p_hi = power_range
    if not (0.0 <= p_lo < p_hi):
        raise ParameterError(f"power_range must satisfy 0 <= lo < hi, got "
                             f"{power_range!r}")
    if delta_c is None:
        delta_c = sp.omega_m[0]
    rows = []
    for i in range(n_points):
        p = p_lo + (p_hi - p_lo) * i / (n_points - 1)
        eps_l = pump_amplitude(p, sp.omega_c, sp.kappa, sp.eta_c, convention)
        dcfg = DriveConfig(pump_power=p, omega_l=sp.omega_c - delta_c,
                           delta_c=delta_c, eps_l=eps_l,
                           eps_p=eps_p_ratio * eps_l, xi=sp.omega_m[0],
                           pump_convention=convention)
        roots = photon_number_branches(cubic_coeffs(sp, dcfg))
        rows.append((p, roots, branch_labels(roots)))
    return rows
