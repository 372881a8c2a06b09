"""Physical parameters of the cavity + two-resonator device and their derivations.

All frequencies and rates inside the package are angular (rad/s). Any value
that arrives as an ordinary frequency is multiplied by 2*pi exactly once, at
the config boundary (see `omitlab.config`), never here.
"""
import math
import warnings
from dataclasses import dataclass

from .errors import ParameterError, SingularGeometryError

HBAR = 1.054571817e-34          # J s (CODATA 2018)
SPEED_OF_LIGHT = 299792458.0    # m/s
COULOMB_CONSTANT = 8.9875517873681764e9  # N m^2 / C^2
TWO_PI = 2.0 * math.pi

PUMP_CONVENTIONS = ("2kappa", "eta-kappa", "half-kappa")


def _require_positive(name, value, allow_zero=False):
    ok = math.isfinite(value) and (value >= 0.0 if allow_zero else value > 0.0)
    if not ok:
        kind = "non-negative" if allow_zero else "strictly positive"
        raise ParameterError(f"{name} must be {kind} and finite, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class SystemParams:
    """Device constants in coherent internal units (angular rad/s, SI base).

    Attributes
    ----------
    omega_c : float
        Cavity angular frequency.
    cavity_length : float
        Cavity length in meters.
    omega_m : (float, float)
        Angular frequencies of the two mechanical resonators. Resonator 1
        couples to the light field; resonator 2 couples only to resonator 1.
    mass : (float, float)
        Effective masses in kg.
    gamma : (float, float)
        Mechanical energy decay rates.
    kappa : float
        Optical decay rate.
    eta_c : float
        Cavity coupling ratio, in (0, 1].
    g : float
        Single-photon optomechanical coupling of resonator 1.
    lambda_coupling : float
        Phonon-phonon coupling between the two resonators.
    quality_factor : float or None
        Mechanical quality factor when gamma was derived from it.
    """

    omega_c: float
    cavity_length: float
    omega_m: tuple
    mass: tuple
    gamma: tuple
    kappa: float
    eta_c: float
    g: float
    lambda_coupling: float = 0.0
    quality_factor: float = None

    def __post_init__(self):
        _require_positive("omega_c", self.omega_c)
        _require_positive("cavity_length", self.cavity_length)
        for i in (0, 1):
            _require_positive(f"omega_m[{i}]", self.omega_m[i])
            _require_positive(f"mass[{i}]", self.mass[i])
            _require_positive(f"gamma[{i}]", self.gamma[i])
        _require_positive("kappa", self.kappa)
        # eta_c = 0 is allowed as the fully undercoupled limit (t identically 1)
        if not (math.isfinite(self.eta_c) and 0.0 <= self.eta_c <= 1.0):
            raise ParameterError(f"eta_c must lie in [0, 1], got {self.eta_c!r}")
        _require_positive("g", self.g, allow_zero=True)
        _require_positive("lambda_coupling", self.lambda_coupling, allow_zero=True)
        object.__setattr__(self, "omega_m", tuple(float(v) for v in self.omega_m))
        object.__setattr__(self, "mass", tuple(float(v) for v in self.mass))
        object.__setattr__(self, "gamma", tuple(float(v) for v in self.gamma))


@dataclass(frozen=True)
class CoulombParams:
    """Electrostatic coupling geometry of the charged resonator pair."""

    r_0: float                      # equilibrium separation, m
    capacitance: tuple              # (C_1, C_2), F
    voltage: tuple                  # (V_1, V_2), V
    k_e: float = COULOMB_CONSTANT

    def __post_init__(self):
        if not (math.isfinite(self.r_0) and self.r_0 > 0.0):
            raise SingularGeometryError(
                f"r_0 must be strictly positive, got {self.r_0!r}")
        for i in (0, 1):
            _require_positive(f"capacitance[{i}]", self.capacitance[i])
        _require_positive("k_e", self.k_e)

    @property
    def charges(self):
        """Gate charges q_i = C_i V_i."""
        return (self.capacitance[0] * self.voltage[0],
                self.capacitance[1] * self.voltage[1])


def zero_point_spread(mass, omega):
    """Ground-state positional spread sqrt(hbar / (2 m omega))."""
    return math.sqrt(HBAR / (2.0 * mass * omega))


def derive_params(*, wavelength, cavity_length, omega_m, mass, kappa,
                  quality_factor=None, gamma=None, eta_c=0.5,
                  lambda_coupling=None, coulomb=None, g=None):
    """Build a fully populated SystemParams from raw device inputs.

    Parameters
    ----------
    wavelength : float
        Drive laser wavelength in meters; the cavity mode is taken at the
        near-resonant frequency 2 pi c / wavelength.
    cavity_length : float
        Cavity length in meters.
    omega_m : (float, float)
        Mechanical angular frequencies in rad/s.
    mass : (float, float)
        Effective masses in kg.
    kappa : float
        Optical decay rate in rad/s.
    quality_factor : float, optional
        Mechanical Q; decay rates become omega_m[i] / Q exactly. Mutually
        exclusive with `gamma`.
    gamma : (float, float), optional
        Mechanical decay rates given directly.
    eta_c : float
        Cavity coupling ratio, default 0.5 (critical coupling).
    lambda_coupling : float, optional
        Phonon-phonon coupling in rad/s. Takes precedence over `coulomb`
        (with a warning) if both are supplied.
    coulomb : CoulombParams, optional
        Electrostatic geometry from which lambda is derived when no direct
        value is given.
    g : float, optional
        Single-photon coupling override. Default is the length-modulation
        value (omega_c / L) * x_zpf of resonator 1.
    """
    wavelength = _require_positive("wavelength", wavelength)
    cavity_length = _require_positive("cavity_length", cavity_length)
    omega_m = (_require_positive("omega_m[0]", omega_m[0]),
               _require_positive("omega_m[1]", omega_m[1]))
    mass = (_require_positive("mass[0]", mass[0]),
            _require_positive("mass[1]", mass[1]))
    kappa = _require_positive("kappa", kappa)

    if (quality_factor is None) == (gamma is None):
        raise ParameterError(
            "exactly one of quality_factor or gamma must be supplied")
    if quality_factor is not None:
        quality_factor = _require_positive("quality_factor", quality_factor)
        gamma = (omega_m[0] / quality_factor, omega_m[1] / quality_factor)
    else:
        gamma = (_require_positive("gamma[0]", gamma[0]),
                 _require_positive("gamma[1]", gamma[1]))

    omega_c = TWO_PI * SPEED_OF_LIGHT / wavelength
    if g is None:
        g = (omega_c / cavity_length) * zero_point_spread(mass[0], omega_m[0])

    sp = SystemParams(omega_c=omega_c, cavity_length=cavity_length,
                      omega_m=omega_m, mass=mass, gamma=gamma, kappa=kappa,
                      eta_c=eta_c, g=g, lambda_coupling=0.0,
                      quality_factor=quality_factor)
    if lambda_coupling is not None:
        if coulomb is not None:
            warnings.warn("both a direct lambda_coupling and CoulombParams were "
                          "given; the direct value wins", stacklevel=2)
        lam = _require_positive("lambda_coupling", lambda_coupling,
                                allow_zero=True)
    elif coulomb is not None:
        lam = coulomb_lambda(coulomb, sp)
    else:
        lam = 0.0
    return SystemParams(omega_c=omega_c, cavity_length=cavity_length,
                        omega_m=omega_m, mass=mass, gamma=gamma, kappa=kappa,
                        eta_c=eta_c, g=g, lambda_coupling=lam,
                        quality_factor=quality_factor)


def coulomb_lambda(cp, sp):
    """Phonon-phonon coupling rate of two charged resonators a distance r_0 apart.

    Scales linearly in each gate voltage and capacitance, as r_0**-3, and as
    (m_1 m_2 omega_1 omega_2)**-1/2.
    """
    if cp.r_0 <= 0.0:
        raise SingularGeometryError("r_0 must be strictly positive")
    q1, q2 = cp.charges
    geom = cp.k_e * q1 * q2 / cp.r_0**3
    sqrt_term = math.sqrt(HBAR / (sp.mass[0] * sp.mass[1]
                                  * sp.omega_m[0] * sp.omega_m[1]))
    return geom * sqrt_term


def pump_amplitude(power, omega_l, kappa, eta_c, convention="half-kappa"):
    """Pump field amplitude from laser power.

    Three conversion conventions are supported, all of the form
    sqrt(beta * kappa * P / (hbar * omega_l)):
    '2kappa' uses beta = 2, 'eta-kappa' uses beta = 2 eta_c, and
    'half-kappa' uses beta = 1/2. The choice is reported alongside any
    derived output because the downstream response scales with it.
    """
    _require_positive("power", power, allow_zero=True)
    _require_positive("omega_l", omega_l)
    if convention == "2kappa":
        beta = 2.0
    elif convention == "eta-kappa":
        beta = 2.0 * eta_c
    elif convention == "half-kappa":
        beta = 0.5
    else:
        raise ParameterError(
            f"unknown pump convention {convention!r}; expected one of "
            f"{PUMP_CONVENTIONS}")
    return math.sqrt(beta * kappa * power / (HBAR * omega_l))


@dataclass(frozen=True)
class DriveConfig:
    """Optical pump/probe and mechanical drive tones.

    The probe beats against the pump at xi = omega_p - omega_l; both
    mechanical drives oscillate at that same beat frequency. Phases are raw
    tone phases; the interference-relevant combinations phi_pl and Phi_i are
    exposed as properties, reported modulo 2*pi.
    """

    pump_power: float       # W
    omega_l: float          # pump angular frequency, rad/s
    delta_c: float          # bare detuning omega_c - omega_l, rad/s
    eps_l: float            # pump amplitude, rad/s-equivalent field units
    eps_p: float            # probe amplitude
    xi: float               # probe-pump beat frequency, rad/s
    eps_1: float = 0.0      # drive amplitude on resonator 1
    eps_2: float = 0.0      # drive amplitude on resonator 2
    phi_l: float = 0.0
    phi_p: float = 0.0
    phi_1: float = 0.0
    phi_2: float = 0.0
    pump_convention: str = "half-kappa"

    def __post_init__(self):
        _require_positive("pump_power", self.pump_power, allow_zero=True)
        _require_positive("omega_l", self.omega_l)
        _require_positive("eps_l", self.eps_l, allow_zero=True)
        _require_positive("eps_p", self.eps_p, allow_zero=True)
        _require_positive("eps_1", self.eps_1, allow_zero=True)
        _require_positive("eps_2", self.eps_2, allow_zero=True)
        for name in ("delta_c", "xi", "phi_l", "phi_p", "phi_1", "phi_2"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")

    @property
    def omega_p(self):
        """Probe angular frequency."""
        return self.omega_l + self.xi

    @property
    def phi_pl(self):
        """Probe-pump phase difference, modulo 2*pi."""
        return (self.phi_p - self.phi_l) % TWO_PI

    @property
    def Phi_1(self):
        """Mixing phase of the resonator-1 drive, modulo 2*pi."""
        return (self.phi_1 + self.phi_l - self.phi_p) % TWO_PI

    @property
    def Phi_2(self):
        """Mixing phase of the resonator-2 drive, modulo 2*pi."""
        return (self.phi_2 + self.phi_l - self.phi_p) % TWO_PI

    def delta_p(self, sp):
        """Probe detuning from the first mechanical sideband, xi - omega_m1."""
        return self.xi - sp.omega_m[0]
