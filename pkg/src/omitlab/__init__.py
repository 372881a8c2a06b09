"""Simulator for an optical cavity coupled to a driven pair of mechanical
resonators: steady states and bistability, linear stability, probe
transmission with double transparency windows, optical group delay, and
second-order sideband generation, cross-checked by an independent
time-domain integrator.

The time-domain module pulls in a JIT compiler and is imported lazily; use
``import omitlab.timedomain`` or attribute access on this package.
"""
import importlib

__version__ = "0.1.0"

from .errors import (BranchNotAvailableError, ConfigError, DivergenceError,
                     NumericalInconsistencyError, OmitLabError,
                     ParameterError, PerturbativeRegimeWarning,
                     PhaseUndefinedError, SingularGeometryError,
                     SingularResponseError, UndefinedRatioError)
from .params import (CoulombParams, DriveConfig, SystemParams, coulomb_lambda,
                     derive_params, pump_amplitude, zero_point_spread,
                     HBAR, SPEED_OF_LIGHT, COULOMB_CONSTANT)
from .steady_state import (CubicCoefficients, SteadyState, bistability_sweep,
                           branch_labels, cubic_coeffs,
                           delta_c_for_red_sideband, detuning_susceptibility,
                           drive_for, photon_number_branches, solve_steady)
from .stability import (FluctuationMatrix, StabilityReport, assess_stability,
                        char_poly_coeffs, composite_conditions, eigen_stable,
                        fluctuation_matrix, hurwitz_minors,
                        routh_hurwitz_stable)
from .sidebands import (FirstOrderSideband, GroupDelay, HarmonicCoefficients,
                        SecondOrderSideband, SidebandSolution, TurningPoint,
                        efficiency_2nd, group_delay, h_coeffs,
                        solve_first_order, solve_second_order,
                        solve_sidebands, transmission,
                        transmission_coefficient, turning_point)

_LAZY_SUBMODULES = ("timedomain", "config", "scans", "cli")


def __getattr__(name):
    if name in _LAZY_SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
