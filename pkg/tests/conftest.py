import math

import pytest

import omitlab

TWO_PI = 2.0 * math.pi


def make_system(lam=1e5, eta_c=0.5, **overrides):
    """Reference device; lam defaults to the checked-in coupling value."""
    kw = dict(wavelength=1064e-9, cavity_length=25e-3,
              omega_m=(TWO_PI * 947e3, TWO_PI * 947e3),
              mass=(145e-12, 145e-12), kappa=TWO_PI * 215e3,
              quality_factor=6700.0, eta_c=eta_c, lambda_coupling=lam)
    kw.update(overrides)
    return omitlab.derive_params(**kw)


@pytest.fixture(scope="session")
def paper_system():
    return make_system()


@pytest.fixture(scope="session")
def single_resonator_system():
    return make_system(lam=0.0)


@pytest.fixture(scope="session")
def paper_drive(paper_system):
    return omitlab.drive_for(paper_system, power=3e-3)
