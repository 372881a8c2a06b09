"""Linear stability of a steady state.

The fluctuation dynamics around a steady state are governed by a 6x6 complex
coefficient matrix over the basis (dc, dc*, db1, db1*, db2, db2*). Stability
is decided two independent ways: Routh-Hurwitz conditions on the coefficients
of the degree-6 characteristic polynomial, and the eigenvalue spectrum
directly. The two verdicts are compared on every call; disagreements inside a
narrow marginal band are reported, never asserted.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .errors import NumericalInconsistencyError

log = logging.getLogger(__name__)

# |max Re eigenvalue| below this fraction of kappa counts as marginal
MARGINAL_BAND_FACTOR = 1e-6


@dataclass(frozen=True)
class FluctuationMatrix:
    """Linearized drift matrix and the pump-enhanced coupling it was built with."""

    matrix: np.ndarray      # 6x6 complex
    G: complex              # g * c_s

    @property
    def basis(self):
        return ("dc", "dc*", "db1", "db1*", "db2", "db2*")


def fluctuation_matrix(sp, ss):
    """Assemble the drift matrix by linearizing the equations of motion.

    Second-order fluctuation products are dropped; rows for the conjugated
    operators are the elementwise conjugates of their partners under the
    simultaneous swap of each (o, o*) pair.
    """
    G = sp.g * ss.c_s
    Gc = np.conj(G)
    delta = ss.delta_eff
    om1, om2 = sp.omega_m
    g1, g2 = sp.gamma
    kap = sp.kappa
    lam = sp.lambda_coupling
    m = np.array([
        [-1j * delta - kap / 2, 0, 1j * G, 1j * G, 0, 0],
        [0, 1j * delta - kap / 2, -1j * Gc, -1j * Gc, 0, 0],
        [1j * Gc, 1j * G, -1j * om1 - g1 / 2, 0, -1j * lam, 0],
        [-1j * Gc, -1j * G, 0, 1j * om1 - g1 / 2, 0, 1j * lam],
        [0, 0, -1j * lam, 0, -1j * om2 - g2 / 2, 0],
        [0, 0, 0, 1j * lam, 0, 1j * om2 - g2 / 2],
    ], dtype=complex)
    return FluctuationMatrix(matrix=m, G=G)


def _variant_matrix(sp, ss):
    """A previously tabulated form of the drift matrix, kept only so reports
    can quantify how it differs from the direct linearization."""
    G = sp.g * ss.c_s
    Gc = np.conj(G)
    delta = ss.delta_eff
    om1, om2 = sp.omega_m
    g1, g2 = sp.gamma
    kap = sp.kappa
    lam = sp.lambda_coupling
    return np.array([
        [-1j * delta - kap / 2, 0, 1j * G, 1j * G, 0, 0],
        [0, 1j * delta - kap / 2, 1j * Gc, 1j * Gc, 0, 0],
        [-1j * om1 - g1 / 2, 0, 1j * Gc, 1j * G, -1j * lam, 0],
        [0, 1j * om1 - g1 / 2, 1j * G, 1j * Gc, 0, 1j * lam],
        [-1j * om2 - g2 / 2, 0, -1j * lam, 0, 0, 0],
        [0, 1j * om2 - g2 / 2, 0, 1j * lam, 0, 0],
    ], dtype=complex)


def char_poly_coeffs(fm):
    """Coefficients (C1..C6) of det(Y I - M) = Y^6 + C1 Y^5 + ... + C6.

    Computed with the Faddeev-LeVerrier trace recursion. The matrix is a
    doubled representation of a real system, so the coefficients are real;
    imaginary residue beyond 1e-9 relative raises, smaller residue is
    truncated and logged.
    """
    m = fm.matrix if isinstance(fm, FluctuationMatrix) else np.asarray(fm)
    n = m.shape[0]
    b = np.eye(n, dtype=complex)
    coeffs = np.empty(n, dtype=complex)
    for k in range(1, n + 1):
        a = m @ b
        ck = -np.trace(a) / k
        coeffs[k - 1] = ck
        b = a + ck * np.eye(n)
    scale = np.abs(coeffs).max()
    imag_res = np.abs(coeffs.imag).max()
    if imag_res > 1e-9 * scale:
        raise NumericalInconsistencyError(
            f"characteristic coefficients have imaginary residue "
            f"{imag_res:.3e} (scale {scale:.3e})")
    if imag_res > 0.0:
        log.debug("truncated imaginary residue %.3e on characteristic "
                  "coefficients", imag_res)
    return coeffs.real.copy()


def hurwitz_minors(coeffs):
    """Leading principal minors D1..D6 of the Hurwitz matrix of the sextic.

    All six strictly positive is equivalent to every root having a negative
    real part.
    """
    a = np.concatenate([[1.0], np.asarray(coeffs, dtype=float)])
    h = np.zeros((6, 6))
    for i in range(6):
        for j in range(6):
            k = 2 * (j + 1) - (i + 1)
            if 0 <= k <= 6:
                h[i, j] = a[k]
    return np.array([np.linalg.det(h[:k, :k]) for k in range(1, 7)])


def composite_conditions(coeffs):
    """Alternative composite form of the six stability inequalities.

    Carried over from earlier working notes and retained for cross-checking
    only; the first three agree with the Hurwitz minors, the last three are
    known to disagree in parts of parameter space. `hurwitz_minors` is the
    authoritative set; differences between the two are diagnostic output,
    never a verdict.
    """
    c1, c2, c3, c4, c5, c6 = coeffs
    return np.array([
        # cond 1
        c1,
        # cond 2
        c1 * c2 - c3,
        # cond 3
        c1 * c2 * c3 + c1 * c5 - c1**2 * c4 - c3**2,
        # cond 4: C1C2C3C4 + C2C6(C1^2 + C3) + C1C5(C4 + C5)
        #         - C1^2C4^2 - C1C3C6 - C3^2C4 - C4^2
        (c1 * c2 * c3 * c4 + c2 * c6 * (c1**2 + c3) + c1 * c5 * (c4 + c5)
         - c1**2 * c4**2 - c1 * c3 * c6 - c3**2 * c4 - c4**2),
        # cond 5: C1C2C3C4C5 + (C1^2C2 - C2C3 + C1C3)C5C6
        #         + (C3C2 + C1C4 - C1C2^2 - C5)C5^2 - (C1C2C6 + C4C5)C3^2
        (c1 * c2 * c3 * c4 * c5 + (c1**2 * c2 - c2 * c3 + c1 * c3) * c5 * c6
         + (c3 * c2 + c1 * c4 - c1 * c2**2 - c5) * c5**2
         - (c1 * c2 * c6 + c4 * c5) * c3**2),
        # cond 6: C1C2C3C4C5C6 + (C1C4^2 - C1^2C4^2 - C3^2C4)C5C6
        #         + C2C3C5^2C6 - C1C2C3^2C6^2 - C1C3C5C6^2 - C5^3C6
        (c1 * c2 * c3 * c4 * c5 * c6
         + (c1 * c4**2 - c1**2 * c4**2 - c3**2 * c4) * c5 * c6
         + c2 * c3 * c5**2 * c6 - c1 * c2 * c3**2 * c6**2
         - c1 * c3 * c5 * c6**2 - c5**3 * c6),
    ])


@dataclass(frozen=True)
class RouthHurwitz:
    """Routh-Hurwitz evaluation of one coefficient set."""

    minors: np.ndarray
    composite: np.ndarray
    stable: bool


def routh_hurwitz_stable(coeffs):
    """Evaluate the six stability conditions; stable iff all minors positive."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (6,):
        raise NumericalInconsistencyError(
            f"expected six real coefficients, got shape {coeffs.shape}")
    minors = hurwitz_minors(coeffs)
    return RouthHurwitz(minors=minors,
                        composite=composite_conditions(coeffs),
                        stable=bool(np.all(minors > 0.0)))


def eigen_stable(fm):
    """Largest real part over the six drift eigenvalues.

    Uses the standard dense eigensolver on the complex matrix, which is
    deterministic for a fixed input. Solver non-convergence is surfaced as an
    explicit error rather than NaN.
    """
    m = fm.matrix if isinstance(fm, FluctuationMatrix) else np.asarray(fm)
    try:
        ev = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalInconsistencyError(
            f"eigenvalue solver did not converge: {exc}") from exc
    if not np.all(np.isfinite(ev)):
        raise NumericalInconsistencyError("eigenvalue solver returned "
                                          "non-finite values")
    return float(ev.real.max())


@dataclass(frozen=True)
class StabilityReport:
    """Joint verdict of the polynomial and spectral stability checks."""

    char_coeffs: np.ndarray
    rh_minors: np.ndarray
    rh_composite: np.ndarray
    rh_stable: bool
    eigenvalues: np.ndarray
    max_real_eigenvalue: float
    stable: bool
    marginal: bool
    method_agreement: bool
    tolerance_band: float
    variant_matrix_diff_count: int
    variant_matrix_max_abs_diff: float

    def to_json(self):
        """JSON-ready dict; `rh` carries the six minor values."""
        return {
            "stable": self.stable,
            "max_re_eig": self.max_real_eigenvalue,
            "rh": [float(v) for v in self.rh_minors],
            "agreement": self.method_agreement,
            "marginal": self.marginal,
            "char_coeffs": [float(v) for v in self.char_coeffs],
            "rh_composite": [float(v) for v in self.rh_composite],
            "variant_matrix_diff_count": self.variant_matrix_diff_count,
            "variant_matrix_max_abs_diff": self.variant_matrix_max_abs_diff,
        }


def assess_stability(sp, ss, band_factor=MARGINAL_BAND_FACTOR):
    """Full stability report for one steady state.

    The boolean verdict comes from the eigenvalue spectrum. Outside the
    marginal band |max Re| <= band_factor * kappa the Routh-Hurwitz verdict
    must agree; inside the band `marginal` is set and `method_agreement`
    reports the (non-binding) comparison.
    """
    fm = fluctuation_matrix(sp, ss)
    coeffs = char_poly_coeffs(fm)
    rh = routh_hurwitz_stable(coeffs)
    try:
        ev = np.linalg.eigvals(fm.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalInconsistencyError(
            f"eigenvalue solver did not converge: {exc}") from exc
    max_re = float(ev.real.max())
    band = band_factor * sp.kappa
    marginal = abs(max_re) <= band
    stable = max_re < 0.0
    agreement = rh.stable == stable
    diff = np.abs(fm.matrix - _variant_matrix(sp, ss))
    diff_count = int(np.count_nonzero(diff > 0.0))
    return StabilityReport(
        char_coeffs=coeffs,
        rh_minors=rh.minors,
        rh_composite=rh.composite,
        rh_stable=rh.stable,
        eigenvalues=ev,
        max_real_eigenvalue=max_re,
        stable=stable,
        marginal=marginal,
        method_agreement=agreement,
        tolerance_band=band,
        variant_matrix_diff_count=diff_count,
        variant_matrix_max_abs_diff=float(diff.max()),
    )
