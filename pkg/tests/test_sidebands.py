import cmath

import numpy as np
import pytest
import scipy.optimize

import omitlab
from omitlab import (DriveConfig, ParameterError, PhaseUndefinedError,
                     SingularResponseError, UndefinedRatioError, group_delay,
                     h_coeffs, solve_first_order, solve_second_order,
                     solve_sidebands, solve_steady, transmission,
                     transmission_coefficient, turning_point)
from omitlab.sidebands import _check_singular
from conftest import TWO_PI, make_system


def response_at(sp, power=3e-3, dp=0.0, e1r=0.0, e2r=0.0, **kw):
    dc = omitlab.drive_for(sp, power=power, delta_p_over_omega_m=dp,
                           eps_1_ratio=e1r, eps_2_ratio=e2r, **kw)
    ss = solve_steady(sp, dc)
    return dc, ss


def test_h_coefficients_at_zero_beat(paper_system):
    sp = paper_system
    dc, ss = response_at(sp)
    hc = h_coeffs(sp, ss, 0.0)
    assert hc.h1_plus == 1j * ss.delta_eff + sp.kappa / 2
    assert hc.h2_minus == -1j * sp.omega_m[0] + sp.gamma[0] / 2


def test_composites_recompute_from_components(paper_system):
    sp = paper_system
    dc, ss = response_at(sp)
    hc = h_coeffs(sp, ss, dc.xi * 1.003)
    lam2 = sp.lambda_coupling**2
    assert hc.U1_plus == hc.h2_plus * hc.h3_plus + lam2
    assert hc.U1_minus == hc.h2_minus * hc.h3_minus + lam2
    assert hc.U2_plus == hc.h5_plus * hc.h6_plus + lam2
    assert hc.Pi == hc.h3_minus * hc.U1_plus - hc.h3_plus * hc.U1_minus
    assert hc.Gamma == hc.U2_plus * hc.h6_minus - hc.U2_minus * hc.h6_plus
    assert hc.G == sp.g * ss.c_s


def test_composites_collapse_without_phonon_coupling():
    sp = make_system(lam=0.0)
    dc, ss = response_at(sp, dp=0.004)
    hc = h_coeffs(sp, ss, dc.xi)
    assert hc.U1_plus == hc.h2_plus * hc.h3_plus
    assert hc.U1_minus == hc.h2_minus * hc.h3_minus
    assert hc.Pi == pytest.approx(
        hc.h3_plus * hc.h3_minus * (hc.h2_plus - hc.h2_minus), rel=1e-12)


def test_efficiency_vanishes_with_the_probe(paper_system):
    # eta scales out one power of eps_p, so it goes to zero with the probe
    sp = paper_system
    etas = []
    for ratio in (0.04, 0.02, 0.01):
        dc = omitlab.drive_for(sp, power=3e-3, eps_p_ratio=ratio)
        ss = solve_steady(sp, dc)
        etas.append(solve_sidebands(sp, ss, dc).efficiency_eta)
    assert etas[0] > etas[1] > etas[2] > 0
    assert etas[1] == pytest.approx(etas[0] / 2, rel=1e-6)
    assert etas[2] == pytest.approx(etas[0] / 4, rel=1e-6)


def test_bare_cavity_lorentzian():
    sp = make_system(lam=0.0, g=0.0)
    dc, ss = response_at(sp, dp=0.007)
    first = solve_first_order(sp, ss, dc)
    hc = h_coeffs(sp, ss, dc.xi)
    expected = dc.eps_p * cmath.exp(-1j * dc.phi_pl) / hc.h1_plus
    assert first.A1m == pytest.approx(expected, rel=1e-12)
    assert first.B1m == 0 and first.D1m == 0


def _single_resonator_reference(sp, ss, dc):
    """Independent 4x4 build of the cavity + one-resonator response."""
    delta = ss.delta_eff
    om1, g1 = sp.omega_m[0], sp.gamma[0]
    kap, xi = sp.kappa, dc.xi
    G = sp.g * ss.c_s
    Gc = np.conj(G)
    a = np.array([
        [1j * (delta - xi) + kap / 2, 0, -1j * G, -1j * G],
        [0, -1j * (delta + xi) + kap / 2, 1j * Gc, 1j * Gc],
        [-1j * Gc, -1j * G, 1j * (om1 - xi) + g1 / 2, 0],
        [1j * Gc, 1j * G, 0, -1j * (om1 + xi) + g1 / 2],
    ], dtype=complex)
    rhs = np.array([dc.eps_p * np.exp(-1j * dc.phi_pl), 0,
                    dc.eps_1 * np.exp(-1j * dc.phi_1), 0], dtype=complex)
    return np.linalg.solve(a, rhs)


def test_single_resonator_against_independent_reference():
    sp = make_system(lam=0.0)
    for dp in (-0.13, 0.0, 0.02, 0.21):
        dc, ss = response_at(sp, dp=dp, e1r=0.3)
        first = solve_first_order(sp, ss, dc)
        ref = _single_resonator_reference(sp, ss, dc)
        assert first.A1m == pytest.approx(ref[0], rel=1e-10)
        assert first.B1m == pytest.approx(ref[2], rel=1e-10)


def random_case(rng):
    """Non-singular random draw of coefficients and drives."""
    sp = make_system(
        omega_m=(10 ** rng.uniform(6, 7), 10 ** rng.uniform(6, 7)),
        quality_factor=10 ** rng.uniform(2, 4),
        kappa=10 ** rng.uniform(5.5, 6.5),
        lam=10 ** rng.uniform(4, 5.8),
    )
    power = 10 ** rng.uniform(-3.5, -2)
    dc = omitlab.drive_for(
        sp, power=power,
        delta_p_over_omega_m=rng.uniform(-0.5, 0.5),
        eps_1_ratio=rng.uniform(0, 1.5), eps_2_ratio=rng.uniform(0, 1.5),
        phi_l=rng.uniform(0, TWO_PI), phi_p=rng.uniform(0, TWO_PI),
        phi_1=rng.uniform(0, TWO_PI), phi_2=rng.uniform(0, TWO_PI))
    return sp, dc


def test_closed_forms_match_direct_solve_on_random_draws():
    rng = np.random.default_rng(19)
    for _ in range(300):
        sp, dc = random_case(rng)
        ss = solve_steady(sp, dc)
        first = solve_first_order(sp, ss, dc)
        assert first.closed_form_rel_diff < 1e-10
        assert first.residual < 1e-10
        second = solve_second_order(sp, ss, dc, first)
        assert second.closed_form_rel_diff < 1e-10
        assert second.residual < 1e-10


def test_second_order_vanishes_without_sources(paper_system):
    sp = paper_system
    dc, ss = response_at(sp)
    silent = omitlab.DriveConfig(
        pump_power=dc.pump_power, omega_l=dc.omega_l, delta_c=dc.delta_c,
        eps_l=dc.eps_l, eps_p=0.0, xi=dc.xi)
    first = solve_first_order(sp, ss, silent)
    second = solve_second_order(sp, ss, silent, first)
    for v in (second.A2m, second.A2p, second.B2m, second.B2p, second.D2m,
              second.D2p):
        assert v == 0


def test_second_order_vanishes_without_optomechanical_coupling():
    sp = make_system(g=0.0)
    dc, ss = response_at(sp, dp=0.01, e1r=0.4, e2r=0.4)
    first = solve_first_order(sp, ss, dc)
    second = solve_second_order(sp, ss, dc, first)
    assert second.A2m == 0
    assert second.closed_form_rel_diff == 0.0


def test_off_resonant_transmission_approaches_bare_cavity(paper_system):
    sp = paper_system
    dc, ss = response_at(sp, dp=30.0)  # far outside every response feature
    t2 = transmission(sp, dc, solve_first_order(sp, ss, dc))
    hc = h_coeffs(sp, ss, dc.xi)
    bare = abs(1 - sp.eta_c * sp.kappa / hc.h1_plus) ** 2
    assert abs(t2 - bare) < 1e-3


def test_transmission_requires_probe(paper_system):
    sp = paper_system
    dc, ss = response_at(sp)
    first = solve_first_order(sp, ss, dc)
    silent = omitlab.DriveConfig(
        pump_power=dc.pump_power, omega_l=dc.omega_l, delta_c=dc.delta_c,
        eps_l=dc.eps_l, eps_p=0.0, xi=dc.xi)
    with pytest.raises(UndefinedRatioError):
        transmission_coefficient(sp, silent, first)
    with pytest.raises(UndefinedRatioError):
        omitlab.efficiency_2nd(sp, silent, solve_sidebands(sp, ss, dc))


def test_double_window_shape(paper_system):
    # absorption dip at the center flanked by two transparency peaks
    sp = paper_system
    dps = np.linspace(-0.08, 0.08, 161)
    t2 = []
    for dp in dps:
        dc, ss = response_at(sp, dp=dp)
        t2.append(transmission(sp, dc, solve_first_order(sp, ss, dc)))
    t2 = np.array(t2)
    center = t2[80]
    assert center < 0.01
    maxima = [i for i in range(1, 160)
              if t2[i] > t2[i - 1] and t2[i] > t2[i + 1]]
    assert len(maxima) == 2
    assert dps[maxima[0]] < 0 < dps[maxima[1]]
    assert min(t2[maxima]) > 0.9


def test_resonant_blockade_with_matched_drive():
    # near-zero transmission at the drive ratio that nulls the response
    sp = make_system(lam=0.0)
    dc, ss = response_at(sp, e1r=0.45)
    t2 = transmission(sp, dc, solve_first_order(sp, ss, dc))
    assert t2 < 0.02


def test_turning_point_reference_ratio():
    sp = make_system(lam=0.0)
    dc, ss = response_at(sp)
    tp = turning_point(sp, ss)
    assert tp.ratio == pytest.approx(0.45, abs=0.05)
    # the exact zero sits at a small mixing phase of order kappa/omega_m
    assert abs(tp.phase) < 0.2


def test_turning_point_zeroes_transmission():
    sp = make_system(lam=0.0)
    dc, ss = response_at(sp)
    tp = turning_point(sp, ss)
    probe = omitlab.drive_for(sp, power=3e-3, eps_1_ratio=tp.ratio,
                              phi_1=tp.phase)
    t2 = transmission(sp, probe, solve_first_order(sp, ss, probe))
    assert t2 < 1e-20


def test_turning_point_matches_numerical_root_find():
    sp = make_system(lam=0.0)
    dc, ss = response_at(sp)
    tp = turning_point(sp, ss)

    def closure(v):
        ratio, phase = v
        d = omitlab.drive_for(sp, power=3e-3, eps_1_ratio=ratio, phi_1=phase)
        t = transmission_coefficient(sp, d, solve_first_order(sp, ss, d))
        return [t.real, t.imag]

    res = scipy.optimize.root(closure, [0.4, 0.0], tol=1e-12)
    assert res.success
    assert abs(res.x[0] - tp.ratio) / tp.ratio < 1e-6


def test_turning_point_homogeneity():
    # the nulling ratio is invariant under joint probe/drive rescaling
    sp = make_system(lam=0.0)
    dc, ss = response_at(sp)
    tp = turning_point(sp, ss)
    for scale in (0.3, 2.0):
        d = omitlab.drive_for(sp, power=3e-3, eps_p_ratio=0.05 * scale,
                              eps_1_ratio=tp.ratio, phi_1=tp.phase)
        t2 = transmission(sp, d, solve_first_order(sp, ss, d))
        assert t2 < 1e-20


def test_turning_point_preconditions(paper_system):
    sp = paper_system
    dc, ss = response_at(sp)
    with pytest.raises(ParameterError):
        turning_point(sp, ss)  # needs lambda = 0
    sp0 = make_system(lam=0.0, g=0.0)
    dc0, ss0 = response_at(sp0)
    with pytest.raises(SingularResponseError):
        turning_point(sp0, ss0)


def test_singularity_check_names_the_coefficient():
    with pytest.raises(SingularResponseError, match="h2\\+"):
        _check_singular([1.0, 1.0, 0.0, 1.0, 1.0, 1.0],
                        ("h1+", "h1-", "h2+", "h2-", "h3+", "h3-"))


def test_group_delay_trivial_with_decoupled_port():
    sp = make_system(eta_c=0.0)
    dc = omitlab.drive_for(sp, power=3e-3)
    gd = group_delay(sp, dc)
    assert gd.tau == 0.0
    assert gd.t_at_eval == 1.0


def test_group_delay_single_resonator_slow_light():
    sp = make_system(lam=0.0)
    dc = omitlab.drive_for(sp, power=3e-3)
    gd = group_delay(sp, dc)
    assert gd.tau > 0
    assert 1e-6 < gd.tau < 1e-4
    assert gd.error_estimate < 1e-3 * abs(gd.tau)


def test_group_delay_fd_matches_analytic():
    for lam, e1r, e2r in ((0.0, 0.0, 0.0), (1e5, 0.0, 0.0), (1e5, 0.4, 0.0),
                          (1e5, 0.0, 0.6)):
        sp = make_system(lam=lam)
        dc = omitlab.drive_for(sp, power=3.5e-3, eps_1_ratio=e1r,
                               eps_2_ratio=e2r)
        fd = group_delay(sp, dc)
        an = group_delay(sp, dc, method="analytic")
        assert fd.tau == pytest.approx(an.tau, rel=1e-3)


def test_group_delay_phase_undefined_at_transmission_zero():
    sp = make_system(lam=0.0)
    dc, ss = response_at(sp)
    tp = turning_point(sp, ss)
    # evaluate exactly at the transmission zero
    d = omitlab.drive_for(sp, power=3e-3, eps_1_ratio=tp.ratio,
                          phi_1=tp.phase)
    d = omitlab.DriveConfig(
        pump_power=d.pump_power, omega_l=d.omega_l, delta_c=d.delta_c,
        eps_l=d.eps_l, eps_p=d.eps_p, xi=sp.omega_m[0], eps_1=d.eps_1,
        eps_2=d.eps_2, phi_l=d.phi_l, phi_p=d.phi_p, phi_1=d.phi_1,
        phi_2=d.phi_2)
    with pytest.raises(PhaseUndefinedError):
        group_delay(sp, d, ss=ss, at="xi")


def test_phase_periodicity(paper_system):
    sp = paper_system
    base = dict(power=3e-3, eps_1_ratio=0.4, eps_2_ratio=0.3)
    dc1 = omitlab.drive_for(sp, phi_1=0.37, **base)
    dc2 = omitlab.drive_for(sp, phi_1=0.37 + TWO_PI, **base)
    ss = solve_steady(sp, dc1)
    t1 = transmission(sp, dc1, solve_first_order(sp, ss, dc1))
    t2 = transmission(sp, dc2, solve_first_order(sp, ss, dc2))
    # equal up to rounding of the shifted phase argument
    assert t2 == pytest.approx(t1, rel=1e-13)


def test_drive_scaling_homogeneity(paper_system):
    import warnings

    sp = paper_system
    dc1, ss = response_at(sp, dp=0.01, e1r=0.5, e2r=0.25)
    first1 = solve_first_order(sp, ss, dc1)
    s = 3.7
    dc2 = omitlab.drive_for(sp, power=3e-3, delta_p_over_omega_m=0.01,
                            eps_p_ratio=0.05 * s, eps_1_ratio=0.5,
                            eps_2_ratio=0.25)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", omitlab.PerturbativeRegimeWarning)
        first2 = solve_first_order(sp, ss, dc2)
    assert abs(first2.A1m / first1.A1m - s) < 1e-12 * s
    t1 = transmission(sp, dc1, first1)
    t2 = transmission(sp, dc2, first2)
    assert abs(t2 - t1) < 1e-12 * t1


def test_solution_container_fields(paper_system):
    sp = paper_system
    dc, ss = response_at(sp, e2r=0.7)
    sol = solve_sidebands(sp, ss, dc)
    assert sol.first_residual < 1e-10
    assert sol.second_residual < 1e-10
    assert sol.closed_form_rel_diff_1 < 1e-10
    assert sol.closed_form_rel_diff_2 < 1e-10
    assert sol.efficiency_eta >= 0
    assert abs(sol.transmission_t) ** 2 == pytest.approx(
        transmission(sp, dc, sol), rel=1e-12)
