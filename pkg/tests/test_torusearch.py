import math

import numpy as np
import pytest

from flatsurf4.curve import CurvatureProfile, QuasiPeriodicProfile
from flatsurf4.errors import (ClosureFailure, NoSignChange,
                              SingularAfterRescale)
from flatsurf4.immersion import sphere_fit
from flatsurf4.torusearch import (SearchOutcome, a_n, build_perturbed_cylinder,
                                  build_perturbed_torus, circle_outcome,
                                  closure_multiple, holonomy,
                                  holonomy_closure_residual,
                                  lift_closure_multiple, rationalize,
                                  search_rational, single_harmonic_family,
                                  stretch_profile)

T = math.pi

# the documented release configuration: base-curve lift closes after 8
# periods exactly when the stretched holonomy hits 1/4
K0_STAR = 1.21321612108222
TARGET = (1, 4)
BRACKET = (0.9, 1.2)


@pytest.fixture(scope="module")
def release_outcome():
    fam = single_harmonic_family(K0_STAR, T)
    return search_rational(fam, 2, TARGET, BRACKET)


# ---------------------------------------------------------------------------
# holonomy basics


def test_circle_holonomy_is_identity():
    for k0 in (0.5, 1.0, 2.0):
        res = holonomy(CurvatureProfile(T, k0))
        assert abs(res.theta) < 1e-9
        assert res.rational == (0, 1)
        assert res.so3_deviation < 1e-8


def test_half_period_circle_rotates_by_pi():
    k0 = 1.0
    res = holonomy(CurvatureProfile(T / 2, k0))
    assert abs(abs(res.theta) - math.pi) < 1e-9
    axis_expected = np.array([k0, 0.0, 1.0]) / math.sqrt(1 + k0 * k0)
    assert np.linalg.norm(res.axis - axis_expected) < 1e-8


def test_holonomy_so3_membership_random_profiles():
    rng = np.random.default_rng(7)
    for _ in range(5):
        k = CurvatureProfile(2.0 + rng.uniform(0, 1), rng.uniform(0.3, 1.5),
                             tuple(rng.uniform(-0.3, 0.3, 2)),
                             tuple(rng.uniform(-0.3, 0.3, 1)))
        res = holonomy(k)
        assert res.so3_deviation < 1e-8
        assert abs(math.cos(res.theta) - 0.5 * (np.trace(res.rotation) - 1)) < 1e-8
        assert res.axis[2] >= 0.0


def test_identity_stretch_matches_plain_holonomy():
    k = CurvatureProfile(2.0, 0.8, (0.2,))
    r1 = holonomy(k)
    r2 = holonomy(stretch_profile(k, 1))
    assert abs(r1.theta - r2.theta) < 1e-12


def test_a_n_circle_is_zero():
    for n in (2, 3):
        assert abs(a_n(CurvatureProfile(T, 1.0), n)) < 1e-6


def test_a_n_continuity_in_coefficients():
    k0 = 0.9
    base = a_n(CurvatureProfile(T, k0, (0.4,)), 2)
    gaps = []
    for de in (1e-2, 1e-3, 1e-4):
        gaps.append(abs(a_n(CurvatureProfile(T, k0, (0.4 + de,)), 2) - base))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-4


def test_stretch_profile_substitution():
    k = CurvatureProfile(1.3, 0.5, (1.0,))
    ks = stretch_profile(k, 3)
    assert ks.base_period == pytest.approx(3.9)
    u = np.linspace(0, 1.3, 7)
    assert np.max(np.abs(ks.value(3 * u) - k.value(u))) < 1e-14


# ---------------------------------------------------------------------------
# rational detection


def test_rationalize():
    assert rationalize(0.75) == (3, 4)
    assert rationalize(0.25 + 5e-9) == (1, 4)
    assert rationalize(-2.0 / 7.0) == (-2, 7)
    assert rationalize(0.1427) is None            # near 1/7 but outside window
    assert rationalize(1 / 65, q_max=64) is None  # denominator too large


def test_closure_multiple():
    assert closure_multiple(0, 1) == 1
    assert closure_multiple(1, 4) == 8
    assert closure_multiple(2, 7) == 7
    assert closure_multiple(3, 4) == 8
    assert closure_multiple(2, 3) == 3


# ---------------------------------------------------------------------------
# search


def test_search_finds_circle_for_zero_target():
    fam = single_harmonic_family(1.0, T)
    out = search_rational(fam, 2, (0, 1), (0.0, 0.05))
    assert abs(out.parameter) < 1e-4
    assert out.closure_multiple == 1
    assert out.closure_residual < 1e-4


def test_search_no_sign_change_reports_scan():
    fam = single_harmonic_family(1.0, T)
    with pytest.raises(NoSignChange) as err:
        search_rational(fam, 2, (1, 2), (0.0, 0.3))
    scan = err.value.scan
    assert len(scan) >= 10
    assert all(abs(v) < 0.5 for _, v in scan)


def test_release_search(release_outcome):
    out = release_outcome
    assert abs(out.achieved.theta_over_pi - 0.25) < 1e-9
    assert out.parameter == pytest.approx(1.0900033738, abs=1e-6)
    assert out.closure_multiple == 8
    assert out.closure_residual < 1e-6


def test_property_p_rational_side(release_outcome):
    # stretched curves with a_2 within 1e-6 of p/q close after the
    # corresponding number of periods
    cases = [CurvatureProfile(T, k0) for k0 in (0.5, 1.0, 2.0)]
    mults = [1, 1, 1]
    cases.append(release_outcome.profile)
    mults.append(release_outcome.closure_multiple)
    fam = single_harmonic_family(K0_STAR, T)
    out2 = search_rational(fam, 2, (1, 5), (0.8, 1.05), h=2e-3)
    cases.append(out2.profile)
    mults.append(out2.closure_multiple)
    for k, m in zip(cases, mults):
        ks = stretch_profile(k, 2)
        assert a_n(k, 2) is not None
        residual = holonomy_closure_residual(ks, m, h=2e-3)
        assert residual < 1e-3


def test_property_p_far_side():
    # profiles with a_2 at distance >= 1e-2 from all rationals q <= 8
    # stay open after any m <= 16 periods
    for eps in (0.3, 0.5, 0.6, 0.7, 1.2):
        k = CurvatureProfile(T, K0_STAR, (eps,))
        v = a_n(k, 2, h=2e-3)
        dist = min(abs(v - p / q) for q in range(1, 9)
                   for p in range(-q, q + 1))
        assert dist >= 1e-2
        ks = stretch_profile(k, 2)
        best = min(holonomy_closure_residual(ks, m, h=4e-3)
                   for m in range(1, 17))
        assert best > 1e-2


# ---------------------------------------------------------------------------
# lift closure


def test_lift_closure_circle():
    m, gap = lift_closure_multiple(CurvatureProfile(T, 1.0))
    assert m == 2 and gap < 1e-9


def test_lift_closure_failure():
    k = CurvatureProfile(T, 1.0, (0.5,))
    with pytest.raises(ClosureFailure):
        lift_closure_multiple(k, m_max=16, tol=1e-8)


# ---------------------------------------------------------------------------
# torus assembly


def test_build_torus_release_configuration(release_outcome):
    im, rep = build_perturbed_torus(release_outcome, nodes_per_period=64,
                                    nv=128)
    assert rep["closure_u"] < 1e-4 and rep["closure_v"] < 1e-4
    assert rep["margin_min"] > 0
    assert rep["gauss_K_max"] < 1e-3
    assert rep["sphere_rms"] > 1e-2
    assert rep["omega_range"] > 1e-3
    assert rep["ok"] is True
    assert rep["lift_period_multiple"] == 8
    assert rep["stretched_period_multiple"] == 16
    # all supporting diagnostics hold on the assembled torus
    assert rep["tangency_u"] < 1e-4 and rep["tangency_v"] < 1e-4
    assert rep["metric_identity"] < 1e-4
    assert rep["derived_system_residual"] < 1e-3
    # 4th-order verification stencil at this deliberately coarse grid step
    assert rep["flatmap_max"] < 1e-4


def test_build_torus_circle_control():
    out = circle_outcome(1.0, 2)
    im, rep = build_perturbed_torus(out, lam=0.0, nodes_per_period=48, nv=96)
    assert "degenerate_product" in rep["flags"]
    assert rep["sphere_rms"] < 1e-6
    assert rep["ok"] is False  # products of circles are excluded by design
    fit = sphere_fit(im)
    assert fit.radius == pytest.approx(1.0, abs=1e-9)


def test_build_torus_forced_lambda_singular(release_outcome):
    with pytest.raises(SingularAfterRescale):
        build_perturbed_torus(release_outcome, lam=10.0, nodes_per_period=48,
                              nv=96)


# ---------------------------------------------------------------------------
# cylinder assembly


@pytest.fixture(scope="module")
def quasi_profile():
    return QuasiPeriodicProfile(0.8, ((0.15, 2.0, 0.0),
                                      (0.1, 2.0 * math.sqrt(2), 0.4)))


def test_build_cylinder_quasi_periodic(quasi_profile):
    im, rep = build_perturbed_cylinder(quasi_profile, n=2, h=0.02, nv=96)
    assert rep["margin_min"] > 0
    assert rep["metric_min_eigenvalue"] > 0
    assert rep["gauss_K_max"] < 1e-3
    assert rep["sphere_rms"] > 1e-2
    assert math.isfinite(rep["max_radius"])
    assert rep["max_radius"] < 2.0  # bounded in R^4
    assert rep["sin_omega_lower_bound"] > 0
    assert rep["ok"] is True


def test_build_cylinder_lambda_zero_is_hopf(quasi_profile):
    im, rep = build_perturbed_cylinder(quasi_profile, n=2, lam=0.0, h=0.03,
                                       nv=64)
    assert rep["sphere_rms"] < 1e-9
    assert rep["max_radius"] == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# serialization


def test_search_outcome_json(release_outcome):
    import json
    blob = json.loads(release_outcome.to_json())
    assert blob["n"] == 2
    assert blob["rational"] == [1, 4]
    assert blob["profile"]["T"] == pytest.approx(T)
    assert abs(blob["theta_over_pi"] - 0.25) < 1e-9
