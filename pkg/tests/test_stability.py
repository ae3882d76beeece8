import numpy as np
import pytest

from parabolic_dd.assembly import Coefficients, assemble_stiffness, \
    lumped_mass_interior
from parabolic_dd.decomposition import StripDecomposition, chi_fields, \
    eta_fields
from parabolic_dd.linalg import to_dense
from parabolic_dd.mesh import build_unit_square_mesh, interior_index_map
from parabolic_dd.stability import (build_q_operator, certify_estimate,
                                    coercivity_delta_h,
                                    lambda_max_generalized,
                                    transition_factorized,
                                    transition_indicator, transition_theta,
                                    weighted_operator_norm)

BASE_DEC = StripDecomposition(split=0.5, delta=0.05)


def interior_setup(n, coeff=None):
    mesh = build_unit_square_mesh(n)
    imap = interior_index_map(mesh)
    mass = lumped_mass_interior(mesh, imap)
    K = assemble_stiffness(mesh, None, coeff or Coefficients(), imap)
    return mesh, imap, mass, K


def test_transition_theta_zero_stiffness():
    mass = np.array([1.0, 2.0, 0.5])
    S = transition_theta(np.zeros((3, 3)), mass, 1.0, 0.7)
    assert np.array_equal(S, np.eye(3))
    assert weighted_operator_norm(S, mass) == pytest.approx(1.0, abs=1e-12)


def test_transition_theta_scalar_zero():
    # sigma = 0.5, tau * lam = 2 gives (1 - 1)/(1 + 1) = 0
    lam = 4.0
    S = transition_theta(np.array([[lam]]), np.array([1.0]), 0.5, 2.0 / lam)
    assert abs(S[0, 0]) <= 1e-15


@pytest.mark.parametrize("sigma", [0.5, 1.0])
@pytest.mark.parametrize("tau", [1e-3, 1.0])
def test_transition_theta_norm_bounded(sigma, tau):
    _, _, mass, K = interior_setup(6)
    S = transition_theta(K, mass, sigma, tau)
    assert weighted_operator_norm(S, mass) <= 1.0 + 1e-10


def test_factorized_trivial_factors():
    mass = np.full(4, 0.3)
    Z = np.zeros((4, 4))
    tr = transition_factorized(Z, Z, mass, 1.0, 0.5)
    assert np.allclose(tr.s1, np.eye(4))
    assert np.allclose(tr.s2, np.eye(4))
    assert np.allclose(tr.s, np.eye(4))


def test_factorized_sigma_half_is_pure_product():
    mesh, imap, mass, _ = interior_setup(6)
    eta1, eta2 = eta_fields(BASE_DEC, mesh)
    co = Coefficients()
    K1 = assemble_stiffness(mesh, eta1, co, imap)
    K2 = assemble_stiffness(mesh, eta2, co, imap)
    tr = transition_factorized(K1, K2, mass, 0.5, 0.01)
    assert np.abs(tr.s - tr.s1 @ tr.s2).max() <= 1e-13


@pytest.mark.parametrize("sigma", [0.5, 0.75, 1.0])
def test_factorized_identity_and_kellogg_bounds(sigma):
    mesh, imap, mass, _ = interior_setup(6)
    eta1, eta2 = eta_fields(BASE_DEC, mesh)
    co = Coefficients()
    K1 = assemble_stiffness(mesh, eta1, co, imap)
    K2 = assemble_stiffness(mesh, eta2, co, imap)
    tr = transition_factorized(K1, K2, mass, sigma, 0.002)
    assert tr.identity_deviation <= 1e-10
    assert weighted_operator_norm(tr.s1, mass) <= 1.0 + 1e-10
    assert weighted_operator_norm(tr.s2, mass) <= 1.0 + 1e-10
    assert weighted_operator_norm(tr.s, mass) <= 1.0 + 1e-10


def indicator_setup(n, dec=BASE_DEC):
    mesh, imap, mass, K = interior_setup(n)
    chi1, chi2, chi12 = chi_fields(dec, mesh)
    co = Coefficients()
    K1 = assemble_stiffness(mesh, chi1, co, imap)
    K2 = assemble_stiffness(mesh, chi2, co, imap)
    K12 = assemble_stiffness(mesh, chi12, co, imap)
    return mass, K, K1, K2, K12


def test_q_operator_no_overlap():
    # K12 = 0, sigma = 1: Q = M^{-1} (M + tau K2) = I + tau M^{-1} K2
    mass, K, K1, K2, _ = indicator_setup(10)
    Z = np.zeros_like(to_dense(K2))
    tau = 0.05
    qop = build_q_operator(K2, Z, mass, 1.0, tau)
    expected = np.eye(len(mass)) + tau * to_dense(K2) / mass[:, None]
    assert np.abs(qop.q - expected).max() <= 1e-12
    assert np.array_equal(qop.g, np.diag(mass))


def test_abar_split_and_positivity():
    mass, K, K1, K2, K12 = indicator_setup(10)
    qop = build_q_operator(K2, K12, mass, 1.0, 0.002, K1=K1)
    assert np.abs((qop.abar1 + qop.abar2) - to_dense(K)).max() <= 1e-13
    assert np.linalg.eigvalsh(qop.abar1).min() >= -1e-10
    assert np.linalg.eigvalsh(qop.abar2).min() >= -1e-10


def test_indicator_averaged_stage_matches_transformed_form():
    # The G/Abar two-stage form is exactly the scheme whose second-stage
    # overlap term averages y and ytilde; the stepped form differs at
    # O(tau^2), which the transition records as a deviation.
    mass, K, K1, K2, K12 = indicator_setup(10)
    for tau in (1e-3, 1e-1, 1.0):
        tr = transition_indicator(K1, K2, K12, mass, tau)
        assert np.abs(tr.s_y_averaged - tr.s_y_transformed).max() <= 1e-10
        assert tr.deviation_from_transformed >= 0.0


def test_indicator_no_overlap_forms_coincide():
    mass, K, K1, K2, K12 = indicator_setup(6)  # overlap misses barycenters
    assert np.abs(to_dense(K12)).max() == 0.0
    tr = transition_indicator(K1, K2, K12, mass, 0.1)
    assert tr.deviation_from_transformed <= 1e-12


@pytest.mark.parametrize("tau", [1e-3, 1e-2, 1e-1, 1.0])
def test_certify_theta(tau):
    report = certify_estimate("theta", 6, 1.0, tau, trials=20)
    assert report.passed, [b.to_dict() for b in report.bounds]


@pytest.mark.parametrize("tau", [1e-3, 1e-1, 1.0])
def test_certify_indicator(tau):
    report = certify_estimate("indicator_dd", 10, 1.0, tau,
                              decomposition=BASE_DEC, trials=20)
    assert report.passed, [b.to_dict() for b in report.bounds]
    names = {b.name for b in report.bounds}
    assert {"abar_sum_deviation", "abar1_min_eig", "abar2_min_eig",
            "worst_step_ratio"} <= names


def test_certify_factorized():
    report = certify_estimate("factorized_pu", 6, 1.0, 0.002,
                              decomposition=BASE_DEC, trials=20)
    assert report.passed


def test_negative_control_explicit_scheme():
    _, _, mass, K = interior_setup(8)
    lam_max = lambda_max_generalized(K, mass)
    tau = 2.5 / lam_max
    report = certify_estimate("theta", 8, 0.0, tau, trials=5, n_steps=10)
    ratio = next(b for b in report.bounds if b.name == "worst_step_ratio")
    assert ratio.measured > 1.0
    assert not ratio.passed
    assert not report.passed


def test_coercivity_identity():
    mass = np.array([0.2, 0.7, 1.3])
    assert coercivity_delta_h(np.diag(mass), mass) == pytest.approx(1.0)


def test_coercivity_approaches_laplace_eigenvalue():
    # first Dirichlet eigenvalue of the Laplacian on the unit square
    target = 2.0 * np.pi ** 2
    previous_gap = None
    for n in (4, 8, 16):
        _, _, mass, K = interior_setup(n)
        value = coercivity_delta_h(K, mass)
        assert value > 0
        gap = abs(value - target)
        if previous_gap is not None:
            assert gap < previous_gap
        previous_gap = gap
    assert gap <= 0.05 * target


def test_coercivity_constant_reaction_shift():
    _, _, mass, K0 = interior_setup(8)
    _, _, _, K10 = interior_setup(8, Coefficients(c=10.0))
    base = coercivity_delta_h(K0, mass)
    shifted = coercivity_delta_h(K10, mass)
    assert shifted - base == pytest.approx(10.0, abs=1e-5)


def test_report_serialization_schema():
    report = certify_estimate("theta", 4, 1.0, 0.01, trials=2, n_steps=5)
    data = report.to_dict()
    assert set(data) >= {"scheme", "sigma", "tau", "mesh", "bounds"}
    for bound in data["bounds"]:
        assert set(bound) >= {"name", "measured", "limit", "pass"}
