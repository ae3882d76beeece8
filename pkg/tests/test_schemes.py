import numpy as np
import pytest
from scipy import sparse

from parabolic_dd.assembly import Coefficients, l2_norm, lumped_mass_interior
from parabolic_dd.decomposition import StripDecomposition
from parabolic_dd.experiments import model_problem
from parabolic_dd.linalg import csr_from_triplets, to_dense
from parabolic_dd.mesh import build_unit_square_mesh, interior_index_map
from parabolic_dd.schemes import (SchemeConfig, SchemeOperators, SchemeState,
                                  StepError, build_operators,
                                  factorized_pu_step,
                                  factorized_pu_step_auxiliary,
                                  factorized_pu_step_direct,
                                  indicator_dd_step, indicator_stages, run,
                                  theta_step)

BASE_DEC = StripDecomposition(split=0.5, delta=0.05)


def scalar_operators(lam, k1=None, k2=None, k12=None, sigma=1.0, tau=0.1,
                     load=0.0):
    """1x1 system with M = 1 and K = lam, for closed-form checks."""
    def mat(v):
        return csr_from_triplets(1, 1, [(0, 0, v)])

    mass = np.array([1.0])
    parts = {}
    if k1 is not None:
        parts = dict(k1=mat(k1), k2=mat(k2),
                     k12=None if k12 is None else mat(k12))
        b1 = mat(1.0 + sigma * tau * k1)
        b2 = mat(1.0 + sigma * tau * k2)
    else:
        parts = dict(k1=None, k2=None, k12=None)
        b1 = mat(1.0 + sigma * tau * lam)
        b2 = None
    return SchemeOperators(mass=mass, k_full=mat(lam), b1=b1, b2=b2,
                           load_at=lambda t: np.array([load]), **parts)


def test_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig("theta", 0.0, 0.1, 1, 0.1)
    with pytest.raises(ValueError):
        SchemeConfig("theta", 1.0, 0.1, 2, 0.1)  # tau * n != T
    with pytest.raises(ValueError):
        SchemeConfig("factorized_pu", 1.0, 0.1, 1, 0.1)  # no decomposition
    with pytest.raises(ValueError):
        SchemeConfig("indicator_dd", 0.75, 0.1, 1, 0.1,
                     decomposition=BASE_DEC)
    with pytest.raises(ValueError):
        SchemeConfig("unknown", 1.0, 0.1, 1, 0.1)


@pytest.mark.parametrize("sigma", [0.5, 0.75, 1.0])
def test_theta_scalar_closed_form(sigma):
    lam, tau, f, y0 = 2.3, 0.37, 0.7, 1.1
    ops = scalar_operators(lam, sigma=sigma, tau=tau, load=f)
    cfg = SchemeConfig("theta", sigma, tau, 1, tau)
    state = SchemeState(y=np.array([y0]), step_index=0, ops=ops)
    out = theta_step(state, cfg)
    expected = ((1 - (1 - sigma) * tau * lam) * y0 + tau * f) \
        / (1 + sigma * tau * lam)
    assert out.y[0] == pytest.approx(expected, rel=1e-12)
    assert out.step_index == 1


def test_factorized_scalar_closed_form():
    # sigma = 1, K1 = K2 = lam/2:
    # y1 = ((1 + tau^2 lam^2 / 4) y0 + tau F) / (1 + tau lam / 2)^2
    lam, tau, f, y0 = 3.1, 0.21, 0.4, 0.9
    ops = scalar_operators(lam, k1=lam / 2, k2=lam / 2, sigma=1.0, tau=tau,
                           load=f)
    cfg = SchemeConfig("factorized_pu", 1.0, tau, 1, tau,
                       decomposition=BASE_DEC)
    state = SchemeState(y=np.array([y0]), step_index=0, ops=ops)
    out = factorized_pu_step(state, cfg)
    expected = ((1 + tau ** 2 * lam ** 2 / 4) * y0 + tau * f) \
        / (1 + tau * lam / 2) ** 2
    assert out.y[0] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("kind", ["theta", "factorized_pu", "indicator_dd"])
def test_zero_data_zero_trajectory(kind):
    mesh = build_unit_square_mesh(6)
    cfg = SchemeConfig.from_horizon(kind, 1.0, 0.1, 5,
                                    decomposition=BASE_DEC)
    traj = run(cfg, mesh, Coefficients(f=0.0))
    assert np.abs(traj.states).max() == 0.0


def test_run_zero_steps():
    mesh = build_unit_square_mesh(4)
    cfg = SchemeConfig("theta", 1.0, 0.25, 0, 0.0)
    rng = np.random.default_rng(0)
    y0 = rng.standard_normal(interior_index_map(mesh).n_interior)
    traj = run(cfg, mesh, Coefficients(), y0=y0)
    assert traj.states.shape[0] == 1
    assert np.array_equal(traj.states[0], y0)


def test_theta_matches_dense_reference():
    mesh = build_unit_square_mesh(4)
    imap = interior_index_map(mesh)
    coeff = model_problem()
    cfg = SchemeConfig.from_horizon("theta", 1.0, 0.1, 3)
    traj = run(cfg, mesh, coeff)

    from parabolic_dd.assembly import assemble_load, assemble_stiffness
    K = to_dense(assemble_stiffness(mesh, None, coeff, imap))
    mass = lumped_mass_interior(mesh, imap)
    F = assemble_load(mesh, coeff, 0.0, imap)
    y = np.zeros(imap.n_interior)
    B = np.diag(mass) + cfg.tau * K
    for _ in range(3):
        y = np.linalg.solve(B, mass * y + cfg.tau * F)
    assert np.abs(y - traj.final_state).max() <= 1e-9


def test_factorized_reduces_to_theta_when_second_part_empty():
    # eta1 = 1, eta2 = 0 elementwise: B2 = M and the factorized update
    # must reproduce the theta update with K = K1.
    mesh = build_unit_square_mesh(8)
    imap = interior_index_map(mesh)
    coeff = model_problem()
    from parabolic_dd.assembly import assemble_stiffness
    K = assemble_stiffness(mesh, None, coeff, imap)
    Z = csr_from_triplets(*K.shape, [])
    mass = lumped_mass_interior(mesh, imap)
    mass_mat = sparse.diags_array(mass).tocsr()
    tau = 0.02
    from parabolic_dd.assembly import assemble_load
    F = assemble_load(mesh, coeff, 0.0, imap)
    ops = SchemeOperators(mass=mass, k_full=K, k1=K, k2=Z, k12=None,
                          b1=(mass_mat + tau * K).tocsr(),
                          b2=mass_mat.copy(),
                          load_at=lambda t: F)
    cfg_f = SchemeConfig("factorized_pu", 1.0, tau, 1, tau,
                         decomposition=BASE_DEC)
    cfg_t = SchemeConfig("theta", 1.0, tau, 1, tau)
    rng = np.random.default_rng(4)
    y0 = rng.standard_normal(imap.n_interior)
    out_f = factorized_pu_step(SchemeState(y0.copy(), 0, ops), cfg_f)
    out_t = theta_step(SchemeState(y0.copy(), 0, ops), cfg_t)
    assert np.abs(out_f.y - out_t.y).max() <= 1e-9


def test_factorized_two_forms_agree_at_sigma_one():
    mesh = build_unit_square_mesh(50)
    coeff = model_problem()
    cfg = SchemeConfig.from_horizon("factorized_pu", 1.0, 0.1, 50,
                                    decomposition=BASE_DEC, rel_tol=1e-12)
    ops = build_operators(mesh, coeff, cfg)
    rng = np.random.default_rng(8)
    y0 = rng.standard_normal(ops.mass.shape[0])
    direct = factorized_pu_step_direct(SchemeState(y0.copy(), 0, ops), cfg)
    aux = factorized_pu_step_auxiliary(SchemeState(y0.copy(), 0, ops), cfg)
    assert np.abs(direct.y - aux.y).max() <= 1e-9


def test_indicator_stage_relation():
    # subtracting the two stage equations:
    # (y1 - ytilde)/tau + M^{-1} K2 (y1 - y0) - M^{-1} K12 (ytilde - y0) = 0
    mesh = build_unit_square_mesh(50)
    coeff = model_problem()
    cfg = SchemeConfig.from_horizon("indicator_dd", 1.0, 0.1, 50,
                                    decomposition=BASE_DEC, rel_tol=1e-14,
                                    max_iter_factor=40)
    ops = build_operators(mesh, coeff, cfg)
    mass = ops.mass
    rng = np.random.default_rng(7)
    y0 = rng.standard_normal(mass.shape[0])
    ytilde, y1 = indicator_stages(SchemeState(y0, 0, ops), cfg)
    residual = (y1 - ytilde) / cfg.tau \
        + (ops.k2 @ (y1 - y0)) / mass \
        - (ops.k12 @ (ytilde - y0)) / mass
    assert l2_norm(mass, residual) <= 1e-9


def test_indicator_with_empty_overlap_matches_sharp_factorized():
    # delta = 0: K12 has no support, and both schemes take identical steps
    mesh = build_unit_square_mesh(10)
    coeff = model_problem()
    dec = StripDecomposition(split=0.5, delta=0.0)
    cfg_i = SchemeConfig.from_horizon("indicator_dd", 1.0, 0.1, 10,
                                      decomposition=dec)
    cfg_f = SchemeConfig.from_horizon("factorized_pu", 1.0, 0.1, 10,
                                      decomposition=dec)
    traj_i = run(cfg_i, mesh, coeff)
    traj_f = run(cfg_f, mesh, coeff)
    assert np.array_equal(traj_i.states, traj_f.states)


def test_run_deterministic():
    mesh = build_unit_square_mesh(10)
    coeff = model_problem()
    cfg = SchemeConfig.from_horizon("indicator_dd", 1.0, 0.1, 10,
                                    decomposition=BASE_DEC)
    a = run(cfg, mesh, coeff)
    b = run(cfg, mesh, coeff)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.times, b.times)


def test_run_thinning():
    mesh = build_unit_square_mesh(5)
    cfg = SchemeConfig.from_horizon("theta", 1.0, 0.1, 50)
    traj = run(cfg, mesh, model_problem(), thin=10)
    assert np.allclose(traj.times,
                       [0.0, 0.02, 0.04, 0.06, 0.08, 0.1])
    full = run(cfg, mesh, model_problem())
    assert np.array_equal(traj.states[-1], full.states[-1])


def test_theta_solution_antisymmetry():
    # f = x1 - x2 makes the benchmark solution odd under x1 <-> x2
    mesh = build_unit_square_mesh(20)
    cfg = SchemeConfig.from_horizon("theta", 1.0, 0.1, 10)
    traj = run(cfg, mesh, model_problem())
    from parabolic_dd.experiments import embed_on_grid
    grid = embed_on_grid(mesh, traj.final_state)
    assert np.abs(grid + grid.T).max() <= 1e-8


def test_step_failure_keeps_partial_trajectory():
    mesh = build_unit_square_mesh(6)
    cfg = SchemeConfig.from_horizon("theta", 1.0, 0.1, 5, rel_tol=1e-14,
                                    max_iter_factor=0)
    with pytest.raises(StepError) as err:
        run(cfg, mesh, model_problem())
    assert err.value.step_index == 1
    assert err.value.partial.states.shape[0] == 1
