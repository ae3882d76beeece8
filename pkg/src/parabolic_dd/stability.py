"""Dense transition operators and numerical stability certificates.

On meshes small enough to densify, each scheme's one-step map is formed
explicitly and its contraction properties are measured: operator norms
in the lumped-mass-weighted metric, the convex-combination identity for
the factorized transition, positivity of the split operators, and
per-step monotonicity of the scheme-specific weighted norms along
homogeneous trajectories started from seeded random data.

Conventions: M is the diagonal lumped mass on interior nodes and plays
the role of the identity, so the implicit factors are B_a = M + s*t*K_a,
the overlap weight is G = M + (t/2)*K12, and all operator norms are
spectral norms of M^{1/2} X M^{-1/2}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .linalg import (dense_smallest_eigenvalue, dense_solve,
                     dense_spectral_norm, to_dense)

NORM_LIMIT = 1.0 + 1e-10       # operator-norm certificates
RATIO_LIMIT = 1.0 + 1e-9       # per-step trajectory ratios
DEFAULT_SEED = 20240501


def _dense(A) -> np.ndarray:
    if sparse.issparse(A):
        return to_dense(A)
    return np.asarray(A, dtype=float)


def weighted_operator_norm(S: np.ndarray, mass: np.ndarray,
                           rel_tol: float = 1e-10) -> float:
    """Operator norm of S in the M-weighted inner product, computed as
    the spectral norm of M^{1/2} S M^{-1/2}."""
    d = np.sqrt(mass)
    return dense_spectral_norm(d[:, None] * S / d[None, :], rel_tol=rel_tol)


def lambda_max_generalized(K, mass: np.ndarray) -> float:
    """Largest eigenvalue of M^{-1} K (= spectral norm of the symmetrized
    operator, K being symmetric PSD)."""
    Kd = _dense(K)
    d = np.sqrt(mass)
    return dense_spectral_norm(Kd / np.outer(d, d))


def coercivity_delta_h(K, mass: np.ndarray, rel_tol: float = 1e-8) -> float:
    """Smallest eigenvalue of M^{-1/2} K M^{-1/2} by inverse power
    iteration; the coercivity constant of the discrete elliptic operator."""
    Kd = _dense(K)
    d = np.sqrt(mass)
    return dense_smallest_eigenvalue(Kd / np.outer(d, d), rel_tol=rel_tol)


def transition_theta(K, mass: np.ndarray, sigma: float,
                     tau: float) -> np.ndarray:
    """One-step map of the theta scheme, S = I - tau*(M + s*t*K)^{-1} K."""
    Kd = _dense(K)
    n = Kd.shape[0]
    B = np.diag(mass) + sigma * tau * Kd
    return np.eye(n) - tau * dense_solve(B, Kd)


@dataclass
class FactorizedTransition:
    """Transition data of the factorized scheme.

    ``s`` propagates the B2-transformed state (the quantity whose norm
    the scheme controls); ``s_y`` propagates the state itself.  The
    convex-combination identity s = ((2s-1)/(2s)) I + (1/(2s)) s1 s2 is
    checked entry-wise and its worst deviation recorded.
    """

    s: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    s_y: np.ndarray
    identity_deviation: float


def transition_factorized(K1, K2, mass: np.ndarray, sigma: float,
                          tau: float) -> FactorizedTransition:
    K1d = _dense(K1)
    K2d = _dense(K2)
    n = K1d.shape[0]
    M = np.diag(mass)
    I = np.eye(n)
    st = sigma * tau
    B1 = M + st * K1d
    B2 = M + st * K2d
    Kd = K1d + K2d

    s1 = dense_solve(B1, M - st * K1d)
    s2 = dense_solve(B2, M - st * K2d)
    # B2-transformed transition: S = I - tau * B1^{-1} K B2^{-1} M.
    s = I - tau * dense_solve(B1, Kd @ dense_solve(B2, M))
    # State transition: y1 = y0 - tau * B2^{-1} M B1^{-1} K y0.
    s_y = I - tau * dense_solve(B2, mass[:, None] * dense_solve(B1, Kd))
    combo = ((2.0 * sigma - 1.0) / (2.0 * sigma)) * I \
        + (1.0 / (2.0 * sigma)) * (s1 @ s2)
    deviation = float(np.max(np.abs(s - combo)))
    return FactorizedTransition(s=s, s1=s1, s2=s2, s_y=s_y,
                                identity_deviation=deviation)


@dataclass
class QOperator:
    """Weighting operator of the indicator scheme's stability estimate,
    Q = G^{-1} (M + s*t*K2 - ((s-1)/2)*t*K12), with G = M + (t/2)*K12."""

    q: np.ndarray
    g: np.ndarray
    abar2: np.ndarray
    abar1: np.ndarray | None = None


def build_q_operator(K2, K12, mass: np.ndarray, sigma: float, tau: float,
                     K1=None) -> QOperator:
    K2d = _dense(K2)
    K12d = _dense(K12)
    M = np.diag(mass)
    G = M + 0.5 * tau * K12d
    rhs = M + sigma * tau * K2d - 0.5 * (sigma - 1.0) * tau * K12d
    q = dense_solve(G, rhs)
    abar2 = K2d - 0.5 * K12d
    abar1 = None if K1 is None else _dense(K1) - 0.5 * K12d
    return QOperator(q=q, g=G, abar2=abar2, abar1=abar1)


@dataclass
class IndicatorTransition:
    """One-step maps of the indicator scheme (sigma = 1).

    ``s_y`` is the composite of the two stages as the stepper executes
    them (overlap term frozen at y in stage 1 and at ytilde in stage 2).
    ``s_y_averaged`` composes the variant whose stage-2 overlap term
    uses the average (y + ytilde)/2; that variant is the one exactly
    matched by the G/Abar two-stage form, and the two maps differ at
    O(tau^2).
    """

    s_y: np.ndarray
    s_y_averaged: np.ndarray
    s_y_transformed: np.ndarray
    deviation_from_transformed: float


def transition_indicator(K1, K2, K12, mass: np.ndarray,
                         tau: float) -> IndicatorTransition:
    K1d = _dense(K1)
    K2d = _dense(K2)
    K12d = _dense(K12)
    M = np.diag(mass)
    B1 = M + tau * K1d
    B2 = M + tau * K2d

    # Stage 1 (shared): (M + t K1) ytilde = (M - t K2 + t K12) y.
    stage1 = dense_solve(B1, M - tau * K2d + tau * K12d)
    # Stage 2 as stepped: (M + t K2) y1 = M y + t (K12 - K1) ytilde.
    s_y = dense_solve(B2, M + tau * (K12d - K1d) @ stage1)
    # Stage 2 with averaged overlap term: ... + t K12 (y + ytilde)/2.
    s_avg = dense_solve(
        B2, M + 0.5 * tau * K12d - tau * (K1d - 0.5 * K12d) @ stage1)

    # G/Abar form: (G + t Abar1) ytilde = (G - t Abar2) y,
    #              (G + t Abar2) y1 = G y - t Abar1 ytilde.
    G = M + 0.5 * tau * K12d
    abar1 = K1d - 0.5 * K12d
    abar2 = K2d - 0.5 * K12d
    stage1_t = dense_solve(G + tau * abar1, G - tau * abar2)
    s_t = dense_solve(G + tau * abar2, G - tau * abar1 @ stage1_t)

    return IndicatorTransition(
        s_y=s_y,
        s_y_averaged=s_avg,
        s_y_transformed=s_t,
        deviation_from_transformed=float(np.max(np.abs(s_y - s_t))),
    )


@dataclass
class BoundCheck:
    name: str
    measured: float
    limit: float
    passed: bool
    direction: str = "max"  # "max": measured <= limit, "min": measured >= limit

    def to_dict(self) -> dict:
        return {"name": self.name, "measured": self.measured,
                "limit": self.limit, "pass": self.passed,
                "direction": self.direction}


def check_max(name: str, measured: float, limit: float) -> BoundCheck:
    return BoundCheck(name, float(measured), float(limit),
                      bool(measured <= limit), "max")


def check_min(name: str, measured: float, limit: float) -> BoundCheck:
    return BoundCheck(name, float(measured), float(limit),
                      bool(measured >= limit), "min")


@dataclass
class StabilityReport:
    scheme: str
    sigma: float
    tau: float
    mesh: int
    seed: int | None = None
    bounds: list[BoundCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(b.passed for b in self.bounds)

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "sigma": self.sigma, "tau": self.tau,
                "mesh": self.mesh, "seed": self.seed,
                "bounds": [b.to_dict() for b in self.bounds]}


def worst_step_ratio(s_y: np.ndarray, weight: np.ndarray,
                     mass: np.ndarray, trials: int, n_steps: int,
                     seed: int) -> float:
    """Largest per-step ratio of ||W y||_M along homogeneous trajectories
    y <- s_y y from seeded standard-normal starts."""
    n = s_y.shape[0]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        y = rng.standard_normal(n)
        w = weight @ y
        prev = np.sqrt(w @ (mass * w))
        for _ in range(n_steps):
            y = s_y @ y
            w = weight @ y
            cur = np.sqrt(w @ (mass * w))
            if prev > 0.0:
                worst = max(worst, cur / prev)
            prev = cur
    return worst


def certify_estimate(kind: str, n_intervals: int, sigma: float, tau: float,
                     decomposition=None, coeff=None, trials: int = 20,
                     n_steps: int = 50,
                     seed: int = DEFAULT_SEED) -> StabilityReport:
    """Measure the scheme's stability certificate on a small mesh.

    For each trial and step the appropriate weighted norm is tracked:
    ||y||_M for the theta scheme, ||B2 y||_{M^{-1}} for the factorized
    scheme, ||Q y||_M for the indicator scheme.  A worst per-step ratio
    above 1 + 1e-9 marks the bound failed (it does not raise).
    """
    from .assembly import Coefficients, assemble_stiffness, \
        lumped_mass_interior
    from .decomposition import chi_fields, eta_fields
    from .mesh import build_unit_square_mesh, interior_index_map

    if coeff is None:
        coeff = Coefficients()
    mesh = build_unit_square_mesh(n_intervals)
    imap = interior_index_map(mesh)
    mass = lumped_mass_interior(mesh, imap)
    report = StabilityReport(scheme=kind, sigma=sigma, tau=tau,
                             mesh=n_intervals, seed=seed)

    if kind == "theta":
        K = to_dense(assemble_stiffness(mesh, None, coeff, imap))
        s_y = transition_theta(K, mass, sigma, tau)
        report.bounds.append(check_max(
            "transition_norm", weighted_operator_norm(s_y, mass), NORM_LIMIT))
        weight = np.eye(K.shape[0])
        w_mass = mass
    elif kind == "factorized_pu":
        eta1, eta2 = eta_fields(decomposition, mesh)
        K1 = assemble_stiffness(mesh, eta1, coeff, imap)
        K2 = assemble_stiffness(mesh, eta2, coeff, imap)
        tr = transition_factorized(K1, K2, mass, sigma, tau)
        report.bounds.append(check_max(
            "s1_norm", weighted_operator_norm(tr.s1, mass), NORM_LIMIT))
        report.bounds.append(check_max(
            "s2_norm", weighted_operator_norm(tr.s2, mass), NORM_LIMIT))
        report.bounds.append(check_max(
            "transition_norm", weighted_operator_norm(tr.s, mass), NORM_LIMIT))
        report.bounds.append(check_max(
            "convex_identity_deviation", tr.identity_deviation, 1e-10))
        s_y = tr.s_y
        weight = np.diag(mass) + sigma * tau * to_dense(K2)  # B2
        w_mass = 1.0 / mass
    elif kind == "indicator_dd":
        chi1, chi2, chi12 = chi_fields(decomposition, mesh)
        K1 = assemble_stiffness(mesh, chi1, coeff, imap)
        K2 = assemble_stiffness(mesh, chi2, coeff, imap)
        K12 = assemble_stiffness(mesh, chi12, coeff, imap)
        K_unit = assemble_stiffness(mesh, None, coeff, imap)
        tr = transition_indicator(K1, K2, K12, mass, tau)
        qop = build_q_operator(K2, K12, mass, sigma, tau, K1=K1)
        split_dev = np.max(np.abs(qop.abar1 + qop.abar2 - to_dense(K_unit)))
        report.bounds.append(check_max("abar_sum_deviation", split_dev, 1e-13))
        report.bounds.append(check_min(
            "abar1_min_eig", np.linalg.eigvalsh(qop.abar1).min(), -1e-10))
        report.bounds.append(check_min(
            "abar2_min_eig", np.linalg.eigvalsh(qop.abar2).min(), -1e-10))
        s_y = tr.s_y
        weight = qop.q
        w_mass = mass
    else:
        raise ValueError(f"unknown scheme kind {kind!r}")

    worst = worst_step_ratio(s_y, weight, w_mass, trials, n_steps, seed)
    report.bounds.append(check_max("worst_step_ratio", worst, RATIO_LIMIT))
    return report
