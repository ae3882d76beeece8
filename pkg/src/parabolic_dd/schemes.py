"""Time stepping for the semi-discrete system M dy/dt + K y = F(t) on
interior unknowns, with M the diagonal lumped mass.

Three schemes are provided:

* ``theta``: the two-level scheme with weight sigma,
  (M + sigma*tau*K) y1 = (M - (1-sigma)*tau*K) y0 + tau*F.

* ``factorized_pu``: the stiffness splits as K = K1 + K2 via a partition
  of unity, and the implicit operator factorizes as B1 M^{-1} B2 with
  B_a = M + sigma*tau*K_a:

      B1 M^{-1} B2 (y1 - y0)/tau + K y0 = F.

  At sigma = 1 this is algebraically identical to the two-stage
  auxiliary-value form

      (M + tau*K1) ytilde = M y0 + tau*(F - K2 y0)
      (M + tau*K2) y1     = M y0 + tau*(F - K1 ytilde),

  which is what the stepper uses there; for 0.5 <= sigma < 1 it uses the
  direct two-solve form.

* ``indicator_dd``: the stiffness splits as K = K1 + K2 - K12 via
  subdomain indicators, advancing (sigma = 1 form) through

      (M + tau*K1) ytilde = M y0 + tau*(F - K2 y0 + K12 y0)
      (M + tau*K2) y1     = M y0 + tau*(F - K1 ytilde + K12 ytilde).

All operators are assembled once per run; each stage is one sparse SPD
solve, warm-started from the current state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import sparse

from .assembly import (Coefficients, assemble_load, assemble_stiffness,
                       lumped_mass_interior)
from .decomposition import StripDecomposition, chi_fields, eta_fields
from .linalg import SolverError, solve_spd
from .mesh import Mesh, interior_index_map

SCHEME_KINDS = ("theta", "factorized_pu", "indicator_dd")


class StepError(RuntimeError):
    """A time step failed; carries the step index and partial trajectory."""

    def __init__(self, message: str, step_index: int, partial=None):
        super().__init__(message)
        self.step_index = step_index
        self.partial = partial


@dataclass(frozen=True)
class SchemeConfig:
    kind: str
    sigma: float
    tau: float
    n_steps: int
    t_final: float
    decomposition: StripDecomposition | None = None
    rel_tol: float = 1e-10
    max_iter_factor: int = 10

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if not (0.0 < self.sigma <= 1.0):
            raise ValueError(f"sigma must be in (0, 1], got {self.sigma}")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        if abs(self.tau * self.n_steps - self.t_final) > 1e-12:
            raise ValueError(
                f"tau * n_steps = {self.tau * self.n_steps} does not match "
                f"t_final = {self.t_final}")
        if self.kind != "theta" and self.decomposition is None:
            raise ValueError(f"scheme {self.kind!r} requires a decomposition")
        if self.kind == "indicator_dd" and self.sigma != 1.0:
            raise ValueError("indicator_dd implements the sigma = 1 form")

    @classmethod
    def from_horizon(cls, kind, sigma, t_final, n_steps, **kwargs):
        return cls(kind=kind, sigma=sigma, tau=t_final / n_steps,
                   n_steps=n_steps, t_final=t_final, **kwargs)


@dataclass
class SchemeOperators:
    """Matrices and load shared by every step of one run."""

    mass: np.ndarray                      # lumped diagonal, interior
    k_full: sparse.csr_array              # K1 + K2 [- K12]
    k1: sparse.csr_array | None
    k2: sparse.csr_array | None
    k12: sparse.csr_array | None
    b1: sparse.csr_array                  # theta: M + sigma*tau*K
    b2: sparse.csr_array | None
    load_at: Callable[[float], np.ndarray]


@dataclass
class SchemeState:
    y: np.ndarray
    step_index: int
    ops: SchemeOperators


def build_operators(mesh: Mesh, coeff: Coefficients,
                    config: SchemeConfig) -> SchemeOperators:
    imap = interior_index_map(mesh)
    mass = lumped_mass_interior(mesh, imap)
    mass_mat = sparse.diags_array(mass).tocsr()
    st = config.sigma * config.tau

    if config.kind == "theta":
        k_full = assemble_stiffness(mesh, None, coeff, imap)
        k1 = k2 = k12 = None
        b1 = (mass_mat + st * k_full).tocsr()
        b2 = None
    elif config.kind == "factorized_pu":
        eta1, eta2 = eta_fields(config.decomposition, mesh)
        k1 = assemble_stiffness(mesh, eta1, coeff, imap)
        k2 = assemble_stiffness(mesh, eta2, coeff, imap)
        k12 = None
        k_full = (k1 + k2).tocsr()
        b1 = (mass_mat + st * k1).tocsr()
        b2 = (mass_mat + st * k2).tocsr()
    else:  # indicator_dd
        chi1, chi2, chi12 = chi_fields(config.decomposition, mesh)
        k1 = assemble_stiffness(mesh, chi1, coeff, imap)
        k2 = assemble_stiffness(mesh, chi2, coeff, imap)
        k12 = assemble_stiffness(mesh, chi12, coeff, imap)
        k_full = (k1 + k2 - k12).tocsr()
        b1 = (mass_mat + config.tau * k1).tocsr()
        b2 = (mass_mat + config.tau * k2).tocsr()

    if callable(coeff.f):
        def load_at(t: float) -> np.ndarray:
            return assemble_load(mesh, coeff, t, imap)
    else:
        const_load = assemble_load(mesh, coeff, 0.0, imap)

        def load_at(t: float) -> np.ndarray:
            return const_load

    return SchemeOperators(mass=mass, k_full=k_full, k1=k1, k2=k2, k12=k12,
                           b1=b1, b2=b2, load_at=load_at)


def _solve(config: SchemeConfig, A, rhs, x0):
    n = rhs.shape[0]
    return solve_spd(A, rhs, rel_tol=config.rel_tol,
                     max_iter=config.max_iter_factor * n, x0=x0)


def theta_step(state: SchemeState, config: SchemeConfig) -> SchemeState:
    ops = state.ops
    y = state.y
    tau, sigma = config.tau, config.sigma
    f = ops.load_at((state.step_index + sigma) * tau)
    rhs = ops.mass * y + tau * f
    if sigma != 1.0:
        rhs -= (1.0 - sigma) * tau * (ops.k_full @ y)
    y_new = _solve(config, ops.b1, rhs, y)
    return replace(state, y=y_new, step_index=state.step_index + 1)


def factorized_pu_step_direct(state: SchemeState,
                              config: SchemeConfig) -> SchemeState:
    """General-sigma factorized step, B1 M^{-1} B2 (y1-y0)/tau = F - K y0.

    Solve B1 u = F - K y0 (so u = M^{-1} B2 (y1-y0)/tau), then
    B2 d = M u for the increment d = (y1-y0)/tau.
    """
    ops = state.ops
    y = state.y
    tau, sigma = config.tau, config.sigma
    f = ops.load_at((state.step_index + sigma) * tau)
    r = f - ops.k1 @ y - ops.k2 @ y
    u = _solve(config, ops.b1, r, None)
    d = _solve(config, ops.b2, ops.mass * u, None)
    return replace(state, y=y + tau * d, step_index=state.step_index + 1)


def factorized_pu_step_auxiliary(state: SchemeState,
                                 config: SchemeConfig) -> SchemeState:
    """Two-stage auxiliary-value form; equals the direct form at sigma=1."""
    ops = state.ops
    y = state.y
    tau = config.tau
    f = ops.load_at((state.step_index + config.sigma) * tau)
    my = ops.mass * y
    ytilde = _solve(config, ops.b1, my + tau * (f - ops.k2 @ y), y)
    y_new = _solve(config, ops.b2, my + tau * (f - ops.k1 @ ytilde), y)
    return replace(state, y=y_new, step_index=state.step_index + 1)


def factorized_pu_step(state: SchemeState,
                       config: SchemeConfig) -> SchemeState:
    if config.sigma == 1.0:
        return factorized_pu_step_auxiliary(state, config)
    return factorized_pu_step_direct(state, config)


def indicator_stages(state: SchemeState, config: SchemeConfig):
    """Both stages of the indicator scheme; returns (ytilde, y_new)."""
    ops = state.ops
    y = state.y
    tau = config.tau
    f = ops.load_at((state.step_index + config.sigma) * tau)
    my = ops.mass * y
    ytilde = _solve(config, ops.b1,
                    my + tau * (f - ops.k2 @ y + ops.k12 @ y), y)
    y_new = _solve(config, ops.b2,
                   my + tau * (f - ops.k1 @ ytilde + ops.k12 @ ytilde), y)
    return ytilde, y_new


def indicator_dd_step(state: SchemeState,
                      config: SchemeConfig) -> SchemeState:
    _, y_new = indicator_stages(state, config)
    return replace(state, y=y_new, step_index=state.step_index + 1)


_STEPPERS = {
    "theta": theta_step,
    "factorized_pu": factorized_pu_step,
    "indicator_dd": indicator_dd_step,
}


@dataclass
class Trajectory:
    """Stored time levels of one run (possibly thinned)."""

    kind: str
    times: np.ndarray        # (n_stored,)
    states: np.ndarray       # (n_stored, n_interior)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def run(config: SchemeConfig, mesh: Mesh, coeff: Coefficients,
        y0: np.ndarray | None = None, thin: int = 1) -> Trajectory:
    """Advance from y0 (zeros by default) over n_steps steps.

    ``thin`` keeps every thin-th level (level 0 and the final level are
    always kept).  A solver failure aborts with the partial trajectory
    attached to the raised StepError.
    """
    if thin < 1:
        raise ValueError("thin must be >= 1")
    ops = build_operators(mesh, coeff, config)
    n = ops.mass.shape[0]
    if y0 is None:
        y0 = np.zeros(n)
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (n,):
        raise ValueError(f"y0 has shape {y0.shape}, expected ({n},)")

    stepper = _STEPPERS[config.kind]
    state = SchemeState(y=y0, step_index=0, ops=ops)
    kept_times = [0.0]
    kept_states = [y0.copy()]
    for step in range(config.n_steps):
        try:
            state = stepper(state, config)
        except SolverError as err:
            partial = Trajectory(kind=config.kind,
                                 times=np.asarray(kept_times),
                                 states=np.asarray(kept_states))
            raise StepError(f"step {step + 1} failed: {err}",
                            step_index=step + 1, partial=partial) from err
        if state.step_index % thin == 0 or state.step_index == config.n_steps:
            kept_times.append(state.step_index * config.tau)
            kept_states.append(state.y)
    return Trajectory(kind=config.kind, times=np.asarray(kept_times),
                      states=np.asarray(kept_states))
