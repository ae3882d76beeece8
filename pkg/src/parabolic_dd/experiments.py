"""Experiment drivers: the benchmark-vs-decomposition comparison study,
its parameter sweeps, and manufactured-solution convergence checks.

The model problem is the heat equation on the unit square with k = 1,
c = 0, f = x1 - x2, zero initial data and horizon T = 0.1.  The theta
scheme provides the benchmark solution; both decomposition schemes run
on the identical mesh and step, and their deviation

    eps_beta(t^n) = || y_beta^n - y_benchmark^n ||

is tracked in the lumped-mass discrete L2 norm at every time level.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .assembly import Coefficients, assemble_load, l2_norm, \
    lumped_mass_interior
from .decomposition import StripDecomposition
from .linalg import to_dense
from .mesh import Mesh, build_unit_square_mesh, interior_index_map
from .schemes import SchemeConfig, Trajectory, run

SCHEME_ALIASES = {"theta": "theta", "pu": "factorized_pu",
                  "indicator": "indicator_dd"}
SWEEP_KINDS = ("delta", "grid", "steps")


def model_problem() -> Coefficients:
    return Coefficients(k=1.0, c=0.0, f=lambda x1, x2, t: x1 - x2)


@dataclass(frozen=True)
class ExperimentConfig:
    n_intervals: int = 50
    n_steps: int = 50
    t_final: float = 0.1
    sigma: float = 1.0
    split: float = 0.5
    delta: float = 0.05
    schemes: tuple[str, ...] = ("pu", "indicator")
    out_dir: str = "out"
    rel_tol: float = 1e-10
    seed: int = 20240501
    jobs: int = 1

    def __post_init__(self):
        for name in self.schemes:
            if name not in ("pu", "indicator"):
                raise ValueError(f"unknown comparison scheme {name!r}")

    @property
    def tau(self) -> float:
        return self.t_final / self.n_steps

    def decomposition(self) -> StripDecomposition:
        return StripDecomposition(split=self.split, delta=self.delta)

    def scheme_config(self, kind: str) -> SchemeConfig:
        dec = None if kind == "theta" else self.decomposition()
        return SchemeConfig.from_horizon(
            kind, self.sigma, self.t_final, self.n_steps,
            decomposition=dec, rel_tol=self.rel_tol)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "schemes" in data:
            data = dict(data, schemes=tuple(data["schemes"]))
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class ErrorSeries:
    """Deviation of each decomposition scheme from the benchmark."""

    times: np.ndarray
    eps: dict[str, np.ndarray]  # keyed by "pu" / "indicator"

    def final(self, name: str) -> float:
        return float(self.eps[name][-1])


@dataclass
class BaseRunResult:
    config: ExperimentConfig
    mesh: Mesh
    series: ErrorSeries
    trajectories: dict[str, Trajectory]      # includes "theta"
    snapshots: dict[str, np.ndarray]         # full-grid (n+1, n+1) arrays
    benchmark_final_norm: float


def embed_on_grid(mesh: Mesh, interior_values: np.ndarray) -> np.ndarray:
    """Interior vector -> full (n+1, n+1) grid with zero boundary values.

    Rows index x2, columns index x1."""
    imap = interior_index_map(mesh)
    full = np.zeros(mesh.n_nodes)
    full[imap.interior_nodes] = interior_values
    n = mesh.n_intervals
    return full.reshape(n + 1, n + 1)


def run_base_experiment(config: ExperimentConfig,
                        coeff: Coefficients | None = None) -> BaseRunResult:
    """Benchmark theta run plus the configured decomposition schemes on
    the identical mesh and time grid."""
    if coeff is None:
        coeff = model_problem()
    mesh = build_unit_square_mesh(config.n_intervals)
    imap = interior_index_map(mesh)
    mass = lumped_mass_interior(mesh, imap)

    trajectories = {"theta": run(config.scheme_config("theta"), mesh, coeff)}
    for name in config.schemes:
        kind = SCHEME_ALIASES[name]
        trajectories[name] = run(config.scheme_config(kind), mesh, coeff)

    bench = trajectories["theta"]
    eps = {}
    for name in config.schemes:
        diff = trajectories[name].states - bench.states
        eps[name] = np.array([l2_norm(mass, d) for d in diff])
    series = ErrorSeries(times=bench.times.copy(), eps=eps)

    snapshots = {"benchmark": embed_on_grid(mesh, bench.final_state)}
    for name in config.schemes:
        snapshots[f"{name}_deviation"] = embed_on_grid(
            mesh, trajectories[name].final_state - bench.final_state)

    return BaseRunResult(
        config=config, mesh=mesh, series=series, trajectories=trajectories,
        snapshots=snapshots,
        benchmark_final_norm=l2_norm(mass, bench.final_state))


def sweep_variant(config: ExperimentConfig, vary: str) -> ExperimentConfig:
    if vary == "delta":
        return replace(config, delta=config.delta / 2.0)
    if vary == "grid":
        return replace(config, n_intervals=config.n_intervals * 2)
    if vary == "steps":
        return replace(config, n_steps=config.n_steps * 2)
    raise ValueError(f"unknown sweep {vary!r}; expected one of {SWEEP_KINDS}")


@dataclass
class SweepResult:
    vary: str
    base: BaseRunResult
    variant: BaseRunResult

    def summary_rows(self):
        """(scheme, base eps(T), variant eps(T)) per compared scheme."""
        for name in self.base.config.schemes:
            yield (name, self.base.series.final(name),
                   self.variant.series.final(name))


def run_sweep(config: ExperimentConfig, vary: str,
              coeff: Coefficients | None = None) -> SweepResult:
    """Rerun the comparison with one parameter changed: delta halved,
    grid refined 2x at fixed step count, or step count doubled."""
    variant = sweep_variant(config, vary)
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=min(config.jobs, 2)) as pool:
            base_f = pool.submit(run_base_experiment, config, coeff)
            var_f = pool.submit(run_base_experiment, variant, coeff)
            return SweepResult(vary=vary, base=base_f.result(),
                               variant=var_f.result())
    return SweepResult(vary=vary, base=run_base_experiment(config, coeff),
                       variant=run_base_experiment(variant, coeff))


# --- manufactured-solution verification ---------------------------------

MMS_DECAY = 1.0  # exp(-t) rate of the manufactured solution


def mms_solution(x1, x2, t):
    return np.sin(np.pi * x1) * np.sin(np.pi * x2) * np.exp(-MMS_DECAY * t)


def mms_coefficients() -> Coefficients:
    factor = 2.0 * np.pi ** 2 - MMS_DECAY
    return Coefficients(
        k=1.0, c=0.0,
        f=lambda x1, x2, t: factor * mms_solution(x1, x2, t))


def _mms_initial(mesh: Mesh) -> np.ndarray:
    imap = interior_index_map(mesh)
    pts = mesh.nodes[imap.interior_nodes]
    return mms_solution(pts[:, 0], pts[:, 1], 0.0)


@dataclass
class ConvergenceRow:
    n_intervals: int
    n_steps: int
    tau: float
    error: float
    ratio: float | None  # previous error / this error


@dataclass
class ConvergenceStudy:
    mode: str           # "space" or "time"
    scheme: str
    rows: list[ConvergenceRow] = field(default_factory=list)

    def ratios(self) -> list[float]:
        return [r.ratio for r in self.rows if r.ratio is not None]


def mms_convergence(kind: str = "theta", levels: int = 3,
                    mode: str = "space", t_final: float = 0.1,
                    decomposition: StripDecomposition | None = None,
                    rel_tol: float = 1e-12) -> ConvergenceStudy:
    """Convergence study against the manufactured solution
    u = sin(pi x1) sin(pi x2) exp(-t).

    mode "space": sigma = 1, grids 8, 16, 32, ... with the step count
    scaled as n^2 (tau proportional to h^2); errors are measured against
    the exact solution at the nodes, and halve by ~4x per level.

    mode "time": sigma = 0.5 on a fixed grid with tau halved per level;
    errors are measured against the exact solution of the semi-discrete
    system (computed by dense eigendecomposition), isolating the
    O(tau^2) time-stepping error from the fixed spatial error.
    """
    coeff = mms_coefficients()
    study = ConvergenceStudy(mode=mode, scheme=kind)
    prev_error = None

    if mode == "space":
        base_n, base_steps = 8, 4
        cases = [(base_n * 2 ** lev, base_steps * 4 ** lev)
                 for lev in range(levels)]
        sigma = 1.0
    elif mode == "time":
        fixed_n, base_steps = 16, 5
        cases = [(fixed_n, base_steps * 2 ** lev) for lev in range(levels)]
        sigma = 0.5
    else:
        raise ValueError(f"unknown mode {mode!r}")

    for n, steps in cases:
        mesh = build_unit_square_mesh(n)
        imap = interior_index_map(mesh)
        mass = lumped_mass_interior(mesh, imap)
        scheme_kind = SCHEME_ALIASES.get(kind, kind)
        cfg = SchemeConfig.from_horizon(
            scheme_kind, sigma, t_final, steps,
            decomposition=decomposition, rel_tol=rel_tol)
        traj = run(cfg, mesh, coeff, y0=_mms_initial(mesh))
        if mode == "space":
            pts = mesh.nodes[imap.interior_nodes]
            ref = mms_solution(pts[:, 0], pts[:, 1], t_final)
        else:
            ref = semi_discrete_reference(mesh, coeff, _mms_initial(mesh),
                                          t_final)
        err = l2_norm(mass, traj.final_state - ref)
        ratio = None if prev_error is None else prev_error / err
        study.rows.append(ConvergenceRow(
            n_intervals=n, n_steps=steps, tau=cfg.tau, error=err,
            ratio=ratio))
        prev_error = err
    return study


def semi_discrete_reference(mesh: Mesh, coeff: Coefficients,
                            y0: np.ndarray, t_final: float) -> np.ndarray:
    """Exact solution at t_final of M y' + K y = exp(-t) F0, y(0) = y0,
    through dense eigendecomposition of the symmetrized operator.

    Only valid for separable loads f(x, t) = exp(-MMS_DECAY t) f(x, 0),
    which the manufactured source satisfies.
    """
    from .assembly import assemble_stiffness

    imap = interior_index_map(mesh)
    mass = lumped_mass_interior(mesh, imap)
    K = to_dense(assemble_stiffness(mesh, None, coeff, imap))
    F0 = assemble_load(mesh, coeff, 0.0, imap)

    d = np.sqrt(mass)
    sym = K / np.outer(d, d)
    lam, V = np.linalg.eigh(sym)
    c0 = V.T @ (d * y0)
    phi = V.T @ (F0 / d)
    # c_i' = -lam_i c_i + exp(-a t) phi_i, a = MMS_DECAY (lam_i != a here).
    a = MMS_DECAY
    denom = lam - a
    c_t = (c0 - phi / denom) * np.exp(-lam * t_final) \
        + (phi / denom) * np.exp(-a * t_final)
    return (V @ c_t) / d
