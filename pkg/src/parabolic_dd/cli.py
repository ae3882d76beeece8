"""Command-line driver.

Subcommands:

* ``run``       benchmark + decomposition comparison on the model problem
                (emits fig1-fig5 with matching CSV data)
* ``sweep``     rerun with delta halved / grid refined / steps doubled
                (fig6 / fig7 / fig8)
* ``stability`` numerical stability certificates for all three schemes
                (JSON report)
* ``mms``       manufactured-solution convergence tables
* ``profiles``  decomposition weight profiles along x1 (fig1)

Options may come from a JSON config file (keys mirror ExperimentConfig
fields); explicit command-line flags win over file values.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import output
from .decomposition import decomposition_report
from .experiments import (ExperimentConfig, mms_convergence,
                          run_base_experiment, run_sweep)
from .mesh import dump_mesh
from .stability import DEFAULT_SEED, certify_estimate, lambda_max_generalized

SWEEP_FIGS = {"delta": "fig6", "grid": "fig7", "steps": "fig8"}

THETA_MESHES = (4, 8, 16)
DD_MESHES = (6, 10)
SIGMAS = (0.5, 0.75, 1.0)
TAUS = (1e-3, 1e-2, 1e-1, 1.0)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE",
                        help="JSON config file (flags override it)")
    parser.add_argument("--grid", type=int, metavar="N",
                        help="cells per axis (mesh is (N+1) x (N+1))")
    parser.add_argument("--steps", type=int, metavar="N",
                        help="number of time steps")
    parser.add_argument("--sigma", type=float, metavar="X",
                        help="time-scheme weight in (0, 1]")
    parser.add_argument("--delta", type=float, metavar="X",
                        help="overlap half-width")
    parser.add_argument("--split", type=float, metavar="X",
                        help="interface position on the x1 axis")
    parser.add_argument("--scheme",
                        choices=("theta", "pu", "indicator", "all"),
                        help="which schemes to compare against the benchmark")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--tol", type=float, metavar="X",
                        help="relative tolerance of the inner SPD solver")
    parser.add_argument("--jobs", type=int, metavar="K",
                        help="max concurrent runs in a sweep (1 = bitwise"
                             " reproducible)")
    parser.add_argument("--seed", type=int, metavar="S",
                        help="random seed for stability trials")


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = (ExperimentConfig.from_file(args.config) if args.config
           else ExperimentConfig())
    overrides = {}
    mapping = {"grid": "n_intervals", "steps": "n_steps", "sigma": "sigma",
               "delta": "delta", "split": "split", "out": "out_dir",
               "tol": "rel_tol", "jobs": "jobs", "seed": "seed"}
    for flag, field_name in mapping.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field_name] = value
    scheme = getattr(args, "scheme", None)
    if scheme is not None:
        overrides["schemes"] = {
            "all": ("pu", "indicator"), "theta": (),
            "pu": ("pu",), "indicator": ("indicator",)}[scheme]
    return replace(cfg, **overrides)


def _emit_profiles(cfg: ExperimentConfig, out: Path, mesh) -> None:
    report = decomposition_report(cfg.decomposition(), mesh)
    output.emit_csv(report.PROFILE_HEADER, report.profile_rows(),
                    out / "fig1.csv")
    curves = {"eta1": report.profile_eta1, "eta2": report.profile_eta2,
              "chi1": report.profile_chi1, "chi2": report.profile_chi2,
              "chi12": report.profile_chi12}
    output.emit_line_svg(report.profile_x1, curves, out / "fig1.svg",
                         title="Decomposition weight profiles", xlabel="x1",
                         ylabel="weight")
    print(f"profiles: {report.n_elements_1} / {report.n_elements_2} elements "
          f"per subdomain, {report.n_overlap} in the overlap "
          f"({report.overlap_column_span:g} cell columns)")


def _emit_error_series(series, path_csv, path_svg, title) -> None:
    header = ["t"] + [f"eps_{name}" for name in series.eps]
    rows = zip(series.times, *series.eps.values())
    output.emit_csv(header, rows, path_csv)
    curves = {f"eps_{name}": vals for name, vals in series.eps.items()}
    output.emit_line_svg(series.times, curves, path_svg, title=title,
                         xlabel="t", ylabel="deviation from benchmark")


def cmd_run(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = Path(cfg.out_dir)
    result = run_base_experiment(cfg)

    _emit_profiles(cfg, out, result.mesh)
    _emit_error_series(result.series, out / "fig2.csv", out / "fig2.svg",
                       f"Scheme deviations (grid {cfg.n_intervals + 1}x"
                       f"{cfg.n_intervals + 1}, N={cfg.n_steps}, "
                       f"delta={cfg.delta})")
    snap_figs = {"benchmark": "fig3", "pu_deviation": "fig4",
                 "indicator_deviation": "fig5"}
    titles = {"benchmark": "Benchmark solution at t = T",
              "pu_deviation": "Partition-of-unity scheme deviation at t = T",
              "indicator_deviation": "Indicator scheme deviation at t = T"}
    for name, fig in snap_figs.items():
        if name in result.snapshots:
            grid = result.snapshots[name]
            output.emit_matrix_csv(grid, out / f"{fig}.csv")
            output.emit_heat_svg(grid, out / f"{fig}.svg", title=titles[name])

    if args.dump_mesh:
        dump_mesh(result.mesh, args.dump_mesh)
    if args.dump_trajectory:
        output.dump_trajectory(result.trajectories["theta"],
                               args.dump_trajectory)

    print(f"benchmark |y(T)| = {result.benchmark_final_norm:.9e}")
    for name in cfg.schemes:
        print(f"eps_{name}(T) = {result.series.final(name):.9e}")
    print(f"artifacts written to {out}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = Path(cfg.out_dir)
    sweep = run_sweep(cfg, args.vary)
    fig = SWEEP_FIGS[args.vary]
    vcfg = sweep.variant.config
    _emit_error_series(sweep.variant.series, out / f"{fig}.csv",
                       out / f"{fig}.svg",
                       f"Scheme deviations, {args.vary} varied "
                       f"(grid {vcfg.n_intervals + 1}x{vcfg.n_intervals + 1},"
                       f" N={vcfg.n_steps}, delta={vcfg.delta})")
    rows = [(name, base, variant)
            for name, base, variant in sweep.summary_rows()]
    output.emit_csv(["scheme", "eps_T_base", "eps_T_variant"], rows,
                    out / f"sweep_{args.vary}_summary.csv")
    for name, base, variant in rows:
        direction = "increased" if variant > base else "decreased"
        print(f"{name}: eps(T) {base:.6e} -> {variant:.6e} ({direction})")
    print(f"artifacts written to {out}")
    return 0


def cmd_stability(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = Path(cfg.out_dir)
    seed = cfg.seed if cfg.seed is not None else DEFAULT_SEED
    decomposition = cfg.decomposition()
    reports = []

    for n in THETA_MESHES:
        for sigma in SIGMAS:
            for tau in TAUS:
                reports.append(certify_estimate(
                    "theta", n, sigma, tau, seed=seed))
    reports.append(negative_control_report(8, seed=seed))
    for n in DD_MESHES:
        for sigma in SIGMAS:
            for tau in TAUS:
                reports.append(certify_estimate(
                    "factorized_pu", n, sigma, tau,
                    decomposition=decomposition, seed=seed))
    for n in DD_MESHES:
        for tau in TAUS:
            reports.append(certify_estimate(
                "indicator_dd", n, 1.0, tau,
                decomposition=decomposition, seed=seed))

    payload = {"seed": seed, "reports": [r.to_dict() for r in reports]}
    output.emit_json(payload, out / "stability_report.json")
    n_pass = sum(r.passed for r in reports)
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        print(f"[{status}] {r.scheme} n={r.mesh} sigma={r.sigma:g} "
              f"tau={r.tau:g}")
    print(f"{n_pass}/{len(reports)} certificates passed "
          f"(negative control is expected to fail); "
          f"report at {out / 'stability_report.json'}")
    return 0


def negative_control_report(n_intervals: int, seed: int):
    """Explicit scheme (sigma = 0) beyond its step-size limit: the
    per-step ratio check must fail, confirming the harness can fail."""
    from .assembly import Coefficients, assemble_stiffness, \
        lumped_mass_interior
    from .mesh import build_unit_square_mesh, interior_index_map

    mesh = build_unit_square_mesh(n_intervals)
    imap = interior_index_map(mesh)
    mass = lumped_mass_interior(mesh, imap)
    K = assemble_stiffness(mesh, None, Coefficients(), imap)
    tau = 2.5 / lambda_max_generalized(K, mass)
    return certify_estimate("theta", n_intervals, 0.0, tau, seed=seed,
                            n_steps=10)


def cmd_mms(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = Path(cfg.out_dir)
    kind = getattr(args, "scheme", None) or "theta"
    if kind == "all":
        kind = "theta"
    decomposition = None if kind == "theta" else cfg.decomposition()

    header = ["n_intervals", "n_steps", "tau", "error", "ratio"]
    for mode, fname in (("space", "mms_space.csv"), ("time", "mms_time.csv")):
        study = mms_convergence(kind, levels=args.levels, mode=mode,
                                decomposition=decomposition)
        rows = [(r.n_intervals, r.n_steps, r.tau, r.error,
                 "" if r.ratio is None else r.ratio) for r in study.rows]
        output.emit_csv(header, rows, out / fname)
        print(f"{mode} study ({kind}):")
        for r in study.rows:
            ratio = "-" if r.ratio is None else f"{r.ratio:.3f}"
            print(f"  n={r.n_intervals:4d} N={r.n_steps:5d} "
                  f"tau={r.tau:.6g} error={r.error:.6e} ratio={ratio}")
    print(f"artifacts written to {out}")
    return 0


def cmd_profiles(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = Path(cfg.out_dir)
    from .mesh import build_unit_square_mesh
    mesh = build_unit_square_mesh(cfg.n_intervals)
    _emit_profiles(cfg, out, mesh)
    print(f"artifacts written to {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="parabolic-dd",
        description="Overlapping domain-decomposition time stepping for "
                    "parabolic problems: experiments and stability "
                    "certificates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="benchmark comparison experiment")
    _add_common(p_run)
    p_run.add_argument("--dump-mesh", metavar="PATH",
                       help="write a plain-text mesh listing")
    p_run.add_argument("--dump-trajectory", metavar="PATH",
                       help="write the benchmark trajectory matrix "
                            "(.npy = binary, otherwise CSV)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="single-parameter variation")
    _add_common(p_sweep)
    p_sweep.add_argument("--vary", required=True,
                         choices=("delta", "grid", "steps"))
    p_sweep.set_defaults(func=cmd_sweep)

    p_stab = sub.add_parser("stability", help="stability certificates")
    _add_common(p_stab)
    p_stab.set_defaults(func=cmd_stability)

    p_mms = sub.add_parser("mms", help="manufactured-solution convergence")
    _add_common(p_mms)
    p_mms.add_argument("--levels", type=int, default=3)
    p_mms.set_defaults(func=cmd_mms)

    p_prof = sub.add_parser("profiles", help="decomposition weight profiles")
    _add_common(p_prof)
    p_prof.set_defaults(func=cmd_profiles)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
