"""Experiment driver: solve / sweep / precond-bench / verify / export.

Every command ingests a TOML config (defaults apply when none is
given), writes deterministic CSV/JSON outputs plus rendered figures
into the output directory, and keeps wall-clock timings in separate
files so the data outputs are byte-identical across reruns with the
same config and seed.

Exit codes: 0 success, 1 config error, 2 verification failure,
3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import exports, fem, figures, msbasis, solver
from .analysis import (EstimateReport, GlobalInterpolation, NormContext,
                       check_global_estimates, check_local_estimates,
                       check_transient_estimate, lambda_next_min,
                       local_projection, measure_ktg, relative_l2_error)
from .config import ConfigError, ExperimentConfig, load_config
from .field import FieldSpec, load_table_field
from .mesh import build_grids, mesh_summary, subdomains
from .msbasis import EigenSolveError, build_multiscale_basis
from .solver import Smoother, SolverError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2
EXIT_SOLVER = 3


# ---------------------------------------------------------------------------
# shared construction helpers

def _field_spec(cfg: ExperimentConfig, kind: str | None = None,
                ratio: float | None = None) -> FieldSpec:
    f = cfg.field_
    kind = kind or f.kind
    ratio = f.ratio if ratio is None else ratio
    if kind == "table":
        spec = load_table_field(f.table, k_perp=f.k_perp, k_par=ratio * f.k_perp)
        return spec
    params = tuple(f.params) if f.params else ()
    if kind == "open_mixed" and not params:
        params = (0.01,)
    return FieldSpec(kind=kind, k_perp=f.k_perp, k_par=ratio * f.k_perp,
                     params=params)


def _grids(cfg: ExperimentConfig):
    m = cfg.mesh
    return build_grids(m.nx, m.ny, m.r, m.degree)


def _problem(cfg: ExperimentConfig, fm, dm, spec: FieldSpec) -> fem.TransientProblem:
    s = cfg.sim
    return fem.heat_problem(fm, dm, spec, tau=s.tau, n_steps=s.steps,
                            center=tuple(s.t0_center), sigma=s.t0_sigma)


def _smoother(cfg: ExperimentConfig, kind: str | None = None) -> Smoother:
    s = cfg.solver
    return Smoother(kind=kind or s.smoother, sweeps=s.nu, omega=s.omega)


def _timed_basis(cfg, cg, subs, dm, elem, n_basis, n_extra=None):
    t0 = time.perf_counter()
    basis = build_multiscale_basis(cg, subs, dm, elem, n_basis=n_basis,
                                   n_extra=cfg.ms.n_extra if n_extra is None else n_extra,
                                   dense_limit=cfg.ms.dense_limit)
    return basis, time.perf_counter() - t0


def _provenance(cfg: ExperimentConfig, seed: int) -> dict:
    return {"config": cfg.to_canonical_dict(), "config_hash": cfg.config_hash(),
            "seed": int(seed)}


def _outdir(args, command: str) -> Path:
    out = Path(args.out) if args.out else Path("anisomg-out") / command
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# solve

def cmd_solve(cfg: ExperimentConfig, out: Path, seed: int) -> int:
    cg, fm, dm = _grids(cfg)
    spec = _field_spec(cfg)
    problem = _problem(cfg, fm, dm, spec)
    subs = subdomains(cg, fm, dm)

    report = _provenance(cfg, seed)
    report["mesh"] = mesh_summary(cg, fm, dm)
    timings = {}

    basis = None
    basis_time = 0.0
    if cfg.ms.enabled:
        elem = fem.element_stiffness(fm, dm, spec)
        basis, basis_time = _timed_basis(cfg, cg, subs, dm, elem, cfg.ms.J)
        report["dof_coarse"] = basis.prolongation.dof_coarse

    t0 = time.perf_counter()
    if cfg.solver.mode == "pcg":
        pc = "two-grid" if basis is not None else "identity"
        traj, solve_rep = solver.transient_pcg_solve(
            problem, pc=pc, P=basis.prolongation if basis else None,
            smoother=_smoother(cfg), rtol=cfg.solver.rtol, maxiter=cfg.solver.maxiter)
        if solve_rep.any_nc:
            raise SolverError("fine PCG did not converge within maxiter")
        report["fine_solver"] = solve_rep.to_dict()
        timings["fine_pcg"] = solve_rep.times_dict()
    else:
        traj = fem.transient_solve(problem)
        report["fine_solver"] = {"mode": "direct"}
    timings["fine_solve_s"] = time.perf_counter() - t0

    point_data = {"temperature": traj[-1]}
    if basis is not None:
        ms_traj, ms_rep = solver.multiscale_transient_solve(problem, basis.prolongation)
        report["multiscale"] = {
            "J": cfg.ms.J,
            "dof_coarse": basis.prolongation.dof_coarse,
            "relative_l2_error": relative_l2_error(traj[-1], ms_traj[-1]),
        }
        timings["multiscale"] = ms_rep.times_dict()
        timings["basis_s"] = basis_time
        point_data["temperature_ms"] = ms_traj[-1]
        point_data["error"] = traj[-1] - ms_traj[-1]

    exports.write_vtk(out / "solution.vtk", fm, point_data)
    exports.write_json(out / "report.json", report)
    exports.write_json(out / "timings.json", timings)
    figures.solution_figure(out / "solution.png", fm, traj[-1], spec)
    print(f"solve: wrote {out}/report.json"
          + (f" (err={report['multiscale']['relative_l2_error']:.3e})" if basis else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep

def cmd_sweep(cfg: ExperimentConfig, out: Path, seed: int) -> int:
    cg, fm, dm = _grids(cfg)
    subs = subdomains(cg, fm, dm)
    j_list = sorted(set(int(j) for j in cfg.sweep.J))
    j_max = min(min(s.n_dofs for s in subs), max(j_list))
    rows = []
    timing_rows = []
    for ratio in cfg.sweep.ratios:
        spec = _field_spec(cfg, ratio=ratio)
        problem = _problem(cfg, fm, dm, spec)
        ref = fem.transient_solve(problem)
        elem = fem.element_stiffness(fm, dm, spec)
        basis, basis_time = None, np.nan
        if any(j <= j_max for j in j_list):
            try:
                basis, basis_time = _timed_basis(cfg, cg, subs, dm, elem, j_max)
            except EigenSolveError:
                pass
        for J in j_list:
            err, status, tm = np.nan, "nc", np.nan
            if basis is not None and J <= j_max:
                try:
                    P = basis.slice(J)
                    ms_traj, ms_rep = solver.multiscale_transient_solve(problem, P)
                    err = relative_l2_error(ref[-1], ms_traj[-1])
                    status = "ok"
                    tm = ms_rep.wall_time
                except (SolverError, ValueError):
                    pass
            rows.append({"J": J, "dof_h": J * cg.n_vertices, "ratio": ratio,
                         "err": err, "status": status})
            timing_rows.append({"J": J, "ratio": ratio, "tm_s": tm,
                                "basis_s": basis_time})

    def _err(v):
        return "nc" if not np.isfinite(v) else f"{v:.6e}"

    exports.write_csv(out / "sweep.csv", ["J", "dof_h", "ratio", "err", "status"],
                      [[str(r["J"]), str(r["dof_h"]), f"{r['ratio']:.6g}",
                        _err(r["err"]), r["status"]] for r in rows])
    # wide, plot-ready error table: one column per ratio
    ratio_list = list(cfg.sweep.ratios)
    wide = []
    for J in j_list:
        line = [str(J), str(J * cg.n_vertices)]
        for ratio in ratio_list:
            match = [r for r in rows if r["J"] == J and r["ratio"] == ratio]
            line.append(_err(match[0]["err"]) if match else "nc")
        wide.append(line)
    exports.write_csv(out / "err_vs_dofh.csv",
                      ["J", "dof_h"] + [f"err_ratio_{r:.6g}" for r in ratio_list], wide)
    exports.write_csv(out / "timings.csv", ["J", "ratio", "tm_s", "basis_s"],
                      [[str(t["J"]), f"{t['ratio']:.6g}",
                        "nc" if not np.isfinite(t["tm_s"]) else f"{t['tm_s']:.4f}",
                        f"{t['basis_s']:.4f}"] for t in timing_rows])
    report = _provenance(cfg, seed)
    report["mesh"] = mesh_summary(cg, fm, dm)
    report["rows"] = [{k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                       for k, v in r.items()} for r in rows]
    exports.write_json(out / "report.json", report)
    figures.error_vs_dofh_figure(out / "err_vs_dofh.png", rows)
    print(f"sweep: {len(rows)} cells -> {out}/sweep.csv")
    return EXIT_OK


# ---------------------------------------------------------------------------
# preconditioner benchmark

def cmd_precond_bench(cfg: ExperimentConfig, out: Path, seed: int) -> int:
    cg, fm, dm = _grids(cfg)
    subs = subdomains(cg, fm, dm)
    j_list = sorted(set(int(j) for j in cfg.bench.J))
    j_max = min(min(s.n_dofs for s in subs), max(j_list))
    rows = []
    timing_rows = []
    for ratio in cfg.bench.ratios:
        spec = _field_spec(cfg, ratio=ratio)
        problem = _problem(cfg, fm, dm, spec)
        elem = fem.element_stiffness(fm, dm, spec)
        basis = None
        if any(j <= j_max for j in j_list):
            try:
                basis, basis_time = _timed_basis(cfg, cg, subs, dm, elem,
                                                 j_max, n_extra=0)
            except EigenSolveError:
                pass
        for kind in cfg.bench.smoothers:
            for J in j_list:
                nbar, status, tm = np.nan, "nc", np.nan
                if basis is not None and J <= j_max:
                    try:
                        traj, rep = solver.transient_pcg_solve(
                            problem, pc="two-grid", P=basis.slice(J),
                            smoother=_smoother(cfg, kind), rtol=cfg.solver.rtol,
                            maxiter=cfg.solver.maxiter)
                        nbar = rep.nbar
                        status = "nc" if rep.any_nc else "ok"
                        tm = rep.wall_time
                    except SolverError:
                        pass
                rows.append({"smoother": kind, "J": J, "dof_h": J * cg.n_vertices,
                             "ratio": ratio, "nbar": nbar, "status": status})
                timing_rows.append({"smoother": kind, "J": J, "ratio": ratio, "tm_s": tm})
        if cfg.bench.include_unpreconditioned:
            traj, rep = solver.transient_pcg_solve(problem, pc="identity",
                                                   rtol=cfg.solver.rtol,
                                                   maxiter=cfg.solver.maxiter)
            rows.append({"smoother": "none", "J": 0, "dof_h": 0, "ratio": ratio,
                         "nbar": rep.nbar, "status": "nc" if rep.any_nc else "ok"})
            timing_rows.append({"smoother": "none", "J": 0, "ratio": ratio,
                                "tm_s": rep.wall_time})

    def _nbar(row):
        return "nc" if row["status"] == "nc" or not np.isfinite(row["nbar"]) \
            else f"{row['nbar']:.2f}"

    exports.write_csv(out / "bench.csv",
                      ["smoother", "J", "dof_h", "ratio", "nbar", "status"],
                      [[r["smoother"], str(r["J"]), str(r["dof_h"]),
                        f"{r['ratio']:.6g}", _nbar(r), r["status"]] for r in rows])
    exports.write_csv(out / "timings.csv", ["smoother", "J", "ratio", "tm_s"],
                      [[t["smoother"], str(t["J"]), f"{t['ratio']:.6g}",
                        "nc" if not np.isfinite(t["tm_s"]) else f"{t['tm_s']:.4f}"]
                       for t in timing_rows])
    report = _provenance(cfg, seed)
    report["mesh"] = mesh_summary(cg, fm, dm)
    report["rows"] = [{k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                       for k, v in r.items()} for r in rows]
    exports.write_json(out / "report.json", report)
    figures.iterations_figure(out / "bench.png",
                              [r for r in rows if r["smoother"] != "none"])
    print(f"precond-bench: {len(rows)} cells -> {out}/bench.csv")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def _kendall_sign(xs, ys) -> int:
    """Concordant minus discordant pair count."""
    s = 0
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            s += int(np.sign((xs[i] - xs[j]) * (ys[i] - ys[j])))
    return s


def _verify_local_suite(cfg, cg, fm, dm, subs, rng) -> list[EstimateReport]:
    reports = []
    limit = cfg.analysis.subdomain_limit or len(subs)
    for kind in cfg.analysis.presets:
        for ratio in cfg.analysis.ratios:
            spec = _field_spec(cfg, kind=kind, ratio=ratio)
            elem = fem.element_stiffness(fm, dm, spec)
            agg = EstimateReport(name=f"local-estimates[{kind},ratio={ratio:.0e}]")
            n_checked = 0
            worst = [None, None, None]
            tight_dev = 0.0
            for sub in subs[:limit]:
                A_loc, d = msbasis.local_operator(elem, sub)
                res = msbasis.solve_local_eig(A_loc, d, cfg.ms.J,
                                              n_extra=max(1, cfg.ms.n_extra),
                                              dense_limit=cfg.ms.dense_limit,
                                              index=sub.index)
                samples = rng.standard_normal((cfg.analysis.samples, sub.n_dofs))
                rep = check_local_estimates(res, A_loc, samples)
                n_checked += len(rep.rows)
                for i, row in enumerate(rep.rows):
                    k = i % 3
                    rel = (row.right - row.left) / max(abs(row.right), 1e-300)
                    if not row.passed:
                        rel = -np.inf
                    if worst[k] is None or rel < worst[k][0]:
                        worst[k] = (rel, row)
                # tightness of the weak bound at the first omitted mode
                v = res.vectors[:, res.n_basis]
                lam = res.eigenvalues[res.n_basis]
                e = v - local_projection(res, v)
                left = float(e @ (d * e))
                right = float(v @ (A_loc @ v)) / lam
                tight_dev = max(tight_dev, abs(left - right) / max(abs(right), 1e-300))
            for k, label in enumerate(("weak", "strong", "fractional")):
                _, row = worst[k]
                agg.add(f"worst {label} bound", row.left, row.right,
                        scale=max(abs(row.left), abs(row.right), 1.0))
            agg.add("weak bound tight at first omitted mode", tight_dev, 1e-8)
            agg.constants.update({"n_checks": n_checked, "J": cfg.ms.J,
                                  "tightness_deviation": tight_dev})
            reports.append(agg)
    return reports


def _verify_global_suite(cfg, cg, fm, dm, subs, rng) -> list[EstimateReport]:
    reports = []
    M = fem.assemble_mass(fm, dm)
    for kind in cfg.analysis.presets:
        for ratio in cfg.analysis.ratios:
            spec = _field_spec(cfg, kind=kind, ratio=ratio)
            A = fem.assemble_stiffness(fm, dm, spec)
            elem = fem.element_stiffness(fm, dm, spec)
            basis, _ = _timed_basis(cfg, cg, subs, dm, elem, cfg.ms.J,
                                    n_extra=max(1, cfg.ms.n_extra))
            ctx = NormContext(M=M, A=A, tau=cfg.sim.tau)
            pi = GlobalInterpolation(basis.results, subs, cg, dm)
            lam = lambda_next_min(basis.results, cg)
            samples = rng.standard_normal((cfg.analysis.samples, dm.n_dofs))
            rep = check_global_estimates(pi, ctx, samples, lam, cg.h,
                                         constant_cap=cfg.analysis.constant_cap)
            rep.name = f"global-estimates[{kind},ratio={ratio:.0e}]"
            reports.append(rep)
    return reports


def _verify_transient_suite(cfg, cg, fm, dm, subs) -> list[EstimateReport]:
    ratios = []
    reports = []
    for ratio in cfg.analysis.ratios:
        spec = _field_spec(cfg, kind=cfg.analysis.transient_field, ratio=ratio)
        problem = _problem(cfg, fm, dm, spec)
        elem = fem.element_stiffness(fm, dm, spec)
        basis, _ = _timed_basis(cfg, cg, subs, dm, elem, cfg.ms.J,
                                n_extra=max(1, cfg.ms.n_extra))
        ref = fem.transient_solve(problem)
        ms_traj, _ = solver.multiscale_transient_solve(problem, basis.prolongation)
        ctx = NormContext(M=problem.M, A=problem.A, tau=problem.tau)
        lam = lambda_next_min(basis.results, cg)
        rep = check_transient_estimate(ref, ms_traj, ctx, lam)
        rep.name = f"transient-estimate[{cfg.analysis.transient_field},ratio={ratio:.0e}]"
        reports.append(rep)
        ratios.append(rep.constants["ratio"])
    spread = EstimateReport(name="transient-estimate[ratio stability]",
                            constants={"min_ratio": min(ratios), "max_ratio": max(ratios)})
    spread.add(f"lhs/rhs spread over anisotropy within {cfg.analysis.transient_spread_cap}x",
               max(ratios), cfg.analysis.transient_spread_cap * min(ratios))
    reports.append(spread)
    return reports


def _verify_ktg_suite(cfg, cg, fm, dm, subs) -> list[EstimateReport]:
    if dm.n_dofs > cfg.analysis.dense_limit:
        rep = EstimateReport(name="two-grid-condition[skipped]",
                             constants={"n_dofs": dm.n_dofs,
                                        "dense_limit": cfg.analysis.dense_limit})
        print(f"warning: {dm.n_dofs} dofs exceed analysis.dense_limit="
              f"{cfg.analysis.dense_limit}; two-grid condition suite skipped",
              file=sys.stderr)
        return [rep]
    spec = _field_spec(cfg)
    problem = _problem(cfg, fm, dm, spec)
    elem = fem.element_stiffness(fm, dm, spec)
    modes = sorted(set(int(j) for j in cfg.analysis.ktg_modes))
    basis, _ = _timed_basis(cfg, cg, subs, dm, elem, max(modes), n_extra=1)
    Q_bc, _, _ = fem.transient_operators(problem)
    ctx = NormContext(M=problem.M, A=problem.A, tau=problem.tau, Q=Q_bc)
    sm = _smoother(cfg)
    reports = []
    measured = []
    nbars = []
    for J in modes:
        pi = GlobalInterpolation(basis.results, subs, cg, dm, n_modes=J)
        lam = lambda_next_min(basis.results, cg, n_modes=J)
        rep = measure_ktg(Q_bc, pi, ctx, lam, cg.h, smoother=sm, P=basis.slice(J),
                          boundary=dm.boundary, dense_limit=cfg.analysis.dense_limit,
                          bound_tol=cfg.analysis.ktg_bound_tol)
        rep.name = f"two-grid-condition[J={J}]"
        reports.append(rep)
        measured.append(rep.constants["K_measured"])
        _, pcg_rep = solver.transient_pcg_solve(problem, pc="two-grid",
                                                P=basis.slice(J), smoother=sm,
                                                rtol=cfg.solver.rtol,
                                                maxiter=cfg.solver.maxiter)
        nbars.append(pcg_rep.nbar)
    trend = EstimateReport(name="two-grid-condition[trends]",
                           constants={f"K[J={j}]": k for j, k in zip(modes, measured)})
    trend.constants.update({f"nbar[J={j}]": n for j, n in zip(modes, nbars)})
    for a, b in zip(measured, measured[1:]):
        trend.add("K decreases with J", b, a)
    trend.add("PCG iterations correlate with K (concordant pairs win)",
              float(-_kendall_sign(measured, nbars)), 0.0)
    reports.append(trend)
    return reports


def cmd_verify(cfg: ExperimentConfig, out: Path, seed: int) -> int:
    rng = np.random.default_rng(seed)
    cg, fm, dm = _grids(cfg)
    subs = subdomains(cg, fm, dm)
    reports = []
    reports += _verify_local_suite(cfg, cg, fm, dm, subs, rng)
    reports += _verify_global_suite(cfg, cg, fm, dm, subs, rng)
    reports += _verify_transient_suite(cfg, cg, fm, dm, subs)
    reports += _verify_ktg_suite(cfg, cg, fm, dm, subs)
    passed = all(r.passed for r in reports)
    payload = _provenance(cfg, seed)
    payload["passed"] = passed
    payload["reports"] = [r.to_dict() for r in reports]
    exports.write_json(out / "verify.json", payload)
    text = "\n\n".join(r.format_text() for r in reports)
    (out / "verify.txt").write_text(text + "\n")
    print(text)
    print(f"\nverify: {'all suites passed' if passed else 'FAILURES detected'} "
          f"-> {out}/verify.json")
    return EXIT_OK if passed else EXIT_VERIFY


# ---------------------------------------------------------------------------
# export

def cmd_export(cfg: ExperimentConfig, out: Path, seed: int) -> int:
    cg, fm, dm = _grids(cfg)
    subs = subdomains(cg, fm, dm)
    spec = _field_spec(cfg)
    problem = _problem(cfg, fm, dm, spec)

    from .field import eval_b
    b = eval_b(spec, fm.vertices)
    exports.write_vtk(out / "mesh.vtk", fm,
                      {"boundary": dm.boundary[:fm.n_vertices].astype(float)})
    exports.write_vtk(out / "field.vtk", fm, {"b": b, "T0": problem.T0})

    Q = (1.0 / problem.tau) * problem.M + problem.A
    exports.write_matrix_market(out / "mass.mtx", problem.M)
    exports.write_matrix_market(out / "stiffness.mtx", problem.A)
    exports.write_matrix_market(out / "system.mtx", Q)
    exports.write_vector(out / "load.txt", problem.F)

    elem = fem.element_stiffness(fm, dm, spec)
    basis, basis_time = _timed_basis(cfg, cg, subs, dm, elem, cfg.ms.J)
    exports.write_matrix_market(out / "prolongation.mtx", basis.prolongation.matrix)
    exports.write_eigenvalue_csv(out / "eigenvalues.csv", basis.results)

    # eigenvector gallery on a central subdomain
    mid = cg.vertex_index(cg.nx // 2, cg.ny // 2)
    res = basis.results[mid]
    figures.eigenvector_figure(out / "eigenvectors.png", fm, subs[mid], res.vectors)
    gallery = {}
    for j in range(min(res.vectors.shape[1], 6)):
        full = np.zeros(dm.n_dofs)
        full[subs[mid].dofs] = res.vectors[:, j]
        gallery[f"mode_{j + 1}"] = full
    exports.write_vtk(out / "eigenvectors.vtk", fm, gallery)

    report = _provenance(cfg, seed)
    report["mesh"] = mesh_summary(cg, fm, dm)
    report["dof_coarse"] = basis.prolongation.dof_coarse
    report["files"] = ["mesh.vtk", "field.vtk", "mass.mtx", "stiffness.mtx",
                       "system.mtx", "load.txt", "prolongation.mtx",
                       "eigenvalues.csv", "eigenvectors.vtk", "eigenvectors.png"]
    exports.write_json(out / "report.json", report)
    exports.write_json(out / "timings.json", {"basis_s": basis_time})
    print(f"export: wrote {len(report['files'])} files -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anisomg",
        description="Spectral multiscale solver benchmarks for anisotropic heat flow")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("solve", "fine reference solve plus optional reduced-order solve"),
            ("sweep", "relative error over (J, anisotropy ratio) grid"),
            ("precond-bench", "PCG iteration counts for the two-grid preconditioner"),
            ("verify", "run the estimate verification suites"),
            ("export", "write mesh/field/matrix/basis files")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML config file (defaults when omitted)")
        p.add_argument("--out", help="output directory (default anisomg-out/<command>)")
        p.add_argument("--seed", type=int, help="RNG seed override")
    return parser


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "precond-bench": cmd_precond_bench,
    "verify": cmd_verify,
    "export": cmd_export,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else cfg.analysis.seed
    out = _outdir(args, args.command)
    try:
        return COMMANDS[args.command](cfg, out, seed)
    except (SolverError, EigenSolveError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
