"""Command line interface.

    nlmaxwell check-operator [--config CFG]
    nlmaxwell solve [--config CFG] [--out DIR] [--seed N]
    nlmaxwell decompose FIELD [--out DIR]
    nlmaxwell oracle-radial [--config CFG] [--out DIR]
    nlmaxwell reconstruct-fields SOLUTION [--t T ...] [--z Z ...]
    nlmaxwell energy FIELD [FIELD ...] [--config CFG]

Exit codes: 0 success, 1 validation failure, 2 non-convergence, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig, load_config
from .energy import evaluate_J, residual_norms
from .fields import energy_bound, maxwell_residuals, reconstruct, total_energy
from .grid import Field6, set_workers
from .material import validate_hypotheses
from .operators import b_L, helmholtz_decompose, operator_invariants, operators_for
from .radial import RadialSolveError, embed_radial, radial_solve
from .solver import InnerSolveError, NoMountainPassError, default_initial, ground_state_solve

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED, EXIT_IO = 0, 1, 2, 3
OPERATOR_TOL = 1e-10

log = logging.getLogger("nlmaxwell")


def _out_dir(args) -> Path:
    return io.ensure_dir(args.out)


def _initial(cfg: RunConfig, mat) -> Field6:
    s = cfg.solver
    grid = mat.grid
    if s.initial == "gaussian":
        return default_initial(grid, cfg.k, s.polarization, s.width)
    if s.initial == "random":
        return default_initial(grid, cfg.k, width=s.width, kind="random", seed=s.seed)
    if s.initial == "radial":
        return embed_radial(radial_solve(cfg.radial_problem()), grid)
    u, _ = io.read_field6(s.initial_path)
    if u.grid != grid:
        raise ConfigError("initial field grid does not match [grid]", cfg.source, "solver", "initial_path")
    return u


def cmd_check_operator(args, cfg: RunConfig) -> int:
    dev = operator_invariants(cfg.grid, cfg.k, seed=cfg.solver.seed)
    ok = True
    print(f"operator invariants on {cfg.n_points}^2 grid, side {cfg.side_length:g}, k = {cfg.k:g}")
    for name, val in dev.items():
        passed = val < OPERATOR_TOL
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name:22s} max deviation {val:.3e}")
    return EXIT_OK if ok else EXIT_INVALID


def solve_summary(cfg: RunConfig) -> tuple[dict, object, int]:
    """Run the configured solve; returns (summary, SolveResult or None, exit code)."""
    mat = cfg.material(validate=False)
    report = validate_hypotheses(mat)
    summary = {"command": "solve", "config": cfg.describe(), "hypotheses": report.to_dict()}
    if not report.all_passed:
        summary["error"] = "hypothesis validation failed: " + ", ".join(report.failed())
        return summary, None, EXIT_INVALID
    res = ground_state_solve(_initial(cfg, mat), mat, cfg.solver.solver_config())
    unorm2 = res.u_norm**2
    summary["result"] = {
        "converged": res.converged,
        "J": res.J_value,
        "energy": res.energy.to_dict(),
        "ray_parameter": res.ray_parameter,
        "residual_full": res.residual_full,
        "residual_relative": res.residual_relative,
        "residual_kernel": res.residual_kernel,
        "nehari_residual": res.nehari_residual,
        "nehari_relative": res.nehari_residual / (1 + unorm2),
        "u_norm": res.u_norm,
        "b_L": b_L(res.u_star, mat.k),
        "tilde_ratio": res.tilde_ratio,
        "iterations": res.iterations,
    }
    return summary, res, EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_solve(args, cfg: RunConfig) -> int:
    out = _out_dir(args)
    summary, res, code = solve_summary(cfg)
    o = cfg.output
    if o.summary:
        io.write_json_summary(out / o.summary, summary)
    if res is None:
        print(summary["error"], file=sys.stderr)
        for line in validate_hypotheses(cfg.material(validate=False)).lines():
            print(line, file=sys.stderr)
        return code
    if o.solution:
        io.write_field6(out / o.solution, res.u_star, cfg.k)
    if o.diagnostics:
        io.write_diagnostics_csv(out / o.diagnostics, res.history)
    r = summary["result"]
    print(f"converged={r['converged']} J={r['J']:.12g} residual={r['residual_relative']:.3e} "
          f"t*={r['ray_parameter']:.6g} |U~|/|u|={r['tilde_ratio']:.4f} iterations={r['iterations']}")
    return code


def cmd_decompose(args, cfg: RunConfig) -> int:
    u, k = io.read_field6(args.field)
    v, w = helmholtz_decompose(u, k)
    un = u.norm()
    ops = operators_for(u.grid, k)
    div = ops.norm_hat(ops.divergence_hat(ops.hat(v.data)))
    info = {
        "command": "decompose",
        "u_norm": un,
        "v_ratio": v.norm() / un if un else 0.0,
        "w_ratio": w.norm() / un if un else 0.0,
        "v_w_inner": v.inner(w),
        "v_divergence": div,
    }
    if args.out:
        out = _out_dir(args)
        io.write_field6(out / "range_part.maxw6", v, k)
        io.write_field6(out / "kernel_part.maxw6", w, k)
        io.write_json_summary(out / "decompose.json", info)
    print(f"|v|/|u| = {info['v_ratio']:.3e}  |w|/|u| = {info['w_ratio']:.3e}  "
          f"<v,w> = {info['v_w_inner']:.3e}  |div v| = {div:.3e}")
    return EXIT_OK


def cmd_oracle_radial(args, cfg: RunConfig) -> int:
    prob = cfg.radial_problem()
    prof = radial_solve(prob)
    out = _out_dir(args)
    if cfg.output.radial_csv:
        prof.to_csv(out / cfg.output.radial_csv)
    mat = cfg.material()
    u = embed_radial(prof, mat.grid)
    rn = residual_norms(u, mat)
    J = evaluate_J(u, mat).J
    io.write_field6(out / "radial_embedded.maxw6", u, cfg.k)
    info = {
        "command": "oracle-radial",
        "slope": prof.slope,
        "amplitude": prof.amplitude,
        "ode_residual": prof.residual,
        "r_max": prob.r_max,
        "J_radial": prof.energy(),
        "J_embedded": J,
        "embedded_residual_relative": rn["residual_full"] / rn["u_norm"],
    }
    io.write_json_summary(out / "radial.json", info)
    print(f"u'(0)={prof.slope:.12g} max u={prof.amplitude:.8g} ODE residual={prof.residual:.2e} "
          f"J(embedded)={J:.12g} 2D residual={info['embedded_residual_relative']:.2e}")
    return EXIT_OK


def cmd_reconstruct(args, cfg: RunConfig) -> int:
    u, k = io.read_field6(args.solution)
    if u.grid != cfg.grid or k != cfg.k:
        cfg.side_length, cfg.n_points, cfg.k = u.grid.side_length, u.grid.n_points, k
    mat = cfg.material(validate=False)
    ts = args.t if args.t else list(cfg.reconstruct.t)
    zs = args.z if args.z else list(cfg.reconstruct.z)
    out = _out_dir(args)
    snaps = [reconstruct(u, mat, t, zs) for t in ts]
    for i, s in enumerate(snaps):
        suffix = "" if len(snaps) == 1 else f"_{i}"
        if cfg.output.vtk:
            stem = Path(cfg.output.vtk)
            io.write_vtk(out / f"{stem.stem}{suffix}{stem.suffix}", s)
        if cfg.output.fields_csv:
            stem = Path(cfg.output.fields_csv)
            io.write_fields_csv(out / f"{stem.stem}{suffix}{stem.suffix}", s)
    res = maxwell_residuals(snaps)
    print("  ".join(f"{k}={v:.3e}" for k, v in res.items()))
    return EXIT_OK


def cmd_energy(args, cfg: RunConfig) -> int:
    rows = []
    for path in args.fields:
        u, k = io.read_field6(path)
        cfg.side_length, cfg.n_points, cfg.k = u.grid.side_length, u.grid.n_points, k
        mat = cfg.material(validate=False)
        e = evaluate_J(u, mat)
        rn = residual_norms(u, mat)
        n_t = cfg.reconstruct.time_samples
        ts = np.linspace(0, 2 * np.pi / mat.omega, n_t, endpoint=False)
        L = [total_energy(u, mat, t, cfg.reconstruct.a, cfg.reconstruct.n_z) for t in ts]
        rel = rn["residual_full"] / rn["u_norm"] if rn["u_norm"] else 0.0
        rows.append((path, e.J, rel, max(L) if L else 0.0, energy_bound(u, mat)))
        print(f"{path}: J={e.J:.12g} quadratic={e.quadratic:.10g} potential={e.potential:.10g} "
              f"nonlinear={e.nonlinear:.10g} residual={rel:.3e} max L(t)={max(L):.10g} "
              f"bound={energy_bound(u, mat):.10g}")
    if len(rows) > 1:
        best = min(rows, key=lambda r: r[1])
        print(f"lowest J: {best[0]} ({best[1]:.12g})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file (bundled names kerr_constant.cfg, kerr_periodicV.cfg)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    common.add_argument("--seed", type=int, default=None, help="override [solver] seed")
    common.add_argument("--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="nlmaxwell", description="Travelling-wave ground states of nonlinear Maxwell equations")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check-operator", parents=[common], help="verify identities of the curl-curl operator")
    sub.add_parser("solve", parents=[common], help="compute a ground state")
    d = sub.add_parser("decompose", parents=[common], help="split a field into range and kernel parts")
    d.add_argument("field")
    sub.add_parser("oracle-radial", parents=[common], help="radially symmetric one-profile solution")
    r = sub.add_parser("reconstruct-fields", parents=[common], help="E, B, D, H of a solution")
    r.add_argument("solution")
    r.add_argument("--t", type=float, nargs="+")
    r.add_argument("--z", type=float, nargs="+")
    e = sub.add_parser("energy", parents=[common], help="energies and residuals of field files")
    e.add_argument("fields", nargs="+")
    return p


COMMANDS = {
    "check-operator": cmd_check_operator,
    "solve": cmd_solve,
    "decompose": cmd_decompose,
    "oracle-radial": cmd_oracle_radial,
    "reconstruct-fields": cmd_reconstruct,
    "energy": cmd_energy,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    set_workers(max(1, args.threads))
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.solver.seed = args.seed
        return COMMANDS[args.command](args, cfg)
    except io.FieldFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InnerSolveError, NoMountainPassError, RadialSolveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
