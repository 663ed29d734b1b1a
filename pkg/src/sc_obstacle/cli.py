"""Command-line front end.

Every subcommand accepts ``--config FILE``: a JSON object with a ``version``
field (currently 1) whose other keys are the long option names of that
subcommand with dashes replaced by underscores. Explicit flags override the
file. Results are printed as JSON on stdout and, with ``--out DIR``, written
as JSON/CSV/SVG files.

Exit codes: 0 success, 2 invalid input, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io, svg
from .analysis import (
    AxiProblem, MeshProblem, check_continuity, check_monotonicity, check_thickness,
    detect_freezing, fit_scaling, sweep, transitions,
)
from .barriers import build_barrier, verify_barrier, width_bracket
from .exceptions import BracketFailure, InvalidInput, InvalidMesh, NotConverged, PackingFailure
from .fields import (
    critical_betas, derive_fields, load_potential_table, make_mesh_field, make_potential,
    mean_corrected,
)
from .obstacle1d import components_1d, residual_check, solve_pgs_1d, solve_regime, vortexless_profile
from .obstacle2d import mesh_beta_c, sc_region, solve_pgs_2d, vorticity, vorticity_report
from .surface import build_icosphere, build_revolution, load_profile_table, read_off
from .vortexapprox import convergence_check

CONFIG_VERSION = 1
# options that must come from the command line or the config file
_REQUIRED = {"solve1d": ("beta",), "solve2d": ("mesh", "beta"), "barrier": ("c", "C", "beta")}
EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3


class ConfigError(InvalidInput):
    pass


# ---------------------------------------------------------------------------
# problem construction
# ---------------------------------------------------------------------------

def _surface(args):
    prof = args.profile
    if prof.endswith(".csv"):
        prof = load_profile_table(prof, args.z_table)
    return build_revolution(prof, args.n)


def _potential(args, surface):
    spec = args.potential
    if spec.endswith(".csv"):
        spec = load_potential_table(spec)
    return make_potential(spec, surface)


def _mesh(spec):
    if spec.startswith("icosphere:"):
        try:
            k = int(spec.split(":", 1)[1])
        except ValueError:
            raise InvalidMesh(f"bad icosphere level in {spec!r}") from None
        return build_icosphere(k)
    return read_off(spec)


def _mesh_field(mesh, spec):
    if spec in ("x", "y", "z"):
        return make_mesh_field(mesh, mean_corrected(mesh, mesh.vertices[:, "xyz".index(spec)]))
    try:
        values = np.loadtxt(spec, delimiter=",", ndmin=1)
    except (OSError, ValueError) as exc:
        raise InvalidInput(f"cannot read field {spec!r}: {exc}") from None
    return make_mesh_field(mesh, values)


def _betas(args, beta_c):
    if args.betas:
        b = np.array(args.betas, dtype=float)
    else:
        lo, hi, n = args.beta_range
        lo, hi = float(lo), float(hi)
        if args.fractions:
            lo, hi = lo * beta_c, hi * beta_c
        b = np.geomspace(lo, hi, int(n))
    if np.any(b <= 0) or np.any(b > beta_c * (1 + 1e-12)):
        raise InvalidInput(f"beta values must lie in (0, {beta_c:.6g}]")
    return b


def _out(args):
    return Path(args.out) if args.out else None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_derive(args):
    s = _surface(args)
    pot = _potential(args, s)
    f = derive_fields(pot)
    rep = {"profile": args.profile, "potential": args.potential, "n": args.n,
           "beta_c": f.beta_c, "shape": pot.shape, "critical_phi": list(pot.crit),
           "critical_a": list(pot.crit_vals)}
    if pot.is_triple:
        cb = critical_betas(pot)
        rep.update(alpha_star=cb.alpha_star, beta_star_1=cb.beta1, beta_star_2=cb.beta2,
                   mirrored=cb.mirrored)
    if _out(args):
        io.write_json(_out(args) / "fields.json", rep)
    return rep


def cmd_solve1d(args):
    s = _surface(args)
    pot = _potential(args, s)
    f = derive_fields(pot)
    beta = args.beta
    if not beta > 0:
        raise InvalidInput(f"beta must be positive, got {beta!r}")
    if beta >= f.beta_c:
        p = vortexless_profile(pot, s, f, beta)
    elif args.solver == "regime":
        p = solve_regime(pot, s, f, beta)
    else:
        p = solve_pgs_1d(pot, s, beta, args.tol, args.max_sweeps, fields=f)
    res = residual_check(p, pot, s)
    comps = components_1d(p)
    rep = {"beta": beta, "beta_c": f.beta_c, "solver": args.solver, "regime": p.regime,
           "alphas": list(p.alphas), "iterations": p.iterations, "residual": p.residual,
           "components": [{"lo": c.lo, "hi": c.hi, "sides": [c.side_lo, c.side_hi]} for c in comps],
           "residual_report": res._asdict()}
    out = _out(args)
    if out:
        io.write_csv(out / "profile.csv", *io.profile_rows(p))
        io.write_json(out / "residual.json", rep)
        if args.svg:
            svg.save(out / "profile.svg", svg.profile_plot([p]))
    return rep


def cmd_solve2d(args):
    mesh = _mesh(args.mesh)
    H = _mesh_field(mesh, args.field)
    bc, F = mesh_beta_c(mesh, H.H)
    if not args.beta > 0:
        raise InvalidInput(f"beta must be positive, got {args.beta!r}")
    sol = solve_pgs_2d(mesh, H, args.beta, args.tol, args.max_sweeps, star_f=F, beta_c=bc)
    mu = vorticity(sol, H, mesh)
    comps = sc_region(sol, mesh)
    vr = vorticity_report(sol, H, mesh)
    rep = {"beta": args.beta, "beta_c": bc, "iterations": sol.iterations,
           "residual": sol.residual, "omega": sol.omega,
           "n_active_plus": int(sol.active_plus.size), "n_active_minus": int(sol.active_minus.size),
           "components": io.component_dict(comps), "vorticity": vr._asdict()}
    out = _out(args)
    if out:
        io.write_csv(out / "solution.csv", *io.mesh_solution_rows(sol, mu))
        io.write_json(out / "components.json", rep)
    return rep


def _sweep_problem(args):
    if args.mesh:
        mesh = _mesh(args.mesh)
        return MeshProblem(mesh, _mesh_field(mesh, args.field), tol=args.tol or 1e-10)
    s = _surface(args)
    return AxiProblem(make_potential(args.potential if not args.potential.endswith(".csv")
                                     else load_potential_table(args.potential), s),
                      solver=args.solver, tol=args.tol or 1e-12)


def cmd_sweep(args):
    problem = _sweep_problem(args)
    report = sweep(problem, _betas(args, problem.beta_c))
    mono = check_monotonicity(report)
    rep = io.sweep_dict(report)
    rep["transitions"] = [list(t) for t in transitions(report)]
    rep["monotonicity_violations"] = len(mono)
    rep["continuity_excess"] = check_continuity(report)
    out = _out(args)
    if out:
        io.write_json(out / "sweep.json", rep)
        io.write_csv(out / "sweep.csv", *io.sweep_rows(report))
        if args.svg:
            svg.save(out / "counts.svg", svg.count_plot(report))
            if report.kind == "axisymmetric":
                picks = report.records[:: max(1, len(report.records) // 4)]
                svg.save(out / "profiles.svg", svg.profile_plot([r.solution for r in picks if r.solution]))
    return rep


def cmd_scaling(args):
    problem = _sweep_problem(args)
    betas = _betas(args, problem.beta_c)
    report = sweep(problem, betas)
    width = fit_scaling(report, "width", max_fraction=args.max_fraction)
    grad = fit_scaling(report, "gradient", max_fraction=args.max_fraction)
    thick = check_thickness(report)
    lo, hi = zip(*(width_bracket(args.c, args.C, b) for b in report.betas))
    rep = {"betas": report.betas, "widths": [r.separation for r in report.records],
           "width_fit": width._asdict(), "gradient_fit": grad._asdict(),
           "thickness": {"ratios": thick.ratios, "minimum": thick.minimum, "spread": thick.spread,
                         "passed": thick.passed},
           "bracket": {"c": args.c, "C": args.C, "lower": list(lo), "upper": list(hi)}}
    out = _out(args)
    if out:
        io.write_json(out / "scaling.json", rep)
        io.write_csv(out / "sweep.csv", *io.sweep_rows(report))
        if args.svg:
            svg.save(out / "width.svg", svg.width_plot(report, width, (np.array(lo), np.array(hi))))
    return rep


def cmd_freeze(args):
    s = _surface(args)
    pot = _potential(args, s)
    if not pot.is_triple:
        raise InvalidInput("freezing needs a potential with three critical points")
    cb = critical_betas(pot)
    problem = AxiProblem(pot, solver=args.solver, tol=args.tol or 1e-12)
    gap = cb.beta1 - cb.beta2
    eps = args.margin * gap
    betas = np.r_[cb.beta2 - eps, np.linspace(cb.beta2 + eps, cb.beta1 - eps, args.samples)]
    report = sweep(problem, betas)
    frozen = detect_freezing(report)
    rep = {"beta_star_1": cb.beta1, "beta_star_2": cb.beta2, "alpha_star": cb.alpha_star,
           "betas": report.betas, "counts": report.counts,
           "frozen": [fr._asdict() for fr in frozen]}
    if _out(args):
        io.write_json(_out(args) / "freeze.json", rep)
    return rep


def cmd_barrier(args):
    bp = build_barrier(args.c, args.C, args.beta, variant=args.variant)
    rep = io.barrier_dict(bp, verify_barrier(bp))
    rep["width_bracket"] = list(width_bracket(args.c, args.C, args.beta))
    out = _out(args)
    if out:
        io.write_json(out / "barrier.json", rep)
        io.write_csv(out / "barrier.csv", *io.barrier_rows(bp))
    return rep


def cmd_vortex(args):
    mesh = _mesh(args.mesh)
    H = _mesh_field(mesh, args.field)
    bc, F = mesh_beta_c(mesh, H.H)
    if not args.beta > 0:
        raise InvalidInput(f"beta must be positive, got {args.beta!r}")
    if args.beta >= bc:
        mu = np.zeros(mesh.n_vertices)
    else:
        sol = solve_pgs_2d(mesh, H, args.beta, args.tol, args.max_sweeps, star_f=F, beta_c=bc)
        mu = vorticity(sol, H, mesh)
    series = convergence_check(mesh, mu, args.beta, args.kappas, seed=args.seed,
                               n_seeds=args.n_seeds)
    rep = {"beta": args.beta, "seed": args.seed, **series.as_dict()}
    out = _out(args)
    if out:
        io.write_json(out / "vortex.json", rep)
        for k, pvs in zip(args.kappas, series.configurations):
            io.write_csv(out / f"points_kappa_{k:g}.csv", *io.vortex_rows(pvs))
    return rep


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _axi_options(p, potential="uniform"):
    p.add_argument("--profile", default="sphere",
                   help="sphere, ellipsoid:A or a CSV table (phi,rho,z) / (phi,rho) with --z-table")
    p.add_argument("--z-table", default=None, help="CSV (phi,z) paired with a (phi,rho) profile")
    p.add_argument("--potential", default=potential,
                   help="uniform, canonical, symmetric or a CSV table (phi,a)")
    p.add_argument("--n", type=int, default=2048, help="grid nodes in phi")


def _mesh_options(p):
    p.add_argument("--mesh", default=None, help="icosphere:K or an OFF file")
    p.add_argument("--field", default="z", help="x, y, z or a CSV column of vertex values")


def _beta_list(p):
    p.add_argument("--betas", type=float, nargs="+", default=None)
    p.add_argument("--beta-range", nargs=3, metavar=("LO", "HI", "N"), default=None,
                   help="geometric grid of N gaps")
    p.add_argument("--fractions", action="store_true", help="read LO and HI as fractions of beta_c")


def build_parser():
    parser = argparse.ArgumentParser(prog="sc-obstacle", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="JSON configuration file")
        p.add_argument("--out", default=None, help="output directory")
        p.set_defaults(func=func)
        return p

    p = add("derive", cmd_derive, "fields, beta_c and critical gaps of an axisymmetric potential")
    _axi_options(p)

    p = add("solve1d", cmd_solve1d, "axisymmetric obstacle problem")
    _axi_options(p)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--solver", choices=("regime", "pgs"), default="regime")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-sweeps", type=int, default=2_000_000)
    p.add_argument("--svg", action="store_true")

    p = add("solve2d", cmd_solve2d, "obstacle problem on a triangle mesh")
    _mesh_options(p)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-sweeps", type=int, default=200_000)

    for name, func, help_ in (("sweep", cmd_sweep, "sweep over gaps with component tracking"),
                              ("scaling", cmd_scaling, "width and gradient scaling laws")):
        p = add(name, func, help_)
        _axi_options(p)
        _mesh_options(p)
        _beta_list(p)
        p.add_argument("--solver", choices=("regime", "pgs"), default="regime")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--svg", action="store_true")
        if name == "scaling":
            p.add_argument("--c", type=float, default=1.0, help="lower slope bound for the bracket")
            p.add_argument("--C", type=float, default=1.0, help="upper slope bound for the bracket")
            p.add_argument("--max-fraction", type=float, default=1e-2)
            p.set_defaults(beta_range=["1e-5", "1e-2", "8"])
        else:
            p.set_defaults(beta_range=["0.01", "0.5", "40"], fractions=True)

    p = add("freeze", cmd_freeze, "frozen component between the two critical gaps")
    _axi_options(p, potential="canonical")
    p.add_argument("--solver", choices=("regime", "pgs"), default="pgs")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--margin", type=float, default=0.08, help="window margin as a fraction of the gap")

    p = add("barrier", cmd_barrier, "piecewise-cubic comparison profile")
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--C", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--variant", choices=("lower", "upper"), default="lower")

    p = add("vortex", cmd_vortex, "circle-vortex approximation of the vorticity")
    _mesh_options(p)
    p.set_defaults(mesh="icosphere:5")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--kappas", type=float, nargs="+", default=[100, 300, 1000, 3000])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-seeds", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-sweeps", type=int, default=200_000)
    return parser


def load_config(path, parser_defaults):
    """Read a versioned JSON config and check its keys against the subcommand."""
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if cfg.pop("version", None) != CONFIG_VERSION:
        raise ConfigError(f"config needs \"version\": {CONFIG_VERSION}")
    unknown = sorted(set(cfg) - set(parser_defaults))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("tol",):
        if key in cfg and cfg[key] is not None and not cfg[key] > 0:
            raise ConfigError("tolerances must be positive")
    return cfg


def _apply_threads():
    raw = os.environ.get("SC_OBSTACLE_THREADS")
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInput(f"SC_OBSTACLE_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise InvalidInput("SC_OBSTACLE_THREADS must be at least 1")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        _apply_threads()
        if args.config:
            sub = parser._subparsers._group_actions[0].choices[args.command]
            known = {a.dest for a in sub._actions} - {"help", "config", "func"}
            sub.set_defaults(**load_config(args.config, known))
            args = parser.parse_args(argv)
        missing = [k for k in _REQUIRED.get(args.command, ()) if getattr(args, k) is None]
        if missing:
            raise InvalidInput("missing required option(s): " + ", ".join(
                "--" + k.replace("_", "-") for k in missing))
        if getattr(args, "tol", None) is not None and not args.tol > 0:
            raise InvalidInput("tolerances must be positive")
        result = args.func(args)
    except (NotConverged, BracketFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InvalidInput, PackingFailure, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(io.dumps(result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
