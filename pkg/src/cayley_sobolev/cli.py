"""Command-line front end.

Exit codes: 0 success, 1 failed property checks, 2 usage error, 3 numerical
non-convergence (results are still written), 4 resource cap exceeded.
Every command writes ``manifest.json`` into its output directory, also on
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import io
from .cayley import GroupSpec, ResourceLimitError, build_ball, growth_sequence
from .checks import run_checks, sign_error_laplacian

EXIT_OK, EXIT_CHECKS, EXIT_USAGE, EXIT_NONCONV, EXIT_CAP = 0, 1, 2, 3, 4

CONFIG_KEYS = ("group", "N", "p", "q", "radius", "init", "seed", "tol_grad", "max_iter")
OPTIONAL_KEYS = {"restarts": int, "model": str, "halo": int}


class UsageError(Exception):
    pass


class NonConvergence(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


def load_config(path) -> dict:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file {path} not found") from None
    except yaml.YAMLError as exc:
        raise UsageError(f"cannot parse {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError("config must be a mapping of keys to values")
    for key in CONFIG_KEYS:
        if key not in raw:
            raise UsageError(f"missing config key: {key}")
    unknown = set(raw) - set(CONFIG_KEYS) - set(OPTIONAL_KEYS)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    return raw


def minimization_config(raw: dict):
    from .variational import ConfigError, MinimizationConfig

    group = str(raw["group"]).lower()
    try:
        if group == "lattice":
            spec = GroupSpec.lattice(int(raw["N"]))
        elif group == "heisenberg":
            spec = GroupSpec.heisenberg()
            if int(raw["N"]) != spec.homogeneous_dim:
                raise UsageError("the Heisenberg group has homogeneous dimension N = 4")
        else:
            raise UsageError(f"unknown group {raw['group']!r}")
        extra = {k: t(raw[k]) for k, t in OPTIONAL_KEYS.items() if k in raw}
        cfg = MinimizationConfig(
            spec=spec, p=float(raw["p"]), q=float(raw["q"]),
            domain_radius=int(raw["radius"]), init=str(raw["init"]),
            seed=int(raw["seed"]), tol_grad=float(raw["tol_grad"]),
            max_iter=int(raw["max_iter"]), **extra,
        )
        return cfg.validate()
    except (ConfigError, ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _spec_from_args(args) -> GroupSpec:
    if args.group == "heisenberg":
        return GroupSpec.heisenberg()
    if args.dim is None or args.dim < 1:
        raise UsageError("--dim must be a positive integer for the lattice")
    return GroupSpec.lattice(args.dim)


# ---------------------------------------------------------------------------
# commands


def cmd_growth(args, out: Path, man: io.RunManifest) -> int:
    spec = _spec_from_args(args)
    if args.nmax < 1:
        raise UsageError("--nmax must be at least 1")
    g = growth_sequence(spec, args.nmax)
    lo = args.fit_min if args.fit_min is not None else max(1, args.nmax // 3)
    hi = args.fit_max if args.fit_max is not None else args.nmax
    if not 1 <= lo < hi <= args.nmax:
        raise UsageError("need 1 <= fit-min < fit-max <= nmax")
    slope = g.fit_dimension(lo, hi)
    man.add(io.growth_to_csv(g, out / "growth.csv"))
    summary = {"group": spec.kind, "dim": spec.dim, "values": g.values,
               "fit_range": [lo, hi], "fitted_exponent": slope,
               "homogeneous_dim": spec.homogeneous_dim}
    man.add(io.write_json(out / "growth.json", summary))
    man.metrics.update(fitted_exponent=slope, beta_nmax=int(g.values[-1]))
    print(f"beta({args.nmax}) = {g.values[-1]}, fitted exponent {slope:.4f}")
    return EXIT_OK


def cmd_cutoff(args, out: Path, man: io.RunManifest) -> int:
    from .cutoff import CutoffSpec, decay_study

    R_list = args.R
    if len(R_list) < 2 or np.any(np.diff(R_list) <= 0):
        raise UsageError("--R values must be strictly increasing (at least two)")
    try:
        CutoffSpec(args.dim, args.r, R_list[0], args.kind)
        table = decay_study(args.kind, args.dim, args.r, R_list, fit_points=min(
            args.fit_points, len(R_list)))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    man.add(io.decay_table_to_csv(table, out / "decay.csv"))
    man.add(io.write_json(out / "decay.json", table.summary()))
    for name, vals in table.records.items():
        man.add(io.two_column(out / f"decay_{name}.dat", table.loglog, np.log(vals)))
    for R in R_list:
        spec = CutoffSpec(args.dim, args.r, R, args.kind)
        rho = np.linspace(0.0, spec.outer_radius * 1.05, 400)
        man.add(io.two_column(out / f"profile_R{R:g}.dat", rho, spec.profile(rho**2)))
    man.metrics.update(slopes=table.slopes, expected=table.expected_slopes)
    for name, s in table.slopes.items():
        print(f"{name}: fitted slope {s:.4f} (expected {table.expected_slopes[name]:g})")
    return EXIT_OK


def _write_minimization(res, out: Path, man: io.RunManifest, cfg) -> None:
    from .variational import tail_profile

    man.add(io.write_json(out / "result.json", res.summary()))
    man.add(io.grid_function_to_csv(res.ball, res.u_star, out / "u_star.csv", "u"))
    radii = np.arange(0, res.ball.radius)
    region = res.ball.distance <= res.ball.radius - 1
    tp = tail_profile(res.ball, res.u_star, res.p, res.q, radii, region=region)
    man.add(io._write_rows(out / "tail_profile.csv", ["R", "mu", "nu"],
                           zip(tp.radii, tp.mu, tp.nu)))
    man.add(io.two_column(out / "history.dat", np.arange(len(res.objective_history)),
                          res.objective_history))
    man.metrics.update(K_est=res.K_est, el_residual=res.el_residual,
                       el_residual_normalized=res.el_residual_normalized,
                       iterations=res.iterations, converged=res.converged)


def cmd_minimize(args, out: Path, man: io.RunManifest) -> int:
    from .variational import minimize_best_constant

    cfg = minimization_config(args.raw_config)
    res = minimize_best_constant(cfg)
    _write_minimization(res, out, man, cfg)
    print(f"K_est = {res.K_est:.12g}, normalized residual {res.el_residual_normalized:.3e}")
    if not res.converged:
        raise NonConvergence("minimisation did not reach the residual tolerance")
    return EXIT_OK


def cmd_biharmonic(args, out: Path, man: io.RunManifest) -> int:
    from .pde import ground_state_biharmonic

    cfg = minimization_config(args.raw_config)
    gs = ground_state_biharmonic(cfg)
    man.add(io.write_json(out / "ground_state.json", gs.summary()))
    man.add(io.grid_function_to_csv(gs.ball, gs.w, out / "w.csv", "w"))
    man.metrics.update(gs.summary())
    print(f"K_est = {gs.K_est:.12g}, multiplier {gs.multiplier:.12f}, "
          f"residual {gs.report.r_biharmonic_normalized:.3e}, positive {gs.report.positive}")
    if gs.flagged:
        raise NonConvergence("ground state not converged or not positive on the interior")
    return EXIT_OK


def cmd_lane_emden(args, out: Path, man: io.RunManifest) -> int:
    from .pde import ground_state_biharmonic

    cfg = minimization_config(args.raw_config)
    gs = ground_state_biharmonic(cfg)
    man.add(io.write_json(out / "lane_emden.json", gs.report.to_dict()))
    man.add(io.grid_functions_to_csv(gs.ball, {"u": gs.w, "v": gs.v}, out / "pair.csv"))
    man.metrics.update(gs.report.to_dict())
    r = gs.report
    print(f"r_system_1 {r.r_system_1_relative:.2e} (rel), r_system_2 "
          f"{r.r_system_2_normalized:.2e} (normalized), min u {r.positivity_u:.3e}, "
          f"min v {r.positivity_v:.3e}")
    if gs.flagged:
        raise NonConvergence("Lane-Emden pair not converged or not positive on the interior")
    return EXIT_OK


def cmd_hodge(args, out: Path, man: io.RunManifest) -> int:
    from .hodge import EdgeFunction, hodge_decompose

    spec = _spec_from_args(args)
    ball = build_ball(spec, args.radius)
    rng = np.random.default_rng(args.seed)
    alpha = EdgeFunction(ball, rng.standard_normal(len(ball.edges)))
    res = hodge_decompose(alpha)
    summary = {"div_residual": res.div_residual, "orthogonality": res.orthogonality,
               "reconstruction": res.reconstruction, "edges": len(ball.edges)}
    man.add(io.write_json(out / "hodge.json", summary))
    man.add(io.edge_function_to_csv(alpha, out / "alpha.csv"))
    man.add(io.edge_function_to_csv(res.h, out / "h.csv"))
    man.add(io.grid_function_to_csv(ball, res.f, out / "f.csv", "f"))
    man.metrics.update(summary)
    print(f"div h {res.div_residual:.2e}, <grad f, h> {res.orthogonality:.2e}")
    return EXIT_OK


def cmd_halflap(args, out: Path, man: io.RunManifest) -> int:
    from .calculus import laplacian
    from .semigroup import QuadratureConfig, half_laplacian, spectral_half_laplacian

    spec = _spec_from_args(args)
    ball = build_ball(spec, args.radius)
    rng = np.random.default_rng(args.seed)
    u = rng.standard_normal(len(ball)) * (ball.distance <= args.support)
    quad = QuadratureConfig(nodes=args.nodes, t_max=args.t_max)
    res = half_laplacian(ball, u, quad, full=True)
    summary = {"tail_bound": res.tail_bound, "quadrature_estimate": res.quadrature_estimate}
    if len(ball) <= 3000:
        ref = spectral_half_laplacian(ball, u)
        summary["spectral_rel_error"] = float(np.linalg.norm(res.values - ref)
                                              / np.linalg.norm(ref))
        twice = half_laplacian(ball, res.values, quad)
        lap = -laplacian(ball, u)
        summary["composed_rel_error"] = float(np.linalg.norm(twice - lap) / np.linalg.norm(lap))
    man.add(io.grid_functions_to_csv(ball, {"u": u, "half_laplacian": res.values},
                                     out / "halflap.csv"))
    man.add(io.write_json(out / "halflap.json", summary))
    man.metrics.update(summary)
    print(", ".join(f"{k} {v:.2e}" for k, v in summary.items()))
    return EXIT_OK


def cmd_checks(args, out: Path, man: io.RunManifest) -> int:
    lap = sign_error_laplacian if args.inject_sign_error else None
    try:
        results = run_checks(args.radius, args.filter, seed=args.seed, laplacian_fn=lap)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    for r in results:
        print(r.line())
    summary = {r.name: {"passed": r.passed, "value": r.value, "threshold": r.threshold,
                        "detail": r.detail} for r in results}
    man.add(io.write_json(out / "checks.json", summary))
    man.metrics.update(passed=sum(r.passed for r in results), total=len(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECKS


COMMANDS = {
    "growth": cmd_growth, "cutoff": cmd_cutoff, "minimize": cmd_minimize,
    "biharmonic": cmd_biharmonic, "lane-emden": cmd_lane_emden, "hodge": cmd_hodge,
    "halflap": cmd_halflap, "checks": cmd_checks,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cayley-sobolev", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, default_group=True):
        sp.add_argument("--out", type=Path, default=None,
                        help="output directory (default: runs/<command>)")
        if default_group:
            sp.add_argument("--group", choices=("lattice", "heisenberg"), default="lattice")
            sp.add_argument("--dim", type=int, default=None)

    g = sub.add_parser("growth", help="growth function and fitted exponent")
    common(g)
    g.add_argument("--nmax", type=int, required=True)
    g.add_argument("--fit-min", type=int, default=None)
    g.add_argument("--fit-max", type=int, default=None)

    c = sub.add_parser("cutoff", help="decay study of explicit cutoff functions")
    common(c, default_group=False)
    c.add_argument("--kind", choices=("first", "second"), required=True)
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--r", type=float, required=True)
    c.add_argument("--R", type=float, nargs="+", required=True)
    c.add_argument("--fit-points", type=int, default=4)

    for name, help_ in (("minimize", "best-constant minimisation"),
                        ("biharmonic", "positive p-biharmonic ground state"),
                        ("lane-emden", "Lane-Emden pair by reduction")):
        m = sub.add_parser(name, help=help_)
        common(m, default_group=False)
        m.add_argument("config", type=Path, help="YAML run configuration")

    h = sub.add_parser("hodge", help="Hodge splitting of a random 1-form")
    common(h)
    h.add_argument("--radius", type=int, default=10)
    h.add_argument("--seed", type=int, default=0)

    hl = sub.add_parser("halflap", help="half-Laplacian by semigroup quadrature")
    common(hl)
    hl.add_argument("--radius", type=int, default=5)
    hl.add_argument("--support", type=int, default=2)
    hl.add_argument("--seed", type=int, default=0)
    hl.add_argument("--nodes", type=int, default=16)
    hl.add_argument("--t-max", type=float, default=1e4)

    k = sub.add_parser("checks", help="run the property suite")
    common(k, default_group=False)
    k.add_argument("--radius", type=int, default=6)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--filter", action="append", default=None,
                   help="run only checks whose name contains this (repeatable)")
    k.add_argument("--inject-sign-error", action="store_true", help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = args.out or Path("runs") / args.command
    out.mkdir(parents=True, exist_ok=True)
    echo = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
    man = io.RunManifest(command=args.command, config=echo, seed=getattr(args, "seed", None))
    code = EXIT_OK
    try:
        if hasattr(args, "config"):
            args.raw_config = load_config(args.config)
            man.config["file"] = args.raw_config
            man.seed = args.raw_config.get("seed")
        code = COMMANDS[args.command](args, out, man)
        man.finish("ok" if code == EXIT_OK else "checks-failed", code)
    except UsageError as exc:
        code = EXIT_USAGE
        man.finish("usage-error", code, str(exc))
        print(f"usage error: {exc}", file=sys.stderr)
    except NonConvergence as exc:
        code = EXIT_NONCONV
        man.finish("non-convergence", code, str(exc))
        print(f"non-convergence: {exc}", file=sys.stderr)
    except ResourceLimitError as exc:
        code = EXIT_CAP
        man.finish("resource-cap", code, str(exc))
        print(f"resource cap: {exc}", file=sys.stderr)
    finally:
        if man.finished is None:
            man.finish("error", 1, "unhandled exception")
        man.write(out / "manifest.json")
    return code


if __name__ == "__main__":
    sys.exit(main())
