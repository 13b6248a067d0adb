"""Command-line front end.

One executable, one subcommand per module, machine-readable outputs with a
fixed schema: CSV columns in a stable order, JSON with stable key order,
floats at 17 significant digits, rationals as "num/den" strings.  Runs with
identical configuration produce byte-identical result files regardless of
the worker count; the side-car manifest additionally records wall-clock time
and the configuration digest.

Exit codes: 0 success, 1 computational error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from fractions import Fraction

from . import __version__, acceptance, capacity, gauges, laws, network, percolation, plots
from . import rwre, trees, walk1d

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_CONFIG = 2

SEED_ENV_VAR = "TREEWALK_SEED"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# deterministic rendering


def fmt_float(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return "%.17g" % float(x)


def render_scalar(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def render_json(obj, indent: int = 0) -> str:
    import numpy as _np

    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  "{k}": {render_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {render_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, Fraction):
        return json.dumps(render_scalar(obj))
    if isinstance(obj, (bool, _np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (float, _np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return fmt_float(x)
    if isinstance(obj, (int, _np.integer)):
        return str(int(obj))
    return json.dumps(str(obj))


def render_csv(header: list[str], rows: list[tuple]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(render_scalar(v) for v in row))
    return "\n".join(lines) + "\n"


def config_digest(command: str, config: dict) -> str:
    canon = json.dumps({"command": command, "config": config}, sort_keys=True,
                       separators=(",", ":"), default=render_scalar)
    return hashlib.sha256(canon.encode()).hexdigest()


def _emit(args, command: str, text: str, config: dict, plot_path: str | None) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        manifest = {
            "tool": "treewalk",
            "version": __version__,
            "command": command,
            "config": config,
            "config_digest": config_digest(command, config),
            "results_path": args.out,
            "plot_path": plot_path,
            "wall_clock_s": time.monotonic() - args._t0,
        }
        if getattr(args, "_accept_seconds", None):
            manifest["criteria_seconds"] = args._accept_seconds
        with open(args.out + ".manifest.json", "w") as fh:
            fh.write(render_json(manifest) + "\n")
    else:
        sys.stdout.write(text)


def _plot_target(args) -> str | None:
    if not getattr(args, "plot", False):
        return None
    if not args.out:
        raise ConfigError("--plot needs --out to know where to write the figure")
    stem, _ = os.path.splitext(args.out)
    return stem + ".png"


# ---------------------------------------------------------------------------
# shared argument plumbing


def _resolved_config(args) -> dict:
    skip = {"command", "config", "_t0", "func", "_accept_seconds"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = v if not isinstance(v, float) else float(v)
    return out


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}")
    raise ConfigError(f"no seed: pass --seed or set {SEED_ENV_VAR}")


def _add_common(sub, needs_seed: bool = True):
    sub.add_argument("--seed", type=int, default=None,
                     help=f"master seed (default: ${SEED_ENV_VAR})" if needs_seed else "unused")
    sub.add_argument("--threads", type=int, default=1, help="worker count (results invariant)")
    sub.add_argument("--out", type=str, default=None, help="output file (default: stdout)")
    sub.add_argument("--format", choices=["csv", "json"], default=None,
                     help="override the subcommand's native format")
    sub.add_argument("--config", type=str, default=None, help="JSON file with flag defaults")
    sub.add_argument("--plot", action="store_true", help="render a PNG next to --out")


def _parse_int_list(text: str) -> list[int]:
    if ":" in text and "," not in text:
        a, b = text.split(":")
        return list(range(int(a), int(b)))
    return [int(x) for x in text.split(",")]


def _parse_profile(spec: str) -> trees.GrowthProfile:
    kind, _, rest = spec.partition(":")
    if kind == "ratios":
        return trees.GrowthProfile(tuple(Fraction(x) for x in rest.split(",")))
    if kind == "path":
        return trees.path_profile(int(rest))
    if kind == "uniform":
        b, n = rest.split(":")
        return trees.uniform_profile(int(b), int(n))
    if kind == "binary":
        return trees.uniform_profile(2, int(rest))
    if kind == "poly":
        gamma, n = rest.split(":")
        return trees.polynomial_profile(float(gamma), int(n))
    raise ConfigError(f"unknown profile spec {spec!r}")


def _parse_target(spec: str, depth: int, law) -> percolation.Target:
    kind, _, rest = spec.partition(":")
    if kind == "b0":
        return percolation.nonnegative_sums(depth)
    if kind == "halfspace":
        a, b, nf = rest.split(":")
        return percolation.half_space(walk1d.PowerBoundary(float(a), float(b)), int(nf), depth)
    if kind == "box":
        return percolation.BoxTarget(tuple(Fraction(q) for q in rest.split(",")))
    if kind == "counterexample":
        target, _ = percolation.counterexample_target(Fraction(rest))
        return target
    raise ConfigError(f"unknown target spec {spec!r}")


def _load_tree(args) -> trees.ExplicitTree:
    if getattr(args, "tree", None):
        with open(args.tree) as fh:
            return trees.from_json(fh.read())
    if getattr(args, "profile", None):
        return trees.build_symmetric(_parse_profile(args.profile))
    raise ConfigError("pass --tree FILE or --profile SPEC")


# ---------------------------------------------------------------------------
# subcommands


def _require(args, name: str):
    value = getattr(args, name.replace("-", "_"))
    if value is None:
        raise ConfigError(f"missing --{name} (flag or config key)")
    return value


def _cmd_walk1d(args) -> None:
    law = laws.parse_law(args.law)
    if not isinstance(law, laws.FiniteLattice) and args.mode == "dp":
        raise ConfigError("dp mode needs a lattice law; use --mode mc")
    boundary = walk1d.parse_boundary(args.boundary)
    grid = _parse_int_list(_require(args, 'grid'))
    rows = []
    if args.mode == "dp":
        if args.event == "tail":
            brackets = walk1d.dp_hitting_tail_grid(law, args.barrier, grid, args.cap_multiplier)
        elif args.event == "above-neg":
            brackets = walk1d.dp_stay_above_grid(law, boundary, 1, grid,
                                                 args.cap_multiplier, sign=-1)
        else:
            start = args.start
            if start is None:
                start, _ = walk1d.find_boundary_start(law, boundary, args.scan_limit,
                                                      args.cap_multiplier)
            brackets = walk1d.dp_stay_above_grid(law, boundary, start, grid,
                                                 args.cap_multiplier)
        for n in sorted(brackets):
            b = brackets[n]
            rows.append((n, b.lower, b.upper, math.sqrt(n) * b.mid, 0.0))
    else:
        if args.event != "above":
            raise ConfigError("--mode mc only supports --event above")
        seed = _seed(args)
        for n in grid:
            est, se = walk1d.mc_stay_above(law, boundary, max(1, args.start or 1), n,
                                           args.episodes, seed, args.threads)
            rows.append((n, est, est, math.sqrt(n) * est, se))
    header = ["n", "p_lower", "p_upper", "sqrt_n_p", "stderr"]
    plot_path = _plot_target(args)
    if plot_path:
        plots.plot_walk1d(rows, plot_path)
    if (args.format or "csv") == "json":
        obj = {"rows": [dict(zip(header, r)) for r in rows]}
        _emit(args, "walk1d", render_json(obj) + "\n", _resolved_config(args), plot_path)
    else:
        _emit(args, "walk1d", render_csv(header, rows), _resolved_config(args), plot_path)


def _cmd_capacity(args) -> None:
    gauge = gauges.parse_gauge(_require(args, 'gauge'))
    if args.tree:
        with open(args.tree) as fh:
            tree = trees.from_json(fh.read())
        profile = trees.symmetrize_tree(tree)
    else:
        profile = _parse_profile(args.profile)
        tree = trees.build_symmetric(profile) if profile.is_integral else None
    min_levels = _parse_int_list(args.min_levels) if args.min_levels else [1]
    result: dict = {}
    if tree is not None:
        result["cap_network"] = capacity.capacity_network(tree, gauge)
        energy = capacity.capacity_energy(tree, gauge)
        result["cap_energy"] = energy.capacity
        result["cap_energy_converged"] = energy.converged
        result["content_by_min_level"] = [
            {"min_level": m, "content": v}
            for m, v in capacity.content_profile(tree, gauge, min_levels)]
    else:
        result["cap_network"] = None
        result["cap_energy"] = None
        result["content_by_min_level"] = []
        result["virtual_profile"] = True
    rp, bound = capacity.symmetric_resistance(profile, gauge)
    result["rp"] = rp
    result["rp_bound"] = bound
    series = capacity.criterion_series(profile, profile.depth)
    result["series_verdicts"] = {
        "transience": series.transience_verdict.value,
        "regularity": series.regularity_verdict.value,
        "predicted": series.predicted,
        "transience_partial_sum": series.transience_partial[-1],
        "regularity_partial_sum": series.regularity_partial[-1],
    }
    plot_path = _plot_target(args)
    if plot_path and result["content_by_min_level"]:
        plots.plot_capacity([(d["min_level"], d["content"])
                             for d in result["content_by_min_level"]], plot_path)
    _emit(args, "capacity", render_json(result) + "\n", _resolved_config(args), plot_path)


def _cmd_network(args) -> None:
    tree = _load_tree(args)
    law = laws.parse_law(args.law)
    seeds = _parse_int_list(args.seeds) if args.seeds else [_seed(args)]
    rows = []
    for s in seeds:
        env = network.sample_environment(tree, law, s)
        rows.append((s,
                     network.effective_conductance(tree, env),
                     network.escape_probability(tree, env),
                     network.bottleneck_bound(tree, env)[0]))
    header = ["seed", "c_eff", "escape_p", "bottleneck"]
    _emit(args, "network", render_csv(header, rows), _resolved_config(args), None)


def _survival_json(rep: percolation.SurvivalReport) -> dict:
    return {
        "survival": rep.survival,
        "survival_exact": rep.survival_exact,
        "marginals": list(rep.marginals),
        "method": rep.method,
        "target": rep.target,
        "law": rep.law,
    }


def _cmd_percolate(args) -> None:
    law = laws.parse_law(args.law) if args.law else None
    if args.tree:
        with open(args.tree) as fh:
            tree = trees.from_json(fh.read())
        target = _parse_target(_require(args, 'target'), tree.depth, law)
        rep = percolation.survival_exact(tree, law, target)
        obj = _survival_json(rep)
    else:
        profile = _parse_profile(args.profile)
        target = _parse_target(_require(args, 'target'), profile.depth, law)
        ns = percolation.nonsurvival_symmetric(profile, law, target)
        margs = percolation.marginals(law, target, profile.depth)
        obj = {
            "survival": 1.0 - ns,
            "survival_exact": None,
            "marginals": margs,
            "method": "psi",
            "target": target.describe(),
            "law": law.describe() if law else "none",
        }
    _emit(args, "percolate", render_json(obj) + "\n", _resolved_config(args), None)


def _cmd_thm42(args) -> None:
    tree = _load_tree(args)
    law = laws.parse_law(args.law) if args.law else None
    target = _parse_target(_require(args, 'target'), tree.depth, law)
    chain = percolation.symmetrization_chain(tree, law, target)
    obj = {
        "p_b_gamma": chain.p_b_gamma,
        "p_b_sgamma": chain.p_b_sgamma,
        "p_sb_sgamma": chain.p_sb_sgamma,
        "cap_bound": chain.cap_bound,
        "chain_holds": chain.chain_holds,
        "swap_counterexample": chain.swap_counterexample,
        "p_sb_gamma": chain.p_sb_gamma,
    }
    _emit(args, "thm42-check", render_json(obj) + "\n", _resolved_config(args), None)


def _cmd_counterexample(args) -> None:
    eps = Fraction(args.eps)
    target, law = percolation.counterexample_target(eps)
    tree = percolation.counterexample_tree()
    chain = percolation.symmetrization_chain(tree, law, target)
    closed_form = 1 - 2 * eps ** 2 - 32 * eps ** 3
    box_closed_form = 1 - (3 * eps ** 2 + 9 * eps ** 3) / (1 - eps)
    obj = {
        "eps": eps,
        "p_b_gamma_exact": chain.p_b_gamma_exact,
        "p_b_gamma": chain.p_b_gamma,
        "p_b_gamma_closed_form": closed_form,
        "p_sb_gamma_exact": chain.p_sb_gamma_exact,
        "p_sb_gamma": chain.p_sb_gamma,
        "p_sb_gamma_closed_form": box_closed_form,
        "symmetrized_upper": 1 - 3 * eps ** 2,
        "swap_counterexample": chain.swap_counterexample,
        "chain": {
            "p_b_sgamma": chain.p_b_sgamma,
            "p_sb_sgamma": chain.p_sb_sgamma,
            "cap_bound": chain.cap_bound,
            "chain_holds": chain.chain_holds,
        },
    }
    _emit(args, "counterexample", render_json(obj) + "\n", _resolved_config(args), None)


def _cmd_rwre(args) -> None:
    profile = _parse_profile(_require(args, 'profile'))
    law = laws.parse_law(args.law)
    depths = _parse_int_list(_require(args, 'depths'))
    rep = rwre.conductance_scaling_mc(profile, law, depths, args.envs, _seed(args),
                                      args.threads)
    header = ["depth", "c_q25", "c_median", "c_q75", "e_q25", "e_median", "e_q75", "verdict"]
    rows = [(r.depth, *r.conductance_q, *r.escape_q, rep.verdict) for r in rep.rows]
    plot_path = _plot_target(args)
    if plot_path:
        plots.plot_scaling(rep.rows, plot_path)
    _emit(args, "rwre", render_csv(header, rows), _resolved_config(args), plot_path)


def _cmd_reinforced(args) -> None:
    rep = rwre.equivalence_test(args.degree, args.prefix, args.episodes, _seed(args))
    obj = {
        "degree": rep.d,
        "prefix": rep.prefix,
        "episodes": rep.episodes,
        "reinforced_chi2": rep.reinforced_stat,
        "reinforced_pvalue": rep.reinforced_pvalue,
        "rwre_chi2": rep.rwre_stat,
        "rwre_pvalue": rep.rwre_pvalue,
        "both_pass": rep.both_pass,
        "first_two_equal_freq": rep.first_two_equal_freq,
        "first_two_equal_se": rep.first_two_equal_se,
        "exact_table": {"".join(map(str, k)): v for k, v in rep.table.items()},
    }
    _emit(args, "reinforced", render_json(obj) + "\n", _resolved_config(args), None)


def _cmd_stable(args) -> None:
    grid = _parse_int_list(args.grid)
    rep = rwre.stable_ray_decay(args.alpha, args.drift, grid, args.episodes, _seed(args),
                                args.threads)
    header = ["n", "estimate", "stderr", "ci_low", "ci_high"]
    rows = [(r.n, r.estimate, r.stderr, r.ci_low, r.ci_high) for r in rep.rows]
    plot_path = _plot_target(args)
    if plot_path:
        plots.plot_stable(rep, plot_path)
    text = render_csv(header, rows)
    if (args.format or "csv") == "json":
        obj = {"rows": [dict(zip(header, r)) for r in rows],
               "slope": rep.slope, "slope_points": rep.slope_points}
        text = render_json(obj) + "\n"
    _emit(args, "stable", text, _resolved_config(args), plot_path)
    if args.out:
        sys.stdout.write(f"fitted log-log slope: {fmt_float(rep.slope)}\n")


def _cmd_accept(args) -> None:
    selected = _parse_int_list(args.criteria) if args.criteria else None
    results = acceptance.run_criteria(selected, verbose=True)
    # timings live in the manifest so the results file stays byte-stable
    obj = {
        "suite": args.suite,
        "all_pass": all(r.passed for r in results),
        "criteria": [
            {"index": r.index, "name": r.name, "passed": r.passed, "details": r.details}
            for r in results
        ],
    }
    args._accept_seconds = {r.index: r.seconds for r in results}
    _emit(args, "accept", render_json(obj) + "\n", _resolved_config(args), None)
    if not obj["all_pass"]:
        raise _AcceptanceFailure()


class _AcceptanceFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treewalk",
        description="Boundary crossing, capacity, percolation and random "
                    "environments on trees")
    parser.add_argument("--version", action="version", version=f"treewalk {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("walk1d", help="boundary-crossing probabilities for 1-D walks")
    p.add_argument("--law", default="rademacher")
    p.add_argument("--boundary", default="zero")
    p.add_argument("--grid", default=None, help="comma list or a:b range of horizons")
    p.add_argument("--mode", choices=["dp", "mc"], default="dp")
    p.add_argument("--event", choices=["above", "above-neg", "tail"], default="above")
    p.add_argument("--barrier", type=float, default=0.0, help="barrier depth for --event tail")
    p.add_argument("--start", type=int, default=None,
                   help="first constrained step (default: scanned)")
    p.add_argument("--scan-limit", type=int, default=256)
    p.add_argument("--cap-multiplier", type=float, default=12.0)
    p.add_argument("--episodes", type=int, default=100_000)
    _add_common(p)
    p.set_defaults(func=_cmd_walk1d)

    p = subs.add_parser("capacity", help="content, capacity, series criteria")
    p.add_argument("--tree", default=None, help="tree JSON file")
    p.add_argument("--profile", default=None, help="growth profile spec")
    p.add_argument("--gauge", default=None, help="pow:a | exp:b | tab:v1,v2 | tab:@file")
    p.add_argument("--min-levels", default=None, help="levels for the content profile")
    _add_common(p, needs_seed=False)
    p.set_defaults(func=_cmd_capacity)

    p = subs.add_parser("network", help="sampled conductance networks on a tree")
    p.add_argument("--tree", default=None)
    p.add_argument("--profile", default=None)
    p.add_argument("--law", default="rademacher")
    p.add_argument("--seeds", default=None, help="comma list or a:b range of seeds")
    _add_common(p)
    p.set_defaults(func=_cmd_network)

    p = subs.add_parser("percolate", help="target percolation survival")
    p.add_argument("--tree", default=None)
    p.add_argument("--profile", default=None)
    p.add_argument("--law", default="rademacher")
    p.add_argument("--target", default=None,
                   help="b0 | halfspace:a:b:nf | box:q1,q2,... | counterexample:eps")
    _add_common(p, needs_seed=False)
    p.set_defaults(func=_cmd_percolate)

    p = subs.add_parser("thm42-check", help="symmetrization comparison chain")
    p.add_argument("--tree", default=None)
    p.add_argument("--profile", default=None)
    p.add_argument("--law", default="rademacher")
    p.add_argument("--target", default=None)
    _add_common(p, needs_seed=False)
    p.set_defaults(func=_cmd_thm42)

    p = subs.add_parser("counterexample",
                        help="exact survival drop under target symmetrization")
    p.add_argument("--eps", default="0.01", help="exact rational, e.g. 0.01 or 1/100")
    _add_common(p, needs_seed=False)
    p.set_defaults(func=_cmd_counterexample)

    p = subs.add_parser("rwre", help="conductance scaling over sampled environments")
    p.add_argument("--profile", default=None)
    p.add_argument("--law", default="rademacher")
    p.add_argument("--depths", default=None)
    p.add_argument("--envs", type=int, default=200)
    _add_common(p)
    p.set_defaults(func=_cmd_rwre)

    p = subs.add_parser("reinforced", help="reinforced walk vs urn vs environment walk")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--prefix", type=int, default=2)
    p.add_argument("--episodes", type=int, default=100_000)
    _add_common(p)
    p.set_defaults(func=_cmd_reinforced)

    p = subs.add_parser("stable", help="heavy-tailed linear-boundary survival")
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--drift", type=float, default=1.0)
    p.add_argument("--grid", default="10,20,40,80")
    p.add_argument("--episodes", type=int, default=1_000_000)
    _add_common(p)
    p.set_defaults(func=_cmd_stable)

    p = subs.add_parser("accept", help="run the acceptance battery")
    p.add_argument("--suite", choices=["primary"], default="primary")
    p.add_argument("--criteria", default=None, help="subset, e.g. 1,3,7")
    _add_common(p)
    p.set_defaults(func=_cmd_accept)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        sub = None
        for action in parser._actions:
            if isinstance(action, argparse._SubParsersAction):
                sub = action.choices[args.command]
        allowed = {a.dest for a in sub._actions} - {"help", "config"}
        for key in data:
            if key not in allowed:
                raise ConfigError(f"unknown config key {key!r} for {args.command}")
        sub.set_defaults(**data)
        args = parser.parse_args(argv)  # explicit flags still win
    return args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
        args._t0 = time.monotonic()
        args.func(args)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _AcceptanceFailure:
        return EXIT_COMPUTE
    except (laws.LawError, gauges.GaugeError, walk1d.BoundaryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (trees.TreeError, percolation.PercolationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
