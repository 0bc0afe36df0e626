"""Command-line front end.

Subcommands: `run` (scenario execution to report files), `trees`
(spanning-tree and connectivity table), `reliability` (disconnection
probability by exact / Monte Carlo / bound, side by side), and `formulas`
(closed-form evaluations). Exit codes: 0 success, 1 invalid input,
2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path

from . import analytics, resilience, spanning
from .config import ConfigError, load_config
from .graphs import (
    FabricGraph,
    build_chain,
    build_clos,
    build_complete,
    build_grid,
    build_octavalent_mesh,
    from_edge_list_text,
)
from .linkmodel import FlappingModel, effective_failure_prob, stationary_bad_fraction
from .sim import run_scenario
from .spanning import SizeLimitError


def _graph_from_spec(spec: str, dims: list[int]) -> FabricGraph:
    families = {
        "grid": (build_grid, 2),
        "mesh": (build_octavalent_mesh, 2),
        "chain": (build_chain, 1),
        "complete": (build_complete, 1),
        "clos": (None, 4),
    }
    if spec in families:
        builder, arity = families[spec]
        if len(dims) != arity:
            raise ConfigError(f"family '{spec}' takes {arity} dimension argument(s)")
        if spec == "clos":
            return build_clos(*dims)[0]
        return builder(*dims)
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"'{spec}' is neither a topology family nor a readable file")
    return from_edge_list_text(path.read_text(), name=path.stem)


def bundled_scenario_path(name: str) -> Path:
    return Path(str(resources.files("fabricsim.scenarios") / f"{name}.yaml"))


def _resolve_config(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    bundled = bundled_scenario_path(name)
    if bundled.exists():
        return bundled
    raise ConfigError(f"config file not found: {name}")


def _run_one(cfg_path: str, out: str | None) -> str:
    cfg = load_config(cfg_path)
    report = run_scenario(cfg)
    outdir = Path(out) / cfg.name if out else Path(f"{cfg.name}-out")
    report.write_outputs(outdir)
    return f"{cfg.name}: {report.summary_line()} -> {outdir}"


def cmd_run(args: argparse.Namespace) -> int:
    try:
        paths = [str(_resolve_config(c)) for c in args.configs]
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if len(paths) == 1 and not args.batch:
        cfg = load_config(paths[0])
        report = run_scenario(cfg)
        outdir = Path(args.out) if args.out else Path(f"{cfg.name}-out")
        report.write_outputs(outdir)
        print(f"{cfg.name}: {report.summary_line()} -> {outdir}")
        return 0
    if args.batch:
        # scenarios are fully isolated, so they can run in parallel processes
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor() as pool:
            lines = list(pool.map(_run_one, paths, [args.out] * len(paths)))
    else:
        lines = [_run_one(p, args.out) for p in paths]
    for line in lines:
        print(line)
    return 0


def cmd_trees(args: argparse.Namespace) -> int:
    g = _graph_from_spec(args.graph, args.dims)
    rows: list[tuple[str, str]] = []
    try:
        tc = spanning.count_spanning_trees_exact(g)
        rows.append(("spanning trees (exact)", str(tc.exact)))
        rows.append(("log spanning trees", f"{tc.log_value:.6f}"))
        rows.append(("rooted spanning trees", str(g.num_vertices * tc.exact)))
    except SizeLimitError as exc:
        rows.append(("spanning trees (exact)", f"unavailable: {exc}"))
    lam = resilience.edge_connectivity(g)
    rows.append(("edge connectivity", str(lam)))
    packing = resilience.greedy_disjoint_trees(g)
    rows.append(("disjoint trees (greedy lower bound)", str(len(packing))))
    try:
        rows.append(("disjoint trees (exact)", str(resilience.nash_williams_exact(g))))
    except SizeLimitError as exc:
        rows.append(("disjoint trees (exact)", f"unavailable: {exc}"))
    if args.format == "json":
        print(json.dumps({"graph": g.name, "vertices": g.num_vertices, "edges": g.num_edges,
                          "table": dict(rows)}, indent=2, sort_keys=True))
    elif args.format == "csv":
        print("metric,value")
        for k, v in rows:
            print(f"{k},{v}")
    else:
        print(f"graph {g.name}: {g.num_vertices} cells, {g.num_edges} links")
        for k, v in rows:
            print(f"  {k:36s} {v}")
    return 0


def cmd_reliability(args: argparse.Namespace) -> int:
    g = _graph_from_spec(args.graph, args.dims)
    p = args.p
    if not 0.0 <= p <= 1.0:
        raise ConfigError("--p must lie in [0, 1]")
    estimates = []
    notes = []
    try:
        estimates.append(resilience.disconnection_prob_exact(g, p))
    except SizeLimitError as exc:
        notes.append(f"exact enumeration unavailable: {exc}")
    if args.mc is not None:
        trials, seed = args.mc
        estimates.append(resilience.disconnection_prob_mc(g, p, trials, seed))
    # any disconnecting failure set contains a cut, so k = edge connectivity
    # gives the tightest sound exponent for the binomial bound
    k = resilience.edge_connectivity(g)
    packing = len(resilience.greedy_disjoint_trees(g))
    bound = resilience.disconnection_bound(g.num_edges, k, p)
    estimates.append(
        resilience.DisconnectionEstimate(probability=bound, method="analytic-bound", p=p)
    )
    pk = p**k
    if args.format == "json":
        print(json.dumps({
            "graph": g.name, "p": p, "edge_connectivity": k, "disjoint_trees": packing,
            "estimates": [{"method": e.method, "probability": e.probability,
                           "stderr": e.standard_error, "trials": e.trials, "seed": e.seed}
                          for e in estimates],
            "p_to_the_k": pk, "binomial_bound": bound, "notes": notes,
        }, indent=2, sort_keys=True))
    elif args.format == "csv":
        print(",".join(resilience.CSV_HEADER))
        for e in estimates:
            print(",".join(e.csv_row(g.name)))
    else:
        print(f"graph {g.name}: |E|={g.num_edges}, min cut k={k}, disjoint trees {packing}, p={p}")
        for e in estimates:
            extra = f" (stderr {e.standard_error:.3g}, trials {e.trials}, seed {e.seed})" if e.trials else ""
            print(f"  {e.method:18s} {e.probability:.6e}{extra}")
        print(f"  p^k alone          {pk:.6e}")
        if bound > 10 * pk:
            print(f"  note: the binomial prefactor C({g.num_edges},{k}) widens the bound "
                  f"{bound / pk if pk else float('inf'):.3g}x beyond p^k")
        for n in notes:
            print(f"  note: {n}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(resilience.CSV_HEADER)
            for e in estimates:
                w.writerow(e.csv_row(g.name))
    return 0


def cmd_formulas(args: argparse.Namespace) -> int:
    name = args.formula
    vals: dict[str, float]
    if name == "chain":
        spec = analytics.ChainSpec(tuple(args.params))
        vals = {"chain_success": analytics.chain_success(spec)}
    elif name == "badlink":
        if len(args.params) != 3:
            raise ConfigError("badlink takes: p q L")
        p, q, length = args.params
        p_bad, ratio, avg_p = analytics.chain_with_bad_link(p, q, int(length))
        vals = {"p_bad": p_bad, "ratio": ratio, "avg_p": avg_p}
    elif name == "triangle":
        if len(args.params) != 3:
            raise ConfigError("triangle takes: s_direct s_hop1 s_hop2")
        vals = {"triangle_success": analytics.triangle_success(*args.params)}
    elif name == "retry":
        if len(args.params) != 2:
            raise ConfigError("retry takes: p_chain attempts")
        vals = {"retry_success": analytics.retry_success(args.params[0], int(args.params[1]))}
    elif name == "flap":
        if len(args.params) != 4:
            raise ConfigError("flap takes: to_bad to_good p_good p_bad")
        a, b, pg, pb = args.params
        vals = {
            "stationary_bad_fraction": stationary_bad_fraction(a, b),
            "effective_failure_prob": effective_failure_prob(FlappingModel(a, b, pg, pb)),
        }
    else:
        raise ConfigError(f"unknown formula '{name}'")
    if args.format == "json":
        print(json.dumps(vals, indent=2, sort_keys=True))
    elif args.format == "csv":
        print("name,value")
        for k, v in vals.items():
            print(f"{k},{v:.10g}")
    else:
        for k, v in vals.items():
            print(f"{k} = {v:.10g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fabricsim",
        description="Fabric simulator and graph-resilience toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run scenario configs and write report files")
    p_run.add_argument("configs", nargs="+",
                       help="YAML config paths, or bundled scenario names")
    p_run.add_argument("--out", help="output directory (default <scenario>-out)")
    p_run.add_argument("--batch", action="store_true",
                       help="run multiple configs concurrently, one process each")
    p_run.set_defaults(func=cmd_run)

    p_trees = sub.add_parser("trees", help="spanning-tree and connectivity table")
    p_trees.add_argument("graph", help="family (grid|mesh|chain|complete|clos) or edge-list file")
    p_trees.add_argument("dims", nargs="*", type=int, help="family dimensions")
    p_trees.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p_trees.set_defaults(func=cmd_trees)

    p_rel = sub.add_parser("reliability", help="disconnection probability estimates")
    p_rel.add_argument("graph", help="family (grid|mesh|chain|complete|clos) or edge-list file")
    p_rel.add_argument("dims", nargs="*", type=int)
    p_rel.add_argument("--p", type=float, required=True, help="per-link failure probability")
    p_rel.add_argument("--mc", nargs=2, type=int, metavar=("TRIALS", "SEED"),
                       help="add a Monte Carlo estimate")
    p_rel.add_argument("--csv", help="also write estimates to this CSV file")
    p_rel.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p_rel.set_defaults(func=cmd_reliability)

    p_form = sub.add_parser("formulas", help="closed-form reliability evaluations")
    p_form.add_argument("formula", choices=("chain", "badlink", "triangle", "retry", "flap"))
    p_form.add_argument("params", nargs="+", type=float)
    p_form.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p_form.set_defaults(func=cmd_formulas)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AssertionError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
