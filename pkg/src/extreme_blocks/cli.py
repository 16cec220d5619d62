"""Command-line front end.

Subcommands: validate, params, simulate, stdf, pareto-cdf, ec, fit,
recover, check-identifiable. Exit codes: 0 success, 1 usage or parse
problem, 2 validation failure, 3 numerical failure. Errors are reported
as machine-readable JSON on stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import io as ebio
from .dist import extremal_coefficient, pareto_cdf, stdf_hr_detailed
from .errors import ExtremeBlocksError, NotIdentifiableError
from .fit import SampleSet, fit_delta, log_spacings, rank_transform
from .graph import build_block_graph
from .latent import ObservationMask, check_identifiable, recover_edge_params, recover_path_sums
from .model import (
    PathSumMatrix,
    extremal_graph_check,
    gaussian_limit,
    path_sum_matrix,
    precision_matrix,
    validate_delta,
)
from .sim import sample_limit_field, sample_pareto_conditioned

USAGE_EXIT = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "UsageError", "message": message}))
        raise SystemExit(USAGE_EXIT)


def _default_threads() -> int:
    raw = os.environ.get("EXTREME_BLOCKS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _add_common(p: argparse.ArgumentParser, *names, seed_required=False):
    if "graph" in names:
        p.add_argument("--graph", required=True, help="graph JSON file")
    if "params" in names:
        p.add_argument("--params", required=True, help="edge-parameter JSON file")
    if "params-opt" in names:
        p.add_argument("--params", help="edge-parameter JSON file")
    if "anchor" in names:
        p.add_argument("--anchor", required=True, help="anchor node identifier")
    if "n" in names:
        p.add_argument("--n", type=int, required=True, help="number of draws")
    if "seed" in names:
        p.add_argument("--seed", type=int, required=seed_required,
                       default=None if seed_required else 0,
                       help="random seed (mandatory for stochastic commands)")
    if "threads" in names:
        p.add_argument("--threads", type=int, default=_default_threads(),
                       help="worker threads (default: EXTREME_BLOCKS_THREADS or 1)")
    if "tol" in names:
        p.add_argument("--tol", type=float, default=None, help="tolerance override")
    if "out" in names:
        p.add_argument("--out", default=".", help="output directory")
    if "format" in names:
        p.add_argument("--format", choices=("csv", "json", "binary"), default="csv")
    if "jsonflag" in names:
        # records are always JSON; the flag is accepted for interface uniformity
        p.add_argument("--format", choices=("json",), default="json")
    if "subset" in names:
        p.add_argument("--subset", required=True, help="comma-separated node ids")
    if "latent" in names:
        p.add_argument("--latent", required=True,
                       help="comma-separated latent node ids or a mask JSON file")


def _load_model(args):
    nodes, edges = ebio.load_graph_json(args.graph)
    g = build_block_graph(nodes, edges)
    params = ebio.load_params_json(args.params)
    return g, validate_delta(g, params)


def _latent_list(raw: str) -> list[str]:
    if raw.endswith(".json") or Path(raw).exists():
        return ebio.load_mask_json(raw)
    return [v for v in raw.split(",") if v]


def _emit(record: dict):
    print(json.dumps(record))


# -- subcommand implementations ------------------------------------------------


def cmd_validate(args) -> int:
    nodes, edges = ebio.load_graph_json(args.graph)
    g = build_block_graph(nodes, edges)
    report = {
        "nodes": list(g.nodes),
        "cliques": [sorted(c) for c in g.cliques],
        "separators": sorted(g.separators),
    }
    if args.params:
        params = ebio.load_params_json(args.params)
        validate_delta(g, params)
        report["cnd"] = {"-".join(sorted(c)): "ok" for c in g.cliques}
    if args.format == "json":
        _emit(report)
    else:
        print(f"block graph with {len(g.nodes)} nodes, {len(g.edges)} edges")
        print(f"cliques ({len(g.cliques)}):")
        for c in report["cliques"]:
            print("  {" + ", ".join(c) + "}")
        print("separators: {" + ", ".join(report["separators"]) + "}")
        if "cnd" in report:
            print("all clique matrices conditionally negative definite")
    return 0


def cmd_params(args) -> int:
    g, fam = _load_model(args)
    u = args.anchor
    g.index(u)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    p = path_sum_matrix(fam)
    lim = gaussian_limit(fam, u)
    theta = precision_matrix(fam, u)
    tol = args.tol if args.tol is not None else 1e-9
    report = extremal_graph_check(fam, tolerance=tol)

    if args.format == "json":
        ebio.dump_matrix_json(out / "P.json", p.nodes, p.values)
        ebio.dump_matrix_json(out / f"mu_{u}.json", lim.nodes, lim.mean)
        ebio.dump_matrix_json(out / f"sigma_{u}.json", lim.nodes, lim.cov)
        ebio.dump_matrix_json(out / f"theta_{u}.json", lim.nodes, theta)
    else:
        ebio.write_matrix_csv(out / "P.csv", p.nodes, p.values)
        ebio.write_samples_csv(out / f"mu_{u}.csv", lim.nodes, lim.mean[None, :])
        ebio.write_matrix_csv(out / f"sigma_{u}.csv", lim.nodes, lim.cov)
        ebio.write_matrix_csv(out / f"theta_{u}.csv", lim.nodes, theta)
    _emit({
        "anchor": u,
        "graph_check_max_violation": report.max_violation,
        "tolerance": report.tolerance,
        "passed": report.passed,
    })
    return 0


def cmd_simulate(args) -> int:
    g, fam = _load_model(args)
    u = args.anchor
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.law == "pareto":
        matrix = sample_pareto_conditioned(fam, u, args.n, args.seed, threads=args.threads)
    else:
        matrix = sample_limit_field(fam, u, args.n, args.seed, threads=args.threads).matrix
    stem = f"samples_{args.law}_u{u}_n{args.n}_seed{args.seed}"
    if args.format == "binary":
        path = out / f"{stem}.bin"
        ebio.write_matrix_binary(path, matrix)
    elif args.format == "json":
        path = out / f"{stem}.json"
        path.write_text(json.dumps({
            "anchor": u, "seed": args.seed, "law": args.law,
            "nodes": list(g.nodes), "matrix": matrix.tolist(),
        }) + "\n")
    else:
        path = out / f"{stem}.csv"
        ebio.write_samples_csv(path, g.nodes, matrix)
    _emit({"written": str(path), "anchor": u, "n": args.n,
           "seed": args.seed, "law": args.law})
    return 0


def _subset_weights(args, g):
    subset = [v for v in args.subset.split(",") if v]
    for v in subset:
        g.index(v)
    return subset


def cmd_stdf(args) -> int:
    g, fam = _load_model(args)
    subset = _subset_weights(args, g)
    if args.weights:
        w = [float(x) for x in args.weights.split(",")]
        if len(w) != len(subset):
            raise ValueError("--weights length must match --subset")
    else:
        w = [1.0] * len(subset)
    rel_tol = args.tol if args.tol is not None else 1e-6
    p = path_sum_matrix(fam)
    value, err = stdf_hr_detailed(p, dict(zip(subset, w)), rel_tol=rel_tol, seed=args.seed)
    _emit({"query": {"subset": subset, "weights": w}, "value": value,
           "error_estimate": err, "seed": args.seed})
    return 0


def cmd_pareto_cdf(args) -> int:
    g, fam = _load_model(args)
    subset = _subset_weights(args, g)
    z = [float(x) for x in args.point.split(",")]
    if len(z) != len(subset):
        raise ValueError("--point length must match --subset")
    rel_tol = args.tol if args.tol is not None else 1e-6
    p = path_sum_matrix(fam)
    value = pareto_cdf(p, dict(zip(subset, z)), rel_tol=rel_tol, seed=args.seed)
    _emit({"query": {"subset": subset, "point": z}, "value": value,
           "error_estimate": 3.0 * rel_tol, "seed": args.seed})
    return 0


def cmd_ec(args) -> int:
    g, fam = _load_model(args)
    subset = _subset_weights(args, g)
    rel_tol = args.tol if args.tol is not None else 1e-6
    p = path_sum_matrix(fam)
    value = extremal_coefficient(p, subset, rel_tol=rel_tol, seed=args.seed)
    _emit({"query": {"subset": subset}, "value": value,
           "error_estimate": rel_tol * value, "seed": args.seed})
    return 0


def cmd_fit(args) -> int:
    nodes, edges = ebio.load_graph_json(args.graph)
    g = build_block_graph(nodes, edges)
    file_nodes, data = ebio.read_samples_csv(args.data)
    if tuple(sorted(file_nodes)) != g.nodes:
        raise ValueError("data columns do not match the graph's node set")
    order = [file_nodes.index(v) for v in g.nodes]
    raw = SampleSet(data[:, order], g.nodes, "raw")
    pareto = rank_transform(raw)
    ks = [int(x) for x in str(args.k).split(",") if x]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    edge_names = ["-".join(e) for e in g.edges_sorted()]
    results = []
    sweep_lines = ["k," + ",".join(edge_names) + ",objective"]
    for k in ks:
        spacings = {u: log_spacings(pareto, u, k) for u in g.nodes}
        res = fit_delta(g, spacings)
        vec = res.as_vector(g)
        results.append({
            "k": k,
            "delta2": {name: float(v) for name, v in zip(edge_names, vec)},
            "objective": res.objective,
            "diagnostics": res.diagnostics,
        })
        sweep_lines.append(
            f"{k}," + ",".join(ebio.fmt17(v) for v in vec) + f",{ebio.fmt17(res.objective)}")
        ebio.dump_params_json(out / f"delta2_k{k}.json", res.delta2_hat)
    (out / "ksweep.csv").write_text("\n".join(sweep_lines) + "\n")
    (out / "fit.json").write_text(json.dumps({"results": results}, indent=2) + "\n")
    _emit({"written": [str(out / "fit.json"), str(out / "ksweep.csv")],
           "ks": ks})
    return 0


def cmd_recover(args) -> int:
    nodes, edges = ebio.load_graph_json(args.graph)
    g = build_block_graph(nodes, edges)
    latent = _latent_list(args.latent)
    mask = ObservationMask.from_latent(g, latent)
    ok, offending = check_identifiable(g, mask)
    if not ok:
        raise NotIdentifiableError(offending)
    obs_nodes, values = ebio.read_matrix_csv(args.pathsums)
    if tuple(obs_nodes) != mask.observed:
        raise ValueError("path-sum matrix headers must list the observed nodes in sorted order")
    tol = args.tol if args.tol is not None else 1e-9
    p_full = recover_path_sums(g, PathSumMatrix(tuple(obs_nodes), values), mask, tol=tol)
    fam = recover_edge_params(p_full, g)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        matrix_path = out / "P_recovered.json"
        ebio.dump_matrix_json(matrix_path, p_full.nodes, p_full.values)
    else:
        matrix_path = out / "P_recovered.csv"
        ebio.write_matrix_csv(matrix_path, p_full.nodes, p_full.values)
    ebio.dump_params_json(out / "delta2_recovered.json", fam.edge_params)
    _emit({"written": [str(matrix_path), str(out / "delta2_recovered.json")],
           "latent": list(mask.latent)})
    return 0


def cmd_check_identifiable(args) -> int:
    nodes, edges = ebio.load_graph_json(args.graph)
    g = build_block_graph(nodes, edges)
    mask = ObservationMask.from_latent(g, _latent_list(args.latent))
    ok, offending = check_identifiable(g, mask)
    _emit({"identifiable": ok, "offending": list(offending)})
    return 0 if ok else 2


def build_parser() -> _Parser:
    parser = _Parser(prog="extreme-blocks",
                     description="Tail dependence on block graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[], help="validate a graph (and parameters)")
    _add_common(p, "graph", "params-opt")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("params", help="export P, mu, sigma, theta for an anchor")
    _add_common(p, "graph", "params", "anchor", "tol", "out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("simulate", help="sample the limiting field or conditioned Pareto vectors")
    _add_common(p, "graph", "params", "anchor", "n", "threads", "out", "format",
                seed_required=True)
    p.add_argument("--seed", type=int, required=True, help="random seed")
    p.add_argument("--law", choices=("field", "pareto"), default="field")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stdf", help="evaluate the stable tail dependence function")
    _add_common(p, "graph", "params", "subset", "seed", "tol", "jsonflag")
    p.add_argument("--weights", help="comma-separated weights (default: all ones)")
    p.set_defaults(func=cmd_stdf)

    p = sub.add_parser("pareto-cdf", help="evaluate the multivariate Pareto CDF")
    _add_common(p, "graph", "params", "subset", "seed", "tol", "jsonflag")
    p.add_argument("--point", required=True, help="comma-separated evaluation point")
    p.set_defaults(func=cmd_pareto_cdf)

    p = sub.add_parser("ec", help="extremal coefficient of a node subset")
    _add_common(p, "graph", "params", "subset", "seed", "tol", "jsonflag")
    p.set_defaults(func=cmd_ec)

    p = sub.add_parser("fit", help="moment-based estimation from a raw sample CSV")
    _add_common(p, "graph", "out", "jsonflag")
    p.add_argument("--data", required=True, help="samples CSV with node-id header")
    p.add_argument("--k", required=True, help="tail size k, or comma list for a sweep")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("recover", help="recover path sums and edge parameters with latent nodes")
    _add_common(p, "graph", "latent", "tol", "out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--pathsums", required=True, help="restricted path-sum matrix CSV")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("check-identifiable", help="latent-node identifiability check")
    _add_common(p, "graph", "latent", "jsonflag")
    p.set_defaults(func=cmd_check_identifiable)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage problems via exit
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ExtremeBlocksError as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        if hasattr(exc, "block"):
            diag["block"] = list(exc.block)
        if hasattr(exc, "clique"):
            diag["clique"] = list(exc.clique)
        if hasattr(exc, "offending"):
            diag["offending"] = list(exc.offending)
        print(json.dumps(diag))
        return exc.exit_code
    except (OSError, ValueError) as exc:  # unreadable or malformed inputs
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return USAGE_EXIT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
