"""Command-line pipeline: simulate -> solve / grid -> eval.

Exit codes: 0 success, 2 bad flags or malformed input, 3 I/O failure,
4 solve finished without a proved optimum (suppress with --allow-partial).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .evaluate import (
    DEFAULT_GRID,
    confusion_dags,
    confusion_network,
    grid_search,
    mcc,
)
from .fileio import (
    Solution,
    load_estimate,
    load_scores,
    load_truth,
    make_manifest,
    save_estimate,
    save_grid_csv,
    save_manifest,
    save_metrics_csv,
    save_diagnostics_csv,
    save_scores,
    save_truth,
    to_dot,
)
from .graphs import HyperParams, UnitNetwork, shd
from .ilp import build_known_network, build_unknown_network
from .scores import LocalScoreTable
from .simulate import SimConfig, diagnostics, sample_dags_mcmc, sample_network, synth_scores
from .solver import SolveOptions, solve, solve_topn


class UsageError(Exception):
    pass


def _grid_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}: {exc}") from None


def _load_network_file(path, k: int) -> UnitNetwork:
    doc = json.loads(Path(path).read_text())
    if doc.get("network") is None:
        raise UsageError(f"{path} carries no unit network")
    if int(doc.get("k", k)) != k:
        raise UsageError(f"network file is for k={doc.get('k')}, scores have k={k}")
    return UnitNetwork.from_pairs(k, [tuple(e) for e in doc["network"]])


def _resolve_mode(network_flag: str, k: int):
    """Returns (mode, network) from --network complete|unknown|<file>."""
    if network_flag == "unknown":
        return "unknown", None
    if network_flag == "complete":
        return "known", UnitNetwork.complete(k)
    return "known", _load_network_file(network_flag, k)


def _restrict_dmax(table: LocalScoreTable, d_max: int) -> LocalScoreTable:
    if d_max == table.d_max:
        return table
    if d_max > table.d_max:
        raise UsageError(f"--dmax {d_max} exceeds the table's cap {table.d_max}")
    entries = {}
    for unit in range(1, table.k + 1):
        for child in range(1, table.p + 1):
            entries[(unit, child)] = {
                pi: s for pi, s in table.parent_sets(unit, child).items() if len(pi) <= d_max
            }
    return LocalScoreTable(table.k, table.p, d_max, entries)


def cmd_simulate(args) -> int:
    cfg = SimConfig(
        p=args.p,
        k=args.k,
        d_max=args.dmax,
        lambda_true=args.lambda_true,
        eta_true=args.eta_true,
        alpha=args.alpha,
        iterations=args.iterations,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    if args.network is None:
        network = sample_network(cfg.k, cfg.eta_true, rng)
    elif args.network == "complete":
        network = UnitNetwork.complete(cfg.k)
    else:
        network = _load_network_file(args.network, cfg.k)
    gs, trace = sample_dags_mcmc(cfg, network, rng)
    table = synth_scores(gs, cfg, rng)
    manifest = make_manifest(
        "simulate",
        {
            "p": cfg.p,
            "k": cfg.k,
            "d_max": cfg.d_max,
            "lambda_true": cfg.lambda_true,
            "eta_true": cfg.eta_true,
            "alpha": cfg.alpha,
            "iterations": cfg.resolved_iterations,
            "network": args.network,
        },
        cfg.seed,
    )
    save_truth(out / "truth.json", gs, network, manifest.digest)
    save_scores(table, out / "scores.jds", manifest.digest)
    save_diagnostics_csv(out / "diagnostics.csv", diagnostics(trace), manifest.digest)
    save_manifest(manifest, out / "manifest.json")
    print(f"simulate: wrote truth.json, scores.jds, diagnostics.csv to {out}")
    return 0


def cmd_solve(args) -> int:
    table = load_scores(args.scores)
    if args.dmax is not None:
        table = _restrict_dmax(table, args.dmax)
    mode, network = _resolve_mode(args.network, table.k)
    hp = HyperParams(lam=args.lam, eta=args.eta, d_max=table.d_max)
    inst = (
        build_known_network(table, network, hp)
        if mode == "known"
        else build_unknown_network(table, hp)
    )
    opts = SolveOptions(
        node_limit=args.node_limit,
        time_limit=args.time_limit,
        heuristic=not args.no_heuristic,
        seed=args.seed,
        collect_log=True,
    )
    results = solve_topn(inst, args.topn, opts) if args.topn > 1 else [solve(inst, opts)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = make_manifest(
        "solve",
        {
            "lambda": args.lam,
            "eta": args.eta,
            "network": args.network,
            "dmax": table.d_max,
            "topn": args.topn,
            "time_limit": args.time_limit,
            "node_limit": args.node_limit,
            "heuristic": not args.no_heuristic,
        },
        args.seed,
        inputs={"scores": args.scores},
    )
    solutions = [
        Solution(r.dags, r.network, r.objective, r.dual_bound, r.status)
        for r in results
        if r.dags is not None
    ]
    statuses = [r.status for r in results] or ["infeasible"]
    with open(out / "solve.log", "w") as fh:
        fh.write(json.dumps({"event": "manifest", "digest": manifest.digest}) + "\n")
        for idx, r in enumerate(results):
            for ev in r.events:
                fh.write(json.dumps({"solution": idx, **ev}) + "\n")
    if not solutions:
        print(f"solve: no feasible solution ({statuses[0]})", file=sys.stderr)
        return 0 if args.allow_partial else 4
    save_estimate(out / "estimate.json", table.p, table.k, solutions, manifest.digest)
    (out / "estimate.dot").write_text(
        to_dot(solutions[0].dags, solutions[0].network, manifest.digest)
    )
    save_manifest(manifest, out / "manifest.json")
    best = results[0]
    print(
        f"solve: {best.status}, objective {best.objective:.6f}, bound {best.dual_bound:.6f}, "
        f"{best.nodes} nodes, {best.cuts} cuts, {best.wall_time:.2f}s"
    )
    if any(s != "optimal" for s in statuses) and not args.allow_partial:
        return 4
    return 0


def cmd_eval(args) -> int:
    est = load_estimate(args.estimate)
    truth_gs, truth_net = load_truth(args.truth)
    sol = est.best
    c = confusion_dags(sol.dags, truth_gs)
    metrics: dict[str, object] = {"mcc_dags": mcc(c)}
    if sol.network is not None and truth_net is not None:
        metrics["mcc_network"] = mcc(confusion_network(sol.network, truth_net))
    else:
        metrics["mcc_network"] = None
    per_unit = [shd(sol.dags.dag(u), truth_gs.dag(u)) for u in range(1, truth_gs.k + 1)]
    metrics["shd_total"] = sum(per_unit)
    for u, v in enumerate(per_unit, start=1):
        metrics[f"shd_unit_{u}"] = v
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = make_manifest(
        "eval", {}, None, inputs={"estimate": args.estimate, "truth": args.truth}
    )
    save_metrics_csv(out / "metrics.csv", metrics, manifest.digest)
    save_manifest(manifest, out / "manifest.json")
    print(f"eval: mcc_dags {metrics['mcc_dags']:.4f}, shd_total {metrics['shd_total']}")
    return 0


def cmd_grid(args) -> int:
    table = load_scores(args.scores)
    mode, network = _resolve_mode(args.network, table.k)
    opts = SolveOptions(time_limit=args.time_limit, seed=args.seed)
    best_params, best, cells = grid_search(
        table,
        lambda_grid=_grid_list(args.lambda_grid),
        eta_grid=_grid_list(args.eta_grid),
        mode=mode,
        network=network,
        opts=opts,
        jobs=args.jobs,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = make_manifest(
        "grid",
        {
            "lambda_grid": args.lambda_grid,
            "eta_grid": args.eta_grid,
            "network": args.network,
            "jobs": args.jobs,
        },
        args.seed,
        inputs={"scores": args.scores},
    )
    save_grid_csv(out / "grid.csv", cells, manifest.digest)
    save_estimate(
        out / "estimate.json",
        table.p,
        table.k,
        [Solution(best.dags, best.network, best.objective, best.dual_bound, best.status)],
        manifest.digest,
    )
    save_manifest(manifest, out / "manifest.json")
    lam, eta = best_params
    print(f"grid: best lambda {lam}" + (f", eta {eta}" if eta is not None else ""))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jdag", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw ground truth and synthetic scores")
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--k", type=int, required=True)
    sim.add_argument("--dmax", type=int, default=2)
    sim.add_argument("--lambda-true", dest="lambda_true", type=float, default=0.0)
    sim.add_argument("--eta-true", dest="eta_true", type=float, default=0.0)
    sim.add_argument("--alpha", type=float, default=15.0)
    sim.add_argument("--iterations", type=int, default=None)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--network", default=None, help="'complete', or a JSON file; default: sample from the prior")
    sim.add_argument("--out", default=".")
    sim.set_defaults(func=cmd_simulate)

    sol = sub.add_parser("solve", help="exact MAP estimation from a score table")
    sol.add_argument("scores")
    sol.add_argument("--lambda", dest="lam", type=float, default=0.0, help="coupling penalty (accepts 'inf')")
    sol.add_argument("--eta", type=float, default=0.0, help="network density reward (accepts 'inf')")
    sol.add_argument("--network", default="complete", help="'complete', 'unknown', or a JSON file")
    sol.add_argument("--dmax", type=int, default=None)
    sol.add_argument("--topn", type=int, default=1)
    sol.add_argument("--time-limit", type=float, default=None)
    sol.add_argument("--node-limit", type=int, default=None)
    sol.add_argument("--seed", type=int, default=0)
    sol.add_argument("--no-heuristic", action="store_true")
    sol.add_argument("--allow-partial", action="store_true")
    sol.add_argument("--out", default=".")
    sol.set_defaults(func=cmd_solve)

    ev = sub.add_parser("eval", help="score an estimate against the ground truth")
    ev.add_argument("estimate")
    ev.add_argument("truth")
    ev.add_argument("--out", default=".")
    ev.set_defaults(func=cmd_eval)

    gr = sub.add_parser("grid", help="AIC grid search over hyper-parameters")
    gr.add_argument("scores")
    gr.add_argument("--lambda-grid", default=",".join(str(v) for v in DEFAULT_GRID))
    gr.add_argument("--eta-grid", default=",".join(str(v) for v in DEFAULT_GRID))
    gr.add_argument("--network", default="complete", help="'complete', 'unknown', or a JSON file")
    gr.add_argument("--jobs", type=int, default=1)
    gr.add_argument("--time-limit", type=float, default=None)
    gr.add_argument("--seed", type=int, default=0)
    gr.add_argument("--out", default=".")
    gr.set_defaults(func=cmd_grid)
    return ap


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
