#!/usr/bin/env python3
"""Worst-case timing study: standard-normal scores make many near-tied optima.

Solves one instance per (p, k) cell and prints q / wall time, like the
upper-bound table in the write-up, at sizes a laptop handles.
"""

import argparse

import numpy as np

from jointdag.graphs import HyperParams, UnitNetwork
from jointdag.ilp import build_known_network, build_unknown_network
from jointdag.simulate import worst_case_scores
from jointdag.solver import SolveOptions, solve


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", default="3,4", help="comma list of vertex counts")
    ap.add_argument("--k", default="2,4", help="comma list of unit counts")
    ap.add_argument("--dmax", type=int, default=2)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--eta", type=float, default=0.5)
    ap.add_argument("--mode", choices=["known", "unknown"], default="known")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--time-limit", type=float, default=600.0)
    args = ap.parse_args()

    print(f"mode={args.mode} lam={args.lam} dmax={args.dmax} seed={args.seed}")
    print(f"{'p':>4} {'k':>4} {'q':>8} {'status':>10} {'nodes':>7} {'cuts':>6} {'seconds':>9}")
    for p in (int(t) for t in args.p.split(",")):
        for k in (int(t) for t in args.k.split(",")):
            rng = np.random.default_rng(args.seed)
            table = worst_case_scores(p, k, args.dmax, rng)
            hp = HyperParams(lam=args.lam, eta=args.eta, d_max=args.dmax)
            if args.mode == "known":
                inst = build_known_network(table, UnitNetwork.complete(k), hp)
            else:
                inst = build_unknown_network(table, hp)
            res = solve(inst, SolveOptions(time_limit=args.time_limit))
            print(
                f"{p:>4} {k:>4} {inst.q:>8,} {res.status:>10} "
                f"{res.nodes:>7} {res.cuts:>6} {res.wall_time:>9.2f}"
            )


if __name__ == "__main__":
    main()
