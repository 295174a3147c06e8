#!/usr/bin/env python3
"""Print the binary-state-vector length q over a (p, k) grid, both modes."""

import argparse

from jointdag.ilp import count_variables


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", default="4,8,12", help="comma list of vertex counts")
    ap.add_argument("--k", default="4,8,12", help="comma list of unit counts")
    ap.add_argument("--dmax", type=int, default=2)
    args = ap.parse_args()
    ps = [int(t) for t in args.p.split(",")]
    ks = [int(t) for t in args.k.split(",")]
    for mode, label in (("known", "complete network"), ("unknown", "network estimated")):
        print(f"\nq ({label}), d_max={args.dmax}")
        print("k\\p " + "".join(f"{p:>10}" for p in ps))
        for k in ks:
            row = "".join(f"{count_variables(p, k, args.dmax, mode):>10,}" for p in ps)
            print(f"{k:<4}" + row)


if __name__ == "__main__":
    main()
