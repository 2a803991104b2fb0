#!/usr/bin/env python3
"""Deficit against cone-distance proxy along a family ladder.

Usage: python3 scripts/rigidity_sweep.py [--family perturbed_cone] [--params 0 0.125 0.25 0.5 1]
                                         [--out sweep.csv] [--workers 1]
"""

import argparse
import sys

from talenti.rigidity_lab import HALF_LINE_FAMILIES, FEM_FAMILIES, SweepSpec, run_family_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="perturbed_cone", choices=HALF_LINE_FAMILIES + FEM_FAMILIES)
    ap.add_argument("--params", type=float, nargs="+", default=[0.0, 0.125, 0.25, 0.5, 1.0])
    ap.add_argument("--N", type=float, default=2.0)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None, help="write the sweep CSV here")
    args = ap.parse_args()

    spec = SweepSpec(args.family, tuple(args.params), N=args.N, p=args.p, timing=True, workers=args.workers)
    res = run_family_sweep(spec)
    print(res.to_csv(args.out), end="")
    print(f"verdict: {'PASS' if res.passed else 'FAIL'}  spearman={res.spearman}")
    for r in res.reasons:
        print(f"  - {r}")
    sys.exit(0 if res.passed else 1)


if __name__ == "__main__":
    main()
