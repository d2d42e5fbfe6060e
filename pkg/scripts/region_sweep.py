#!/usr/bin/env python3
"""Region-graph size of the replicated service across instance parameters."""

from __future__ import annotations

import argparse
import itertools
import time

from pmlo import casestudy
from pmlo.regions import build_extended_region_graph


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, nargs="+", default=[2, 3])
    p.add_argument("--timeout", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--semantics", nargs="+", default=["classical", "urgent"])
    args = p.parse_args()
    print(f"{'n':>2} {'T':>2} {'semantics':10s} {'locations':>9} {'regions':>8} {'c_max':>5} {'s':>6}")
    for n, T, sem in itertools.product(args.n, args.timeout, args.semantics):
        cfg = casestudy.CaseStudyConfig(n=n, timeout=T)
        t0 = time.perf_counter()
        s = casestudy.system(cfg)
        g = build_extended_region_graph(s, None, sem)
        print(f"{n:>2} {T:>2} {sem:10s} {len(s.locations):>9} {len(g.states):>8} {g.c_max:>5} "
              f"{time.perf_counter() - t0:>6.1f}")


if __name__ == "__main__":
    main()
