#!/usr/bin/env python3
"""Check the four replicated-service properties and print one row per property.

    python3 scripts/run_case_study.py --n 3 --json results.json
"""

from __future__ import annotations

import argparse
import json
import resource
import time
from dataclasses import asdict, dataclass
from fractions import Fraction

from pmlo import casestudy
from pmlo.regions import check_pta


@dataclass
class Row:
    name: str
    verdict: bool
    region_states: int
    seconds: float


def run(cfg: casestudy.CaseStudyConfig, semantics: str) -> list[Row]:
    system = casestudy.system(cfg)
    print(f"n={cfg.n} window=[{cfg.lo},{cfg.hi}] timeout={cfg.timeout} fault={cfg.fault} "
          f"locations={len(system.locations)} semantics={semantics}")
    rows = []
    for name, f in casestudy.parsed_properties(cfg).items():
        t0 = time.perf_counter()
        r = check_pta(system, f, semantics)
        rows.append(Row(name, r.verdict, r.region_states, round(time.perf_counter() - t0, 2)))
        print(f"  {name:32s} {'true' if r.verdict else 'false':6s} regions={r.region_states:<8d} "
              f"{rows[-1].seconds:.1f}s")
    return rows


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--lo", type=int, default=1)
    p.add_argument("--hi", type=int, default=2)
    p.add_argument("--timeout", type=int, default=2)
    p.add_argument("--fault", default="1/10")
    p.add_argument("--semantics", default="classical", choices=("classical", "urgent"))
    p.add_argument("--json", help="write the rows to this file")
    args = p.parse_args()
    cfg = casestudy.CaseStudyConfig(args.n, args.lo, args.hi, args.timeout, Fraction(args.fault))
    rows = run(cfg, args.semantics)
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
    print(f"peak memory {peak:.0f} MB")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"config": {k: str(v) for k, v in asdict(cfg).items()},
                       "rows": [asdict(r) for r in rows], "peak_mb": peak}, fh, indent=2)


if __name__ == "__main__":
    main()
