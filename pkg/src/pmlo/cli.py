"""Command-line front end.

Exit status: 0 property holds (or command succeeded), 1 property fails,
2 usage / parse / model error, 3 resource cap reached.
"""

from __future__ import annotations

import argparse
import resource
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import automata as A
from . import casestudy, formats, logic as L, markov, qualitative, regions
from .errors import PmloError, StateBlowup
from .pta import SEMANTICS, pta_product, simulate

EXIT_HOLDS, EXIT_FAILS, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


def _frac(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _peak_mb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024


def _print_witness(w: dict, out) -> None:
    if not w:
        return
    print("witness:", file=out)
    for k in sorted(w):
        v = w[k]
        if isinstance(v, dict):
            print(f"  {k}:", file=out)
            for a in sorted(v):
                print(f"    {a} -> {v[a]}", file=out)
        else:
            print(f"  {k}: {v}", file=out)


def _check(args, out) -> int:
    f = formats.read_formula(args.formula)
    t0 = time.perf_counter()
    probs = []
    if args.model:
        m = formats.read_smp(args.model)
        kind = L.classify(f)
        stats = {"states": len(m.states), "transitions": len(m.transitions)}
        if kind == L.FLAT_QUANTITATIVE:
            r = markov.check_flat_quantitative(m, f)
            verdict, witness, probs = r.verdict, None, r.probabilities
        else:
            r = qualitative.check_qualitative(m, f, cap=args.cap)
            verdict, witness = r.verdict, r.witness
        semantics = "-"
        stats.update({k: v for k, v in r.stats.items() if k not in ("model_states", "model_transitions")})
    else:
        t = formats.read_pta(args.pta)
        r = regions.check_pta(t, f, args.semantics, cap=args.region_cap, subset_cap=args.cap)
        verdict, witness, probs, semantics = r.verdict, r.witness, r.probabilities, args.semantics
        stats = {"locations": len(t.locations), "transitions": len(t.transitions),
                 "region_states": r.region_states, "c_max": r.c_max, **r.stats}
    elapsed = time.perf_counter() - t0
    print(f"verdict: {'holds' if verdict else 'fails'}", file=out)
    print(f"formula: {L.to_text(f)}", file=out)
    print(f"semantics: {semantics}", file=out)
    for k in sorted(stats):
        print(f"{k}: {stats[k]}", file=out)
    for text, m1, m2 in probs:
        line = f"probability: {text} = {_frac(m1)}"
        if m2 != 1:
            line += f" / {_frac(m2)}"
        print(line, file=out)
    _print_witness(witness, out)
    print(f"time_s: {elapsed:.3f}", file=out)
    print(f"peak_memory_mb: {_peak_mb():.1f}", file=out)
    return EXIT_HOLDS if verdict else EXIT_FAILS


def _region_graph(args, out) -> int:
    t = formats.read_pta(args.pta)
    f = formats.read_formula(args.formula) if args.formula else None
    g = regions.build_extended_region_graph(t, f, args.semantics, cap=args.region_cap)
    smp_path, side = formats.write_region_graph(g, args.output)
    print(f"region_states: {len(g.states)}", file=out)
    print(f"c_max: {g.c_max}", file=out)
    print(f"wrote: {smp_path} {side}", file=out)
    return EXIT_HOLDS


def _product(args, out) -> int:
    ts = [formats.read_pta(p) for p in args.inputs]
    t = ts[0]
    for other in ts[1:]:
        t = pta_product(t, other, labels=args.labels, reachable_only=args.reachable)
    formats.write_file(args.output, formats.write_pta(t))
    print(f"locations: {len(t.locations)}", file=out)
    print(f"transitions: {len(t.transitions)}", file=out)
    print(f"wrote: {args.output}", file=out)
    return EXIT_HOLDS


def _simulate(args, out) -> int:
    t = formats.read_pta(args.pta)
    run = simulate(t, args.semantics, args.steps, args.seed)
    for i, a in enumerate(run.symbols):
        c = run.configs[i]
        vals = " ".join(f"{x}={_frac(v)}" for x, v in c.clocks)
        print(f"{i}: {c.loc} [{vals}] delay={_frac(run.delays[i])} {a} p={_frac(run.probs[i])}", file=out)
    last = run.configs[-1]
    vals = " ".join(f"{x}={_frac(v)}" for x, v in last.clocks)
    print(f"{len(run.symbols)}: {last.loc} [{vals}]", file=out)
    print(f"measure: {_frac(run.measure())}", file=out)
    return EXIT_HOLDS


def _automaton(args, out) -> int:
    f = formats.read_formula(args.formula)
    a = A.compile_wmlo(f, cap=args.cap)
    text = formats.write_automaton(a)
    if args.output:
        formats.write_file(args.output, text)
        print(f"states: {a.num_states}", file=out)
        print(f"wrote: {args.output}", file=out)
    else:
        out.write(text)
    return EXIT_HOLDS


def _case_study(args, out) -> int:
    cfg = casestudy.CaseStudyConfig(args.n, args.lo, args.hi, args.timeout, Fraction(args.fault))
    if args.write:
        d = Path(args.write)
        d.mkdir(parents=True, exist_ok=True)
        for name, t in casestudy.components(cfg).items():
            formats.write_file(d / f"{name}.pta", casestudy.HEADER + formats.write_pta(t))
        for name, text in casestudy.properties(cfg).items():
            formats.write_file(d / f"{name}.pmlo", text + "\n")
        print(f"wrote fixtures to {d}", file=out)
    if not args.check:
        return EXIT_HOLDS
    s = casestudy.system(cfg)
    print(f"system locations: {len(s.locations)}", file=out)
    ok = True
    for name, f in casestudy.parsed_properties(cfg).items():
        t0 = time.perf_counter()
        r = regions.check_pta(s, f, args.semantics, cap=args.region_cap, subset_cap=args.cap)
        ok &= r.verdict
        print(f"{name}: {'holds' if r.verdict else 'fails'} region_states={r.region_states} "
              f"time_s={time.perf_counter() - t0:.1f}", file=out)
    print(f"peak_memory_mb: {_peak_mb():.1f}", file=out)
    return EXIT_HOLDS if ok else EXIT_FAILS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pmlo", description="Model checker for probabilistic monadic logic of order.")
    sub = p.add_subparsers(dest="command", required=True)

    def caps(sp):
        sp.add_argument("--cap", type=int, default=qualitative.DEFAULT_SUBSET_CAP,
                        help="subset-construction budget")
        sp.add_argument("--region-cap", type=int, default=regions.DEFAULT_REGION_CAP,
                        help="maximum number of region states")

    c = sub.add_parser("check", help="check a formula on a .smp or .pta model")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help=".smp file")
    src.add_argument("--pta", help=".pta file")
    c.add_argument("--formula", required=True, help=".pmlo file")
    c.add_argument("--semantics", choices=SEMANTICS, default="classical")
    caps(c)
    c.set_defaults(func=_check)

    r = sub.add_parser("region-graph", help="export the extended region graph")
    r.add_argument("--pta", required=True)
    r.add_argument("--formula")
    r.add_argument("--semantics", choices=SEMANTICS, default="classical")
    r.add_argument("-o", "--output", required=True)
    caps(r)
    r.set_defaults(func=_region_graph)

    pr = sub.add_parser("product", help="synchronised product of PTAs")
    pr.add_argument("inputs", nargs="+")
    pr.add_argument("-o", "--output", required=True)
    pr.add_argument("--labels", choices=("union", "intersection"), default="union")
    pr.add_argument("--reachable", action="store_true", help="keep only reachable location tuples")
    pr.set_defaults(func=_product)

    s = sub.add_parser("simulate", help="sample a concrete run")
    s.add_argument("--pta", required=True)
    s.add_argument("--semantics", choices=SEMANTICS, default="urgent")
    s.add_argument("--steps", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_simulate)

    a = sub.add_parser("automaton", help="debug export of the compiled automaton")
    a.add_argument("--formula", required=True)
    a.add_argument("-o", "--output")
    a.add_argument("--cap", type=int, default=A.DEFAULT_STATE_CAP)
    a.set_defaults(func=_automaton)

    cs = sub.add_parser("case-study", help="replicated-service fixtures and properties")
    cs.add_argument("--n", type=int, default=3)
    cs.add_argument("--lo", type=int, default=1)
    cs.add_argument("--hi", type=int, default=2)
    cs.add_argument("--timeout", type=int, default=2)
    cs.add_argument("--fault", default="1/10")
    cs.add_argument("--semantics", choices=SEMANTICS, default="classical")
    cs.add_argument("--write", metavar="DIR", help="write component .pta and property .pmlo files")
    cs.add_argument("--check", action="store_true", help="check the four properties")
    caps(cs)
    cs.set_defaults(func=_case_study)
    return p


def run_cli(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_HOLDS
    try:
        return args.func(args, out)
    except StateBlowup as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAP
    except PmloError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
