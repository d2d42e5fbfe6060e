"""Replicated-service case study: replica, manager and client PTAs plus the four properties.

The component automata are reconstructions from the prose description of
the system (the original diagrams are not available). Every location carries
``good`` so that the composed system labels all its locations except trap.

Protocol of one round, with answer window ``[lo, hi]`` and timeout ``T``:

* the client sends ``req_C`` (resetting ``y``); the primary resets its clock
  and becomes faulty with probability ``p``;
* a healthy primary forwards ``req_P`` immediately (``x = 0``); each backup
  resets its clock and becomes faulty with probability ``p``;
* a healthy replica answers ``ans_i`` when its clock is in ``[lo, hi]``; a
  faulty one may answer ``ans_i`` or the wrong ``answ_i`` at any time, once;
* the client accepts answers while ``y <= T``; with answers missing and
  ``y > T`` it broadcasts ``req_PreC`` and waits for a fresh set of answers
  (every replica resets its clock, healthy ones may fail again);
* once all answers are in, the manager announces the primary with ``prim_k``
  (the next index after a timeout); faulty replicas restart and everyone
  takes the announced role.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import logic as L
from .pta import PTA, CAnd, CAtom, CTrue, pta_product

HEADER = "# Reconstructed from the prose description of the replicated service; original figures unavailable.\n"


@dataclass(frozen=True)
class CaseStudyConfig:
    n: int = 3
    lo: int = 1
    hi: int = 2
    timeout: int = 2
    fault: Fraction = Fraction(1, 10)


def _window(clock, lo, hi):
    return CAnd(CAtom(clock, ">=", lo), CAtom(clock, "<=", hi))


def _alphabet(n):
    return ["req_C", "req_P", "req_PreC"] + [f"prim_{k}" for k in range(n)]


def replica(i: int, cfg: CaseStudyConfig) -> PTA:
    n, x, p = cfg.n, f"x{i}", Fraction(cfg.fault)
    q = lambda s: f"r{i}{s}"  # noqa: E731
    locs = [q(s) for s in ("P", "B", "Pf", "W", "D", "F")]
    tr = [
        (q("P"), "req_C", q("Pf"), CTrue(), [x], 1 - p),
        (q("P"), "req_C", q("F"), CTrue(), [x], p),
        (q("B"), "req_C", q("B"), CTrue(), [], 1),
        (q("Pf"), "req_P", q("W"), CAtom(x, "=", 0), [], 1),
        (q("B"), "req_P", q("W"), CTrue(), [x], 1 - p),
        (q("B"), "req_P", q("F"), CTrue(), [x], p),
        (q("W"), f"ans_{i}", q("D"), _window(x, cfg.lo, cfg.hi), [], 1),
        (q("F"), f"ans_{i}", q("F"), CTrue(), [], 1),
        (q("F"), f"answ_{i}", q("F"), CTrue(), [], 1),
        (q("F"), "req_PreC", q("F"), CTrue(), [x], 1),
    ]
    for s in ("Pf", "W", "D", "B"):
        tr.append((q(s), "req_PreC", q("W"), CTrue(), [x], 1 - p))
        tr.append((q(s), "req_PreC", q("F"), CTrue(), [x], p))
    for k in range(n):
        for s in ("D", "F"):
            tr.append((q(s), f"prim_{k}", q("P") if k == i else q("B"), CTrue(), [x], 1))
    labels = {loc: ["good"] for loc in locs}
    labels[q("F")] = ["good", f"faulty_{i}"]
    syms = _alphabet(n) + [f"ans_{i}", f"answ_{i}"]
    return PTA([x], syms, locs, q("P") if i == 0 else q("B"), [t for t in tr if t[5]], labels)


def manager(cfg: CaseStudyConfig) -> PTA:
    n = cfg.n
    locs = [f"m{k}" for k in range(n)] + [f"e{k}" for k in range(n)]
    tr = []
    for k in range(n):
        tr.append((f"m{k}", f"prim_{k}", f"m{k}", CTrue(), [], 1))
        tr.append((f"m{k}", "req_PreC", f"e{k}", CTrue(), [], 1))
        nxt = (k + 1) % n
        tr.append((f"e{k}", f"prim_{nxt}", f"m{nxt}", CTrue(), [], 1))
    return PTA([], ["req_PreC"] + [f"prim_{k}" for k in range(n)], locs, "m0", tr,
               {loc: ["good"] for loc in locs})


def client(cfg: CaseStudyConfig) -> PTA:
    """Answer vectors over {?, +, -}; ``a``/``b`` prefix first and second phase, ``f`` finished."""
    n, T = cfg.n, cfg.timeout
    vectors = ["".join(v) for v in itertools.product("?+-", repeat=n)]
    full = [v for v in vectors if "?" not in v]
    locs = ["c0"] + [f"a{v}" for v in vectors if "?" in v] + [f"b{v}" for v in vectors if "?" in v] + \
        [f"f{v}" for v in full]
    start = "?" * n
    tr = [("c0", "req_C", f"a{start}", CTrue(), ["y"], 1)]
    for phase in "ab":
        for v in vectors:
            if "?" not in v:
                continue
            for i in range(n):
                if v[i] != "?":
                    continue
                for sym, mark in ((f"ans_{i}", "+"), (f"answ_{i}", "-")):
                    w = v[:i] + mark + v[i + 1:]
                    dst = f"f{w}" if "?" not in w else f"{phase}{w}"
                    tr.append((f"{phase}{v}", sym, dst, CAtom("y", "<=", T), [], 1))
            if phase == "a":
                tr.append((f"a{v}", "req_PreC", f"b{start}", CAtom("y", ">", T), ["y"], 1))
    for v in full:
        for k in range(n):
            tr.append((f"f{v}", f"prim_{k}", "c0", CTrue(), [], 1))
    labels = {loc: ["good"] for loc in locs}
    for v in full:
        labels[f"f{v}"] = ["good", "finish"] + (["correct"] if 2 * v.count("+") > n else [])
    syms = ["req_C", "req_PreC"] + [f"prim_{k}" for k in range(n)] + \
        [s for i in range(n) for s in (f"ans_{i}", f"answ_{i}")]
    return PTA(["y"], syms, locs, "c0", tr, labels, ["finish", "correct"])


def components(cfg: CaseStudyConfig) -> dict:
    out = {"client": client(cfg), "manager": manager(cfg)}
    for i in range(cfg.n):
        out[f"replica{i}"] = replica(i, cfg)
    return out


def system(cfg: CaseStudyConfig = CaseStudyConfig()) -> PTA:
    """Reachable part of client x manager x replica_0 x ... x replica_{n-1}."""
    comps = components(cfg)
    s = pta_product(comps["client"], comps["manager"], reachable_only=True)
    for i in range(cfg.n):
        s = pta_product(s, comps[f"replica{i}"], reachable_only=True)
    return s


# ---------------------------------------------------------------------------
# properties


def _non_faulty(n: int, t: str) -> str:
    groups = [I for k in range(n + 1) for I in itertools.combinations(range(n), k) if 2 * k > n]
    return "(" + " | ".join("(" + " & ".join(f"!faulty_{i}({t})" for i in I) + ")" for I in groups) + ")"


def properties(cfg: CaseStudyConfig = CaseStudyConfig()) -> dict:
    """The four properties as formula text, keyed by a short name."""
    n = cfg.n
    nf = _non_faulty(n, "t")
    non_trap = "(forall u. good(u))"
    healthy_fast = " & ".join(f"(!faulty_{i}(t) -> x{i}@t <= {cfg.hi})" for i in range(n))
    all_faulty = " & ".join(f"faulty_{i}(t)" for i in range(n))
    return {
        "correct_when_majority_healthy":
            f"forall t. A P{{= 1}}[ (finish(t) -> correct(t)) | {nf} & good(t) ]",
        "healthy_answers_in_time":
            f"A P{{= 1}}[ {non_trap} -> (forall t. correct(t) -> ({healthy_fast})) ]",
        "all_may_fail":
            f"E P{{> 0}}[ exists t. {all_faulty} ]",
        "recovery_possible":
            f"A P{{> 0}}[ {non_trap} -> (forall t. !{nf} -> (exists v. t < v & {_non_faulty(n, 'v')})) ]",
    }


def parsed_properties(cfg: CaseStudyConfig = CaseStudyConfig()) -> dict:
    return {k: L.parse_formula(v) for k, v in properties(cfg).items()}
