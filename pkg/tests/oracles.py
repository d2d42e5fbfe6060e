"""Independent oracles and random generators shared by the test modules."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from pmlo import logic as L
from pmlo.pta import PTA, CAnd, CAtom, COr, CTrue
from pmlo.smp import SMP

PROPS = ("B", "C")


# ---------------------------------------------------------------------------
# formulas


def random_formula(rng: random.Random, depth: int, fo=(), so=(), props=PROPS) -> L.Formula:
    """Random probability-free formula of nesting depth at most ``depth``."""
    if depth == 0 or rng.random() < 0.25:
        kinds = []
        if fo:
            kinds += ["prop", "prop", "less", "succ"]
        if fo and so:
            kinds.append("mem")
        if not kinds:
            return L.Const(rng.random() < 0.5)
        k = rng.choice(kinds)
        if k == "prop":
            return L.Prop(rng.choice(props), rng.choice(fo))
        if k == "less":
            return L.Less(rng.choice(fo), rng.choice(fo))
        if k == "succ":
            return L.Succ(rng.choice(fo), rng.choice(fo))
        return L.Member(rng.choice(fo), rng.choice(so))
    k = rng.choice(["not", "or", "and", "ex", "ex", "exS", "all"])
    sub = lambda fo2=fo, so2=so: random_formula(rng, depth - 1, fo2, so2, props)  # noqa: E731
    if k == "not":
        return L.Not(sub())
    if k == "or":
        return L.Or(sub(), sub())
    if k == "and":
        return L.And(sub(), sub())
    if k in ("ex", "all"):
        v = rng.choice(["t", "u"])
        body = sub(tuple(sorted(set(fo) | {v})))
        return L.Exists(v, body) if k == "ex" else L.Forall(v, body)
    return L.ExistsSet("X", sub(fo, tuple(sorted(set(so) | {"X"}))))


def random_closed_formulas(rng, count, depth):
    out = []
    while len(out) < count:
        f = random_formula(rng, depth)
        if L.is_closed(f):
            out.append(f)
    return out


def random_stem(rng, max_len=4, props=PROPS):
    return [frozenset(p for p in props if rng.random() < 0.5) for _ in range(rng.randint(0, max_len))]


# ---------------------------------------------------------------------------
# semi-Markov processes


def random_smp(rng: random.Random, max_states=5, symbols=("a", "b"), props=("p", "q")) -> SMP:
    n = rng.randint(1, max_states)
    states = [f"s{i}" for i in range(n)]
    trans = []
    for s in states:
        en = [a for a in symbols if rng.random() < 0.6] or [rng.choice(symbols)]
        for a in en:
            k = rng.randint(1, min(2, n))
            targets = rng.sample(states, k)
            if k == 1:
                ps = [Fraction(1)]
            else:
                first = Fraction(rng.randint(1, 3), 4)
                ps = [first, 1 - first]
            trans += [(s, a, d, p) for d, p in zip(targets, ps)]
    labels = {s: [p for p in props if rng.random() < 0.45] for s in states}
    return SMP(symbols, states, "s0", trans, labels, props)


class DetAut:
    """Hand-written deterministic automaton on letters = frozensets of propositions.

    ``kind`` is "buchi" (accept iff states in ``good`` recur) or "cobuchi"
    (accept iff states in ``good`` are eventually never left).
    """

    def __init__(self, states, init, delta, kind, good):
        self.states, self.init, self.delta, self.kind, self.good = states, init, delta, kind, set(good)

    def complement(self):
        kind = "cobuchi" if self.kind == "buchi" else "buchi"
        return DetAut(self.states, self.init, self.delta, kind, set(self.states) - self.good)


def _reach(p):
    return DetAut([0, 1], 0, lambda d, l: 1 if d == 1 or p in l else 0, "buchi", {1})


def _gf(p):
    return DetAut([0, 1], 0, lambda d, l: 1 if p in l else 0, "buchi", {1})


def _fg(pred):
    return DetAut([0, 1], 0, lambda d, l: 1 if pred(l) else 0, "cobuchi", {1})


def _response(p, q):
    # 0: nothing pending; 1: a p waits for a strictly later q; 2: an obligation
    # was just discharged and a new one opened. Accept when 0 or 2 recur.
    def delta(d, l):
        if d and q in l:
            return 2 if p in l else 0
        if d:
            return 1
        return 1 if p in l else 0
    return DetAut([0, 1, 2], 0, delta, "buchi", {0, 2})


def _q_then_p(q, p):
    # eventually q immediately followed by p; states: 0 idle, 1 last letter had q, 2 seen
    def delta(d, l):
        if d == 2 or (d == 1 and p in l):
            return 2
        return 1 if q in l else 0
    return DetAut([0, 1, 2], 0, delta, "buchi", {2})


EXISTS_P = "exists t. p(t)"
ALWAYS_EVENTUALLY_P = "forall t. exists u. t < u & p(u)"
EVENTUALLY_ALWAYS_Q = "exists t. forall u. t < u -> q(u)"
RESPONSE = "forall t. p(t) -> (exists u. t < u & q(u))"
Q_THEN_P = "exists t. q(t) & (exists u. u = t + 1 & p(u))"
EVENTUALLY_ALWAYS_PQ = "exists t. forall u. t < u -> (p(u) | q(u))"

# (formula text, structure) where structure is a boolean combination of
# ("E>0" | "E=1", automaton) leaves: ("node", op, aut) / ("not", x) / ("and", x, y)
QUALITATIVE_SUITE = [
    (f"E P{{> 0}}[ {EXISTS_P} ]", ("node", ">0", _reach("p"))),
    (f"E P{{= 1}}[ {EXISTS_P} ]", ("node", "=1", _reach("p"))),
    (f"E P{{> 0}}[ {ALWAYS_EVENTUALLY_P} ]", ("node", ">0", _gf("p"))),
    (f"E P{{= 1}}[ {ALWAYS_EVENTUALLY_P} ]", ("node", "=1", _gf("p"))),
    (f"A P{{= 1}}[ exists t. forall u. t < u -> !p(u) ]", ("not", ("node", ">0", _gf("p")))),
    (f"E P{{> 0}}[ {EVENTUALLY_ALWAYS_Q} ]", ("node", ">0", _fg(lambda l: "q" in l))),
    (f"E P{{= 1}}[ {RESPONSE} ]", ("node", "=1", _response("p", "q"))),
    (f"A P{{> 0}}[ {Q_THEN_P} ]", ("not", ("node", "=1", _q_then_p("q", "p").complement()))),
    (f"E P{{> 0}}[ {EXISTS_P} ] & !E P{{= 1}}[ exists t. q(t) ]",
     ("and", ("node", ">0", _reach("p")), ("not", ("node", "=1", _reach("q"))))),
    (f"E P{{= 1}}[ {EVENTUALLY_ALWAYS_PQ} ]", ("node", "=1", _fg(lambda l: "p" in l or "q" in l))),
]


def _adversaries(m: SMP, aut: DetAut):
    """All Markovian adversaries of M x D restricted to the states they reach."""
    def enter(q, d):
        return (q, aut.delta(d, m.label(q)))

    start = enter(m.init, aut.init)

    def reach(choice):
        seen, todo = {start}, [start]
        while todo:
            st = todo.pop()
            if st not in choice:
                continue
            for d, _ in m.post(st[0], choice[st]):
                n = enter(d, st[1])
                if n not in seen:
                    seen.add(n)
                    todo.append(n)
        return seen

    def rec(choice):
        r = reach(choice)
        open_ = sorted(st for st in r if st not in choice)
        if not open_:
            yield dict(choice), r
            return
        st = open_[0]
        for a in m.enabled(st[0]):
            choice[st] = a
            yield from rec(choice)
            del choice[st]

    return start, enter, rec({})


def _leaf_value(m: SMP, op: str, aut: DetAut) -> bool:
    start, enter, advs = _adversaries(m, aut)
    for choice, r in advs:
        succ = {st: [enter(d, st[1]) for d, _ in m.post(st[0], choice[st])] for st in r}
        # bottom SCCs of the reachable induced chain
        comps = _sccs(sorted(r), succ)
        accepting, rejecting = False, False
        for c in comps:
            if any(n not in c for st in c for n in succ[st]):
                continue
            ds = {st[1] for st in c}
            ok = bool(ds & aut.good) if aut.kind == "buchi" else ds <= aut.good
            accepting |= ok
            rejecting |= not ok
        if op == ">0" and accepting:
            return True
        if op == "=1" and not rejecting:
            return True
    return False


def _sccs(nodes, succ):
    index, low, stack, on, out = {}, {}, [], set(), []
    counter = itertools.count()

    def strong(v):
        index[v] = low[v] = next(counter)
        stack.append(v)
        on.add(v)
        for w in succ[v]:
            if w not in index:
                strong(w)
                low[v] = min(low[v], low[w])
            elif w in on:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = set()
            while True:
                w = stack.pop()
                on.discard(w)
                comp.add(w)
                if w == v:
                    break
            out.append(comp)

    for v in nodes:
        if v not in index:
            strong(v)
    return out


def brute_force(m: SMP, structure) -> bool:
    tag = structure[0]
    if tag == "node":
        return _leaf_value(m, structure[1], structure[2])
    if tag == "not":
        return not brute_force(m, structure[1])
    return brute_force(m, structure[1]) and brute_force(m, structure[2])


# ---------------------------------------------------------------------------
# probabilistic timed automata


def random_guard(rng, clocks, cmax):
    def atom():
        x = rng.choice(clocks)
        rel = rng.choice(["<", "<=", "=", ">=", ">", "!="])
        if len(clocks) > 1 and rng.random() < 0.25:
            y = rng.choice([c for c in clocks if c != x])
            return CAtom(x, rel, rng.randint(-cmax, cmax), y)
        return CAtom(x, rel, rng.randint(0, cmax))

    r = rng.random()
    if r < 0.2:
        return CTrue()
    if r < 0.6:
        return atom()
    if r < 0.8:
        return CAnd(atom(), atom())
    return COr(atom(), atom())


def random_pta(rng: random.Random, max_clocks=3, cmax=3, locations=3, symbols=("a", "b")) -> PTA:
    clocks = [f"x{i}" for i in range(rng.randint(1, max_clocks))]
    locs = [f"l{i}" for i in range(locations)]
    trans = []
    for q in locs:
        for a in symbols:
            if rng.random() < 0.3:
                continue
            k = rng.randint(1, 2)
            ps = [Fraction(1)] if k == 1 else [Fraction(1, 2), Fraction(1, 2)]
            for p in ps:
                resets = [c for c in clocks if rng.random() < 0.4]
                trans.append((q, a, rng.choice(locs), random_guard(rng, clocks, cmax), resets, p))
    labels = {q: [p for p in ("p", "q") if rng.random() < 0.5] for q in locs}
    return PTA(clocks, symbols, locs, "l0", trans, labels, ("p", "q"))
