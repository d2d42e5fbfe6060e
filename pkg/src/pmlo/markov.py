"""Exact analysis of finite Markov chains and flat quantitative checking.

Chains are given as ``{state: [(successor, probability), ...]}`` or as an SMP
that is a Markov process. All arithmetic is on :class:`fractions.Fraction`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping

from . import acceptance as accmod
from . import automata as A
from . import graphs
from . import logic as L
from .errors import ModelError, ScopeError, UnsupportedFormula
from .smp import SMP


def chain_of(c) -> dict:
    """Normalise an SMP (Markov process) or an adjacency dict to ``{s: [(t, p)]}``."""
    if isinstance(c, SMP):
        out = {}
        for q in c.states:
            en = c.enabled(q)
            if len(en) > 1:
                raise ModelError(f"state {q!r} enables symbols {', '.join(en)}", code="NOT_MARKOV")
            out[q] = list(c.post(q, en[0])) if en else []
        return out
    return {s: list(v) for s, v in c.items()}


def chain_under(m: SMP, adversary: Mapping) -> dict:
    """Markov chain induced by a Markovian adversary."""
    out = {}
    for q in m.states:
        a = adversary.get(q)
        if a is None:
            en = m.enabled(q)
            a = en[0] if len(en) == 1 else None
        out[q] = list(m.post(q, a)) if a is not None else []
    return out


def bscc_decompose(c) -> list[frozenset]:
    """Bottom strongly connected components (states without successors count as BSCCs)."""
    ch = chain_of(c)
    comps = graphs.sccs(list(ch), lambda s: (t for t, _ in ch[s]))
    out = []
    for comp in comps:
        cset = frozenset(comp)
        if all(t in cset for s in comp for t, _ in ch[s]):
            out.append(cset)
    return out


def solve_reachability(ch: dict, target: set) -> dict:
    """Exact probability of eventually reaching ``target`` from every state.

    States that cannot reach the target get 0; the remaining unknowns are
    eliminated one by one (sparse Gaussian elimination over fractions).
    """
    pred: dict = {}
    for s, row in ch.items():
        for t, _ in row:
            pred.setdefault(t, set()).add(s)
    can = graphs.reachable(target, lambda v: pred.get(v, ()))
    unknown = [s for s in ch if s in can and s not in target]
    # x_s = sum_t p x_t ; rows as dicts over unknowns plus constant
    rows: dict = {}
    for s in unknown:
        coeffs: dict = {}
        const = Fraction(0)
        for t, p in ch[s]:
            if t in target:
                const += p
            elif t in can:
                coeffs[t] = coeffs.get(t, 0) + p
        rows[s] = (coeffs, const)
    order = list(unknown)
    solved: dict = {}
    # forward elimination: substitute each variable into the rows that use it
    users: dict = {}
    for s, (coeffs, _) in rows.items():
        for t in coeffs:
            users.setdefault(t, set()).add(s)
    for v in order:
        coeffs, const = rows[v]
        self_c = coeffs.pop(v, Fraction(0))
        users.get(v, set()).discard(v)
        denom = 1 - self_c
        if denom == 0:
            raise ArithmeticError("singular reachability system (internal defect)")
        coeffs = {k: c / denom for k, c in coeffs.items()}
        const = const / denom
        rows[v] = (coeffs, const)
        for u in list(users.get(v, ())):
            if u == v or u not in rows:
                continue
            uc, uk = rows[u]
            c = uc.pop(v, None)
            if c is None:
                continue
            for k, ck in coeffs.items():
                uc[k] = uc.get(k, 0) + c * ck
                users.setdefault(k, set()).add(u)
            rows[u] = (uc, uk + c * const)
        for k in coeffs:
            users.setdefault(k, set()).add(v)
    for v in reversed(order):
        coeffs, const = rows[v]
        val = const + sum(c * solved[k] for k, c in coeffs.items())
        solved[v] = val
    out = {s: Fraction(0) for s in ch}
    for s in target:
        if s in out:
            out[s] = Fraction(1)
    out.update(solved)
    return out


def acceptance_probability(c, F: Iterable, frm: Hashable) -> Fraction:
    """Probability that a run from ``frm`` visits F infinitely often."""
    ch = chain_of(c)
    F = set(F)
    good = set()
    for b in bscc_decompose(ch):
        if b & F and any(ch[s] for s in b):
            good |= b
    return solve_reachability(ch, good)[frm]


def el_acceptance_probability(succ: dict, init, acc: tuple) -> Fraction:
    """Probability of the Emerson-Lei condition on a chain with marked edges.

    ``succ[s] = [(t, p, marks), ...]``. A bottom component is accepting iff
    the condition holds on the union of marks of its internal edges.
    """
    ch = {s: [(t, p) for t, p, _ in row] for s, row in succ.items()}
    good = set()
    for b in bscc_decompose(ch):
        allm = 0
        for s in b:
            for t, _, mk in succ[s]:
                allm |= mk
        if any(succ[s] for s in b) and accmod.holds(acc, allm):
            good |= b
    return solve_reachability(ch, good)[init]


def monte_carlo(c, F: Iterable, frm, runs: int = 100_000, length: int = 200, seed=0) -> float:
    """Fraction of sampled runs that are in a BSCC meeting F after ``length`` steps.

    Runs are cut at ``length``; the Büchi event is judged by the BSCC the run has
    entered, which for the chains used here is reached long before the cut.
    """
    ch = chain_of(c)
    F = set(F)
    bsccs = bscc_decompose(ch)
    comp = {}
    for b in bsccs:
        for s in b:
            comp[s] = bool(b & F) and any(ch[x] for x in b)
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    cum = {s: _cumulative(row) for s, row in ch.items()}
    hits = 0
    for _ in range(runs):
        s = frm
        for _ in range(length):
            if s in comp or not ch[s]:
                break
            s = _pick(cum[s], rng.random())
        hits += 1 if comp.get(s, False) else 0
    return hits / runs


def _cumulative(row):
    acc = 0.0
    out = []
    for t, p in row:
        acc += float(p)
        out.append((acc, t))
    return out


def _pick(cum, u):
    for bound, t in cum:
        if u < bound:
            return t
    return cum[-1][1]


# ---------------------------------------------------------------------------
# flat quantitative formulas on Markov processes


def product_chain(m: SMP, aut: A.Automaton) -> tuple[dict, object]:
    """Product of a Markov process with a closed-body automaton: (succ with marks, init)."""
    from .qualitative import Product

    p = Product(m, aut)
    succ = {}
    for st in p.states():
        moves = p.moves(st)
        if len(moves) > 1:
            raise ModelError(f"state {st[0]!r} enables several symbols", code="NOT_MARKOV")
        succ[st] = list(moves[0][1]) if moves else []
    return succ, p.initial()


def formula_probability(m: SMP, body: L.Formula, prob_hook=None) -> Fraction:
    """Probability that a path of the Markov process satisfies the closed formula ``body``."""
    aut = A.compile_wmlo(body, prob_hook=prob_hook)
    if aut.acc == accmod.TRUE:
        return Fraction(1)
    if aut.acc == accmod.FALSE:
        return Fraction(0)
    succ, init = product_chain(m, aut)
    return el_acceptance_probability(succ, init, aut.acc)


@dataclass
class FlatResult:
    verdict: bool
    probabilities: list = field(default_factory=list)  # (node text, m1, m2) per node
    stats: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.verdict


def check_flat_quantitative(m: SMP, f: L.Formula) -> FlatResult:
    """Decide M |= f on a Markov process; every probability node has a closed, flat body."""
    kind = L.classify(f)
    if kind == L.UNSUPPORTED:
        raise UnsupportedFormula("probability nodes must be unnested with closed bodies")
    if not L.is_closed(f):
        raise ScopeError("model checking needs a closed formula")
    reach = set(m.reachable_states())
    for q in reach:
        if len(m.enabled(q)) > 1:
            raise ModelError(f"state {q!r} enables symbols {', '.join(m.enabled(q))}; "
                             "quantitative checking needs a Markov process", code="NOT_MARKOV")
    m.check_no_dead_ends()
    g = f
    for node in L.prob_nodes(f):
        if L.prob_nodes(node.body) or L.prob_nodes(node.cond) or not (
                L.is_closed(node.body) and L.is_closed(node.cond)):
            raise UnsupportedFormula("quantitative nodes must be flat with closed bodies")
    records = []
    memo: dict = {}

    def hook(node: L.Prob) -> A.Automaton:
        if node in memo:
            return memo[node]
        both = node.body if node.cond == L.TRUE else L.And(node.body, node.cond)
        m1 = formula_probability(m, both)
        m2 = Fraction(1) if node.cond == L.TRUE else formula_probability(m, node.cond)
        # a Markov process has a single adversary, so A P and E P coincide
        ok = L.compare(node.rel, m1, node.threshold * m2)
        records.append((L.to_text(node), m1, m2))
        out = A.universal() if ok else A.empty()
        memo[node] = out
        return out

    from .qualitative import QualitativeChecker

    checker = QualitativeChecker(m)
    neg = A.compile_wmlo(L.Not(g), prob_hook=hook)
    cex = checker.counterexample(neg)
    return FlatResult(cex is None, records, {"model_states": len(m.states)})
