"""Qualitative model checking of PMLO on semi-Markov processes.

Probability nodes are eliminated innermost first. The body of ``E P{>0}`` or
``E P{=1}`` is compiled to a deterministic automaton, composed with the model,
and turned into an automaton over the body's free-variable tracks that accepts
exactly the valuations satisfying the node. That automaton is substituted for
the node in the enclosing compilation. At the top level the model satisfies
``f`` iff no path of the model is accepted by the automaton of ``not f``.

Product convention: at position i the automaton reads the label of the i-th
state together with the variable bits of position i.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from . import acceptance as accmod
from . import automata as A
from . import graphs
from . import logic as L
from .errors import ScopeError, StateBlowup, UnsupportedFormula
from .smp import SMP

DEFAULT_SUBSET_CAP = 1 << 20


# ---------------------------------------------------------------------------
# state-based analyses on an SMP (Büchi set F on states)


def _smp_actions(m: SMP, F: set) -> dict:
    """Actions with mark 1 on every edge leaving a state of F."""
    out = {}
    for q in m.states:
        mk = 1 if q in F else 0
        out[q] = [[(d, mk) for d, _ in m.post(q, a)] for a in m.enabled(q)]
    return out


def positive_states(m: SMP, F: Iterable) -> set:
    """States from which some adversary visits F infinitely often with positive probability."""
    F = set(F)
    acts = _smp_actions(m, F)
    U = graphs.accepting_end_component_states(m.states, acts, accmod.inf(0))
    return graphs.can_reach(m.states, acts, U)


def almost_sure_states(m: SMP, F: Iterable) -> set:
    """States from which some adversary visits F infinitely often with probability one."""
    F = set(F)
    acts = _smp_actions(m, F)
    U = graphs.accepting_end_component_states(m.states, acts, accmod.inf(0))
    return graphs.almost_sure_reach(m.states, acts, U)


# ---------------------------------------------------------------------------
# product of a model with a deterministic automaton


class Product:
    """M x A, explored from the initial state over every variable letter.

    Product states are ``(q, s)``: model state q, automaton state s after
    reading position i. ``var_tracks`` are the tracks read from the valuation;
    every other automaton track must be a model proposition (absent ones read 0).
    """

    def __init__(self, m: SMP, aut: A.Automaton, var_tracks: Iterable[str] = ()):
        self.m = m
        self.aut = aut
        self.var_tracks = tuple(sorted(var_tracks))
        for t in aut.tracks:
            if A.is_var_track(t) and t not in self.var_tracks:
                raise ScopeError(f"automaton reads variable track {t!r} not bound here")
        self._label_bits = {q: aut.letter(m.label(q)) for q in m.states}
        # letter over var_tracks -> bits in the automaton's letter
        self._beta_bits = [aut.letter({t for i, t in enumerate(self.var_tracks) if b >> i & 1})
                           for b in range(1 << len(self.var_tracks))]
        self.init_by_beta = [self._enter(None, m.init, b) for b in range(len(self._beta_bits))]
        self._states = None
        self._actions0 = None

    @property
    def num_betas(self) -> int:
        return len(self._beta_bits)

    def _enter(self, s, q, beta: int):
        """Product successor when the model moves to q (s None: initial position)."""
        x = self._label_bits[q] | self._beta_bits[beta]
        src = self.aut.init if s is None else s
        return (q, self.aut.succ[src][x]), self.aut.mark[src][x]

    def initial(self, beta: int = 0):
        return self.init_by_beta[beta][0]

    def moves(self, state, beta: int = 0):
        """``[(symbol, [((q', s'), prob, marks), ...]), ...]``."""
        q, s = state
        out = []
        for a in self.m.enabled(q):
            row = []
            for d, p in self.m.post(q, a):
                nxt, mk = self._enter(s, d, beta)
                row.append((nxt, p, mk))
            out.append((a, row))
        return out

    def states(self) -> list:
        """Product states reachable under any valuation letters."""
        if self._states is None:
            start = {self.initial(b) for b in range(self.num_betas)}
            order = sorted(start)
            seen = set(start)
            i = 0
            while i < len(order):
                st = order[i]
                i += 1
                for b in range(self.num_betas):
                    for _, row in self.moves(st, b):
                        for nxt, _, _ in row:
                            if nxt not in seen:
                                seen.add(nxt)
                                order.append(nxt)
            self._states = order
        return self._states

    def zero_actions(self) -> dict:
        """M': the product with every variable bit 0, as graph actions."""
        if self._actions0 is None:
            self._actions0 = {st: [[(nxt, mk) for nxt, _, mk in row] for _, row in self.moves(st, 0)]
                              for st in self.states()}
        return self._actions0

    def accepting_states(self) -> set:
        return graphs.accepting_end_component_states(self.states(), self.zero_actions(), self.aut.acc)


build_product = Product


@dataclass
class Analysis:
    product: Product
    U: set
    positive: set
    almost_sure: set


def analyse(m: SMP, aut: A.Automaton, var_tracks=()) -> Analysis:
    p = Product(m, aut, var_tracks)
    acts = p.zero_actions()
    U = p.accepting_states()
    pos = graphs.can_reach(p.states(), acts, U)
    sure = graphs.almost_sure_reach(p.states(), acts, U)
    return Analysis(p, U, pos, sure)


# ---------------------------------------------------------------------------
# elimination of probability nodes


def eliminate_positive(m: SMP, body: A.Automaton, var_tracks: Iterable[str] = (),
                       cap: int = DEFAULT_SUBSET_CAP, analysis: Analysis | None = None) -> A.Automaton:
    """Automaton over ``var_tracks`` accepting the valuations with M, v |= E P{>0}[body].

    A state is the set of product states consistent with the variable bits
    read so far (any symbol, any outcome). The valuation is accepted iff from
    some point on the bits stay 0 and that set meets F^{>0}.
    """
    an = analysis or analyse(m, body, var_tracks)
    prod, good = an.product, an.positive
    V = prod.var_tracks
    if not V:
        return A.universal() if prod.initial(0) in good else A.empty()

    def step(key, beta):
        if key is None:
            nxt = frozenset([prod.initial(beta)])
        else:
            nxt = frozenset(n for st in key for _, row in prod.moves(st, beta) for n, _, _ in row)
        bad = beta != 0 or not (nxt & good)
        return nxt, 1 if bad else 0

    return A.reduce(A.explore(V, None, step, accmod.fin(0), cap))


def _minimal_sets(sets) -> frozenset:
    out = []
    for s in sorted(set(sets), key=len):
        if not any(o <= s for o in out):
            out.append(s)
    return frozenset(out)


def eliminate_almost_sure(m: SMP, body: A.Automaton, var_tracks: Iterable[str] = (),
                          cap: int = DEFAULT_SUBSET_CAP, analysis: Analysis | None = None) -> A.Automaton:
    """Automaton over ``var_tracks`` accepting the valuations with M, v |= E P{=1}[body].

    A state is the antichain of minimal supports G reachable under some
    adversary while reading the variable bits; successors of G come from choice
    functions G -> symbol. Accepted iff from some point on the bits stay 0 and
    some support lies inside F^{=1}.
    """
    an = analysis or analyse(m, body, var_tracks)
    prod, good = an.product, an.almost_sure
    V = prod.var_tracks
    if not V:
        return A.universal() if prod.initial(0) in good else A.empty()
    budget = [cap]

    def successors(G, beta):
        options = []
        for st in sorted(G):
            opts = {frozenset(n for n, _, _ in row) for _, row in prod.moves(st, beta)}
            options.append(_minimal_sets(opts))
        count = 1
        for o in options:
            count *= len(o)
        budget[0] -= count
        if budget[0] < 0:
            raise StateBlowup(f"almost-sure subset construction exceeded {cap} choice evaluations",
                              explored=cap, frontier=count)
        for combo in itertools.product(*options):
            yield frozenset().union(*combo)

    def step(key, beta):
        if key is None:
            nxt = frozenset([frozenset([prod.initial(beta)])])
        else:
            nxt = _minimal_sets(g2 for G in key for g2 in successors(G, beta))
        bad = beta != 0 or not any(G <= good for G in nxt)
        return nxt, 1 if bad else 0

    return A.reduce(A.explore(V, None, step, accmod.fin(0), cap))


# ---------------------------------------------------------------------------
# top-level checking


@dataclass
class QualitativeResult:
    verdict: bool
    witness: dict | None = None
    stats: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.verdict


def _node_tracks(node: L.Prob) -> tuple:
    fo, so = L.free_vars(node)
    return tuple(sorted(A.var_track(v) for v in fo | so))


class QualitativeChecker:
    """Holds the model and caches eliminated nodes during one check."""

    def __init__(self, m: SMP, cap: int = DEFAULT_SUBSET_CAP,
                 automaton_cap: int = A.DEFAULT_STATE_CAP):
        self.m = m
        self.cap = cap
        self.automaton_cap = automaton_cap
        self.stats = {"eliminated_nodes": 0, "max_product_states": 0}

    def compile(self, f: L.Formula) -> A.Automaton:
        return A.compile_wmlo(f, prob_hook=self.eliminate, cap=self.automaton_cap)

    def compile_negation(self, g: L.Formula) -> tuple[A.Automaton, tuple]:
        """Automaton for the negation of ``g`` with its outer existentials left unprojected.

        Returns the automaton and the variable tracks to be guessed during the
        path search (first-order tracks carry exactly one 1, set tracks are
        ultimately 0).
        """
        core, fo, so = _peel_existentials(L.Not(g))
        aut = self.compile(core)
        for v in fo:
            aut = A.intersect(aut, A.exactly_one(v), self.automaton_cap)
        for v in so:
            aut = A.intersect(aut, A.ultimately_zero(A.var_track(v)), self.automaton_cap)
        tracks = tuple(t for t in aut.tracks if A.is_var_track(t))
        return aut, tracks

    def eliminate(self, node: L.Prob) -> A.Automaton:
        if node.universal or node.cond != L.TRUE:
            raise UnsupportedFormula("probability node not in E P{>0} / E P{=1} form; desugar first")
        body = self.compile(node.body)
        V = _node_tracks(node)
        an = analyse(self.m, body, V)
        self.stats["eliminated_nodes"] += 1
        self.stats["max_product_states"] = max(self.stats["max_product_states"], len(an.product.states()))
        if (node.rel, node.threshold) == (">", 0):
            return eliminate_positive(self.m, body, V, self.cap, an)
        if (node.rel, node.threshold) == ("=", 1):
            return eliminate_almost_sure(self.m, body, V, self.cap, an)
        raise UnsupportedFormula(f"threshold {node.rel}{node.threshold} is not qualitative")

    def counterexample(self, neg: A.Automaton, var_tracks: Iterable[str] = ()):
        """A lasso of model states whose label word is accepted by ``neg``, or None.

        Variable tracks (outer existential variables of the negated formula)
        are guessed step by step alongside the path.
        """
        p = Product(self.m, neg, var_tracks)
        states = p.states()
        edges = []
        for st in states:
            for b in range(p.num_betas):
                for a, row in p.moves(st, b):
                    for nxt, _, mk in row:
                        edges.append((st, nxt, mk))
        self.stats["top_product_states"] = len(states)
        found = graphs.accepting_subgraphs(states, edges, neg.acc, first_only=True)
        if not found:
            return None
        cset, sub = found[0]
        out: dict = {}
        for e in edges:
            out.setdefault(e[0], []).append(e)
        path = None
        for start in sorted({p.initial(b) for b in range(p.num_betas)}):
            path = graphs.shortest_path(start, cset, lambda v: out.get(v, ()))
            if path is not None:
                break
        anchor = path[-1][1] if path else start
        cycle = graphs.covering_cycle(anchor, sub)
        stem = [start[0]] + [e[1][0] for e in path]
        loop = [e[1][0] for e in cycle]
        return {"stem": stem, "loop": loop}


def _peel_existentials(f: L.Formula):
    """Split ``f`` into outer existential variables and the remaining core."""
    fo, so = [], []
    used = set()
    while True:
        if isinstance(f, L.Not) and isinstance(f.body, L.Not):
            f = f.body.body
        elif isinstance(f, (L.Exists, L.ExistsSet)) and f.var not in used:
            used.add(f.var)
            (fo if isinstance(f, L.Exists) else so).append(f.var)
            f = f.body
        else:
            return f, fo, so


def _existential_witness(m: SMP, node: L.Prob, checker: QualitativeChecker) -> dict:
    body = checker.compile(node.body)
    an = analyse(m, body)
    prod = an.product
    acts = prod.moves
    positive = (node.rel, node.threshold) == (">", 0)
    region = an.positive if positive else an.almost_sure
    # distance to U inside the region, choosing for each state the symbol that
    # makes progress (positive: some successor closer; almost sure: stays inside)
    dist = {s: 0 for s in an.U & region}
    choice: dict = {}
    frontier = deque(sorted(dist))
    pending = set(region) - set(dist)
    changed = True
    while changed:
        changed = False
        for st in sorted(pending, key=str):
            for a, row in acts(st):
                succ = [n for n, _, _ in row]
                if positive:
                    ok = any(n in dist for n in succ)
                else:
                    ok = all(n in region for n in succ) and any(n in dist for n in succ)
                if ok:
                    dist[st] = 1 + min(dist[n] for n in succ if n in dist)
                    choice[st] = a
                    pending.discard(st)
                    changed = True
                    break
    for st in an.U & region:
        for a, row in acts(st):
            if all(n in region for n, _, _ in row) or positive:
                choice.setdefault(st, a)
                break
    run = [prod.initial()]
    seen = {run[0]}
    while run[-1] not in an.U and run[-1] in choice:
        a = choice[run[-1]]
        row = dict((a2, r) for a2, r in acts(run[-1]))[a]
        nxt = min((n for n, _, _ in row if n in dist), key=lambda n: dist[n])
        if nxt in seen:
            break
        seen.add(nxt)
        run.append(nxt)
    return {
        "kind": "positive" if positive else "almost-sure",
        "adversary": {f"{q}/{s}": a for (q, s), a in sorted(choice.items(), key=str)},
        "run_prefix": [q for q, _ in run],
        "F_size": len(region),
        "accepting_states": len(an.U),
        "product_states": len(prod.states()),
    }


def check_qualitative(m: SMP, f: L.Formula, cap: int = DEFAULT_SUBSET_CAP,
                      automaton_cap: int = A.DEFAULT_STATE_CAP) -> QualitativeResult:
    """Decide M |= f for a closed probability-free or qualitative formula."""
    kind = L.classify(f)
    if kind not in (L.PROBABILITY_FREE, L.QUALITATIVE):
        raise UnsupportedFormula(f"formula is {kind}; the qualitative engine needs thresholds 0 or 1")
    if not L.is_closed(f):
        raise ScopeError("model checking needs a closed formula")
    m.check_no_dead_ends()
    g = L.desugar(f)
    checker = QualitativeChecker(m, cap, automaton_cap)
    neg, tracks = checker.compile_negation(g)
    cex = checker.counterexample(neg, tracks)
    verdict = cex is None
    witness = None
    if not verdict:
        witness = {"kind": "counterexample", **cex}
    elif isinstance(g, L.Prob) and not g.universal:
        witness = _existential_witness(m, g, checker)
    stats = dict(checker.stats)
    stats["model_states"] = len(m.states)
    stats["model_transitions"] = len(m.transitions)
    stats["negation_automaton_states"] = neg.num_states
    return QualitativeResult(verdict, witness, stats)
