"""Clock regions, extended region graphs (classical and urgent), Trans, representants.

Region key of a valuation with bound c (clocks in a fixed order):

* per clock: integer part, or ``c + 1`` (top) when the value exceeds c;
* whether the smallest fractional part among non-top clocks is zero;
* the non-top clocks grouped by equal fractional part, in increasing order;
* for each pair with at least one top clock: ``(floor(x - y), x - y integral)``
  when ``|x - y| <= c``, else ``"+"`` / ``"-"`` by sign.

Every discovered region stores one rational representative whose fractional
parts are replaced by their rank (``rank / (k + 1)``); successors are computed
on that representative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import logic as L
from .errors import ModelError, ScopeError, StateBlowup, UnsupportedFormula
from .pta import CLASSICAL, PTA, URGENT, ConcreteRun, constraint_atoms, elapse, reset
from .smp import SMP, FiniteRun, Transition

TIME = "time"
DEFAULT_REGION_CAP = 2_000_000


# ---------------------------------------------------------------------------
# regions


def compute_cM(t: PTA, f: L.Formula | None = None) -> int:
    consts = set(t.constants())
    if f is not None:
        consts |= {abs(a.const) for a in L.clock_atoms(f)}
    return max(consts) + 1 if consts else 1


def region_of(v: Mapping[str, Fraction], c: int, clocks: Sequence[str] | None = None) -> tuple:
    clocks = tuple(clocks) if clocks is not None else tuple(sorted(v))
    top = c + 1
    ints = []
    frac = {}
    for i, x in enumerate(clocks):
        val = v[x]
        if val > c:
            ints.append(top)
        else:
            fl = math.floor(val)
            ints.append(fl)
            frac[i] = val - fl
    levels = sorted(set(frac.values()))
    groups = tuple(tuple(i for i in sorted(frac) if frac[i] == lv) for lv in levels)
    zero = bool(levels) and levels[0] == 0
    diag = []
    n = len(clocks)
    for i in range(n):
        for j in range(i + 1, n):
            if ints[i] == top or ints[j] == top:
                d = v[clocks[i]] - v[clocks[j]]
                if -c <= d <= c:
                    fl = math.floor(d)
                    diag.append((i, j, fl, d == fl))
                else:
                    diag.append((i, j, "+" if d > 0 else "-"))
    return (tuple(ints), zero, groups, tuple(diag))


def region_equiv(v1: Mapping, v2: Mapping, c: int) -> bool:
    clocks = tuple(sorted(v1))
    return region_of(v1, c, clocks) == region_of(v2, c, clocks)


def normalize(v: Mapping[str, Fraction]) -> dict:
    """Same-region valuation with fractional parts replaced by their rank."""
    fr = {x: val - math.floor(val) for x, val in v.items()}
    nz = sorted(set(f for f in fr.values() if f))
    rank = {f: Fraction(i + 1, len(nz) + 1) for i, f in enumerate(nz)}
    return {x: math.floor(val) + (rank[fr[x]] if fr[x] else 0) for x, val in v.items()}


@dataclass(frozen=True)
class TimeSuccessor:
    key: tuple
    valuation: dict = field(compare=False, hash=False)
    delay: Fraction = field(compare=False, hash=False)
    attains_min: bool = True


def time_successors(v: Mapping[str, Fraction], c: int, clocks: Sequence[str] | None = None) -> list:
    """Regions met while time elapses from ``v``, in order, starting with its own.

    ``attains_min`` tells whether the set of delays leading into that region
    has a least element (the start region and point regions do; open
    intervals after the start do not).
    """
    clocks = tuple(clocks) if clocks is not None else tuple(sorted(v))
    events = set()
    for x in clocks:
        val = v[x]
        if val <= c:
            k = math.floor(val) + 1
            while k <= c:
                events.add(k - val)
                k += 1
    samples = [(Fraction(0), True)]
    prev = Fraction(0)
    for e in sorted(events):
        samples.append(((prev + e) / 2, False))
        samples.append((e, True))
        prev = e
    samples.append((prev + 1, False))
    out: list = []
    for d, point in samples:
        w = elapse(v, d)
        key = region_of(w, c, clocks)
        if out and out[-1].key == key:
            continue
        out.append(TimeSuccessor(key, normalize(w), d, point))
    return out


def region_reset(v: Mapping[str, Fraction], resets: Iterable[str], c: int,
                 clocks: Sequence[str] | None = None) -> tuple:
    return region_of(reset(v, resets), c, clocks)


# ---------------------------------------------------------------------------
# extended region graph


@dataclass
class RegionState:
    loc: str
    key: tuple
    mark: str  # "time" | "trans"
    rep: dict


@dataclass
class RegionGraph:
    pta: PTA
    semantics: str
    c_max: int
    smp: SMP
    states: list  # id -> RegionState
    index: dict  # (loc, key, mark) -> id
    region_symbol: dict  # region key -> symbol name
    clocks: tuple

    def state_id(self, loc: str, v: Mapping[str, Fraction], mark: str) -> str:
        key = region_of(v, self.c_max, self.clocks)
        sid = self.index.get((loc, key, mark))
        if sid is None:
            raise ModelError(f"no region state for ({loc}, {mark}) at {dict(v)}", code="NOT_A_RUN")
        return sid

    def is_markov(self) -> bool:
        reach = set(self.smp.reachable_states())
        return all(len(self.smp.enabled(q)) <= 1 for q in reach)

    def info(self, sid: str) -> RegionState:
        return self.states[int(sid[1:])]


def _enabled_symbols(t: PTA, loc: str, v: Mapping) -> list:
    return [a for a in t.symbols_at(loc) if any(e.guard.holds(v) for e in t.out(loc, a))]


def urgent_successor(t: PTA, loc: str, succs: list) -> tuple[TimeSuccessor, bool]:
    """Earliest time successor enabling some transition, and whether trap follows.

    When no successor enables a transition, or the earliest enabling one has
    no least delay, the answer is the start region with ``True`` (the urgent
    step goes to trap at delay 0).
    """
    if loc != t.trap:
        for s in succs:
            if _enabled_symbols(t, loc, s.valuation):
                if s.attains_min:
                    return s, False
                break
    return succs[0], True


def build_extended_region_graph(t: PTA, f: L.Formula | None = None, semantics: str = CLASSICAL,
                                cap: int = DEFAULT_REGION_CAP, c_max: int | None = None) -> RegionGraph:
    """Region graph SMP reachable from ``(q0, [0], time)``.

    Time states get the location's propositions, ``time`` and the satisfied
    ``x ~ c`` / ``x - y ~ c`` predicates of ``f``; trans states get the
    satisfied ``x+ ~ c`` predicates (clock values just before the move).
    """
    if semantics not in (CLASSICAL, URGENT):
        raise ValueError(f"unknown semantics {semantics!r}")
    atoms = sorted(L.clock_atoms(f), key=lambda a: a.symbol) if f is not None else []
    for a in atoms:
        for c_ in (a.clock, a.other):
            if c_ is not None and c_ not in t.clocks:
                raise ScopeError(f"formula refers to unknown clock {c_!r}")
    time_atoms = [a for a in atoms if a.kind != "x+"]
    plus_atoms = [a for a in atoms if a.kind == "x+"]
    c = c_max if c_max is not None else compute_cM(t, f)
    clocks = tuple(t.clocks)
    trap = t.trap
    first_symbol = t.symbols[0]
    props = set(t.propositions) | {TIME} | {a.symbol for a in atoms}

    states: list = []
    index: dict = {}
    region_symbol: dict = {}
    labels: dict = {}
    trans: list = []
    symbols: list = list(t.symbols)

    def sym_for(key):
        s = region_symbol.get(key)
        if s is None:
            s = region_symbol[key] = f"~r{len(region_symbol)}"
            symbols.append(s)
        return s

    def state(loc, v, mark, key=None):
        key = key if key is not None else region_of(v, c, clocks)
        k = (loc, key, mark)
        sid = index.get(k)
        if sid is None:
            sid = index[k] = f"s{len(states)}"
            st = RegionState(loc, key, mark, normalize(v))
            states.append(st)
            if len(states) > cap:
                raise StateBlowup(f"region graph exceeded {cap} states", explored=done[0],
                                  frontier=len(states) - done[0])
            if mark == TIME:
                lab = set(t.label(loc)) if loc != trap else set()
                lab.add(TIME)
                lab |= {a.symbol for a in time_atoms if a.holds(st.rep)}
            else:
                lab = {a.symbol for a in plus_atoms if a.holds(st.rep)}
            labels[sid] = lab
        return sid

    done = [0]
    state(t.init, t.zero(), TIME)
    while done[0] < len(states):
        sid = f"s{done[0]}"
        st = states[done[0]]
        done[0] += 1
        v = st.rep
        if st.mark == TIME:
            succs = time_successors(v, c, clocks)
            if semantics == CLASSICAL:
                for s in succs:
                    trans.append(Transition(sid, sym_for(s.key), state(st.loc, s.valuation, "trans", s.key), Fraction(1)))
                continue
            target, _ = urgent_successor(t, st.loc, succs)
            trans.append(Transition(sid, sym_for(target.key),
                                    state(st.loc, target.valuation, "trans", target.key), Fraction(1)))
            continue
        # trans state
        back_to_trap = lambda: state(trap, v, TIME, st.key)  # noqa: E731
        if st.loc == trap:
            for a in (t.symbols if semantics == CLASSICAL else (first_symbol,)):
                trans.append(Transition(sid, a, back_to_trap(), Fraction(1)))
            continue
        syms = list(t.symbols_at(st.loc)) if semantics == CLASSICAL else _enabled_symbols(t, st.loc, v)
        if semantics == URGENT and not syms:
            trans.append(Transition(sid, first_symbol, back_to_trap(), Fraction(1)))
            continue
        for a in syms:
            trap_mass = Fraction(0)
            for e in t.out(st.loc, a):
                if e.guard.holds(v):
                    trans.append(Transition(sid, a, state(e.dst, reset(v, e.resets), TIME), e.prob))
                else:
                    trap_mass += e.prob
            if trap_mass:
                trans.append(Transition(sid, a, back_to_trap(), trap_mass))
    ids = [f"s{i}" for i in range(len(states))]
    smp = SMP(symbols, ids, "s0", trans, labels, props)
    return RegionGraph(t, semantics, c, smp, states, index, region_symbol, clocks)


# ---------------------------------------------------------------------------
# formula translation


def _all_var_names(f: L.Formula) -> set:
    out = set()
    for g in L.walk(f):
        if isinstance(g, (L.Exists, L.ExistsSet)):
            out.add(g.var)
        a, b = L.free_vars(g)
        out |= a | b
    return out


def trans_translate(f: L.Formula) -> tuple[L.Formula, dict]:
    """Translate a formula over PTA runs into one over region-graph runs.

    Returns the translated formula and the companion table ``t -> t_bar`` for
    free first-order variables (under the doubled valuation, t_bar = 2t + 1).
    Companions are introduced only for variables read by ``x+`` predicates.
    """
    used = _all_var_names(f)
    counter = [0]

    def fresh(base):
        while True:
            counter[0] += 1
            cand = f"{base}_{counter[0]}"
            if cand not in used:
                used.add(cand)
                return cand

    def go(g, bars):
        if isinstance(g, L.Const):
            return g
        if isinstance(g, L.ClockAtom) and g.kind == "x+":
            return L.ClockAtom(g.kind, g.clock, g.other, g.rel, g.const, bars[g.var])
        if isinstance(g, (L.Prop, L.ClockAtom, L.Less, L.Member)):
            return g
        if isinstance(g, L.Succ):
            mid = fresh("m")
            return L.Exists(mid, L.And(L.Succ(g.prev, mid), L.Succ(mid, g.nxt)))
        if isinstance(g, L.Not):
            return L.Not(go(g.body, bars))
        if isinstance(g, L.Or):
            return L.Or(go(g.left, bars), go(g.right, bars))
        if isinstance(g, L.Exists):
            guard = L.Prop(TIME, g.var)
            if _reads_plus(g.body, g.var):
                bar = fresh(g.var + "_bar")
                inner = go(g.body, {**bars, g.var: bar})
                return L.Exists(g.var, L.Exists(bar, L.And(L.And(guard, L.Succ(g.var, bar)), inner)))
            return L.Exists(g.var, L.And(guard, go(g.body, bars)))
        if isinstance(g, L.ExistsSet):
            probe = fresh("t")
            guard = L.Forall(probe, L.Implies(L.Member(probe, g.var), L.Prop(TIME, probe)))
            return L.ExistsSet(g.var, L.And(guard, go(g.body, bars)))
        if isinstance(g, L.Prob):
            return L.Prob(g.rel, g.threshold, go(g.body, bars), go(g.cond, bars), g.universal)
        raise TypeError(g)

    fo, _ = L.free_vars(f)
    bars = {}
    for v in sorted(fo):
        if _reads_plus(f, v):
            bars[v] = fresh(v + "_bar")
    return go(f, bars), bars


def _reads_plus(g: L.Formula, var: str) -> bool:
    """Whether a free occurrence of ``var`` in ``g`` is an ``x+`` predicate."""
    if isinstance(g, L.ClockAtom):
        return g.kind == "x+" and g.var == var
    if isinstance(g, L.Exists) and g.var == var:
        return False
    return any(_reads_plus(h, var) for h in L.children(g))


# ---------------------------------------------------------------------------
# representants and checking


def representant(graph: RegionGraph, run: ConcreteRun) -> FiniteRun:
    """The region-graph run matching a concrete run step for step."""
    t = graph.pta
    states = []
    symbols = []
    for i, a in enumerate(run.symbols):
        cfg = run.configs[i]
        v = cfg.valuation
        w = elapse(v, run.delays[i])
        states.append(graph.state_id(cfg.loc, v, TIME))
        trans_id = graph.state_id(cfg.loc, w, "trans")
        symbols.append(graph.region_symbol[graph.info(trans_id).key])
        states.append(trans_id)
        symbols.append(a)
    last = run.configs[len(run.symbols)]
    states.append(graph.state_id(last.loc, last.valuation, TIME))
    return FiniteRun(tuple(states), tuple(symbols))


@dataclass
class PTAResult:
    verdict: bool
    semantics: str
    path: str  # "qualitative" | "flat-quantitative"
    region_states: int
    c_max: int
    witness: dict | None = None
    probabilities: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.verdict


def check_pta(t: PTA, f: L.Formula, semantics: str = CLASSICAL, cap: int = DEFAULT_REGION_CAP,
              subset_cap: int | None = None) -> PTAResult:
    """Decide T |= f (classical) or T |=_u f (urgent) through the region graph."""
    from . import markov, qualitative

    kind = L.classify(f)
    if kind == L.UNSUPPORTED:
        raise UnsupportedFormula("formula is outside the supported fragments")
    if not L.is_closed(f):
        raise ScopeError("model checking needs a closed formula")
    graph = build_extended_region_graph(t, f, semantics, cap)
    g, _ = trans_translate(f)
    n = len(graph.states)
    if kind in (L.PROBABILITY_FREE, L.QUALITATIVE):
        kw = {} if subset_cap is None else {"cap": subset_cap}
        r = qualitative.check_qualitative(graph.smp, g, **kw)
        return PTAResult(r.verdict, semantics, "qualitative", n, graph.c_max, r.witness, [], r.stats)
    if semantics != URGENT or not graph.is_markov():
        raise ModelError("quantitative thresholds need urgent semantics and at most one "
                         "symbol per location (the region graph must be a Markov process)",
                         code="NOT_MARKOV")
    r = markov.check_flat_quantitative(graph.smp, g)
    return PTAResult(r.verdict, semantics, "flat-quantitative", n, graph.c_max, None, r.probabilities, r.stats)
