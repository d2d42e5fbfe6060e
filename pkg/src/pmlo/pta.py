"""Probabilistic timed automata: model, clock constraints, concrete semantics, product."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ModelError
from .logic import compare

CLASSICAL = "classical"
URGENT = "urgent"
SEMANTICS = (CLASSICAL, URGENT)


# ---------------------------------------------------------------------------
# clock constraints


@dataclass(frozen=True)
class CAtom:
    """``clock ~ const`` or ``clock - other ~ const``."""

    clock: str
    rel: str
    const: int
    other: str | None = None

    def holds(self, v: Mapping[str, Fraction]) -> bool:
        x = v[self.clock] - (v[self.other] if self.other else 0)
        return compare(self.rel, x, self.const)


@dataclass(frozen=True)
class CAnd:
    left: "Constraint"
    right: "Constraint"

    def holds(self, v) -> bool:
        return self.left.holds(v) and self.right.holds(v)


@dataclass(frozen=True)
class COr:
    left: "Constraint"
    right: "Constraint"

    def holds(self, v) -> bool:
        return self.left.holds(v) or self.right.holds(v)


@dataclass(frozen=True)
class CTrue:
    def holds(self, v) -> bool:
        return True


Constraint = CAtom | CAnd | COr | CTrue


def eval_constraint(g, v: Mapping[str, Fraction]) -> bool:
    return g.holds(v)


def constraint_atoms(g) -> list:
    if isinstance(g, CAtom):
        return [g]
    if isinstance(g, (CAnd, COr)):
        return constraint_atoms(g.left) + constraint_atoms(g.right)
    return []


def constraint_text(g) -> str:
    if isinstance(g, CTrue):
        return "true"
    if isinstance(g, CAtom):
        lhs = f"{g.clock}-{g.other}" if g.other else g.clock
        return f"{lhs}{g.rel}{g.const}"
    op = "&" if isinstance(g, CAnd) else "|"
    return f"({constraint_text(g.left)} {op} {constraint_text(g.right)})"


# rational interval sets: sorted disjoint tuples (lo, lo_closed, hi, hi_closed), hi None = +inf


def _norm(ivs: list) -> list:
    ivs = sorted((iv for iv in ivs if not _empty_iv(iv)), key=lambda iv: (iv[0], not iv[1]))
    out: list = []
    for iv in ivs:
        if out and _touch(out[-1], iv):
            out[-1] = _merge(out[-1], iv)
        else:
            out.append(iv)
    return out


def _touch(a, b) -> bool:
    """Whether b (starting no earlier than a) overlaps or abuts a."""
    if a[2] is None:
        return True
    return b[0] < a[2] or (b[0] == a[2] and (a[3] or b[1]))


def _merge(a, b):
    lc = a[1] or (b[0] == a[0] and b[1])
    if a[2] is None or b[2] is None:
        return (a[0], lc, None, False)
    if a[2] > b[2]:
        return (a[0], lc, a[2], a[3])
    if b[2] > a[2]:
        return (a[0], lc, b[2], b[3])
    return (a[0], lc, a[2], a[3] or b[3])


def _empty_iv(iv) -> bool:
    lo, lc, hi, hc = iv
    if hi is None:
        return False
    return lo > hi or (lo == hi and not (lc and hc))


def _intersect(a: list, b: list) -> list:
    out = []
    for lo1, lc1, hi1, hc1 in a:
        for lo2, lc2, hi2, hc2 in b:
            if lo1 > lo2 or (lo1 == lo2 and not lc1):
                lo, lc = lo1, lc1
            else:
                lo, lc = lo2, lc2
            if hi1 is None:
                hi, hc = hi2, hc2
            elif hi2 is None:
                hi, hc = hi1, hc1
            elif hi1 < hi2 or (hi1 == hi2 and not hc1):
                hi, hc = hi1, hc1
            else:
                hi, hc = hi2, hc2
            out.append((lo, lc, hi, hc))
    return _norm(out)


ALL_DELAYS = [(Fraction(0), True, None, False)]


def delay_set(g, v: Mapping[str, Fraction]) -> list:
    """Delays tau >= 0 with ``v + tau |= g``, as a finite union of intervals."""
    if isinstance(g, CTrue):
        return list(ALL_DELAYS)
    if isinstance(g, CAnd):
        return _intersect(delay_set(g.left, v), delay_set(g.right, v))
    if isinstance(g, COr):
        return _norm(delay_set(g.left, v) + delay_set(g.right, v))
    if g.other is not None:
        return list(ALL_DELAYS) if g.holds(v) else []
    b = Fraction(g.const) - v[g.clock]  # tau ~ b
    z = Fraction(0)
    rel = g.rel
    if rel == "<":
        ivs = [(z, True, b, False)]
    elif rel == "<=":
        ivs = [(z, True, b, True)]
    elif rel == "=":
        ivs = [(b, True, b, True)]
    elif rel == "!=":
        ivs = [(z, True, b, False), (b, False, None, False)]
    elif rel == ">=":
        ivs = [(max(b, z), True, None, False)]
    else:
        ivs = [(b, False, None, False)] if b >= 0 else [(z, True, None, False)]
    return _intersect(_norm(ivs), ALL_DELAYS)


def minimum(ivs: list):
    """(has_min, value): the infimum of a nonempty union and whether it is attained."""
    if not ivs:
        return False, None
    lo, lc, _, _ = ivs[0]
    return lc, lo


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class PTATransition:
    src: str
    symbol: str
    dst: str
    guard: object
    resets: frozenset
    prob: Fraction


class PTA:
    """Validated probabilistic timed automaton. ``trap`` is a fresh location name."""

    def __init__(self, clocks: Iterable[str], symbols: Iterable[str], locations: Iterable[str],
                 init: str, transitions: Iterable, labels: Mapping[str, Iterable[str]] | None = None,
                 propositions: Iterable[str] | None = None, trap: str | None = None):
        self.clocks = tuple(dict.fromkeys(clocks))
        self.symbols = tuple(dict.fromkeys(symbols))
        self.locations = tuple(dict.fromkeys(locations))
        self.init = init
        trs = []
        for t in transitions:
            if not isinstance(t, PTATransition):
                src, sym, dst, guard, resets, p = t
                t = PTATransition(src, sym, dst, guard, frozenset(resets), Fraction(p))
            trs.append(t)
        self.transitions = tuple(trs)
        labels = labels or {}
        self.labels = {q: frozenset(labels.get(q, ())) for q in self.locations}
        props = set(propositions or ())
        for ls in self.labels.values():
            props |= ls
        self.propositions = tuple(sorted(props))
        if trap is None:
            trap = "trap"
            while trap in self.locations:
                trap += "_"
        self.trap = trap
        self._validate(labels)
        by: dict = {}
        for t in self.transitions:
            by.setdefault(t.src, {}).setdefault(t.symbol, []).append(t)
        self._by = {q: {a: tuple(v) for a, v in d.items()} for q, d in by.items()}

    def _validate(self, labels) -> None:
        locs, syms, clocks = set(self.locations), set(self.symbols), set(self.clocks)
        if self.trap in locs:
            raise ModelError(f"trap name {self.trap!r} clashes with a location")
        if self.init not in locs:
            raise ModelError(f"initial location {self.init!r} is not declared", code="UNKNOWN_REF")
        for q in labels:
            if q not in locs:
                raise ModelError(f"label for unknown location {q!r}", code="UNKNOWN_REF")
        sums: dict = {}
        seen = set()
        for t in self.transitions:
            where = f"transition {t.src} {t.symbol} {t.dst}"
            if t.src not in locs or t.dst not in locs:
                raise ModelError(f"{where}: unknown location", code="UNKNOWN_REF")
            if t.symbol not in syms:
                raise ModelError(f"{where}: unknown symbol", code="UNKNOWN_REF")
            for c in t.resets:
                if c not in clocks:
                    raise ModelError(f"{where}: unknown clock {c!r} in resets", code="UNKNOWN_REF")
            for at in constraint_atoms(t.guard):
                for c in (at.clock, at.other):
                    if c is not None and c not in clocks:
                        raise ModelError(f"{where}: unknown clock {c!r} in guard", code="UNKNOWN_REF")
            if t.prob <= 0:
                raise ModelError(f"{where} has probability {t.prob}", code="ZERO_PROB")
            key = (t.src, t.symbol, t.dst)
            if key in seen:
                raise ModelError(f"duplicate {where}", code="MODEL")
            seen.add(key)
            sums[(t.src, t.symbol)] = sums.get((t.src, t.symbol), 0) + t.prob
        for (q, a), s in sums.items():
            if s != 1:
                raise ModelError(f"probabilities of ({q}, {a}) sum to {s}", code="PROB_SUM")

    def out(self, q: str, a: str) -> tuple:
        return self._by.get(q, {}).get(a, ())

    def symbols_at(self, q: str) -> tuple:
        return tuple(a for a in self.symbols if self.out(q, a))

    def label(self, q: str) -> frozenset:
        return self.labels.get(q, frozenset())

    def constants(self) -> set:
        out = set()
        for t in self.transitions:
            for at in constraint_atoms(t.guard):
                out.add(abs(at.const))
        return out

    def zero(self) -> dict:
        return {c: Fraction(0) for c in self.clocks}

    def is_single_symbol(self) -> bool:
        return all(len(self.symbols_at(q)) <= 1 for q in self.locations)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PTA):
            return NotImplemented
        return (self.clocks == other.clocks and self.symbols == other.symbols
                and self.locations == other.locations and self.init == other.init
                and self.labels == other.labels and set(self.transitions) == set(other.transitions))

    def __repr__(self) -> str:
        return (f"PTA({len(self.locations)} locations, {len(self.clocks)} clocks, "
                f"{len(self.transitions)} transitions)")


# ---------------------------------------------------------------------------
# concrete semantics


@dataclass(frozen=True)
class Config:
    loc: str
    clocks: tuple  # sorted (name, Fraction) pairs

    @staticmethod
    def of(loc: str, v: Mapping[str, Fraction]) -> "Config":
        return Config(loc, tuple(sorted((k, Fraction(x)) for k, x in v.items())))

    @property
    def valuation(self) -> dict:
        return dict(self.clocks)


def elapse(v: Mapping[str, Fraction], tau) -> dict:
    return {k: x + tau for k, x in v.items()}


def reset(v: Mapping[str, Fraction], clocks: Iterable[str]) -> dict:
    out = dict(v)
    for c in clocks:
        out[c] = Fraction(0)
    return out


def _distribution(t: PTA, q: str, a: str, v: dict) -> list:
    """Targets of symbol a at the (already elapsed) valuation v, trap mass merged."""
    out = []
    trap_mass = Fraction(0)
    for e in t.out(q, a):
        if e.guard.holds(v):
            out.append((Config.of(e.dst, reset(v, e.resets)), e.prob))
        else:
            trap_mass += e.prob
    if trap_mass:
        out.append((Config.of(t.trap, v), trap_mass))
    return out


def classical_steps(t: PTA, c: Config, tau, a: str) -> list:
    """Distribution over successor configurations for delay ``tau`` and symbol ``a``."""
    tau = Fraction(tau)
    if tau < 0:
        raise ValueError("negative delay")
    v = elapse(c.valuation, tau)
    if c.loc == t.trap:
        return [(Config.of(t.trap, v), Fraction(1))]
    if not t.out(c.loc, a):
        return []
    return _distribution(t, c.loc, a, v)


@dataclass(frozen=True)
class UrgentStep:
    """Outcome of urgent analysis at a configuration.

    ``tau`` is the minimal enabling delay, or 0 with ``trap`` set when the
    enabling delays are empty or have no minimum. ``options`` maps each
    offered symbol to its distribution.
    """

    tau: Fraction
    trap: bool
    options: dict


def enabling_delays(t: PTA, q: str, v: Mapping[str, Fraction]) -> list:
    ivs: list = []
    for a in t.symbols_at(q):
        for e in t.out(q, a):
            ivs.extend(delay_set(e.guard, v))
    return _norm(ivs)


def urgent_steps(t: PTA, c: Config) -> UrgentStep:
    v = c.valuation
    default = t.symbols[0]
    if c.loc == t.trap:
        return UrgentStep(Fraction(0), True, {default: [(Config.of(t.trap, v), Fraction(1))]})
    ivs = enabling_delays(t, c.loc, v)
    has_min, tau = minimum(ivs)
    if not has_min:
        return UrgentStep(Fraction(0), True, {default: [(Config.of(t.trap, v), Fraction(1))]})
    w = elapse(v, tau)
    options = {}
    for a in t.symbols_at(c.loc):
        if any(e.guard.holds(w) for e in t.out(c.loc, a)):
            options[a] = _distribution(t, c.loc, a, w)
    return UrgentStep(tau, False, options)


# ---------------------------------------------------------------------------
# product


def pta_product(t1: PTA, t2: PTA, labels: str = "union", reachable_only: bool = False) -> PTA:
    """Synchronised product: shared symbols move jointly, others interleave.

    ``labels`` is ``"union"`` (default) or ``"intersection"``. With
    ``reachable_only`` only location pairs reachable from the initial pair
    (ignoring guards) are kept.
    """
    if set(t1.clocks) & set(t2.clocks):
        raise ModelError("product components share clocks: " + ", ".join(sorted(set(t1.clocks) & set(t2.clocks))))
    if labels not in ("union", "intersection"):
        raise ValueError("labels must be 'union' or 'intersection'")
    shared = set(t1.symbols) & set(t2.symbols)
    symbols = list(t1.symbols) + [a for a in t2.symbols if a not in t1.symbols]

    def name(q1, q2):
        return f"{q1}.{q2}"

    def moves(q1, q2):
        for a in symbols:
            if a in shared:
                for e1 in t1.out(q1, a):
                    for e2 in t2.out(q2, a):
                        g = e1.guard if isinstance(e2.guard, CTrue) else (
                            e2.guard if isinstance(e1.guard, CTrue) else CAnd(e1.guard, e2.guard))
                        yield a, (e1.dst, e2.dst), g, e1.resets | e2.resets, e1.prob * e2.prob
            elif a in t1.symbols:
                for e in t1.out(q1, a):
                    yield a, (e.dst, q2), e.guard, e.resets, e.prob
            else:
                for e in t2.out(q2, a):
                    yield a, (q1, e.dst), e.guard, e.resets, e.prob

    if reachable_only:
        pairs = [(t1.init, t2.init)]
        seen = set(pairs)
        i = 0
        while i < len(pairs):
            for _a, d, *_ in moves(*pairs[i]):
                if d not in seen:
                    seen.add(d)
                    pairs.append(d)
            i += 1
    else:
        pairs = [(q1, q2) for q1 in t1.locations for q2 in t2.locations]
    trs = []
    lab = {}
    for q1, q2 in pairs:
        for a, (d1, d2), g, r, p in moves(q1, q2):
            trs.append(PTATransition(name(q1, q2), a, name(d1, d2), g, r, p))
        l1, l2 = t1.label(q1), t2.label(q2)
        lab[name(q1, q2)] = (l1 | l2) if labels == "union" else (l1 & l2)
    locs = [name(q1, q2) for q1, q2 in pairs]
    trap = "trap"
    while trap in locs:
        trap += "_"
    return PTA(list(t1.clocks) + list(t2.clocks), symbols, locs, name(t1.init, t2.init), trs, lab,
               set(t1.propositions) | set(t2.propositions), trap)


# ---------------------------------------------------------------------------
# simulation


@dataclass
class ConcreteRun:
    """(q0, xi0) -(tau0, a0)-> (q1, xi1) ... with the probability of each step."""

    configs: list
    delays: list = field(default_factory=list)
    symbols: list = field(default_factory=list)
    probs: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.symbols)

    def measure(self) -> Fraction:
        out = Fraction(1)
        for p in self.probs:
            out *= p
        return out


def _sample(dist, rng):
    if len(dist) == 1:
        return dist[0]
    u = rng.random()
    acc = 0.0
    for item in dist:
        acc += float(item[1])
        if u < acc:
            return item
    return dist[-1]


def random_delay(rng: random.Random, bound: int, max_den: int = 8) -> Fraction:
    den = rng.randint(1, max_den)
    return Fraction(rng.randint(0, bound * den), den)


def simulate(t: PTA, semantics: str = URGENT, steps: int = 10, seed=None, policy=None,
             delay_bound: int | None = None) -> ConcreteRun:
    """Sample a concrete run with rational delays.

    Classical semantics: ``policy(config, rng) -> (tau, symbol)`` if given,
    otherwise a random delay (denominator <= 8, at most ``delay_bound``) and a
    random symbol among those with transitions. Urgent semantics needs no delay
    policy; ``policy(config, symbols, rng) -> symbol`` may pick among offered symbols.
    """
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    if semantics not in SEMANTICS:
        raise ValueError(f"unknown semantics {semantics!r}")
    if delay_bound is None:
        delay_bound = max(t.constants() | {0}) + 2
    c = Config.of(t.init, t.zero())
    run = ConcreteRun([c])
    for _ in range(steps):
        if semantics == CLASSICAL:
            if policy is not None:
                tau, a = policy(c, rng)
            else:
                tau = random_delay(rng, delay_bound)
                syms = t.symbols if c.loc == t.trap else t.symbols_at(c.loc)
                if not syms:
                    break
                a = rng.choice(list(syms))
            dist = classical_steps(t, c, tau, a)
            if not dist:
                break
        else:
            st = urgent_steps(t, c)
            tau = st.tau
            syms = sorted(st.options)
            a = policy(c, syms, rng) if policy is not None else rng.choice(syms)
            dist = st.options[a]
        nxt, p = _sample(dist, rng)
        run.configs.append(nxt)
        run.delays.append(Fraction(tau))
        run.symbols.append(a)
        run.probs.append(p)
        c = nxt
    return run
