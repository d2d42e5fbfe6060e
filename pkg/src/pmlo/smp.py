"""Semi-Markov processes: finite labelled transition systems with per-symbol distributions."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ModelError


@dataclass(frozen=True)
class Transition:
    src: str
    symbol: str
    dst: str
    prob: Fraction


class SMP:
    """Validated, immutable semi-Markov process.

    ``post(q, a)`` lists ``(q', p)`` pairs; for every ``(q, a)`` with
    successors the probabilities sum to exactly 1.
    """

    __slots__ = ("symbols", "propositions", "states", "init", "transitions", "labels",
                 "_post", "_enabled")

    def __init__(self, symbols: Iterable[str], states: Iterable[str], init: str,
                 transitions: Iterable, labels: Mapping[str, Iterable[str]] | None = None,
                 propositions: Iterable[str] | None = None):
        self.symbols = tuple(dict.fromkeys(symbols))
        self.states = tuple(dict.fromkeys(states))
        self.init = init
        trs = []
        for t in transitions:
            if not isinstance(t, Transition):
                src, sym, dst, p = t
                t = Transition(src, sym, dst, Fraction(p))
            trs.append(t)
        self.transitions = tuple(trs)
        labels = labels or {}
        self.labels = {q: frozenset(labels.get(q, ())) for q in self.states}
        props = set(propositions or ())
        for ls in self.labels.values():
            props |= ls
        self.propositions = tuple(sorted(props))
        self._validate(labels)
        post: dict = {}
        for t in self.transitions:
            post.setdefault(t.src, {}).setdefault(t.symbol, []).append((t.dst, t.prob))
        self._post = {q: {a: tuple(v) for a, v in d.items()} for q, d in post.items()}
        self._enabled = {q: tuple(a for a in self.symbols if a in self._post.get(q, {}))
                         for q in self.states}

    def _validate(self, labels) -> None:
        sset, aset = set(self.states), set(self.symbols)
        if self.init not in sset:
            raise ModelError(f"initial state {self.init!r} is not declared", code="UNKNOWN_REF")
        for q in labels:
            if q not in sset:
                raise ModelError(f"label for unknown state {q!r}", code="UNKNOWN_REF")
        sums: dict = {}
        seen = set()
        for t in self.transitions:
            if t.src not in sset or t.dst not in sset:
                raise ModelError(f"transition {t.src} {t.symbol} {t.dst}: unknown state",
                                 code="UNKNOWN_REF")
            if t.symbol not in aset:
                raise ModelError(f"transition {t.src} {t.symbol} {t.dst}: unknown symbol",
                                 code="UNKNOWN_REF")
            if t.prob <= 0:
                raise ModelError(f"transition {t.src} {t.symbol} {t.dst} has probability {t.prob}",
                                 code="ZERO_PROB")
            if t.prob > 1:
                raise ModelError(f"transition {t.src} {t.symbol} {t.dst} has probability {t.prob}",
                                 code="PROB_SUM")
            key = (t.src, t.symbol, t.dst)
            if key in seen:
                raise ModelError(f"duplicate transition {t.src} {t.symbol} {t.dst}", code="MODEL")
            seen.add(key)
            sums[(t.src, t.symbol)] = sums.get((t.src, t.symbol), 0) + t.prob
        for (q, a), s in sums.items():
            if s != 1:
                raise ModelError(f"probabilities of ({q}, {a}) sum to {s}", code="PROB_SUM")

    # queries
    def post(self, q: str, a: str) -> tuple:
        return self._post.get(q, {}).get(a, ())

    def enabled(self, q: str) -> tuple:
        return self._enabled[q]

    def successors(self, q: str) -> set:
        return {d for a in self.enabled(q) for d, _ in self.post(q, a)}

    def label(self, q: str) -> frozenset:
        return self.labels[q]

    def is_markov(self) -> bool:
        return all(len(self._enabled[q]) <= 1 for q in self.states)

    def reachable_states(self) -> list:
        seen = {self.init}
        order = [self.init]
        i = 0
        while i < len(order):
            q = order[i]
            i += 1
            for a in self.enabled(q):
                for d, _ in self.post(q, a):
                    if d not in seen:
                        seen.add(d)
                        order.append(d)
        return order

    def dead_ends(self, reachable_only: bool = True) -> list:
        pool = self.reachable_states() if reachable_only else self.states
        return [q for q in pool if not self._enabled[q]]

    def check_no_dead_ends(self) -> None:
        dead = self.dead_ends()
        if dead:
            raise ModelError(f"reachable state {dead[0]!r} has no outgoing transition "
                             f"({len(dead)} dead end(s))", code="DEAD_END")

    def __eq__(self, other) -> bool:
        if not isinstance(other, SMP):
            return NotImplemented
        return (self.symbols == other.symbols and self.states == other.states
                and self.init == other.init and self.labels == other.labels
                and set(self.transitions) == set(other.transitions)
                and self.propositions == other.propositions)

    def __repr__(self) -> str:
        return (f"SMP({len(self.states)} states, {len(self.symbols)} symbols, "
                f"{len(self.transitions)} transitions)")

    def relabel(self, mapping: Mapping[str, str]) -> "SMP":
        """Isomorphic copy with states renamed through ``mapping``."""
        return SMP(self.symbols, [mapping[q] for q in self.states], mapping[self.init],
                   [Transition(mapping[t.src], t.symbol, mapping[t.dst], t.prob) for t in self.transitions],
                   {mapping[q]: ls for q, ls in self.labels.items()}, self.propositions)


# ---------------------------------------------------------------------------
# runs and measure


@dataclass(frozen=True)
class FiniteRun:
    """q0 a0 q1 a1 ... qn."""

    states: tuple
    symbols: tuple = ()

    def __post_init__(self):
        if len(self.states) != len(self.symbols) + 1:
            raise ValueError("a run has one more state than symbols")

    def __len__(self) -> int:
        return len(self.symbols)

    def state(self, k: int):
        return self.states[k]

    def prefix(self, k: int) -> "FiniteRun":
        return FiniteRun(self.states[: k + 1], self.symbols[:k])

    def is_prefix_of(self, other: "FiniteRun") -> bool:
        return len(self) <= len(other) and other.prefix(len(self)) == self

    def extend(self, symbol, state) -> "FiniteRun":
        return FiniteRun(self.states + (state,), self.symbols + (symbol,))


def step_probability(m: SMP, q, a, q2) -> Fraction:
    for d, p in m.post(q, a):
        if d == q2:
            return p
    return Fraction(0)


def cylinder_measure(m: SMP, run: FiniteRun) -> Fraction:
    """Product of transition probabilities along ``run`` (1 for the empty run)."""
    if run.states[0] != m.init:
        raise ModelError(f"run starts in {run.states[0]!r}, not the initial state", code="NOT_A_RUN")
    out = Fraction(1)
    for i, a in enumerate(run.symbols):
        p = step_probability(m, run.states[i], a, run.states[i + 1])
        if p == 0:
            raise ModelError(f"step {i} ({run.states[i]} {a} {run.states[i + 1]}) is not a transition",
                             code="NOT_A_RUN")
        out *= p
    return out


MarkovianAdversary = Mapping  # state -> symbol


def validate_adversary(m: SMP, adv: MarkovianAdversary) -> None:
    for q, a in adv.items():
        if a not in m.enabled(q):
            raise ModelError(f"adversary picks {a!r} at {q!r}, which has no such transition",
                             code="MODEL")


def sample_run(m: SMP, adv: MarkovianAdversary, steps: int, seed=None) -> FiniteRun:
    """Draw a run of ``steps`` transitions under a Markovian adversary.

    ``seed`` may be an int or a :class:`random.Random`.
    """
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    q = m.init
    states, symbols = [q], []
    for _ in range(steps):
        a = adv.get(q)
        if a is None:
            en = m.enabled(q)
            if len(en) != 1:
                raise ModelError(f"adversary undefined at {q!r}", code="MODEL")
            a = en[0]
        succ = m.post(q, a)
        if not succ:
            raise ModelError(f"dead end at {q!r} under symbol {a!r}", code="DEAD_END")
        q = _draw(succ, rng)
        symbols.append(a)
        states.append(q)
    return FiniteRun(tuple(states), tuple(symbols))


def _draw(dist: Sequence, rng: random.Random):
    if len(dist) == 1:
        return dist[0][0]
    u = Fraction(rng.random())
    acc = Fraction(0)
    for d, p in dist:
        acc += p
        if u < acc:
            return d
    return dist[-1][0]


def markovian_adversaries(m: SMP, states: Iterable | None = None):
    """Every deterministic Markovian adversary (dict state -> symbol) over ``states``."""
    import itertools

    pool = [q for q in (states if states is not None else m.states) if m.enabled(q)]
    for choice in itertools.product(*(m.enabled(q) for q in pool)):
        yield dict(zip(pool, choice))
