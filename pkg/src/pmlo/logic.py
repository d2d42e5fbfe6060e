"""PMLO formulas: syntax tree, concrete parser/printer, classification, desugaring.

Concrete syntax (one formula per text)::

    exists t. phi        existsS X. phi       forall t. phi      forallS X. phi
    !phi   phi | psi   phi & psi   phi -> psi   (phi)   true   false
    B(t)   t < u   t <= u   t = u   t = u + 1   t in X
    x@t ~ c     x@t - y@t ~ c     x+@t ~ c           ~ in < <= = != >= >
    E P{~ p}[ phi ]     E P{~ p}[ phi | psi ]     A P{~ p}[ phi ]

Inside ``[...]`` a top-level ``|`` separates the condition, so a disjunctive
body must be parenthesised. ``&``, ``->``, ``forall`` and the order sugar are
expanded to the core connectives (``!``, ``|``, ``exists``) when parsing; the
printer folds the same shapes back, so printing and re-parsing is the identity.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Union

from .errors import FormulaSyntaxError, LDiffUndecidable, ScopeError, UnsupportedFormula

RELATIONS = ("<", "<=", "=", "!=", ">=", ">")

# complement used for universal probability operators: forall P~p == not exists P(not ~)p
NEGATED_REL = {"<": ">=", "<=": ">", "=": "!=", "!=": "=", ">=": "<", ">": "<="}


def compare(rel: str, a, b) -> bool:
    if rel == "<":
        return a < b
    if rel == "<=":
        return a <= b
    if rel == "=":
        return a == b
    if rel == "!=":
        return a != b
    if rel == ">=":
        return a >= b
    if rel == ">":
        return a > b
    raise ValueError(f"unknown relation {rel!r}")


# ---------------------------------------------------------------------------
# syntax tree


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Prop:
    name: str
    var: str


@dataclass(frozen=True)
class ClockAtom:
    """Clock predicate evaluated at one step ``var``.

    kind ``"x"``: x ~ c; ``"xy"``: x ~ y + c; ``"x+"``: value of x just before
    the discrete move of the step, ~ c.
    """

    kind: str
    clock: str
    other: str | None
    rel: str
    const: int
    var: str

    @property
    def symbol(self) -> str:
        """Canonical proposition name of the predicate (track / label name)."""
        if self.kind == "x":
            return f"{self.clock}{self.rel}{self.const}"
        if self.kind == "xy":
            return f"{self.clock}-{self.other}{self.rel}{self.const}"
        return f"{self.clock}+{self.rel}{self.const}"

    def holds(self, clocks: Mapping[str, Fraction]) -> bool:
        if self.kind == "xy":
            return compare(self.rel, clocks[self.clock] - clocks[self.other], self.const)
        return compare(self.rel, clocks[self.clock], self.const)


@dataclass(frozen=True)
class Less:
    left: str
    right: str


@dataclass(frozen=True)
class Succ:
    """``nxt = prev + 1``."""

    prev: str
    nxt: str


@dataclass(frozen=True)
class Member:
    var: str
    setvar: str


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class ExistsSet:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Prob:
    rel: str
    threshold: Fraction
    body: "Formula"
    cond: "Formula" = field(default=Const(True))
    universal: bool = False


Formula = Union[Const, Prop, ClockAtom, Less, Succ, Member, Exists, ExistsSet, Not, Or, Prob]

TRUE = Const(True)
FALSE = Const(False)
ATOMS = (Const, Prop, ClockAtom, Less, Succ, Member)


def And(a: Formula, b: Formula) -> Formula:
    return Not(Or(Not(a), Not(b)))


def Implies(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def Forall(var: str, body: Formula) -> Formula:
    return Not(Exists(var, Not(body)))


def ForallSet(var: str, body: Formula) -> Formula:
    return Not(ExistsSet(var, Not(body)))


def conj(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def children(f: Formula) -> tuple:
    if isinstance(f, (Exists, ExistsSet, Not)):
        return (f.body,)
    if isinstance(f, Or):
        return (f.left, f.right)
    if isinstance(f, Prob):
        return (f.body, f.cond)
    return ()


def walk(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def free_vars(f: Formula) -> tuple[frozenset, frozenset]:
    """(free first-order variables, free second-order variables)."""
    if isinstance(f, Const):
        return frozenset(), frozenset()
    if isinstance(f, (Prop, ClockAtom)):
        return frozenset([f.var]), frozenset()
    if isinstance(f, Less):
        return frozenset([f.left, f.right]), frozenset()
    if isinstance(f, Succ):
        return frozenset([f.prev, f.nxt]), frozenset()
    if isinstance(f, Member):
        return frozenset([f.var]), frozenset([f.setvar])
    if isinstance(f, Exists):
        a, b = free_vars(f.body)
        return a - {f.var}, b
    if isinstance(f, ExistsSet):
        a, b = free_vars(f.body)
        return a, b - {f.var}
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, Or):
        a1, b1 = free_vars(f.left)
        a2, b2 = free_vars(f.right)
        return a1 | a2, b1 | b2
    if isinstance(f, Prob):
        a1, b1 = free_vars(f.body)
        a2, b2 = free_vars(f.cond)
        return a1 | a2, b1 | b2
    raise TypeError(f)


def is_closed(f: Formula) -> bool:
    a, b = free_vars(f)
    return not a and not b


def propositions(f: Formula) -> frozenset:
    return frozenset(g.name for g in walk(f) if isinstance(g, Prop))


def clock_atoms(f: Formula) -> frozenset:
    return frozenset(g for g in walk(f) if isinstance(g, ClockAtom))


def prob_nodes(f: Formula) -> list:
    return [g for g in walk(f) if isinstance(g, Prob)]


def depth(f: Formula) -> int:
    ch = children(f)
    return 0 if not ch else 1 + max(depth(c) for c in ch)


# ---------------------------------------------------------------------------
# printing


def _fmt_threshold(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def to_text(f: Formula) -> str:
    """Print ``f`` in the concrete syntax; ``parse_formula(to_text(f)) == f``."""
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Prop):
        return f"{f.name}({f.var})"
    if isinstance(f, ClockAtom):
        if f.kind == "x":
            return f"{f.clock}@{f.var} {f.rel} {f.const}"
        if f.kind == "xy":
            return f"{f.clock}@{f.var} - {f.other}@{f.var} {f.rel} {f.const}"
        return f"{f.clock}+@{f.var} {f.rel} {f.const}"
    if isinstance(f, Less):
        return f"{f.left} < {f.right}"
    if isinstance(f, Succ):
        return f"{f.nxt} = {f.prev} + 1"
    if isinstance(f, Member):
        return f"{f.var} in {f.setvar}"
    if isinstance(f, Exists):
        return f"(exists {f.var}. {to_text(f.body)})"
    if isinstance(f, ExistsSet):
        return f"(existsS {f.var}. {to_text(f.body)})"
    if isinstance(f, Not):
        g = f.body
        if isinstance(g, Or) and isinstance(g.left, Not) and isinstance(g.right, Not):
            return f"({to_text(g.left.body)} & {to_text(g.right.body)})"
        if isinstance(g, Exists) and isinstance(g.body, Not):
            return f"(forall {g.var}. {to_text(g.body.body)})"
        if isinstance(g, ExistsSet) and isinstance(g.body, Not):
            return f"(forallS {g.var}. {to_text(g.body.body)})"
        return f"!{to_text(g)}"
    if isinstance(f, Or):
        if isinstance(f.left, Not):
            return f"({to_text(f.left.body)} -> {to_text(f.right)})"
        return f"({to_text(f.left)} | {to_text(f.right)})"
    if isinstance(f, Prob):
        q = "A" if f.universal else "E"
        head = f"{q} P{{{f.rel} {_fmt_threshold(f.threshold)}}}"
        if f.cond == TRUE:
            return f"{head}[ {to_text(f.body)} ]"
        return f"{head}[ {to_text(f.body)} | {to_text(f.cond)} ]"
    raise TypeError(f)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>->|<=|>=|!=|[()\[\]{}.,!|&<>=@+\-/])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str, source: str | None) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", line=line,
                                     column=pos - line_start + 1, source=source)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        for i, ch in enumerate(m.group()):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


_KEYWORDS = {"exists", "existsS", "forall", "forallS", "in", "true", "false"}


class _Parser:
    def __init__(self, text: str, free_first, free_second, source):
        self.toks = _tokenize(text, source)
        self.i = 0
        self.source = source
        self.env: dict[str, str] = {}
        self.allow_or = True  # False directly inside [...] where | is the condition bar
        for v in free_first:
            self.env[v] = "first"
        for v in free_second:
            self.env[v] = "second"

    # token helpers
    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("op", "ident") and t.text == text

    def error(self, msg: str, tok: _Tok | None = None, cls=FormulaSyntaxError, **kw):
        tok = tok or self.peek()
        return cls(msg, line=tok.line, column=tok.col, source=self.source, **kw)

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            t = self.peek()
            raise self.error(f"expected {text!r}, found {t.text or 'end of input'!r}")
        return self.next()

    def ident(self) -> _Tok:
        t = self.peek()
        if t.kind != "ident" or t.text in _KEYWORDS:
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        return self.next()

    def var(self, sort: str) -> str:
        t = self.ident()
        got = self.env.get(t.text)
        if got is None:
            raise self.error(f"unbound variable {t.text!r}", t, cls=ScopeError)
        if got != sort:
            raise self.error(f"variable {t.text!r} is {got}-order, used as {sort}-order", t,
                             cls=ScopeError)
        return t.text

    def integer(self) -> int:
        neg = False
        if self.at("-"):
            self.next()
            neg = True
        t = self.peek()
        if t.kind != "num":
            raise self.error(f"expected integer, found {t.text or 'end of input'!r}")
        self.next()
        return -int(t.text) if neg else int(t.text)

    def rel(self) -> str:
        t = self.peek()
        if t.kind == "op" and t.text in RELATIONS:
            return self.next().text
        raise self.error(f"expected comparison operator, found {t.text or 'end of input'!r}")

    # grammar
    def parse(self) -> Formula:
        f = self.implication(allow_or=True)
        if self.peek().kind != "eof":
            raise self.error(f"unexpected {self.peek().text!r}")
        return f

    def implication(self, allow_or: bool) -> Formula:
        left = self.disjunction(allow_or)
        if self.at("->"):
            self.next()
            return Or(Not(left), self.implication(allow_or))
        return left

    def disjunction(self, allow_or: bool) -> Formula:
        left = self.conjunction()
        while allow_or and self.at("|"):
            self.next()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.at("&"):
            self.next()
            left = And(left, self.unary())
        return left

    def binder(self, sort: str, body_fn):
        names = [self.ident()]
        while self.at(","):
            self.next()
            names.append(self.ident())
        self.expect(".")
        saved = dict(self.env)
        for n in names:
            self.env[n.text] = sort
        body = body_fn()
        self.env = saved
        return [n.text for n in names], body

    def unary(self) -> Formula:
        t = self.peek()
        if self.at("!"):
            self.next()
            return Not(self.unary())
        if self.at("("):
            self.next()
            saved, self.allow_or = self.allow_or, True
            f = self.implication(allow_or=True)
            self.allow_or = saved
            self.expect(")")
            return f
        if t.kind != "ident":
            raise self.error(f"unexpected {t.text or 'end of input'!r}")
        word = t.text
        if word in ("exists", "forall", "existsS", "forallS"):
            self.next()
            sort = "second" if word.endswith("S") else "first"
            names, body = self.binder(sort, lambda: self.implication(self.allow_or))
            ctor = ExistsSet if sort == "second" else Exists
            for n in reversed(names):
                body = ctor(n, Not(body)) if word.startswith("forall") else ctor(n, body)
                if word.startswith("forall"):
                    body = Not(body)
            return body
        if word in ("true", "false"):
            self.next()
            return Const(word == "true")
        if word in ("E", "A") and self.at("P", 1) and self.at("{", 2):
            return self.prob()
        return self.atom()

    def prob(self) -> Formula:
        q = self.next().text
        self.next()
        self.expect("{")
        rel = self.rel()
        tok = self.peek()
        num = self.integer()
        den = 1
        if self.at("/"):
            self.next()
            den = self.integer()
            if den == 0:
                raise self.error("zero denominator", tok)
        p = Fraction(num, den)
        if not 0 <= p <= 1:
            raise self.error(f"threshold {p} outside [0,1]", tok)
        self.expect("}")
        self.expect("[")
        saved, self.allow_or = self.allow_or, False
        body = self.implication(allow_or=False)
        cond = TRUE
        if self.at("|"):
            self.next()
            cond = self.implication(allow_or=False)
        self.allow_or = saved
        self.expect("]")
        return Prob(rel, p, body, cond, universal=(q == "A"))

    def clock_tail(self, clock_tok: _Tok, plus: bool) -> Formula:
        self.expect("@")
        step = self.ident()
        if not plus and self.at("-") and self.peek(1).kind == "ident":
            self.next()
            other = self.ident()
            self.expect("@")
            step2 = self.ident()
            if step2.text != step.text:
                raise self.error(
                    f"clock comparison across steps {step.text} and {step2.text} "
                    "(model checking with such predicates is undecidable)",
                    clock_tok, cls=LDiffUndecidable)
            self._check_var(step, "first")
            rel = self.rel()
            c = self.integer()
            return ClockAtom("xy", clock_tok.text, other.text, rel, c, step.text)
        self._check_var(step, "first")
        rel = self.rel()
        c = self.integer()
        return ClockAtom("x+" if plus else "x", clock_tok.text, None, rel, c, step.text)

    def _check_var(self, tok: _Tok, sort: str):
        got = self.env.get(tok.text)
        if got is None:
            raise self.error(f"unbound variable {tok.text!r}", tok, cls=ScopeError)
        if got != sort:
            raise self.error(f"variable {tok.text!r} is {got}-order, used as {sort}-order", tok,
                             cls=ScopeError)

    def atom(self) -> Formula:
        name = self.ident()
        if self.at("("):
            self.next()
            v = self.var("first")
            self.expect(")")
            return Prop(name.text, v)
        if self.at("@"):
            return self.clock_tail(name, plus=False)
        if self.at("+") and self.at("@", 1):
            self.next()
            return self.clock_tail(name, plus=True)
        self._check_var(name, "first")
        left = name.text
        if self.at("in"):
            self.next()
            return Member(left, self.var("second"))
        op = self.rel()
        right = self.var("first")
        if op == "<":
            return Less(left, right)
        if op == ">":
            return Less(right, left)
        if op == "<=":
            return Not(Less(right, left))
        if op == ">=":
            return Not(Less(left, right))
        if op == "!=":
            return Or(Less(left, right), Less(right, left))
        if self.at("+"):
            self.next()
            one = self.peek()
            if self.integer() != 1:
                raise self.error("only successor 't = u + 1' is supported", one)
            return Succ(right, left)
        return And(Not(Less(left, right)), Not(Less(right, left)))


def parse_formula(text: str, free_first=(), free_second=(), source: str | None = None) -> Formula:
    """Parse concrete syntax into a :data:`Formula`.

    Variables must be bound or listed in ``free_first`` / ``free_second``.
    """
    return _Parser(text, free_first, free_second, source).parse()


# ---------------------------------------------------------------------------
# classification and desugaring

PROBABILITY_FREE = "probability-free"
QUALITATIVE = "qualitative"
FLAT_QUANTITATIVE = "flat-quantitative"
UNSUPPORTED = "unsupported"


def classify(f: Formula) -> str:
    nodes = prob_nodes(f)
    if not nodes:
        return PROBABILITY_FREE
    if all(n.threshold in (0, 1) for n in nodes):
        return QUALITATIVE
    for n in nodes:
        if prob_nodes(n.body) or prob_nodes(n.cond):
            return UNSUPPORTED
        if not (is_closed(n.body) and is_closed(n.cond)):
            return UNSUPPORTED
    return FLAT_QUANTITATIVE


def simplify(f: Formula) -> Formula:
    """Constant folding and double-negation removal."""
    if isinstance(f, Not):
        b = simplify(f.body)
        if isinstance(b, Const):
            return Const(not b.value)
        if isinstance(b, Not):
            return b.body
        return Not(b)
    if isinstance(f, Or):
        a, b = simplify(f.left), simplify(f.right)
        if a == TRUE or b == TRUE:
            return TRUE
        if a == FALSE:
            return b
        if b == FALSE:
            return a
        return Or(a, b)
    if isinstance(f, Exists):
        b = simplify(f.body)
        return b if isinstance(b, Const) else Exists(f.var, b)
    if isinstance(f, ExistsSet):
        b = simplify(f.body)
        return b if isinstance(b, Const) else ExistsSet(f.var, b)
    if isinstance(f, Prob):
        return Prob(f.rel, f.threshold, simplify(f.body), simplify(f.cond), f.universal)
    return f


def _reduce_qualitative(rel: str, p: Fraction, body: Formula, cond: Formula) -> Formula:
    if p == 0:
        psi = body if cond == TRUE else And(body, cond)
        if rel == ">=":
            return TRUE
        if rel == "<":
            return FALSE
        if rel in (">", "!="):
            return Prob(">", Fraction(0), psi)
        return Prob("=", Fraction(1), Not(psi))  # "=" and "<="
    # p == 1; conditional measure m1 <= m2 always, and m1 = m2 iff mu(cond & !body) = 0
    if rel == "<=":
        return TRUE
    if rel == ">":
        return FALSE
    bad = Not(body) if cond == TRUE else And(cond, Not(body))
    if rel in ("=", ">="):
        return Prob("=", Fraction(1), Not(bad))
    return Prob(">", Fraction(0), bad)  # "<" and "!="


def desugar(f: Formula) -> Formula:
    """Rewrite qualitative probability operators into E P{>0} / E P{=1} only.

    Universal operators become negated existentials over the complementary
    relation. Quantitative operators keep their threshold (children rewritten).
    """
    if isinstance(f, ATOMS):
        return f
    if isinstance(f, Not):
        return Not(desugar(f.body))
    if isinstance(f, Or):
        return Or(desugar(f.left), desugar(f.right))
    if isinstance(f, Exists):
        return Exists(f.var, desugar(f.body))
    if isinstance(f, ExistsSet):
        return ExistsSet(f.var, desugar(f.body))
    if isinstance(f, Prob):
        if f.universal:
            return Not(desugar(Prob(NEGATED_REL[f.rel], f.threshold, f.body, f.cond)))
        body, cond = desugar(f.body), desugar(f.cond)
        if f.threshold in (0, 1):
            return simplify(_reduce_qualitative(f.rel, f.threshold, body, cond))
        return Prob(f.rel, f.threshold, body, cond)
    raise TypeError(f)


def is_primitive_form(f: Formula) -> bool:
    """True iff every probability node is E P{>0}[.] or E P{=1}[.] without condition."""
    for n in prob_nodes(f):
        if n.universal or n.cond != TRUE:
            return False
        if (n.rel, n.threshold) not in ((">", 0), ("=", 1)):
            return False
    return True


# ---------------------------------------------------------------------------
# bounded evaluation on ultimately-zero words


def _letter_props(letter) -> frozenset:
    if isinstance(letter, Mapping):
        return frozenset(k for k, v in letter.items() if v)
    return frozenset(letter)


def evaluate_wmlo_bounded(f: Formula, stem, valuation: Mapping | None = None,
                          spread: int = 2) -> bool:
    """Truth of a probability-free, clock-free formula on ``stem`` followed by 0^omega.

    ``stem`` is a sequence of letters (sets of true proposition names, or
    name->bool mappings). ``valuation`` maps first-order variables to naturals
    and second-order variables to finite sets. A quantifier at nesting level i
    ranges over positions below ``base + spread * i`` (sets: subsets thereof),
    where ``base`` covers the stem and the free valuation. Growing the window
    with the nesting level keeps "there is always a later position" true for
    every inner quantifier, which a fixed finite window would violate.
    """
    letters = [_letter_props(a) for a in stem]
    val = dict(valuation or {})
    base = len(letters)
    for v in val.values():
        if isinstance(v, int):
            base = max(base, v + 1)
        else:
            base = max(base, max(v, default=-1) + 1)
    n = len(letters)

    free_cache: dict = {}
    memo: dict = {}

    def free_of(g):
        got = free_cache.get(id(g))
        if got is None:
            a, b = free_vars(g)
            got = free_cache[id(g)] = (g, tuple(sorted(a | b)))
        return got[1]

    def holds(g: Formula, env: dict, level: int) -> bool:
        if isinstance(g, Const):
            return g.value
        if isinstance(g, Prop):
            pos = env[g.var]
            return pos < n and g.name in letters[pos]
        if isinstance(g, Less):
            return env[g.left] < env[g.right]
        if isinstance(g, Succ):
            return env[g.nxt] == env[g.prev] + 1
        if isinstance(g, Member):
            return env[g.var] in env[g.setvar]
        if isinstance(g, Not):
            return not holds(g.body, env, level)
        if isinstance(g, Or):
            return holds(g.left, env, level) or holds(g.right, env, level)
        if isinstance(g, (Exists, ExistsSet)):
            key = (id(g), level, tuple(env[v] for v in free_of(g)))
            got = memo.get(key)
            if got is None:
                got = memo[key] = quantify(g, env, level)
            return got
        raise UnsupportedFormula(f"bounded evaluation does not support {type(g).__name__}")

    def quantify(g, env, level) -> bool:
        bound = base + spread * (level + 1)
        if g.var not in free_of(g.body):
            # vacuous binder: domains are nonempty
            return holds(g.body, env, level + 1)
        if isinstance(g, Exists):
            return any(holds(g.body, {**env, g.var: k}, level + 1) for k in range(bound))
        for r in range(bound + 1):
            for comb in itertools.combinations(range(bound), r):
                if holds(g.body, {**env, g.var: frozenset(comb)}, level + 1):
                    return True
        return False

    return holds(f, val, 0)
