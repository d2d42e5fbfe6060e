"""Text formats: ``.smp`` models, ``.pta`` models, ``.pmlo`` formulas, automaton and region-graph exports.

``.smp``::

    # comment
    symbols: a b
    propositions: acc          # optional, labels add to it
    states:
      q0 init labels {acc}
      q1
    trans: q0 a q1 1/2
    trans: q0 a q0 1/2

``.pta`` adds ``clocks: x y`` and transition lines
``trans: q a q' [guard] {resets} p`` where the guard uses ``x ~ c``,
``x - y ~ c``, ``&``, ``|``, parentheses and ``true``.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path

from . import acceptance as accmod
from . import logic as L
from .automata import Automaton
from .errors import FormulaSyntaxError, ModelError, PmloError
from .pta import PTA, CAnd, CAtom, COr, CTrue, constraint_text
from .smp import SMP

HEADERS = ("symbols", "propositions", "clocks", "states", "trans")
_NAME = r"[^\s{}\[\](),#]+"
_STATE_RE = re.compile(rf"^({_NAME})((?:\s+init)?)(?:\s+labels\s*\{{([^}}]*)\}})?\s*$")
_REL = r"<=|>=|!=|<|>|="


def _err(msg, line, source, code="SYNTAX"):
    return FormulaSyntaxError(msg, code=code, line=line, source=source)


def _prob(tok: str, line, source) -> Fraction:
    try:
        p = Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise _err(f"bad probability {tok!r}", line, source) from None
    return p


def _fmt_prob(p: Fraction) -> str:
    p = Fraction(p)
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _parse_common(text: str, source, trans_parser, allow_clocks: bool):
    sec = {"symbols": [], "propositions": [], "clocks": []}
    states, init, labels, trans = [], [], {}, []
    current = None
    for no, line in _lines(text):
        head, sep, rest = line.partition(":")
        head = head.strip()
        if sep and head in HEADERS:
            if head == "clocks" and not allow_clocks:
                raise _err("'clocks:' is only allowed in .pta files", no, source)
            if head == "trans":
                trans.append(trans_parser(rest.strip(), no))
                current = None
                continue
            current = head
            line = rest.strip()
            if not line:
                continue
        if current is None:
            raise _err(f"line outside any section: {line!r}", no, source)
        if current == "states":
            m = _STATE_RE.match(line)
            if not m:
                raise _err(f"bad state declaration {line!r}", no, source)
            name = m.group(1)
            states.append(name)
            if m.group(2):
                init.append((name, no))
            if m.group(3) is not None:
                labels[name] = [x.strip() for x in m.group(3).split(",") if x.strip()]
        else:
            sec[current].extend(line.split())
    if len(init) != 1:
        raise _err("exactly one state must carry the 'init' marker",
                   init[1][1] if len(init) > 1 else None, source)
    return sec, states, init[0][0], labels, trans


def _check_lines(trans, states, symbols, source) -> None:
    """Reference and probability checks that can point at a line."""
    sset, aset = set(states), set(symbols)
    first: dict = {}
    sums: dict = {}
    for q, a, q2, p, no in trans:
        for ref, pool, what in ((q, sset, "state"), (a, aset, "symbol"), (q2, sset, "state")):
            if ref not in pool:
                raise ModelError(f"unknown {what} {ref!r}", code="UNKNOWN_REF", line=no, source=source)
        if p <= 0:
            raise ModelError(f"probability {p} is not positive", code="ZERO_PROB", line=no, source=source)
        first.setdefault((q, a), no)
        sums[(q, a)] = sums.get((q, a), 0) + p
    for k, tot in sums.items():
        if tot != 1:
            raise ModelError(f"probabilities of ({k[0]}, {k[1]}) sum to {tot}", code="PROB_SUM",
                             line=first[k], source=source)


def parse_smp(text: str, source: str | None = None) -> SMP:
    def tr(rest, no):
        parts = rest.split()
        if len(parts) != 4:
            raise _err("expected 'trans: q a q' p'", no, source)
        return (parts[0], parts[1], parts[2], _prob(parts[3], no, source), no)

    sec, states, init, labels, trans = _parse_common(text, source, tr, False)
    _check_lines(trans, states, sec["symbols"], source)
    try:
        return SMP(sec["symbols"], states, init, [t[:4] for t in trans], labels, sec["propositions"])
    except ModelError as e:
        raise ModelError(e.args[0], code=e.code, source=source) from None


def write_smp(m: SMP) -> str:
    out = ["symbols: " + " ".join(m.symbols)]
    extra = sorted(set(m.propositions) - set().union(*[m.label(q) for q in m.states]))
    if extra:
        out.append("propositions: " + " ".join(extra))
    out.append("states:")
    for q in m.states:
        out.append("  " + _state_line(q, q == m.init, m.label(q)))
    for q in m.states:
        for a in m.enabled(q):
            for q2, p in m.post(q, a):
                out.append(f"trans: {q} {a} {q2} {_fmt_prob(p)}")
    return "\n".join(out) + "\n"


def _state_line(q, is_init, lab) -> str:
    s = q + (" init" if is_init else "")
    if lab:
        s += " labels {" + ", ".join(sorted(lab)) + "}"
    return s


# ---------------------------------------------------------------------------
# guards and .pta


_GUARD_TOKEN = re.compile(rf"\s*(?:(\d+)|({_REL})|([&|()\-])|([A-Za-z_][A-Za-z0-9_']*))")


def parse_guard(text: str, line=None, source=None):
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _GUARD_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise _err(f"bad guard near {text[pos:]!r}", line, source)
        pos = m.end()
        num, rel, punct, name = m.groups()
        toks.append(("num", int(num)) if num else ("rel", rel) if rel else ("p", punct) if punct else ("id", name))
    i = [0]

    def peek():
        return toks[i[0]] if i[0] < len(toks) else (None, None)

    def take(kind=None, val=None):
        t = peek()
        if t[0] is None or (kind and t[0] != kind) or (val and t[1] != val):
            raise _err(f"guard: expected {val or kind} in {text!r}", line, source)
        i[0] += 1
        return t[1]

    def disj():
        g = conj()
        while peek() == ("p", "|"):
            take()
            g = COr(g, conj())
        return g

    def conj():
        g = atom()
        while peek() == ("p", "&"):
            take()
            g = CAnd(g, atom())
        return g

    def atom():
        if peek() == ("p", "("):
            take()
            g = disj()
            take("p", ")")
            return g
        name = take("id")
        if name == "true":
            return CTrue()
        other = None
        if peek() == ("p", "-"):
            take()
            other = take("id")
        rel = take("rel")
        sign = 1
        if peek() == ("p", "-"):
            take()
            sign = -1
        return CAtom(name, rel, sign * take("num"), other)

    if not toks:
        return CTrue()
    g = disj()
    if i[0] != len(toks):
        raise _err(f"trailing tokens in guard {text!r}", line, source)
    return g


_PTA_TRANS = re.compile(rf"^({_NAME})\s+({_NAME})\s+({_NAME})\s*\[([^\]]*)\]\s*\{{([^}}]*)\}}\s*(\S+)$")


def parse_pta(text: str, source: str | None = None) -> PTA:
    def tr(rest, no):
        m = _PTA_TRANS.match(rest)
        if not m:
            raise _err("expected 'trans: q a q' [guard] {resets} p'", no, source)
        q, a, q2, g, r, p = m.groups()
        resets = [x.strip() for x in r.split(",") if x.strip()]
        return (q, a, q2, parse_guard(g, no, source), resets, _prob(p, no, source), no)

    sec, states, init, labels, trans = _parse_common(text, source, tr, True)
    _check_lines([(q, a, q2, p, no) for q, a, q2, _g, _r, p, no in trans], states, sec["symbols"], source)
    for *_, g, resets, _p, no in trans:
        for c in resets + [x for at in _atoms(g) for x in (at.clock, at.other) if x]:
            if c not in sec["clocks"]:
                raise ModelError(f"unknown clock {c!r}", code="UNKNOWN_REF", line=no, source=source)
    try:
        return PTA(sec["clocks"], sec["symbols"], states, init, [t[:6] for t in trans], labels,
                   sec["propositions"])
    except ModelError as e:
        raise ModelError(e.args[0], code=e.code, source=source) from None


def _atoms(g):
    if isinstance(g, CAtom):
        return [g]
    if isinstance(g, (CAnd, COr)):
        return _atoms(g.left) + _atoms(g.right)
    return []


def write_pta(t: PTA) -> str:
    out = ["clocks: " + " ".join(t.clocks), "symbols: " + " ".join(t.symbols)]
    used = set().union(*[t.label(q) for q in t.locations])
    extra = sorted(set(t.propositions) - used)
    if extra:
        out.append("propositions: " + " ".join(extra))
    out.append("states:")
    for q in t.locations:
        out.append("  " + _state_line(q, q == t.init, t.label(q)))
    for e in t.transitions:
        g = constraint_text(e.guard)
        out.append(f"trans: {e.src} {e.symbol} {e.dst} [{g}] {{{', '.join(sorted(e.resets))}}} {_fmt_prob(e.prob)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# files


def read_formula(path) -> L.Formula:
    p = Path(path)
    return L.parse_formula(p.read_text(encoding="utf-8"), source=str(p))


def read_smp(path) -> SMP:
    p = Path(path)
    return parse_smp(p.read_text(encoding="utf-8"), source=str(p))


def read_pta(path) -> PTA:
    p = Path(path)
    return parse_pta(p.read_text(encoding="utf-8"), source=str(p))


def write_file(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# automaton debug export


def _cubes(letters: set, width: int) -> list:
    """Cover a set of letters (ints) with don't-care cubes ``(value, care_mask)``."""
    full = (1 << width) - 1
    layer = {(x, full) for x in letters}
    primes = set()
    while layer:
        nxt = set()
        merged = set()
        for v, care in layer:
            for b in range(width):
                bit = 1 << b
                if care & bit and (v ^ bit, care) in layer:
                    nxt.add((v & ~bit, care & ~bit))
                    merged.add((v, care))
                    merged.add((v ^ bit, care))
        primes |= layer - merged
        layer = nxt
    remaining = set(letters)
    chosen = []

    def covers(c):
        v, care = c
        return {x for x in remaining if x & care == v}

    for c in sorted(primes, key=lambda c: (-bin(full & ~c[1]).count("1"), c)):
        hit = covers(c)
        if hit:
            chosen.append(c)
            remaining -= hit
    return chosen


def _cube_text(cube, width) -> str:
    v, care = cube
    return "".join("-" if not care >> b & 1 else str(v >> b & 1) for b in range(width))


def write_automaton(a: Automaton) -> str:
    """States, edges with care patterns over the tracks (bit i = track i), acceptance."""
    w = len(a.tracks)
    out = [
        "tracks: " + " ".join(a.tracks),
        f"states: {a.num_states}",
        f"init: {a.init}",
        "acceptance: " + accmod.to_text(a.acc),
    ]
    for q in range(a.num_states):
        groups: dict = {}
        for x in range(a.num_letters):
            groups.setdefault((a.succ[q][x], a.mark[q][x]), set()).add(x)
        for (d, mk), ls in sorted(groups.items()):
            marks = " ".join(str(i) for i in range(mk.bit_length()) if mk >> i & 1)
            for cube in _cubes(ls, w):
                out.append(f"edge: {q} [{_cube_text(cube, w) or 'true'}] {d} {{{marks}}}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# region-graph export


def region_json(key: tuple, clocks) -> dict:
    ints, zero, groups, diag = key
    return {
        "int": {c: ints[i] for i, c in enumerate(clocks)},
        "frac_zero": zero,
        "frac_order": [[clocks[i] for i in g] for g in groups],
        "diag": [
            {"pair": [clocks[d[0]], clocks[d[1]]],
             **({"floor": d[2], "integral": d[3]} if len(d) == 4 else {"beyond": d[2]})}
            for d in diag
        ],
    }


def write_region_graph(graph, out_path) -> tuple[Path, Path]:
    """Write ``OUT.smp`` and the sidecar ``OUT.regions.json``; returns both paths."""
    base = Path(out_path)
    smp_path = base if base.suffix == ".smp" else base.with_suffix(".smp")
    side = smp_path.with_suffix(".regions.json")
    write_file(smp_path, write_smp(graph.smp))
    doc = {
        "c_max": graph.c_max,
        "semantics": graph.semantics,
        "clocks": list(graph.clocks),
        "top_int": graph.c_max + 1,
        "region_symbols": {s: region_json(k, graph.clocks) for k, s in graph.region_symbol.items()},
        "states": {f"s{i}": {"location": st.loc, "mark": st.mark,
                             "region": region_json(st.key, graph.clocks)}
                   for i, st in enumerate(graph.states)},
    }
    write_file(side, json.dumps(doc, indent=1, sort_keys=True))
    return smp_path, side


__all__ = [
    "parse_smp", "write_smp", "parse_pta", "write_pta", "parse_guard", "read_formula", "read_smp",
    "read_pta", "write_automaton", "write_region_graph", "region_json", "write_file", "PmloError",
]
