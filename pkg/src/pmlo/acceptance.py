"""Emerson-Lei acceptance conditions over integer marks.

A condition is a positive boolean formula over ``Inf(m)`` / ``Fin(m)`` atoms,
encoded as nested tuples::

    ("t",)  ("f",)  ("inf", m)  ("fin", m)  ("and", a, b, ...)  ("or", a, b, ...)

A run is accepting when the formula holds for the set of marks it sees
infinitely often. Mark sets are passed around as int bitmasks.
"""

from __future__ import annotations

from typing import Callable, Mapping

TRUE = ("t",)
FALSE = ("f",)


def inf(m: int) -> tuple:
    return ("inf", m)


def fin(m: int) -> tuple:
    return ("fin", m)


def _junction(op: str, parts) -> tuple:
    unit, zero = (TRUE, FALSE) if op == "and" else (FALSE, TRUE)
    flat = []
    seen = set()
    for p in parts:
        if p == zero:
            return zero
        if p == unit:
            continue
        items = p[1:] if p[0] == op else (p,)
        for q in items:
            if q not in seen:
                seen.add(q)
                flat.append(q)
    if not flat:
        return unit
    if len(flat) == 1:
        return flat[0]
    return (op, *flat)


def conj(*parts) -> tuple:
    return _junction("and", parts)


def disj(*parts) -> tuple:
    return _junction("or", parts)


def holds(acc: tuple, seen: int) -> bool:
    """Evaluate on the bitmask of marks seen infinitely often."""
    tag = acc[0]
    if tag == "t":
        return True
    if tag == "f":
        return False
    if tag == "inf":
        return bool(seen >> acc[1] & 1)
    if tag == "fin":
        return not seen >> acc[1] & 1
    if tag == "and":
        return all(holds(a, seen) for a in acc[1:])
    return any(holds(a, seen) for a in acc[1:])


def dual(acc: tuple) -> tuple:
    """Condition accepting exactly the mark sets ``acc`` rejects."""
    tag = acc[0]
    if tag == "t":
        return FALSE
    if tag == "f":
        return TRUE
    if tag == "inf":
        return fin(acc[1])
    if tag == "fin":
        return inf(acc[1])
    parts = [dual(a) for a in acc[1:]]
    return disj(*parts) if tag == "and" else conj(*parts)


def marks(acc: tuple) -> set:
    tag = acc[0]
    if tag in ("inf", "fin"):
        return {acc[1]}
    out = set()
    for a in acc[1:] if tag in ("and", "or") else ():
        out |= marks(a)
    return out


def fin_marks(acc: tuple) -> set:
    tag = acc[0]
    if tag == "fin":
        return {acc[1]}
    if tag in ("and", "or"):
        out = set()
        for a in acc[1:]:
            out |= fin_marks(a)
        return out
    return set()


def rename(acc: tuple, f: Callable[[int], int] | Mapping[int, int]) -> tuple:
    get = f.__getitem__ if isinstance(f, Mapping) else f
    tag = acc[0]
    if tag in ("inf", "fin"):
        return (tag, get(acc[1]))
    if tag in ("and", "or"):
        parts = [rename(a, get) for a in acc[1:]]
        return conj(*parts) if tag == "and" else disj(*parts)
    return acc


def assign(acc: tuple, fin_values: Mapping[int, bool] = {}, inf_values: Mapping[int, bool] = {}) -> tuple:
    """Replace chosen atoms by constants and simplify."""
    tag = acc[0]
    if tag == "fin":
        v = fin_values.get(acc[1])
        return acc if v is None else (TRUE if v else FALSE)
    if tag == "inf":
        v = inf_values.get(acc[1])
        return acc if v is None else (TRUE if v else FALSE)
    if tag in ("and", "or"):
        parts = [assign(a, fin_values, inf_values) for a in acc[1:]]
        return conj(*parts) if tag == "and" else disj(*parts)
    return acc


def absent(acc: tuple, m: int) -> tuple:
    """Condition under the knowledge that mark ``m`` is never seen."""
    return assign(acc, {m: True}, {m: False})


def restrict_to(acc: tuple, available: int) -> tuple:
    """Fix every mark outside the bitmask ``available`` as never seen."""
    out = acc
    for m in marks(acc):
        if not available >> m & 1:
            out = absent(out, m)
    return out


def to_text(acc: tuple) -> str:
    tag = acc[0]
    if tag == "t":
        return "t"
    if tag == "f":
        return "f"
    if tag == "inf":
        return f"Inf({acc[1]})"
    if tag == "fin":
        return f"Fin({acc[1]})"
    sep = " & " if tag == "and" else " | "
    return "(" + sep.join(to_text(a) for a in acc[1:]) + ")"


def buchi(m: int = 0) -> tuple:
    return inf(m)


def co_buchi(m: int = 0) -> tuple:
    return fin(m)
