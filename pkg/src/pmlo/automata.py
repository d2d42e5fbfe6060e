"""Deterministic complete automata over boolean-track alphabets, and the WMLO compiler.

An :class:`Automaton` reads letters that assign a bit to each of its *support*
tracks (sorted names). Tracks outside the support are don't-care, so automata
over different supports combine freely: products read the union.

Acceptance is transition-based Emerson-Lei (see :mod:`pmlo.acceptance`).
Determinism makes complement a dualisation of the condition. Projection of a
track uses a thread construction that relies on the projected track being
ultimately zero, which holds for first-order variables (one 1) and for the
finite second-order variables of the weak logic.

Track naming: propositions and clock predicates use their own names
(``B``, ``x<=3``); variables use ``$`` + variable name.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from . import acceptance as accmod
from . import graphs
from . import logic as L
from .errors import AutomatonError, StateBlowup, UnsupportedFormula

DEFAULT_STATE_CAP = 200_000


def var_track(name: str) -> str:
    return "$" + name


def is_var_track(track: str) -> bool:
    return track.startswith("$")


@dataclass(frozen=True)
class Automaton:
    tracks: tuple
    succ: tuple  # succ[q][letter] -> state
    mark: tuple  # mark[q][letter] -> mark bitmask
    acc: tuple
    init: int = 0

    @property
    def num_states(self) -> int:
        return len(self.succ)

    @property
    def num_letters(self) -> int:
        return 1 << len(self.tracks)

    def letter(self, true_tracks) -> int:
        """Letter index for a set of true track names (or a name->bool mapping)."""
        if isinstance(true_tracks, Mapping):
            true_tracks = {k for k, v in true_tracks.items() if v}
        out = 0
        for i, t in enumerate(self.tracks):
            if t in true_tracks:
                out |= 1 << i
        return out

    def step(self, q: int, true_tracks) -> tuple[int, int]:
        a = self.letter(true_tracks)
        return self.succ[q][a], self.mark[q][a]

    def edges(self):
        for q in range(self.num_states):
            for a in range(self.num_letters):
                yield q, a, self.succ[q][a], self.mark[q][a]

    def used_marks(self) -> int:
        m = 0
        for row in self.mark:
            for x in row:
                m |= x
        return m

    def is_universal_shape(self) -> bool:
        return self.acc == accmod.TRUE

    def is_empty_shape(self) -> bool:
        return self.acc == accmod.FALSE


# ---------------------------------------------------------------------------
# construction helpers


def explore(tracks: Sequence[str], init_key, step: Callable, acc: tuple,
            cap: int = DEFAULT_STATE_CAP) -> Automaton:
    """Build an automaton by BFS over hashable state keys.

    ``step(key, letter) -> (key', marks)`` with ``letter`` an int over ``tracks``.
    """
    tracks = tuple(tracks)
    nl = 1 << len(tracks)
    index = {init_key: 0}
    keys = [init_key]
    succ: list = []
    mark: list = []
    i = 0
    while i < len(keys):
        k = keys[i]
        row_s, row_m = [], []
        for a in range(nl):
            k2, mk = step(k, a)
            j = index.get(k2)
            if j is None:
                j = index[k2] = len(keys)
                keys.append(k2)
                if len(keys) > cap:
                    raise StateBlowup(f"automaton construction exceeded {cap} states",
                                      explored=i, frontier=len(keys) - i)
            row_s.append(j)
            row_m.append(mk)
        succ.append(tuple(row_s))
        mark.append(tuple(row_m))
        i += 1
    return Automaton(tracks, tuple(succ), tuple(mark), acc, 0)


def universal(tracks: Sequence[str] = ()) -> Automaton:
    nl = 1 << len(tracks)
    return Automaton(tuple(tracks), ((0,) * nl,), ((0,) * nl,), accmod.TRUE)


def empty(tracks: Sequence[str] = ()) -> Automaton:
    nl = 1 << len(tracks)
    return Automaton(tuple(tracks), ((0,) * nl,), ((0,) * nl,), accmod.FALSE)


def _projector(src: Sequence[str], dst: Sequence[str]) -> list[int]:
    """For each letter over ``dst`` (superset), the letter over ``src``."""
    pos = [dst.index(t) for t in src]
    out = []
    for a in range(1 << len(dst)):
        b = 0
        for i, p in enumerate(pos):
            if a >> p & 1:
                b |= 1 << i
        out.append(b)
    return out


def extend(a: Automaton, tracks: Iterable[str]) -> Automaton:
    """Same language over a larger support (new tracks are don't-care)."""
    tracks = tuple(sorted(set(tracks) | set(a.tracks)))
    if tracks == a.tracks:
        return a
    proj = _projector(a.tracks, tracks)
    succ = tuple(tuple(row[b] for b in proj) for row in a.succ)
    mark = tuple(tuple(row[b] for b in proj) for row in a.mark)
    return Automaton(tracks, succ, mark, a.acc, a.init)


def _from_table(tracks: Sequence[str], n: int, fn: Callable[[int, dict], int],
                accepting: Iterable[int]) -> Automaton:
    """Small automaton over states 0..n-1 from ``fn(state, {track: bit}) -> state``.

    Büchi acceptance on states: transitions leaving an accepting state carry mark 0.
    """
    tracks = tuple(sorted(tracks))
    acc_states = set(accepting)
    succ, mark = [], []
    for q in range(n):
        rs, rm = [], []
        for a in range(1 << len(tracks)):
            bits = {t: bool(a >> i & 1) for i, t in enumerate(tracks)}
            rs.append(fn(q, bits))
            rm.append(1 if q in acc_states else 0)
        succ.append(tuple(rs))
        mark.append(tuple(rm))
    return reduce(Automaton(tracks, tuple(succ), tuple(mark), accmod.inf(0)))


# ---------------------------------------------------------------------------
# atoms. States: 0 waiting, ..., ACC accepting sink, SINK rejecting sink.


def atom_prop(prop: str, var: str) -> Automaton:
    t = var_track(var)

    def fn(q, b):
        if q == 0:
            return (1 if b[prop] else 2) if b[t] else 0
        return q

    return _from_table({prop, t}, 3, fn, {1})


def atom_less(left: str, right: str) -> Automaton:
    if left == right:
        return empty()
    a, b_ = var_track(left), var_track(right)

    def fn(q, b):
        if q == 0:
            if b[a] and b[b_]:
                return 3
            if b[a]:
                return 1
            return 3 if b[b_] else 0
        if q == 1:
            return 2 if b[b_] else 1
        return q

    return _from_table({a, b_}, 4, fn, {2})


def atom_succ(prev: str, nxt: str) -> Automaton:
    if prev == nxt:
        return empty()
    p, n = var_track(prev), var_track(nxt)

    def fn(q, b):
        if q == 0:
            if b[n]:
                return 3
            return 1 if b[p] else 0
        if q == 1:
            return 2 if b[n] else 3
        return q

    return _from_table({p, n}, 4, fn, {2})


def atom_member(var: str, setvar: str) -> Automaton:
    t, x = var_track(var), var_track(setvar)

    def fn(q, b):
        if q == 0:
            return (1 if b[x] else 2) if b[t] else 0
        return q

    return _from_table({t, x}, 3, fn, {1})


def exactly_one(var: str) -> Automaton:
    t = var_track(var)

    def fn(q, b):
        if q == 0:
            return 1 if b[t] else 0
        if q == 1:
            return 2 if b[t] else 1
        return 2

    return _from_table({t}, 3, fn, {1})


# ---------------------------------------------------------------------------
# boolean operations


def ultimately_zero(track: str) -> Automaton:
    """Words whose ``track`` is 1 only finitely often."""
    return Automaton((track,), ((0, 0),), ((0, 1),), accmod.fin(0))


def complement(a: Automaton) -> Automaton:
    return Automaton(a.tracks, a.succ, a.mark, accmod.dual(a.acc), a.init)


complement_weak = complement


def _product(a: Automaton, b: Automaton, combine: Callable, cap: int) -> Automaton:
    tracks = tuple(sorted(set(a.tracks) | set(b.tracks)))
    pa = _projector(a.tracks, tracks)
    pb = _projector(b.tracks, tracks)
    shift = max(accmod.marks(a.acc) | {-1}) + 1
    sa, ma, sb, mb = a.succ, a.mark, b.succ, b.mark

    def step(key, letter):
        p, q = key
        x, y = pa[letter], pb[letter]
        return (sa[p][x], sb[q][y]), ma[p][x] | (mb[q][y] << shift)

    acc_b = accmod.rename(b.acc, lambda m: m + shift)
    return reduce(explore(tracks, (a.init, b.init), step, combine(a.acc, acc_b), cap))


def _trivial(a: Automaton):
    if a.acc == accmod.TRUE:
        return True
    if a.acc == accmod.FALSE:
        return False
    return None


def intersect(a: Automaton, b: Automaton, cap: int = DEFAULT_STATE_CAP) -> Automaton:
    ta, tb = _trivial(a), _trivial(b)
    if ta is False or tb is False:
        return empty()
    if ta is True:
        return b
    if tb is True:
        return a
    return _product(a, b, accmod.conj, cap)


def union(a: Automaton, b: Automaton, cap: int = DEFAULT_STATE_CAP) -> Automaton:
    ta, tb = _trivial(a), _trivial(b)
    if ta is True or tb is True:
        return universal()
    if ta is False:
        return b
    if tb is False:
        return a
    return _product(a, b, accmod.disj, cap)


def project(a: Automaton, track: str, cap: int = DEFAULT_STATE_CAP) -> Automaton:
    """Existential projection of an ultimately-zero track (thread construction).

    A state is the tuple of automaton states reachable after the current
    prefix under some finite assignment of the track, ordered by age. Each
    entry follows the run that sets the track to 0 from now on; an entry whose
    run merges with an older one is dropped. The word is accepted iff some
    entry eventually keeps its position forever and its run is accepting.
    """
    if track not in a.tracks:
        return a
    rest = tuple(t for t in a.tracks if t != track)
    if not rest:
        # nothing left to read: only nonemptiness over ultimately-zero words matters
        return empty() if is_empty(intersect(a, ultimately_zero(track), cap)) else universal()
    zi = a.tracks.index(track)
    l0, l1 = [], []
    for w in range(1 << len(rest)):
        low = w & ((1 << zi) - 1)
        high = (w >> zi) << (zi + 1)
        l0.append(low | high)
        l1.append(low | high | (1 << zi))
    k = a.num_states
    nm = max(accmod.marks(a.acc) | {-1}) + 1
    succ, mark = a.succ, a.mark

    def thread_mark(i, m):
        return i * nm + m

    def reset_mark(i):
        return k * nm + i

    def step(key, w):
        x0, x1 = l0[w], l1[w]
        out: list = []
        seen = set()
        marks = 0
        dead = False
        for i, q in enumerate(key):
            q2 = succ[q][x0]
            if q2 in seen:
                dead = True
            else:
                seen.add(q2)
                out.append(q2)
                mq = mark[q][x0]
                while mq:
                    low_bit = mq & -mq
                    marks |= 1 << thread_mark(i, low_bit.bit_length() - 1)
                    mq ^= low_bit
            if dead:
                marks |= 1 << reset_mark(i)
        for i in range(len(key), k):
            marks |= 1 << reset_mark(i)
        extra = set()
        for q in key:
            q1 = succ[q][x1]
            if q1 not in seen:
                extra.add(q1)
        out.extend(sorted(extra))
        return tuple(out), marks

    acc = accmod.disj(*[
        accmod.conj(accmod.fin(reset_mark(i)), accmod.rename(a.acc, lambda m, i=i: thread_mark(i, m)))
        for i in range(k)
    ])
    return reduce(explore(rest, (a.init,), step, acc, cap))


project_and_determinize = project


# ---------------------------------------------------------------------------
# reductions


def _reachable(a: Automaton) -> Automaton:
    seen = graphs.reachable([a.init], lambda q: set(a.succ[q]))
    if len(seen) == a.num_states and a.init == 0:
        return a
    order = sorted(seen, key=lambda q: (q != a.init, q))
    idx = {q: i for i, q in enumerate(order)}
    succ = tuple(tuple(idx[x] for x in a.succ[q]) for q in order)
    mark = tuple(a.mark[q] for q in order)
    return Automaton(a.tracks, succ, mark, a.acc, 0)


def _edge_list(a: Automaton, states: set):
    out = []
    for q in states:
        for letter, (x, m) in enumerate(zip(a.succ[q], a.mark[q])):
            if x in states:
                out.append((q, x, m, letter))
    return out


def _weak_normalize(a: Automaton) -> Automaton:
    """Classify SCCs; uniformly decided SCCs get a single weak mark."""
    if a.acc in (accmod.TRUE, accmod.FALSE):
        return a
    comps = graphs.sccs(range(a.num_states), lambda q: set(a.succ[q]))
    comp_of = {}
    for i, c in enumerate(comps):
        for q in c:
            comp_of[q] = i
    kinds = {}
    dual = accmod.dual(a.acc)
    for i, c in enumerate(comps):
        cset = set(c)
        edges = [(u, v, m) for u, v, m, _ in _edge_list(a, cset)]
        if not edges:
            kinds[i] = "transient"
            continue
        has_acc = bool(graphs.accepting_subgraphs(cset, edges, a.acc, first_only=True))
        has_rej = bool(graphs.accepting_subgraphs(cset, edges, dual, first_only=True))
        kinds[i] = "mixed" if has_acc and has_rej else ("acc" if has_acc else "rej")
    mixed = any(v == "mixed" for v in kinds.values())
    base = max(accmod.marks(a.acc) | {-1}) + 1
    w_mark, r_mark = base, base + 1
    mark = []
    for q in range(a.num_states):
        row = []
        kq = kinds[comp_of[q]]
        for x, m in zip(a.succ[q], a.mark[q]):
            if comp_of[x] != comp_of[q]:
                row.append(0)
            elif kq == "acc":
                row.append(1 << w_mark)
            elif kq == "rej":
                row.append(1 << r_mark if mixed else 0)
            else:
                row.append(m)
        mark.append(tuple(row))
    if mixed:
        acc = accmod.disj(accmod.inf(w_mark),
                          accmod.conj(accmod.fin(w_mark), accmod.fin(r_mark), a.acc))
    else:
        acc = accmod.inf(w_mark)
    return Automaton(a.tracks, a.succ, tuple(mark), acc, a.init)


def _compact_marks(a: Automaton) -> Automaton:
    """Drop marks not in the condition, merge marks with equal occurrence, renumber."""
    acc_marks = accmod.marks(a.acc)
    used = a.used_marks()
    acc = a.acc
    for m in acc_marks:
        if not used >> m & 1:
            acc = accmod.absent(acc, m)
    live = sorted(accmod.marks(acc))
    occ: dict = {m: [] for m in live}
    flat = [x for row in a.mark for x in row]
    for i, x in enumerate(flat):
        if x:
            for m in live:
                if x >> m & 1:
                    occ[m].append(i)
    rep: dict = {}
    groups: dict = {}
    for m in live:
        key = tuple(occ[m])
        groups.setdefault(key, m)
        rep[m] = groups[key]
    reps = sorted(set(rep.values()))
    new_index = {m: i for i, m in enumerate(reps)}
    acc = accmod.rename(acc, lambda m: new_index[rep[m]])

    def remap(x):
        y = 0
        for m in reps:
            if x >> m & 1:
                y |= 1 << new_index[m]
        return y

    cache: dict = {}
    mark = []
    for row in a.mark:
        r = []
        for x in row:
            if x not in cache:
                cache[x] = remap(x)
            r.append(cache[x])
        mark.append(tuple(r))
    return Automaton(a.tracks, a.succ, tuple(mark), acc, a.init)


def _minimize(a: Automaton) -> Automaton:
    """Moore partition refinement on (successor block, marks) per letter."""
    n = a.num_states
    block = [0] * n
    nblocks = 1
    while True:
        sigs = {}
        new_block = [0] * n
        for q in range(n):
            sig = (block[q], tuple(zip((block[x] for x in a.succ[q]), a.mark[q])))
            new_block[q] = sigs.setdefault(sig, len(sigs))
        if len(sigs) == nblocks:
            break
        block, nblocks = new_block, len(sigs)
    if nblocks == n:
        return a
    rep = {}
    for q in range(n):
        rep.setdefault(block[q], q)
    order = sorted(rep, key=lambda b: (b != block[a.init], rep[b]))
    idx = {b: i for i, b in enumerate(order)}
    succ = tuple(tuple(idx[block[x]] for x in a.succ[rep[b]]) for b in order)
    mark = tuple(a.mark[rep[b]] for b in order)
    return Automaton(a.tracks, succ, mark, a.acc, 0)


def _drop_unused_tracks(a: Automaton) -> Automaton:
    """Remove tracks whose bit never influences a transition."""
    keep = []
    for i, t in enumerate(a.tracks):
        bit = 1 << i
        matters = False
        for q in range(a.num_states):
            rs, rm = a.succ[q], a.mark[q]
            for letter in range(a.num_letters):
                if not letter & bit and (rs[letter] != rs[letter | bit] or rm[letter] != rm[letter | bit]):
                    matters = True
                    break
            if matters:
                break
        if matters:
            keep.append(t)
    if len(keep) == len(a.tracks):
        return a
    pos = [a.tracks.index(t) for t in keep]
    embed = []
    for w in range(1 << len(keep)):
        x = 0
        for i, p in enumerate(pos):
            if w >> i & 1:
                x |= 1 << p
        embed.append(x)
    succ = tuple(tuple(row[x] for x in embed) for row in a.succ)
    mark = tuple(tuple(row[x] for x in embed) for row in a.mark)
    return Automaton(tuple(keep), succ, mark, a.acc, a.init)


def reduce(a: Automaton) -> Automaton:
    """Canonicalising clean-up applied after every construction."""
    a = _reachable(a)
    a = _weak_normalize(a)
    a = _compact_marks(a)
    if a.acc == accmod.TRUE:
        return universal()
    if a.acc == accmod.FALSE:
        return empty()
    a = _minimize(a)
    a = _drop_unused_tracks(a)
    if a.num_states == 1:
        # one state: the condition is decided by the marks of its self-loops,
        # but different letters may see different marks, so keep it unless uniform
        row = set(a.mark[0])
        if len(row) == 1:
            return universal() if accmod.holds(a.acc, row.pop()) else empty()
    return a


# ---------------------------------------------------------------------------
# analysis


def accepts_lasso(a: Automaton, stem: Sequence, loop: Sequence) -> bool:
    """Membership of ``stem . loop^omega``; letters are sets of true track names."""
    if not loop:
        raise AutomatonError("lasso loop must be nonempty")
    q = a.init
    for letter in stem:
        q = a.succ[q][a.letter(letter)]
    loop_letters = [a.letter(x) for x in loop]
    seen = {}
    trace = []
    i = 0
    while (q, i) not in seen:
        seen[(q, i)] = len(trace)
        x = loop_letters[i]
        trace.append(a.mark[q][x])
        q = a.succ[q][x]
        i = (i + 1) % len(loop_letters)
    start = seen[(q, i)]
    inf_marks = 0
    for m in trace[start:]:
        inf_marks |= m
    return accmod.holds(a.acc, inf_marks)


def _letter_set(a: Automaton, letter: int) -> frozenset:
    return frozenset(t for i, t in enumerate(a.tracks) if letter >> i & 1)


def nonempty_witness(a: Automaton):
    """A lasso ``(stem, loop)`` of letter sets accepted by ``a``, or None if empty."""
    reach = graphs.reachable([a.init], lambda q: set(a.succ[q]))
    letter_of: dict = {}
    for q, letter, x, m in a.edges():
        if q in reach:
            letter_of.setdefault((q, x, m), letter)
    found = graphs.accepting_subgraphs(reach, list(letter_of), a.acc, first_only=True)
    if not found:
        return None
    cset, sub = found[0]
    out_edges: dict = {}
    for e in letter_of:
        out_edges.setdefault(e[0], []).append(e)
    path = graphs.shortest_path(a.init, cset, lambda v: out_edges.get(v, ()))
    start = path[-1][1] if path else a.init
    cycle = graphs.covering_cycle(start, sub)
    stem = [_letter_set(a, letter_of[e]) for e in path]
    loop = [_letter_set(a, letter_of[e]) for e in cycle]
    return stem, loop


def is_empty(a: Automaton) -> bool:
    return nonempty_witness(a) is None


# ---------------------------------------------------------------------------
# compiler


def _rename_bound(f: L.Formula) -> L.Formula:
    """Give every binder a distinct variable name (free names untouched)."""
    fo, so = L.free_vars(f)
    used = set(fo) | set(so)
    counter = itertools.count(1)

    def fresh(name):
        if name not in used:
            used.add(name)
            return name
        while True:
            cand = f"{name}#{next(counter)}"
            if cand not in used:
                used.add(cand)
                return cand

    def go(g, env):
        if isinstance(g, L.Const):
            return g
        if isinstance(g, L.Prop):
            return L.Prop(g.name, env.get(g.var, g.var))
        if isinstance(g, L.ClockAtom):
            return L.ClockAtom(g.kind, g.clock, g.other, g.rel, g.const, env.get(g.var, g.var))
        if isinstance(g, L.Less):
            return L.Less(env.get(g.left, g.left), env.get(g.right, g.right))
        if isinstance(g, L.Succ):
            return L.Succ(env.get(g.prev, g.prev), env.get(g.nxt, g.nxt))
        if isinstance(g, L.Member):
            return L.Member(env.get(g.var, g.var), env.get(g.setvar, g.setvar))
        if isinstance(g, (L.Exists, L.ExistsSet)):
            new = fresh(g.var)
            return type(g)(new, go(g.body, {**env, g.var: new}))
        if isinstance(g, L.Not):
            return L.Not(go(g.body, env))
        if isinstance(g, L.Or):
            return L.Or(go(g.left, env), go(g.right, env))
        if isinstance(g, L.Prob):
            return L.Prob(g.rel, g.threshold, go(g.body, env), go(g.cond, env), g.universal)
        raise TypeError(g)

    return go(f, {})


def compile_wmlo(f: L.Formula, tracks: Iterable[str] | None = None,
                 prob_hook: Callable[[L.Prob], Automaton] | None = None,
                 cap: int = DEFAULT_STATE_CAP) -> Automaton:
    """Deterministic automaton for ``f`` over proposition and free-variable tracks.

    Clock atoms are read as proposition tracks named by their symbol. Probability
    nodes are delegated to ``prob_hook``, which must return an automaton over the
    node's free-variable tracks (it receives the node with binders renamed apart).
    When ``tracks`` is given the result is padded to that support.
    """
    g = _rename_bound(f)
    memo: dict = {}

    def rec(h):
        if h in memo:
            return memo[h]
        if isinstance(h, L.Const):
            out = universal() if h.value else empty()
        elif isinstance(h, L.Prop):
            out = atom_prop(h.name, h.var)
        elif isinstance(h, L.ClockAtom):
            out = atom_prop(h.symbol, h.var)
        elif isinstance(h, L.Less):
            out = atom_less(h.left, h.right)
        elif isinstance(h, L.Succ):
            out = atom_succ(h.prev, h.nxt)
        elif isinstance(h, L.Member):
            out = atom_member(h.var, h.setvar)
        elif isinstance(h, L.Not):
            out = complement(rec(h.body))
        elif isinstance(h, L.Or):
            out = union(rec(h.left), rec(h.right), cap)
        elif isinstance(h, L.Exists):
            body = rec(h.body)
            t = var_track(h.var)
            out = project(intersect(body, exactly_one(h.var), cap), t, cap) if t in body.tracks else body
        elif isinstance(h, L.ExistsSet):
            out = project(rec(h.body), var_track(h.var), cap)
        elif isinstance(h, L.Prob):
            if prob_hook is None:
                raise UnsupportedFormula("probability operator in a probability-free compilation")
            out = prob_hook(h)
        else:
            raise TypeError(h)
        memo[h] = out
        return out

    out = rec(g)
    if tracks is not None:
        out = extend(out, tracks)
    return out
