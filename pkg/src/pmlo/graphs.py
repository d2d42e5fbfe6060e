"""Graph algorithms on explicit graphs: SCCs, Emerson-Lei emptiness, end components.

Edges carry a mark bitmask. Nodes are arbitrary hashables.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Hashable, Iterable

from . import acceptance as accmod


def sccs(nodes: Iterable[Hashable], succ: Callable[[Hashable], Iterable[Hashable]]) -> list[list]:
    """Tarjan's algorithm, iterative. Components come out sinks first."""
    index: dict = {}
    low: dict = {}
    on_stack = set()
    stack: list = []
    out: list[list] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def reachable(starts: Iterable[Hashable], succ: Callable) -> set:
    seen = set(starts)
    todo = deque(seen)
    while todo:
        v = todo.popleft()
        for w in succ(v):
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return seen


def _adjacency(edges) -> dict:
    adj: dict = {}
    for u, v, _ in edges:
        adj.setdefault(u, []).append(v)
    return adj


def _union_marks(edges) -> int:
    m = 0
    for e in edges:
        m |= e[2]
    return m


def accepting_subgraphs(nodes, edges, acc: tuple, first_only: bool = False) -> list:
    """Strongly connected subgraphs whose full set of marks satisfies ``acc``.

    ``edges`` is a list of ``(u, v, marks)``. Every accepting cycle of the graph
    lies inside one of the returned ``(node_set, edge_list)`` pairs, so the
    union of returned node sets is the set of nodes on accepting cycles (with
    ``first_only`` the search stops at the first hit).
    """
    found: list = []

    class _Done(Exception):
        pass

    def solve(nodes, edges, acc):
        acc = accmod.restrict_to(acc, _union_marks(edges))
        if acc == accmod.FALSE:
            return
        adj = _adjacency(edges)
        for comp in sccs(nodes, lambda v: adj.get(v, ())):
            cset = set(comp)
            inner = [e for e in edges if e[0] in cset and e[1] in cset]
            if inner:
                visit(cset, inner, acc)

    def visit(cset, edges, acc):
        allm = _union_marks(edges)
        acc = accmod.restrict_to(acc, allm)
        if acc == accmod.FALSE:
            return
        fins = accmod.fin_marks(acc)
        if not fins:
            if accmod.holds(acc, allm):
                found.append((cset, edges))
                if first_only:
                    raise _Done
            return
        m = min(fins)
        keep = [e for e in edges if not e[2] >> m & 1]
        solve(cset, keep, accmod.absent(acc, m))
        visit(cset, edges, accmod.assign(acc, {m: False}))

    try:
        solve(list(nodes), list(edges), acc)
    except _Done:
        pass
    return found


def shortest_path(src, targets: set, succ_edges: Callable) -> list | None:
    """BFS path as a list of edges ``(u, v, marks)`` from ``src`` into ``targets``."""
    if src in targets:
        return []
    parent = {src: None}
    todo = deque([src])
    while todo:
        v = todo.popleft()
        for e in succ_edges(v):
            w = e[1]
            if w in parent:
                continue
            parent[w] = e
            if w in targets:
                path = []
                while parent[w] is not None:
                    path.append(parent[w])
                    w = parent[w][0]
                return path[::-1]
            todo.append(w)
    return None


def covering_cycle(start, edges: list) -> list:
    """Closed walk from ``start`` using every edge of a strongly connected edge list."""
    out_edges: dict = {}
    for e in edges:
        out_edges.setdefault(e[0], []).append(e)
    walk: list = []
    cur = start
    for e in edges:
        if e in walk:
            continue
        walk.extend(shortest_path(cur, {e[0]}, lambda v: out_edges.get(v, ())))
        walk.append(e)
        cur = e[1]
    walk.extend(shortest_path(cur, {start}, lambda v: out_edges.get(v, ())) or [])
    if not walk:
        raise ValueError("edge list has no cycle through start")
    return walk


# ---------------------------------------------------------------------------
# Markov decision processes.  ``actions[s]`` is a list of actions; an action is
# a list of ``(successor, marks)`` pairs over its support.


def end_components(states: Iterable, actions: dict) -> list[tuple[set, dict]]:
    """Maximal end components as ``(states, {state: [actions]})``."""
    live = {s: list(actions.get(s, ())) for s in states}
    while True:
        adj = {s: {d for a in acts for d, _ in a} for s, acts in live.items()}
        comps = sccs(list(live), lambda s: (d for d in adj[s] if d in live))
        comp_of = {}
        for i, c in enumerate(comps):
            for s in c:
                comp_of[s] = i
        changed = False
        new_live = {}
        for s, acts in live.items():
            kept = [a for a in acts if all(d in comp_of and comp_of[d] == comp_of[s] for d, _ in a)]
            if len(kept) != len(acts):
                changed = True
            if kept:
                new_live[s] = kept
            else:
                changed = True
        live = new_live
        if not changed:
            break
    groups: dict = {}
    for s in live:
        groups.setdefault(comp_of[s], set()).add(s)
    return [(g, {s: live[s] for s in g}) for g in groups.values()]


def accepting_end_component_states(states: Iterable, actions: dict, acc: tuple) -> set:
    """States of end components in which some strategy satisfies ``acc`` almost surely."""
    winning: set = set()

    def action_marks(a) -> int:
        m = 0
        for _, mk in a:
            m |= mk
        return m

    def solve(states, actions, acc):
        for comp, acts in end_components(states, actions):
            visit(comp, acts, acc)

    def visit(comp, acts, acc):
        if comp <= winning:
            return
        allm = 0
        for al in acts.values():
            for a in al:
                allm |= action_marks(a)
        acc = accmod.restrict_to(acc, allm)
        if acc == accmod.FALSE:
            return
        fins = accmod.fin_marks(acc)
        if not fins:
            if accmod.holds(acc, allm):
                winning.update(comp)
            return
        m = min(fins)
        reduced = {s: [a for a in al if not action_marks(a) >> m & 1] for s, al in acts.items()}
        solve(comp, reduced, accmod.absent(acc, m))
        visit(comp, acts, accmod.assign(acc, {m: False}))

    solve(list(states), actions, acc)
    return winning


def can_reach(states: Iterable, actions: dict, target: set) -> set:
    """States from which ``target`` is reachable (some strategy, positive probability)."""
    pred: dict = {}
    for s in states:
        for a in actions.get(s, ()):
            for d, _ in a:
                pred.setdefault(d, set()).add(s)
    return reachable(target, lambda v: pred.get(v, ()))


def almost_sure_reach(states: Iterable, actions: dict, target: set) -> set:
    """States from which some strategy reaches ``target`` with probability one."""
    states = set(states)
    r = set(states)
    while True:
        x = set(target & r)
        changed = True
        while changed:
            changed = False
            for s in r - x:
                for a in actions.get(s, ()):
                    succs = [d for d, _ in a]
                    if all(d in r for d in succs) and any(d in x for d in succs):
                        x.add(s)
                        changed = True
                        break
        if x == r:
            return r
        r = x
