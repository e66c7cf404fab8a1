"""Separation queries on mixed graphs.

m-separation uses a reachability search over ``(node, arrived-with-arrowhead)``
states, which visits every edge a bounded number of times. The exhaustive path
enumerators at the bottom of this module are kept as reference
implementations for tests.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .graph import ARROW, CIRCLE, TAIL, Graph, GraphError, Kind, ancestors, parents

__all__ = [
    "PathQuery",
    "is_m_separated",
    "m_connected_nodes",
    "inducing_path_exists",
    "is_visible",
    "definite_status_open_paths",
    "enumerate_paths",
    "brute_force_m_separated",
    "brute_force_inducing_path",
    "is_collider",
    "is_definite_non_collider",
]


@dataclass(frozen=True)
class PathQuery:
    x: str
    y: str
    conditioning: frozenset = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "conditioning", frozenset(self.conditioning))
        if self.x == self.y:
            raise GraphError("query endpoints must differ")
        if self.x in self.conditioning or self.y in self.conditioning:
            raise GraphError("conditioning set must not contain an endpoint")


def _check(g: Graph, nodes: Iterable[str]) -> None:
    for n in nodes:
        g.check_node(n)


def m_connected_nodes(g: Graph, x: str, given: Iterable[str] = ()) -> set[str]:
    """Nodes outside ``given`` that are m-connected to ``x`` given ``given``."""
    z = set(given)
    _check(g, [x, *z])
    an_z = ancestors(g, z) if z else set()
    seen: set[tuple[str, bool]] = set()
    queue: deque[tuple[str, bool]] = deque()
    for w, _, mw in g.neighbors(x):
        state = (w, mw is ARROW)
        if state not in seen:
            seen.add(state)
            queue.append(state)
    reached = set()
    while queue:
        v, arrow_in = queue.popleft()
        if v not in z:
            reached.add(v)
        for w, mv, mw in g.neighbors(v):
            if arrow_in and mv is ARROW:
                if v not in an_z:
                    continue
            elif v in z:
                continue
            state = (w, mw is ARROW)
            if state not in seen:
                seen.add(state)
                queue.append(state)
    reached.discard(x)
    return reached


def is_m_separated(g: Graph, x: str | PathQuery, y: str | None = None, given: Iterable[str] = ()) -> bool:
    """True iff ``x`` and ``y`` are m-separated (d-separated on DAGs) given ``given``.

    Accepts either ``(g, x, y, given)`` or ``(g, PathQuery)``.
    """
    if isinstance(x, PathQuery):
        q = x
    else:
        q = PathQuery(x, y, frozenset(given))
    if g.kind not in (Kind.DAG, Kind.ADMG, Kind.MAG):
        raise GraphError(f"m-separation is not defined for a {g.kind.value}")
    _check(g, [q.x, q.y])
    return q.y not in m_connected_nodes(g, q.x, q.conditioning)


# ---------------------------------------------------------------------------
# inducing paths


def inducing_path_exists(g: Graph, x: str, y: str, latent: Iterable[str] = ()) -> bool:
    """Whether an inducing path relative to ``latent`` joins ``x`` and ``y``.

    Every non-endpoint outside ``latent`` must be a collider, and every
    collider must be an ancestor of ``x`` or ``y``. Searched as a walk over
    ``(node, arrived-with-arrowhead)`` states.
    """
    latent = set(latent)
    _check(g, [x, y, *latent])
    if x == y:
        raise GraphError("endpoints must differ")
    if x in latent or y in latent:
        raise GraphError("endpoints must not be latent")
    if g.kind not in (Kind.DAG, Kind.ADMG, Kind.MAG):
        raise GraphError(f"inducing paths are not defined for a {g.kind.value}")
    an = ancestors(g, [x, y])
    seen = set()
    queue = deque()
    for w, _, mw in g.neighbors(x):
        state = (w, mw is ARROW)
        if state not in seen:
            seen.add(state)
            queue.append(state)
    while queue:
        v, arrow_in = queue.popleft()
        if v == y:
            return True
        if v == x:
            continue
        for w, mv, mw in g.neighbors(v):
            if arrow_in and mv is ARROW:
                if v not in an:
                    continue
            elif v not in latent:
                continue
            state = (w, mw is ARROW)
            if state not in seen:
                seen.add(state)
                queue.append(state)
    return False


def brute_force_inducing_path(g: Graph, x: str, y: str, latent: Iterable[str] = ()) -> bool:
    latent = set(latent)
    an = ancestors(g, [x, y])
    for path in enumerate_paths(g, x, y):
        ok = True
        for v, m_in, m_out in path[1:-1]:
            if is_collider(m_in, m_out):
                if v not in an:
                    ok = False
                    break
            elif v not in latent:
                ok = False
                break
        if ok:
            return True
    return False


# ---------------------------------------------------------------------------
# visibility


def is_visible(g: Graph, x: str, y: str) -> bool:
    """Whether the directed edge ``x -> y`` is visible.

    Some node ``z`` not adjacent to ``y`` must reach ``x`` through a collider
    path into ``x`` whose intermediate nodes are all parents of ``y``. Every
    edge of a DAG or CPDAG is visible.
    """
    if not g.has_directed(x, y):
        raise GraphError(f"no directed edge {x} -> {y}")
    if g.kind in (Kind.DAG, Kind.CPDAG):
        return True
    pa_y = parents(g, y)
    adj_y = {o for o, _, _ in g.neighbors(y)}
    # nodes m on a collider path z *-> m <-> ... <-> x; m must be a parent of y
    seen = {x}
    frontier = [x]
    while frontier:
        v = frontier.pop()
        for w, mv, mw in g.neighbors(v):
            if mv is not ARROW or w == y or w in seen:
                continue
            if w not in adj_y:
                return True
            if w in pa_y and mw is ARROW:
                seen.add(w)
                frontier.append(w)
    return False


# ---------------------------------------------------------------------------
# definite status paths


def is_collider(m_in: object, m_out: object) -> bool:
    """Arrowheads at the middle node from both sides."""
    return m_in is ARROW and m_out is ARROW


def is_definite_non_collider(g: Graph, a: str, m_in: object, v: str, m_out: object, b: str) -> bool:
    """``m_in``/``m_out`` are the marks at ``v`` on the edges to ``a``/``b``."""
    if m_in is TAIL or m_out is TAIL:
        return True
    if m_in is CIRCLE and m_out is CIRCLE:
        return not g.adjacent(a, b)
    return False


def definite_status_open_paths(g: Graph, x: str | PathQuery, y: str | None = None, given: Iterable[str] = (),
                               possibly: bool = False) -> bool:
    """True iff some definite-status non-causal path from ``x`` to ``y`` is
    m-connecting given ``given``.

    A path has definite status when each intermediate node is a collider or a
    definite non-collider. Colliders are open when they are ancestors (via
    directed edges) of the conditioning set. A path is causal when it is
    directed from ``x`` to ``y``; with ``possibly`` set, every possibly
    directed path counts as causal, which is what adjustment needs.
    """
    if isinstance(x, PathQuery):
        q = x
    else:
        q = PathQuery(x, y, frozenset(given))
    _check(g, [q.x, q.y, *q.conditioning])
    z = q.conditioning
    an_z = ancestors(g, z) if z else set()
    target = q.y

    # DFS over simple paths; state carries the previous node, the mark at the
    # current node of the arriving edge and whether the prefix may be causal
    def causal_step(m_near, m_far) -> bool:
        if possibly:
            return m_near is not ARROW
        return m_near is TAIL and m_far is ARROW

    def step(prev: str, v: str, mark_in, possibly_directed: bool, on_path: set[str]) -> bool:
        for w, mv, mw in g.neighbors(v):
            if w in on_path:
                continue
            if is_collider(mark_in, mv):
                if v not in an_z:
                    continue
            elif is_definite_non_collider(g, prev, mark_in, v, mv, w):
                if v in z:
                    continue
            else:
                continue
            pd = possibly_directed and causal_step(mv, mw)
            if w == target:
                if not pd:
                    return True
                continue
            on_path.add(w)
            if step(v, w, mw, pd, on_path):
                return True
            on_path.discard(w)
        return False

    start = q.x
    for w, mx, mw in g.neighbors(start):
        pd = causal_step(mx, mw)
        if w == target:
            if not pd:
                return True
            continue
        if step(start, w, mw, pd, {start, w}):
            return True
    return False


# ---------------------------------------------------------------------------
# reference implementations


def enumerate_paths(g: Graph, x: str, y: str) -> Iterator[list[tuple[str, object, object]]]:
    """Yield every simple path from ``x`` to ``y``.

    A path is a list of steps ``(node, mark_at_node_from_previous_edge,
    mark_at_node_toward_next_edge)``; the first step is ``(x, None, m)`` and
    the last is ``(y, m, None)``. Parallel edges give distinct paths.
    """
    _check(g, [x, y])

    def rec(v: str, mark_in, on_path: set[str], acc: list):
        for w, mv, mw in g.neighbors(v):
            if w in on_path:
                continue
            acc.append((v, mark_in, mv))
            if w == y:
                yield acc + [(w, mw, None)]
            else:
                on_path.add(w)
                yield from rec(w, mw, on_path, acc)
                on_path.discard(w)
            acc.pop()

    yield from rec(x, None, {x}, [])


def brute_force_m_separated(g: Graph, x: str, y: str, given: Iterable[str] = ()) -> bool:
    z = set(given)
    an_z = ancestors(g, z) if z else set()
    for path in enumerate_paths(g, x, y):
        open_ = True
        for v, m_in, m_out in path[1:-1]:
            if is_collider(m_in, m_out):
                if v not in an_z:
                    open_ = False
                    break
            elif v in z:
                open_ = False
                break
        if open_:
            return False
    return True
