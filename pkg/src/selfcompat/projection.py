"""Latent projections and equivalence-class representatives.

``latent_admg``, ``latent_mag``, ``latent_cpdag`` and ``latent_pag`` marginalize
a DAG onto a kept node set. ``dag_to_cpdag`` and ``mag_to_pag`` turn a graph
into the representative of its Markov equivalence class. :func:`project`
dispatches on the kinds of the source graph and the wanted result, which is
what the scoring layer uses.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from typing import Iterable

from .graph import (
    ARROW,
    CIRCLE,
    TAIL,
    Edge,
    Graph,
    GraphError,
    Kind,
    ancestors,
    bidirected,
    children,
    directed,
    parents,
    topological_order,
    undirected,
)
from .separation import inducing_path_exists

__all__ = [
    "latent_admg",
    "latent_mag",
    "dag_to_cpdag",
    "latent_cpdag",
    "mag_to_pag",
    "latent_pag",
    "meek_closure",
    "dag_extension",
    "pag_to_mag",
    "canonical_dag",
    "project",
]


def _keep(g: Graph, keep: Iterable[str]) -> list[str]:
    keep = sorted(set(keep))
    if not keep:
        raise GraphError("keep set must be non-empty")
    for n in keep:
        g.check_node(n)
    return keep


# ---------------------------------------------------------------------------
# ADMG


def latent_admg(g: Graph, keep: Iterable[str]) -> Graph:
    """Latent projection onto ``keep``.

    ``a -> b`` iff a directed path from ``a`` to ``b`` runs only through
    dropped nodes. ``a <-> b`` iff some path with arrowheads at both ends has
    only dropped non-colliders in between; such a path either forks at a
    dropped common source or crosses one bidirected edge.
    """
    if g.kind not in (Kind.DAG, Kind.ADMG):
        raise GraphError(f"latent ADMG needs a DAG or ADMG, got a {g.kind.value}")
    keep = _keep(g, keep)
    kept = set(keep)

    # dropped ancestors reachable through dropped nodes only
    hidden_anc: dict[str, set[str]] = {}
    for v in keep:
        seen = set()
        stack = [p for p in parents(g, v) if p not in kept]
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            stack.extend(p for p in parents(g, u) if p not in kept)
        hidden_anc[v] = seen

    edges = []
    for a in keep:
        # directed: a -> (dropped)* -> b
        seen = set()
        stack = list(children(g, a))
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            if u in kept:
                edges.append(directed(a, u))
            else:
                stack.extend(children(g, u))

    for a, b in itertools.combinations(keep, 2):
        ha, hb = hidden_anc[a], hidden_anc[b]
        linked = bool(ha & hb)
        if not linked:
            ends_a = ha | {a}
            ends_b = hb | {b}
            for u in ends_a:
                if any(g.has_bidirected(u, w) for w in ends_b if w != u):
                    linked = True
                    break
        if linked:
            edges.append(bidirected(a, b))
    return Graph(Kind.ADMG, keep, edges)


# ---------------------------------------------------------------------------
# MAG


def canonical_dag(g: Graph) -> tuple[Graph, set[str]]:
    """Replace every ``a <-> b`` by ``a <- L -> b`` with a fresh latent ``L``.

    Returns the DAG and the set of introduced latent names.
    """
    if g.kind not in (Kind.DAG, Kind.ADMG, Kind.MAG):
        raise GraphError(f"no canonical DAG for a {g.kind.value}")
    edges = []
    latent = set()
    taken = set(g.nodes)
    for e in g.edges:
        if e.is_bidirected:
            name = f"_L_{e.a}_{e.b}"
            while name in taken:
                name += "_"
            taken.add(name)
            latent.add(name)
            edges += [directed(name, e.a), directed(name, e.b)]
        else:
            edges.append(e)
    return Graph(Kind.DAG, taken, edges), latent


def latent_mag(g: Graph, keep: Iterable[str]) -> Graph:
    """Latent MAG over ``keep``.

    Two kept nodes are adjacent iff an inducing path relative to the dropped
    nodes joins them. The mark at ``a`` is a tail iff ``a`` is an ancestor of
    ``b`` in the source graph, otherwise an arrowhead.
    """
    if g.kind in (Kind.ADMG, Kind.MAG):
        keep = _keep(g, keep)
        dag, _ = canonical_dag(g)
        return latent_mag(dag, keep)
    if g.kind is not Kind.DAG:
        raise GraphError(f"latent MAG needs a DAG, got a {g.kind.value}")
    keep = _keep(g, keep)
    latent = set(g.nodes) - set(keep)
    anc = {v: ancestors(g, v) for v in keep}
    edges = []
    for a, b in itertools.combinations(keep, 2):
        if not inducing_path_exists(g, a, b, latent):
            continue
        ma = TAIL if a in anc[b] else ARROW
        mb = TAIL if b in anc[a] else ARROW
        edges.append(Edge(a, b, ma, mb))
    return Graph(Kind.MAG, keep, edges)


# ---------------------------------------------------------------------------
# CPDAG


class _Pdag:
    """Mutable partially directed graph used by the orientation rules."""

    def __init__(self, nodes: Iterable[str], arcs: Iterable[tuple[str, str]] = (),
                 lines: Iterable[tuple[str, str]] = ()):
        self.nodes = sorted(nodes)
        self.out: dict[str, set[str]] = defaultdict(set)
        self.inn: dict[str, set[str]] = defaultdict(set)
        self.und: dict[str, set[str]] = defaultdict(set)
        for a, b in arcs:
            self.orient(a, b)
        for a, b in lines:
            self.und[a].add(b)
            self.und[b].add(a)

    def adjacent(self, a: str, b: str) -> bool:
        return b in self.out[a] or b in self.inn[a] or b in self.und[a]

    def neighbors(self, a: str) -> set[str]:
        return self.out[a] | self.inn[a] | self.und[a]

    def orient(self, a: str, b: str) -> None:
        self.und[a].discard(b)
        self.und[b].discard(a)
        self.out[a].add(b)
        self.inn[b].add(a)

    def reaches(self, a: str, b: str) -> bool:
        """Directed path from ``a`` to ``b``."""
        seen = set()
        stack = [a]
        while stack:
            v = stack.pop()
            if v == b:
                return True
            if v in seen:
                continue
            seen.add(v)
            stack.extend(self.out[v])
        return False

    def undirected_pairs(self) -> list[tuple[str, str]]:
        return sorted((a, b) for a in self.nodes for b in self.und[a] if a < b)

    def to_graph(self, kind: Kind = Kind.CPDAG) -> Graph:
        edges = [directed(a, b) for a in self.nodes for b in self.out[a]]
        edges += [undirected(a, b) for a, b in self.undirected_pairs()]
        return Graph(kind, self.nodes, edges)


def _meek_fires(p: _Pdag, a: str, b: str) -> bool:
    """Whether one of Meek's rules orients the undirected edge ``a - b`` as ``a -> b``."""
    # R1: c -> a - b with c, b non-adjacent
    for c in p.inn[a]:
        if not p.adjacent(c, b):
            return True
    # R2: a -> c -> b
    if p.out[a] & p.inn[b]:
        return True
    # R3: a - c -> b and a - d -> b with c, d non-adjacent
    cands = sorted(p.und[a] & p.inn[b])
    for c, d in itertools.combinations(cands, 2):
        if not p.adjacent(c, d):
            return True
    # R4: a - c -> d -> b with c, b non-adjacent and a adjacent to d
    for c in p.und[a]:
        if p.adjacent(c, b):
            continue
        for d in p.out[c]:
            if d in p.inn[b] and p.adjacent(a, d):
                return True
    return False


def meek_closure(p: _Pdag, avoid_cycles: bool = True, locked: Iterable[frozenset] = ()) -> _Pdag:
    """Apply Meek's rules R1-R4 until nothing changes, in sorted edge order.

    Pairs in ``locked`` are left undirected.
    """
    locked = set(locked)
    changed = True
    while changed:
        changed = False
        for a, b in p.undirected_pairs():
            if frozenset((a, b)) in locked:
                continue
            for s, t in ((a, b), (b, a)):
                if b not in p.und[a]:
                    break
                if _meek_fires(p, s, t):
                    if avoid_cycles and p.reaches(t, s):
                        continue
                    p.orient(s, t)
                    changed = True
                    break
    return p


def dag_to_cpdag(g: Graph) -> Graph:
    """CPDAG of the Markov equivalence class of ``g``."""
    if g.kind is not Kind.DAG:
        raise GraphError(f"expected a DAG, got a {g.kind.value}")
    compelled = set()
    for v in g.nodes:
        pa = sorted(parents(g, v))
        for a, b in itertools.combinations(pa, 2):
            if not g.adjacent(a, b):
                compelled.add((a, v))
                compelled.add((b, v))
    lines = [(a, b) for a, b in g.directed_pairs() if (a, b) not in compelled]
    p = _Pdag(g.nodes, compelled, lines)
    return meek_closure(p).to_graph(Kind.CPDAG)


def dag_extension(g: Graph) -> Graph:
    """A DAG obtained by orienting the undirected edges of a CPDAG.

    Uses the Dor-Tarsi sink elimination, so the result adds no new
    v-structure when one exists. If no consistent extension exists (possible
    for outputs of sample-based search) the remaining undirected edges follow
    a topological order of the directed part instead.
    """
    if g.kind is Kind.DAG:
        return g
    if g.kind is not Kind.CPDAG:
        raise GraphError(f"expected a CPDAG, got a {g.kind.value}")
    arcs = set(g.directed_pairs())
    lines = {frozenset((e.a, e.b)) for e in g.edges if e.mark_a is TAIL and e.mark_b is TAIL}
    alive = set(g.nodes)
    result = set(arcs)

    def nbrs(x):
        out = set()
        for a, b in arcs:
            if a == x and b in alive:
                out.add(b)
            elif b == x and a in alive:
                out.add(a)
        for ln in lines:
            if x in ln:
                (o,) = ln - {x}
                if o in alive:
                    out.add(o)
        return out

    while alive:
        found = None
        for x in sorted(alive):
            if any(a == x and b in alive for a, b in arcs):
                continue
            adj = nbrs(x)
            und = {o for o in adj if frozenset((x, o)) in lines}
            if all(adj - {y} <= nbrs(y) | {y} for y in und):
                found = x
                break
        if found is None:
            break
        for ln in list(lines):
            if found in ln:
                (o,) = ln - {found}
                if o in alive:
                    result.add((o, found))
                    lines.discard(ln)
        alive.discard(found)

    if lines:
        order = topological_order(Graph(Kind.DAG, g.nodes, [directed(a, b) for a, b in result])) or list(g.nodes)
        rank = {n: i for i, n in enumerate(order)}
        for ln in lines:
            a, b = sorted(ln, key=rank.__getitem__)
            result.add((a, b))
    return Graph.from_directed(Kind.DAG, g.nodes, result)


def latent_cpdag(g: Graph, keep: Iterable[str]) -> Graph:
    """Latent ADMG with every bidirected edge deleted, then completed to a CPDAG."""
    if g.kind is not Kind.DAG:
        raise GraphError(f"latent CPDAG needs a DAG, got a {g.kind.value}")
    admg = latent_admg(g, keep)
    dag = Graph(Kind.DAG, admg.nodes, (e for e in admg.edges if e.is_directed))
    return dag_to_cpdag(dag)


# ---------------------------------------------------------------------------
# PAG


class _Pag:
    """Mutable endpoint-mark matrix for PAG orientation."""

    def __init__(self, nodes: Iterable[str]):
        self.nodes = sorted(nodes)
        self.mark: dict[tuple[str, str], object] = {}  # (a, b) -> mark at b on edge a-b
        self.adj: dict[str, set[str]] = defaultdict(set)

    def add(self, a: str, b: str, ma, mb) -> None:
        self.adj[a].add(b)
        self.adj[b].add(a)
        self.mark[(b, a)] = ma
        self.mark[(a, b)] = mb

    def at(self, a: str, b: str):
        """Mark at ``b`` on the edge between ``a`` and ``b``."""
        return self.mark[(a, b)]

    def set(self, a: str, b: str, m) -> bool:
        if self.mark[(a, b)] is m:
            return False
        self.mark[(a, b)] = m
        return True

    def adjacent(self, a: str, b: str) -> bool:
        return b in self.adj[a]

    def is_directed(self, a: str, b: str) -> bool:
        return self.adjacent(a, b) and self.at(b, a) is TAIL and self.at(a, b) is ARROW

    def to_graph(self) -> Graph:
        edges = []
        for a in self.nodes:
            for b in self.adj[a]:
                if a < b:
                    edges.append(Edge(a, b, self.at(b, a), self.at(a, b)))
        return Graph(Kind.PAG, self.nodes, edges)


def _uncovered_pd_paths(p: _Pag, start: str, end: str, avoid: set[str]) -> list[list[str]]:
    """Uncovered potentially directed simple paths from ``start`` to ``end``."""
    out = []

    def pd(u, v):
        return p.at(v, u) is not ARROW and p.at(u, v) is not TAIL

    def rec(path):
        v = path[-1]
        for w in sorted(p.adj[v]):
            if w in path or w in avoid or not pd(v, w):
                continue
            if len(path) >= 2 and p.adjacent(path[-2], w):
                continue
            if w == end:
                out.append(path + [w])
            else:
                rec(path + [w])

    rec([start])
    return out


def _discriminating_paths(p: _Pag, b: str, c: str) -> list[list[str]]:
    """Paths ``<d, ..., a, b, c>`` discriminating for ``b``."""
    found = []
    for a in sorted(p.adj[b]):
        if a == c or not p.adjacent(a, c) or not p.is_directed(a, c):
            continue
        if p.at(b, a) is not ARROW:
            continue
        # walk back from a through colliders that are parents of c
        stack = [[a, b]]
        while stack:
            path = stack.pop()
            head = path[0]
            for d in sorted(p.adj[head]):
                if d in path or d == c or p.at(d, head) is not ARROW:
                    continue
                if not p.adjacent(d, c):
                    found.append([d] + path + [c])
                elif p.is_directed(d, c) and p.at(head, d) is ARROW:
                    stack.append([d] + path)
    return found


def _orient_pag(p: _Pag, is_noncollider) -> None:
    """Zhang's rules R1-R4 and R8-R10 to closure (no selection bias).

    ``is_noncollider(a, b, c)`` answers the discriminating-path question for
    the middle node ``b`` from the underlying MAG.
    """
    nodes = p.nodes
    changed = True
    while changed:
        changed = False
        for b in nodes:
            nb = sorted(p.adj[b])
            for a, c in itertools.permutations(nb, 2):
                if p.adjacent(a, c):
                    continue
                # R1
                if p.at(a, b) is ARROW and p.at(c, b) is CIRCLE:
                    changed |= p.set(c, b, TAIL)
                    changed |= p.set(b, c, ARROW)
        for a in nodes:
            for c in sorted(p.adj[a]):
                if p.at(a, c) is not CIRCLE:
                    continue
                # R2: a -> b *-> c or a *-> b -> c
                for b in sorted(p.adj[a] & p.adj[c]):
                    if (p.is_directed(a, b) and p.at(b, c) is ARROW) or (
                        p.at(a, b) is ARROW and p.is_directed(b, c)
                    ):
                        changed |= p.set(a, c, ARROW)
                        break
        for d in nodes:
            for b in sorted(p.adj[d]):
                if p.at(d, b) is not CIRCLE:
                    continue
                # R3: a *-> b <-* c, a *-o d o-* c, a, c non-adjacent
                cands = sorted(x for x in p.adj[d] & p.adj[b] if p.at(x, b) is ARROW and p.at(x, d) is CIRCLE)
                for a, c in itertools.combinations(cands, 2):
                    if not p.adjacent(a, c):
                        changed |= p.set(d, b, ARROW)
                        break
        for b in nodes:
            for c in sorted(p.adj[b]):
                if p.at(c, b) is not CIRCLE:
                    continue
                # R4 on discriminating paths
                for path in _discriminating_paths(p, b, c):
                    a = path[-3]
                    if is_noncollider(a, b, c):
                        changed |= p.set(c, b, TAIL)
                        changed |= p.set(b, c, ARROW)
                    else:
                        changed |= p.set(a, b, ARROW)
                        changed |= p.set(c, b, ARROW)
                        changed |= p.set(b, c, ARROW)
                    break
        for a in nodes:
            for c in sorted(p.adj[a]):
                if not (p.at(c, a) is CIRCLE and p.at(a, c) is ARROW):
                    continue
                # R8: a -> b -> c or a -o b -> c
                hit = False
                for b in sorted(p.adj[a] & p.adj[c]):
                    if p.is_directed(b, c) and p.at(b, a) is TAIL and p.at(a, b) in (ARROW, CIRCLE):
                        hit = True
                        break
                # R9: uncovered p.d. path a, b, ..., c with b, c non-adjacent
                if not hit:
                    for b in sorted(p.adj[a]):
                        if b == c or p.adjacent(b, c) or p.at(b, a) is ARROW or p.at(a, b) is TAIL:
                            continue
                        if any(not p.adjacent(a, pth[1]) for pth in _uncovered_pd_paths(p, b, c, {a})):
                            hit = True
                            break
                # R10: b -> c <- d, uncovered p.d. paths a..b and a..d leaving a
                # through distinct non-adjacent nodes
                if not hit:
                    into_c = sorted(x for x in p.adj[c] if x != a and p.is_directed(x, c))
                    for b, d in itertools.combinations(into_c, 2):
                        first_b = {pth[1] for pth in _uncovered_pd_paths(p, a, b, set())}
                        first_d = {pth[1] for pth in _uncovered_pd_paths(p, a, d, set())}
                        if any(m != w and not p.adjacent(m, w) for m in first_b for w in first_d):
                            hit = True
                            break
                if hit:
                    changed |= p.set(c, a, TAIL)


def mag_to_pag(g: Graph) -> Graph:
    """PAG of the Markov equivalence class of the MAG ``g``.

    Skeleton and unshielded colliders are read from ``g``, then the
    orientation rules run to closure.
    """
    if g.kind is not Kind.MAG:
        raise GraphError(f"expected a MAG, got a {g.kind.value}")
    p = _Pag(g.nodes)
    for e in g.edges:
        p.add(e.a, e.b, CIRCLE, CIRCLE)

    def mag_collider(a, b, c):
        return _m(g, a, b) is ARROW and _m(g, c, b) is ARROW

    for b in g.nodes:
        nb = sorted(p.adj[b])
        for a, c in itertools.combinations(nb, 2):
            if not p.adjacent(a, c) and mag_collider(a, b, c):
                p.set(a, b, ARROW)
                p.set(c, b, ARROW)

    _orient_pag(p, lambda a, b, c: not mag_collider(a, b, c))
    return p.to_graph()


def _m(g: Graph, a: str, b: str):
    """Mark at ``b`` on the single edge between ``a`` and ``b``."""
    (ms,) = g.marks(a, b)
    return ms[1]


def latent_pag(g: Graph, keep: Iterable[str]) -> Graph:
    return mag_to_pag(latent_mag(g, keep))


def pag_to_mag(g: Graph) -> Graph:
    """A MAG in the class represented by ``g``.

    Edges ``o->`` become ``->``; the circle component is oriented by a maximum
    cardinality search order, which adds no unshielded collider when the
    component is chordal.
    """
    if g.kind is Kind.MAG:
        return g
    if g.kind is not Kind.PAG:
        raise GraphError(f"expected a PAG, got a {g.kind.value}")
    edges = []
    circ = defaultdict(set)
    for e in g.edges:
        ma, mb = e.mark_a, e.mark_b
        if ma is CIRCLE and mb is CIRCLE:
            circ[e.a].add(e.b)
            circ[e.b].add(e.a)
            continue
        if ma is CIRCLE:
            ma = TAIL if mb is ARROW else ARROW
        if mb is CIRCLE:
            mb = TAIL if ma is ARROW else ARROW
        if ma is TAIL and mb is TAIL:
            raise GraphError(f"undirected edge {e} not supported")
        edges.append(Edge(e.a, e.b, ma, mb))
    order = []
    weight = {n: 0 for n in circ}
    remaining = set(circ)
    while remaining:
        v = max(sorted(remaining), key=lambda n: weight[n])
        order.append(v)
        remaining.discard(v)
        for w in circ[v]:
            if w in remaining:
                weight[w] += 1
    rank = {n: i for i, n in enumerate(order)}
    for a in circ:
        for b in circ[a]:
            if a < b:
                s, t = (a, b) if rank[a] < rank[b] else (b, a)
                edges.append(directed(s, t))
    return Graph(Kind.MAG, g.nodes, edges)


# ---------------------------------------------------------------------------
# dispatch


def _drop_bidirected(g: Graph) -> Graph:
    return Graph(Kind.DAG, g.nodes, (e for e in g.edges if e.is_directed))


def _cpdag_marginal(ext: Graph, keep: list[str]) -> Graph:
    # CPDAG over keep learned from the exact d-separations of ext
    from .discovery import OracleCi, pc

    return pc(OracleCi(ext), keep)


def project(g: Graph, keep: Iterable[str], kind: Kind | str) -> Graph:
    """Marginal of ``g`` over ``keep`` expressed as a graph of ``kind``.

    Supported sources are DAG, ADMG, CPDAG, MAG and PAG. Projecting a CPDAG
    onto a CPDAG runs oracle PC on the d-separations of one DAG in its class,
    which does not depend on the member picked. Keeping every node without
    changing the kind returns ``g`` itself.
    """
    kind = Kind(kind)
    keep = _keep(g, keep)
    if kind is g.kind and len(keep) == len(g.nodes):
        # identity, also for outputs that are not exactly of their class
        # (e.g. PC leaving conflicting v-structures undirected)
        return g
    src = g
    if src.kind is Kind.CPDAG:
        src = dag_extension(src)
        if kind is Kind.CPDAG:
            return _cpdag_marginal(src, keep)
    elif src.kind is Kind.PAG:
        src = pag_to_mag(src)
    if kind in (Kind.MAG, Kind.PAG):
        if src.kind is not Kind.DAG:
            src, _ = canonical_dag(src)
        mag = latent_mag(src, keep)
        return mag if kind is Kind.MAG else mag_to_pag(mag)
    if src.kind is Kind.MAG:
        raise GraphError(f"cannot project a {g.kind.value} onto a {kind.value}")
    admg = latent_admg(src, keep)
    if kind is Kind.ADMG:
        return admg
    dag = _drop_bidirected(admg)
    if kind is Kind.DAG:
        return dag
    return dag_to_cpdag(dag)
