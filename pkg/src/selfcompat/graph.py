"""Mixed graphs with per-endpoint marks.

One :class:`Graph` type covers DAGs, ADMGs, CPDAGs, MAGs and PAGs. Every edge
carries a mark at each of its two endpoints, so a directed edge ``a -> b`` is
``(a, b, TAIL, ARROW)``, a bidirected edge is ``(ARROW, ARROW)``, an undirected
CPDAG edge is ``(TAIL, TAIL)`` and PAG edges may carry ``CIRCLE`` marks.

Graphs are immutable. Ancestor and descendant sets are closed, i.e. every node
is its own ancestor.
"""

from __future__ import annotations

import enum
import json
import re
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Iterator

__all__ = [
    "Mark",
    "Kind",
    "Edge",
    "Graph",
    "GraphError",
    "TAIL",
    "ARROW",
    "CIRCLE",
    "validate",
    "ancestors",
    "descendants",
    "possible_descendants",
    "possible_ancestors",
    "parents",
    "children",
    "encode",
    "decode",
    "to_json",
    "from_json",
]


class GraphError(ValueError):
    """Raised for structurally malformed graphs or unknown nodes."""


class Mark(enum.Enum):
    TAIL = "tail"
    ARROW = "arrow"
    CIRCLE = "circle"

    def __lt__(self, other: "Mark") -> bool:
        return self.value < other.value


TAIL = Mark.TAIL
ARROW = Mark.ARROW
CIRCLE = Mark.CIRCLE


class Kind(str, enum.Enum):
    DAG = "DAG"
    ADMG = "ADMG"
    CPDAG = "CPDAG"
    MAG = "MAG"
    PAG = "PAG"


# (mark at lower endpoint, mark at higher endpoint) pairs, unordered
_ALLOWED = {
    Kind.DAG: {frozenset([TAIL, ARROW])},
    Kind.ADMG: {frozenset([TAIL, ARROW]), frozenset([ARROW])},
    Kind.CPDAG: {frozenset([TAIL, ARROW]), frozenset([TAIL])},
    Kind.MAG: {frozenset([TAIL, ARROW]), frozenset([ARROW])},
}


@dataclass(frozen=True, order=True)
class Edge:
    """An edge with one mark per endpoint, normalized so that ``a < b``."""

    a: str
    b: str
    mark_a: Mark
    mark_b: Mark

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise GraphError(f"self loop on {self.a!r}")
        if self.b < self.a:
            a, b, ma, mb = self.b, self.a, self.mark_b, self.mark_a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)
            object.__setattr__(self, "mark_a", ma)
            object.__setattr__(self, "mark_b", mb)

    def mark_at(self, node: str) -> Mark:
        if node == self.a:
            return self.mark_a
        if node == self.b:
            return self.mark_b
        raise GraphError(f"{node!r} is not an endpoint of {self}")

    def other(self, node: str) -> str:
        return self.b if node == self.a else self.a

    @property
    def is_directed(self) -> bool:
        return {self.mark_a, self.mark_b} == {TAIL, ARROW}

    @property
    def is_bidirected(self) -> bool:
        return self.mark_a is ARROW and self.mark_b is ARROW

    def __str__(self) -> str:
        left = {TAIL: "-", ARROW: "<", CIRCLE: "o"}[self.mark_a]
        right = {TAIL: "-", ARROW: ">", CIRCLE: "o"}[self.mark_b]
        return f"{self.a} {left}-{right} {self.b}"


def directed(a: str, b: str) -> Edge:
    return Edge(a, b, TAIL, ARROW)


def bidirected(a: str, b: str) -> Edge:
    return Edge(a, b, ARROW, ARROW)


def undirected(a: str, b: str) -> Edge:
    return Edge(a, b, TAIL, TAIL)


_TOKENS = {
    "->": (TAIL, ARROW),
    "<-": (ARROW, TAIL),
    "<->": (ARROW, ARROW),
    "--": (TAIL, TAIL),
    "o->": (CIRCLE, ARROW),
    "<-o": (ARROW, CIRCLE),
    "o-o": (CIRCLE, CIRCLE),
    "o--": (CIRCLE, TAIL),
    "--o": (TAIL, CIRCLE),
}
_EDGE_RE = re.compile(r"^\s*(\w+)\s*(<->|o->|<-o|o-o|o--|--o|->|<-|--)\s*(\w+)\s*$")


class Graph:
    """Immutable mixed graph tagged with its kind.

    Parameters
    ----------
    kind : Kind or str
        One of DAG, ADMG, CPDAG, MAG, PAG.
    nodes : iterable of str
        Node names. Endpoints of ``edges`` are added implicitly.
    edges : iterable of Edge
        Edge records. Exact duplicates are rejected; marks must be legal for
        the kind. Acyclicity and ancestrality are checked by :func:`validate`.
    """

    __slots__ = ("kind", "nodes", "edges", "_adj", "_hash")

    def __init__(self, kind: Kind | str, nodes: Iterable[str] = (), edges: Iterable[Edge] = ()):
        kind = Kind(kind)
        edges = tuple(sorted(set(edges)))
        node_set = set(nodes)
        for e in edges:
            node_set.update((e.a, e.b))
        if any(not isinstance(n, str) or not n for n in node_set):
            raise GraphError("node names must be non-empty strings")
        if kind is not Kind.PAG:
            allowed = _ALLOWED[kind]
            for e in edges:
                if frozenset([e.mark_a, e.mark_b]) not in allowed:
                    raise GraphError(f"edge {e} not allowed in a {kind.value}")
        adj: dict[str, list[tuple[str, Mark, Mark]]] = {n: [] for n in node_set}
        for e in edges:
            adj[e.a].append((e.b, e.mark_a, e.mark_b))
            adj[e.b].append((e.a, e.mark_b, e.mark_a))
        self.kind = kind
        self.nodes = tuple(sorted(node_set))
        self.edges = edges
        self._adj = {n: tuple(sorted(v, key=lambda t: (t[0], t[1].value, t[2].value))) for n, v in adj.items()}
        self._hash = hash((kind, self.nodes, self.edges))

    # construction helpers -------------------------------------------------

    @classmethod
    def parse(cls, kind: Kind | str, spec: str = "", nodes: Iterable[str] = ()) -> "Graph":
        """Build a graph from a comma separated edge list like ``"X -> Y, Y <-> Z"``.

        Circle tokens (``o->``, ``o-o`` ...) need whitespace before them so the
        ``o`` is not read as part of the node name.
        """
        edges = []
        for item in filter(None, (s.strip() for s in spec.split(","))):
            m = _EDGE_RE.match(item)
            if m is None:
                raise GraphError(f"cannot parse edge {item!r}")
            a, token, b = m.groups()
            ma, mb = _TOKENS[token]
            edges.append(Edge(a, b, ma, mb))
        return cls(kind, nodes, edges)

    @classmethod
    def from_directed(cls, kind: Kind | str, nodes: Iterable[str], arcs: Iterable[tuple[str, str]]) -> "Graph":
        return cls(kind, nodes, (directed(a, b) for a, b in arcs))

    def with_kind(self, kind: Kind | str) -> "Graph":
        return Graph(kind, self.nodes, self.edges)

    def subgraph(self, keep: Iterable[str]) -> "Graph":
        keep = set(keep)
        return Graph(self.kind, keep, (e for e in self.edges if e.a in keep and e.b in keep))

    # queries ---------------------------------------------------------------

    def __contains__(self, node: object) -> bool:
        return node in self._adj

    def check_node(self, node: str) -> None:
        if node not in self._adj:
            raise GraphError(f"unknown node {node!r}")

    def neighbors(self, node: str) -> tuple[tuple[str, Mark, Mark], ...]:
        """Incident edges of ``node`` as ``(other, mark_at_node, mark_at_other)``."""
        self.check_node(node)
        return self._adj[node]

    def adjacent(self, a: str, b: str) -> bool:
        return any(o == b for o, _, _ in self.neighbors(a))

    def edges_between(self, a: str, b: str) -> list[Edge]:
        lo, hi = sorted((a, b))
        return [e for e in self.edges if e.a == lo and e.b == hi]

    def marks(self, a: str, b: str) -> list[tuple[Mark, Mark]]:
        """Marks ``(at a, at b)`` of every edge between ``a`` and ``b``."""
        return [(ma, mb) for o, ma, mb in self.neighbors(a) if o == b]

    def has_directed(self, a: str, b: str) -> bool:
        return (TAIL, ARROW) in self.marks(a, b)

    def has_bidirected(self, a: str, b: str) -> bool:
        return (ARROW, ARROW) in self.marks(a, b)

    def skeleton_pairs(self) -> set[frozenset[str]]:
        return {frozenset((e.a, e.b)) for e in self.edges}

    def directed_pairs(self) -> Iterator[tuple[str, str]]:
        for e in self.edges:
            if e.mark_a is TAIL and e.mark_b is ARROW:
                yield e.a, e.b
            elif e.mark_a is ARROW and e.mark_b is TAIL:
                yield e.b, e.a

    # dunder ----------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.kind is other.kind and self.nodes == other.nodes and self.edges == other.edges

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(str(e) for e in self.edges)
        return f"Graph({self.kind.value}, nodes={list(self.nodes)}, edges=[{body}])"


# ---------------------------------------------------------------------------
# structural queries


def parents(g: Graph, x: str) -> set[str]:
    """Nodes ``y`` with a fully directed edge ``y -> x``."""
    return {o for o, mx, mo in g.neighbors(x) if mx is ARROW and mo is TAIL}


def children(g: Graph, x: str) -> set[str]:
    return {o for o, mx, mo in g.neighbors(x) if mx is TAIL and mo is ARROW}


def _closure(g: Graph, start: Iterable[str], step) -> set[str]:
    seen = set()
    queue = deque()
    for s in start:
        g.check_node(s)
        if s not in seen:
            seen.add(s)
            queue.append(s)
    while queue:
        n = queue.popleft()
        for o in step(g, n):
            if o not in seen:
                seen.add(o)
                queue.append(o)
    return seen


def ancestors(g: Graph, x: str | Iterable[str]) -> set[str]:
    """Nodes with a directed path into ``x`` (or any node of ``x``), ``x`` included."""
    start = [x] if isinstance(x, str) else list(x)
    return _closure(g, start, parents)


def descendants(g: Graph, x: str | Iterable[str]) -> set[str]:
    start = [x] if isinstance(x, str) else list(x)
    return _closure(g, start, children)


def _possible_children(g: Graph, n: str) -> Iterator[str]:
    # a step n *-* o is possibly directed unless it has an arrowhead at n
    for o, mn, _ in g.neighbors(n):
        if mn is not ARROW:
            yield o


def _possible_parents(g: Graph, n: str) -> Iterator[str]:
    for o, _, mo in g.neighbors(n):
        if mo is not ARROW:
            yield o


def possible_descendants(g: Graph, x: str | Iterable[str]) -> set[str]:
    """Nodes reachable from ``x`` by a possibly directed path, ``x`` included.

    On DAGs and ADMGs this is the ordinary descendant set.
    """
    start = [x] if isinstance(x, str) else list(x)
    return _closure(g, start, _possible_children)


def possible_ancestors(g: Graph, x: str | Iterable[str]) -> set[str]:
    start = [x] if isinstance(x, str) else list(x)
    return _closure(g, start, _possible_parents)


def topological_order(g: Graph) -> list[str] | None:
    """Order of the directed part, ties broken by name; ``None`` if cyclic."""
    indeg = {n: 0 for n in g.nodes}
    kids = defaultdict(list)
    for a, b in g.directed_pairs():
        indeg[b] += 1
        kids[a].append(b)
    import heapq

    heap = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        n = heapq.heappop(heap)
        order.append(n)
        for c in kids[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    return order if len(order) == len(g.nodes) else None


def _find_cycle(g: Graph) -> list[str] | None:
    color = {n: 0 for n in g.nodes}
    stack_path: list[str] = []

    def visit(n: str) -> list[str] | None:
        color[n] = 1
        stack_path.append(n)
        for c in sorted(children(g, n)):
            if color[c] == 1:
                return stack_path[stack_path.index(c):] + [c]
            if color[c] == 0:
                found = visit(c)
                if found:
                    return found
        stack_path.pop()
        color[n] = 2
        return None

    for n in g.nodes:
        if color[n] == 0:
            found = visit(n)
            if found:
                return found
    return None


# ---------------------------------------------------------------------------
# validation


def validate(g: Graph) -> list[str]:
    """Return the kind invariants ``g`` violates; an empty list means valid.

    Only structural properties are checked. Whether a CPDAG or PAG is exactly
    the representative of some equivalence class is not decided here.
    """
    problems = []
    per_pair = defaultdict(list)
    for e in g.edges:
        per_pair[(e.a, e.b)].append(e)
    for (a, b), es in per_pair.items():
        if len(es) == 1:
            continue
        types = sorted("bidirected" if e.is_bidirected else "directed" for e in es)
        if not (g.kind is Kind.ADMG and types == ["bidirected", "directed"]):
            problems.append(f"multiple edges between {a} and {b}")

    cycle = _find_cycle(g)
    if cycle:
        problems.append("cycle: " + " -> ".join(cycle))

    if g.kind is Kind.MAG:
        from .separation import inducing_path_exists

        if not cycle:
            for e in g.edges:
                if e.is_bidirected:
                    if e.a in ancestors(g, e.b) or e.b in ancestors(g, e.a):
                        problems.append(f"almost directed cycle through {e.a} <-> {e.b}")
            for i, a in enumerate(g.nodes):
                for b in g.nodes[i + 1:]:
                    if not g.adjacent(a, b) and inducing_path_exists(g, a, b, set()):
                        problems.append(f"not maximal: inducing path between {a} and {b}")
    return problems


# ---------------------------------------------------------------------------
# interchange format


def encode(g: Graph) -> dict:
    """Interchange document: sorted nodes and edges, lowercase mark names."""
    return {
        "kind": g.kind.value,
        "nodes": list(g.nodes),
        "edges": [
            {"a": e.a, "b": e.b, "mark_a": e.mark_a.value, "mark_b": e.mark_b.value}
            for e in g.edges
        ],
    }


def decode(doc: dict) -> Graph:
    if not isinstance(doc, dict):
        raise GraphError("graph document must be a JSON object")
    try:
        kind = Kind(doc["kind"])
    except (KeyError, ValueError) as exc:
        raise GraphError(f"unknown or missing kind: {doc.get('kind')!r}") from exc
    nodes = doc.get("nodes")
    raw_edges = doc.get("edges")
    if not isinstance(nodes, list) or not isinstance(raw_edges, list):
        raise GraphError("'nodes' and 'edges' must be lists")
    if len(set(nodes)) != len(nodes):
        raise GraphError("duplicate node names")
    edges = []
    for rec in raw_edges:
        try:
            a, b = rec["a"], rec["b"]
            ma, mb = Mark(rec["mark_a"]), Mark(rec["mark_b"])
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"malformed edge record {rec!r}") from exc
        if a not in nodes or b not in nodes:
            raise GraphError(f"edge {rec!r} references an unknown node")
        edges.append(Edge(a, b, ma, mb))
    if len(set(edges)) != len(edges):
        raise GraphError("duplicate edge records")
    return Graph(kind, nodes, edges)


def to_json(g: Graph) -> str:
    return json.dumps(encode(g), indent=2) + "\n"


def from_json(text: str) -> Graph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"invalid JSON: {exc}") from exc
    return decode(doc)
