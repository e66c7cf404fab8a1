"""Independent reference implementations and random graph generators for tests."""

from __future__ import annotations

import itertools
import random

import numpy as np

from selfcompat.graph import ARROW, TAIL, Edge, Graph, Kind, ancestors, directed, bidirected


def names(n):
    return [f"v{i}" for i in range(n)]


def random_dag(rng: random.Random, n: int, p: float = 0.4) -> Graph:
    nodes = names(n)
    order = nodes[:]
    rng.shuffle(order)
    edges = [directed(order[i], order[j]) for i, j in itertools.combinations(range(n), 2) if rng.random() < p]
    return Graph(Kind.DAG, nodes, edges)


def random_admg(rng: random.Random, n: int, p_dir: float = 0.35, p_bi: float = 0.25) -> Graph:
    dag = random_dag(rng, n, p_dir)
    edges = list(dag.edges)
    for a, b in itertools.combinations(dag.nodes, 2):
        if rng.random() < p_bi:
            edges.append(bidirected(a, b))
    return Graph(Kind.ADMG, dag.nodes, edges)


def random_ancestral(rng: random.Random, n: int, p: float = 0.45, p_bi: float = 0.35) -> Graph:
    """Ancestral graph: bidirected edges only between ancestrally unrelated nodes."""
    dag = random_dag(rng, n, p * (1 - p_bi))
    edges = list(dag.edges)
    for a, b in itertools.combinations(dag.nodes, 2):
        if dag.adjacent(a, b) or rng.random() >= p_bi:
            continue
        if a in ancestors(dag, b) or b in ancestors(dag, a):
            continue
        edges.append(bidirected(a, b))
    return Graph(Kind.MAG, dag.nodes, edges)


# ---------------------------------------------------------------------------
# path enumeration


def simple_paths(g: Graph, x: str, y: str):
    """Every simple path as a list of (node, mark_in, mark_out) triples."""
    out = []

    def rec(v, mark_in, seen, acc):
        for e in g.edges:
            if v not in (e.a, e.b):
                continue
            w = e.other(v)
            if w in seen:
                continue
            step = acc + [(v, mark_in, e.mark_at(v))]
            if w == y:
                out.append(step + [(w, e.mark_at(w), None)])
            else:
                rec(w, e.mark_at(w), seen | {w}, step)

    rec(x, None, {x}, [])
    return out


def path_open(path, z, an_z) -> bool:
    for v, mi, mo in path[1:-1]:
        if mi is ARROW and mo is ARROW:
            if v not in an_z:
                return False
        elif v in z:
            return False
    return True


def m_separated_by_paths(g: Graph, x: str, y: str, z) -> bool:
    z = set(z)
    an_z = ancestors(g, z) if z else set()
    return not any(path_open(p, z, an_z) for p in simple_paths(g, x, y))


def d_separated_moral(g: Graph, x: str, y: str, z) -> bool:
    """d-separation via the moralized ancestral graph."""
    z = set(z)
    keep = ancestors(g, {x, y} | z)
    und = {v: set() for v in keep}
    for a, b in g.directed_pairs():
        if a in keep and b in keep:
            und[a].add(b)
            und[b].add(a)
    for v in keep:
        pa = [a for a, b in g.directed_pairs() if b == v and a in keep]
        for a, b in itertools.combinations(pa, 2):
            und[a].add(b)
            und[b].add(a)
    seen = {x}
    stack = [x]
    while stack:
        v = stack.pop()
        for w in und[v]:
            if w in z or w in seen:
                continue
            if w == y:
                return False
            seen.add(w)
            stack.append(w)
    return True


# ---------------------------------------------------------------------------
# equivalence classes


def v_structures(g: Graph) -> set:
    out = set()
    pairs = list(g.directed_pairs())
    for v in g.nodes:
        pa = sorted(a for a, b in pairs if b == v)
        for a, b in itertools.combinations(pa, 2):
            if not g.adjacent(a, b):
                out.add((a, v, b))
    return out


def is_acyclic(nodes, arcs) -> bool:
    indeg = {n: 0 for n in nodes}
    kids = {n: [] for n in nodes}
    for a, b in arcs:
        indeg[b] += 1
        kids[a].append(b)
    stack = [n for n in nodes if indeg[n] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for c in kids[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                stack.append(c)
    return seen == len(nodes)


def markov_class(g: Graph) -> list[Graph]:
    """All DAGs with the skeleton and v-structures of ``g``."""
    pairs = sorted(tuple(sorted(p)) for p in g.skeleton_pairs())
    want = v_structures(g)
    out = []
    for bits in itertools.product([0, 1], repeat=len(pairs)):
        arcs = [(a, b) if bit == 0 else (b, a) for (a, b), bit in zip(pairs, bits)]
        if not is_acyclic(g.nodes, arcs):
            continue
        h = Graph.from_directed(Kind.DAG, g.nodes, arcs)
        if v_structures(h) == want:
            out.append(h)
    return out


def cpdag_by_enumeration(g: Graph) -> Graph:
    members = markov_class(g)
    edges = []
    for a, b in sorted(tuple(sorted(p)) for p in g.skeleton_pairs()):
        dirs = {m.has_directed(a, b) for m in members}
        if dirs == {True}:
            edges.append(directed(a, b))
        elif dirs == {False}:
            edges.append(directed(b, a))
        else:
            edges.append(Edge(a, b, TAIL, TAIL))
    return Graph(Kind.CPDAG, g.nodes, edges)


def all_separations(g: Graph, sep) -> frozenset:
    out = set()
    for x, y in itertools.combinations(g.nodes, 2):
        rest = [v for v in g.nodes if v not in (x, y)]
        for k in range(len(rest) + 1):
            for z in itertools.combinations(rest, k):
                if sep(g, x, y, z):
                    out.add((x, y, z))
    return frozenset(out)


def is_ancestral(g: Graph) -> bool:
    if not is_acyclic(g.nodes, list(g.directed_pairs())):
        return False
    for e in g.edges:
        if e.is_bidirected and (e.a in ancestors(g, e.b) or e.b in ancestors(g, e.a)):
            return False
    return True


def unshielded_colliders(g: Graph) -> set:
    out = set()
    for v in g.nodes:
        nb = sorted(o for o, mv, _ in g.neighbors(v) if mv is ARROW)
        for a, b in itertools.combinations(nb, 2):
            if not g.adjacent(a, b):
                out.add((a, v, b))
    return out


def pag_by_enumeration(mag: Graph, sep) -> Graph:
    """PAG of ``mag`` from all Markov equivalent MAGs on its skeleton."""
    from selfcompat.graph import CIRCLE

    pairs = sorted((e.a, e.b) for e in mag.edges)
    options = [(TAIL, ARROW), (ARROW, TAIL), (ARROW, ARROW)]
    want_cols = unshielded_colliders(mag)
    want_seps = all_separations(mag, sep)
    members = []
    for choice in itertools.product(options, repeat=len(pairs)):
        h = Graph(Kind.MAG, mag.nodes, [Edge(a, b, ma, mb) for (a, b), (ma, mb) in zip(pairs, choice)])
        if unshielded_colliders(h) != want_cols or not is_ancestral(h):
            continue
        if all_separations(h, sep) == want_seps:
            members.append(h)
    edges = []
    for (a, b) in pairs:
        ma = {m.marks(a, b)[0][0] for m in members}
        mb = {m.marks(a, b)[0][1] for m in members}
        edges.append(Edge(a, b, ma.pop() if len(ma) == 1 else CIRCLE, mb.pop() if len(mb) == 1 else CIRCLE))
    return Graph(Kind.PAG, mag.nodes, edges)


# ---------------------------------------------------------------------------
# numerics


def linear_cov(g: Graph, weights: dict) -> tuple[list, np.ndarray]:
    nodes = list(g.nodes)
    idx = {n: i for i, n in enumerate(nodes)}
    a = np.zeros((len(nodes), len(nodes)))
    for (p, c), w in weights.items():
        a[idx[p], idx[c]] = w
    inv = np.linalg.inv(np.eye(len(nodes)) - a)
    return nodes, inv.T @ inv


def effect_by_paths(g: Graph, weights: dict, x: str, y: str) -> float:
    """Sum over directed paths of weight products, by explicit enumeration."""
    total = 0.0
    for p in simple_paths(g, x, y):
        prod = 1.0
        ok = True
        for (u, _, mo), (w, mi, _) in zip(p, p[1:]):
            if not (mo is TAIL and mi is ARROW):
                ok = False
                break
            prod *= weights[(u, w)]
        if ok:
            total += prod
    return total


def ols_coefficient(nodes, cov, y, x, z):
    """Population coefficient of ``x`` when regressing ``y`` on ``x`` and ``z``."""
    idx = {n: i for i, n in enumerate(nodes)}
    reg = [idx[x]] + [idx[v] for v in z]
    beta = np.linalg.solve(cov[np.ix_(reg, reg)], cov[reg, idx[y]])
    return float(beta[0])


def random_weights(rng, g):
    return {(a, b): rng.choice([-1, 1]) * rng.uniform(0.3, 1.0) for a, b in g.directed_pairs()}


def all_candidates(g, x, y):
    rest = [v for v in g.nodes if v not in (x, y)]
    for k in range(len(rest) + 1):
        yield from itertools.combinations(rest, k)


def random_keep(rng, g, low=2):
    while True:
        keep = sorted(v for v in g.nodes if rng.random() < 0.7)
        if len(keep) >= low:
            return keep


def sample_queries(rng, g, count=3):
    nodes = list(g.nodes)
    for _ in range(count):
        x, y = rng.sample(nodes, 2)
        rest = [v for v in nodes if v not in (x, y)]
        z = [v for v in rest if rng.random() < 0.4]
        yield x, y, z
