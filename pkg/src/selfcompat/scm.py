"""Linear structural causal models for synthetic ground truth.

Weights are stored in a matrix ``A`` with ``A[parent, child]`` holding the
structural coefficient, so the model reads ``x = A^T x + noise`` and the
population covariance under unit noise is ``((I - A)(I - A)^T)^{-1}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .graph import Graph, GraphError, Kind, directed, topological_order

__all__ = [
    "LinearScm",
    "random_dag",
    "random_linear_scm",
    "sample",
    "covariance",
    "weight_matrix",
    "total_effect",
    "unfaithful_fig1_scm",
    "merging_scm",
    "population_coefficient",
]

GAUSSIAN = "gaussian"
UNIFORM = "uniform"


@dataclass(frozen=True, eq=False)
class LinearScm:
    dag: Graph
    weights: dict
    noise_kind: str = GAUSSIAN
    noise_scale: dict = field(default_factory=dict)
    observed: frozenset = frozenset()

    def __post_init__(self) -> None:
        if self.dag.kind is not Kind.DAG:
            raise GraphError("an SCM needs a DAG")
        if set(self.weights) != set(self.dag.directed_pairs()):
            raise GraphError("weights must be keyed exactly by the DAG's edges")
        if self.noise_kind not in (GAUSSIAN, UNIFORM):
            raise ValueError(f"unknown noise kind {self.noise_kind!r}")
        obs = frozenset(self.observed) if self.observed else frozenset(self.dag.nodes)
        object.__setattr__(self, "observed", obs)

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.dag.nodes

    def scale(self, node: str) -> float:
        return float(self.noise_scale.get(node, 1.0))


def _names(prefix: str, count: int) -> list[str]:
    width = len(str(max(count - 1, 0)))
    return [f"{prefix}{i:0{width}d}" for i in range(count)]


def random_dag(n_obs: int, n_hidden: int, expected_degree: float,
               rng: np.random.Generator) -> tuple[Graph, frozenset]:
    """Erdos-Renyi DAG on ``n_obs + n_hidden`` nodes.

    Each pair is joined with probability ``d / (N - 1)`` and oriented along a
    uniformly random order. Observed nodes are a uniform random subset of
    size ``n_obs`` and are named ``X..``; the rest are named ``H..``.
    """
    if n_obs < 1 or n_hidden < 0:
        raise ValueError("need n_obs >= 1 and n_hidden >= 0")
    total = n_obs + n_hidden
    if not 0 <= expected_degree <= max(total - 1, 0):
        raise ValueError(f"expected degree must lie in [0, {total - 1}]")
    prob = expected_degree / (total - 1) if total > 1 else 0.0
    order = rng.permutation(total)
    draws = rng.random(total * (total - 1) // 2)
    obs_idx = set(rng.choice(total, size=n_obs, replace=False).tolist())
    obs_names = iter(_names("X", n_obs))
    hid_names = iter(_names("H", n_hidden))
    name = {i: next(obs_names) if i in obs_idx else next(hid_names) for i in range(total)}
    edges = []
    for draw, (a, b) in zip(draws, itertools.combinations(range(total), 2)):
        if draw < prob:
            edges.append(directed(name[int(order[a])], name[int(order[b])]))
    dag = Graph(Kind.DAG, name.values(), edges)
    return dag, frozenset(name[i] for i in obs_idx)


def random_linear_scm(dag: Graph, noise_kind: str = GAUSSIAN, rng: np.random.Generator | None = None,
                      observed=None) -> LinearScm:
    """Weights i.i.d. uniform on ``[-1, -0.1] U [0.1, 1]``; unit-variance noise."""
    rng = rng if rng is not None else np.random.default_rng()
    pairs = sorted(dag.directed_pairs())
    mags = rng.uniform(0.1, 1.0, size=len(pairs))
    signs = rng.choice([-1.0, 1.0], size=len(pairs))
    weights = {p: float(s * m) for p, s, m in zip(pairs, signs, mags)}
    return LinearScm(dag, weights, noise_kind, {}, frozenset(observed or dag.nodes))


def weight_matrix(scm: LinearScm, nodes=None) -> np.ndarray:
    """``A[parent, child]`` in the order of ``nodes``, which must list every node."""
    nodes = list(nodes or scm.nodes)
    idx = {n: i for i, n in enumerate(nodes)}
    a = np.zeros((len(nodes), len(nodes)))
    for (p, c), w in scm.weights.items():
        a[idx[p], idx[c]] = w
    return a


def covariance(scm: LinearScm, nodes=None) -> np.ndarray:
    """Exact population covariance in the order of ``nodes`` (default: all, sorted).

    ``nodes`` may be any subset of the model's nodes; the rest are marginalised.
    """
    want = list(nodes or scm.nodes)
    for n in want:
        scm.dag.check_node(n)
    # full order: requested nodes first so a complete request keeps its order
    order = want + [n for n in scm.nodes if n not in set(want)]
    a = weight_matrix(scm, order)
    ia = np.eye(len(order)) - a
    d = np.diag([scm.scale(n) ** 2 for n in order])
    inv = np.linalg.inv(ia)
    k = len(want)
    return (inv.T @ d @ inv)[:k, :k]


def sample(scm: LinearScm, m: int, rng: np.random.Generator) -> Dataset:
    """Draw ``m`` samples and return the observed columns (sorted by name)."""
    if m < 1:
        raise ValueError("m must be positive")
    nodes = list(scm.nodes)
    n = len(nodes)
    scales = np.array([scm.scale(v) for v in nodes])
    if scm.noise_kind == GAUSSIAN:
        noise = rng.standard_normal((m, n))
    else:
        noise = rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=(m, n))
    noise = noise * scales
    a = weight_matrix(scm, nodes)
    # rows satisfy x = x A + e, i.e. x (I - A) = e
    x = np.linalg.solve((np.eye(n) - a).T, noise.T).T
    keep = sorted(scm.observed)
    idx = [nodes.index(v) for v in keep]
    return Dataset(tuple(keep), x[:, idx])


def total_effect(scm: LinearScm, treatment: str, outcome: str) -> float:
    """Sum over directed paths of the product of weights along the path."""
    scm.dag.check_node(treatment)
    scm.dag.check_node(outcome)
    order = topological_order(scm.dag)
    acc = {v: 0.0 for v in order}
    acc[treatment] = 1.0
    started = False
    for v in order:
        if v == treatment:
            started = True
        if not started or acc[v] == 0.0:
            continue
        for (p, c), w in scm.weights.items():
            if p == v:
                acc[c] += acc[v] * w
    return acc[outcome] if treatment != outcome else 1.0


def population_coefficient(cov: np.ndarray, nodes, response: str, regressor: str, controls=()) -> float:
    """OLS coefficient of ``regressor`` in the population regression of ``response``."""
    idx = {n: i for i, n in enumerate(nodes)}
    design = [idx[regressor]] + [idx[c] for c in sorted(controls)]
    sxx = cov[np.ix_(design, design)]
    sxy = cov[design, idx[response]]
    return float(np.linalg.solve(sxx, sxy)[0])


def unfaithful_fig1_scm() -> LinearScm:
    """X -> Y, Z1 -> Y, Z2 -> Y, X -> Z2 with Y and Z2 exactly uncorrelated."""
    dag = Graph.parse("DAG", "X -> Y, Z1 -> Y, Z2 -> Y, X -> Z2")
    weights = {("X", "Y"): 1.0, ("Z1", "Y"): 1.0, ("X", "Z2"): 1.0, ("Z2", "Y"): -0.5}
    return LinearScm(dag, weights)


def merging_scm() -> LinearScm:
    """p1 -> i <- p2, i -> k -> j with unit weights and unit Gaussian noise."""
    dag = Graph.parse("DAG", "p1 -> i, p2 -> i, i -> k, k -> j")
    return LinearScm(dag, {e: 1.0 for e in dag.directed_pairs()})
