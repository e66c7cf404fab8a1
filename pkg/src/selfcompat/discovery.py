"""Causal discovery frontends.

The built-in PC runs against a conditional-independence backend: Fisher-Z on
data, d/m-separation on a known graph, or exact partial correlations of a
known covariance matrix. Other algorithms plug in through :class:`External`,
which exchanges a CSV file and a graph JSON document with a subprocess.
"""

from __future__ import annotations

import itertools
import logging
import os
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .dataset import Dataset
from .graph import Graph, GraphError, Kind, bidirected, directed, from_json
from .projection import _Pdag, meek_closure, project
from .separation import is_m_separated
from .stats import fisher_z_from_corr, partial_correlation

__all__ = [
    "BOT",
    "CiBackend",
    "SampleFisherZ",
    "OracleCi",
    "PopulationCi",
    "pc",
    "entropy_dag",
    "entropy_admg",
    "AlgorithmHandle",
    "BuiltinPc",
    "EntropyDag",
    "EntropyAdmg",
    "External",
    "OraclePc",
    "OracleProjector",
    "run_algorithm",
    "handle_from_spec",
]

log = logging.getLogger(__name__)


class _Bot:
    """The failure token an algorithm returns when its assumptions break."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BOT"

    def __bool__(self) -> bool:
        return False


BOT = _Bot()


# ---------------------------------------------------------------------------
# CI backends


class CiBackend(Protocol):
    def independent(self, x: str, y: str, given: tuple[str, ...]) -> bool: ...


class SampleFisherZ:
    """Fisher-Z tests on a dataset; the correlation matrix is computed once."""

    def __init__(self, data: Dataset, alpha: float = 0.01):
        self.data = data
        self.alpha = alpha
        self.corr = np.atleast_2d(np.corrcoef(data.values, rowvar=False))
        self._idx = {c: i for i, c in enumerate(data.columns)}

    def independent(self, x: str, y: str, given: tuple[str, ...]) -> bool:
        r = partial_correlation(self.corr, self._idx[x], self._idx[y], [self._idx[g] for g in given])
        return fisher_z_from_corr(r, self.data.n_samples, len(given), self.alpha).independent


class OracleCi:
    """Answers independence queries by d/m-separation in a known graph."""

    def __init__(self, graph: Graph):
        self.graph = graph

    def independent(self, x: str, y: str, given: tuple[str, ...]) -> bool:
        return is_m_separated(self.graph, x, y, given)


class PopulationCi:
    """Exact independence from a population covariance (Gaussian case).

    This reproduces independences a graph does not entail, for example in
    unfaithful models.
    """

    def __init__(self, cov: np.ndarray, nodes: Iterable[str], tol: float = 1e-10):
        self.cov = np.asarray(cov, dtype=float)
        sd = np.sqrt(np.diag(self.cov))
        self.corr = self.cov / np.outer(sd, sd)
        self._idx = {n: i for i, n in enumerate(nodes)}
        self.tol = tol

    def independent(self, x: str, y: str, given: tuple[str, ...]) -> bool:
        r = partial_correlation(self.corr, self._idx[x], self._idx[y], [self._idx[g] for g in given])
        return abs(r) < self.tol


# ---------------------------------------------------------------------------
# PC


@dataclass
class PcResult:
    graph: Graph
    sepsets: dict = field(default_factory=dict)
    conflicts: list = field(default_factory=list)


def pc_details(backend: CiBackend, nodes: Iterable[str], max_cond: int | None = None) -> PcResult:
    """PC with an order-independent skeleton phase.

    Every v-structure proposal is collected before any is applied. An edge
    that receives proposals in both directions stays undirected and is not
    touched by the Meek rules afterwards; orientations that would close a
    directed cycle are skipped.
    """
    nodes = sorted(set(nodes))
    if len(nodes) < 1:
        raise GraphError("pc needs at least one node")
    adj = {v: set(nodes) - {v} for v in nodes}
    sepsets: dict[frozenset, tuple[str, ...]] = {}
    cache: dict[tuple, bool] = {}

    def indep(x, y, s):
        key = (frozenset((x, y)), s)
        if key not in cache:
            cache[key] = backend.independent(x, y, s)
        return cache[key]

    level = 0
    while True:
        if max_cond is not None and level > max_cond:
            break
        snapshot = {v: set(a) for v, a in adj.items()}
        if not any(len(snapshot[x] - {y}) >= level for x in nodes for y in snapshot[x]):
            break
        for x in nodes:
            for y in sorted(snapshot[x]):
                if y not in adj[x]:
                    continue
                cands = sorted(snapshot[x] - {y})
                if len(cands) < level:
                    continue
                for s in itertools.combinations(cands, level):
                    if indep(x, y, s):
                        adj[x].discard(y)
                        adj[y].discard(x)
                        sepsets[frozenset((x, y))] = s
                        break
        level += 1

    proposals = set()
    for z in nodes:
        for x, y in itertools.combinations(sorted(adj[z]), 2):
            if y in adj[x]:
                continue
            if z not in sepsets.get(frozenset((x, y)), ()):
                proposals.add((x, z))
                proposals.add((y, z))
    conflicts = sorted({tuple(sorted(p)) for p in proposals if (p[1], p[0]) in proposals})
    locked = {frozenset(c) for c in conflicts}
    if conflicts:
        log.info("pc: conflicting v-structures left undirected: %s", conflicts)

    lines = [(a, b) for a in nodes for b in adj[a] if a < b]
    pd = _Pdag(nodes, (), lines)
    for a, b in sorted(proposals):
        if frozenset((a, b)) in locked or b not in pd.und[a]:
            continue
        if pd.reaches(b, a):
            continue
        pd.orient(a, b)
    meek_closure(pd, locked=locked)
    return PcResult(pd.to_graph(Kind.CPDAG), sepsets, conflicts)


def pc(backend: CiBackend, nodes: Iterable[str], max_cond: int | None = None) -> Graph:
    return pc_details(backend, nodes, max_cond).graph


# ---------------------------------------------------------------------------
# entropy ordering baselines


def _entropy_order(data: Dataset) -> list[str]:
    var = data.values.var(axis=0)
    if np.any(var <= 0):
        bad = [c for c, v in zip(data.columns, var) if v <= 0]
        raise ValueError(f"zero-variance columns: {bad}")
    return [c for _, c in sorted(zip(var.tolist(), data.columns))]


def entropy_dag(data: Dataset) -> Graph:
    """Complete DAG from lower to higher Gaussian entropy (i.e. variance).

    Ties are broken by column name.
    """
    order = _entropy_order(data)
    return Graph(Kind.DAG, order, [directed(a, b) for a, b in itertools.combinations(order, 2)])


def entropy_admg(data: Dataset) -> Graph:
    """:func:`entropy_dag` plus a bidirected edge on every pair."""
    order = _entropy_order(data)
    edges = []
    for a, b in itertools.combinations(order, 2):
        edges += [directed(a, b), bidirected(a, b)]
    return Graph(Kind.ADMG, order, edges)


# ---------------------------------------------------------------------------
# algorithm handles


class AlgorithmHandle:
    label = "algorithm"
    output_kind: Kind = Kind.CPDAG

    def run(self, data: Dataset) -> Graph | _Bot:
        raise NotImplementedError


@dataclass
class BuiltinPc(AlgorithmHandle):
    alpha: float = 0.01
    label: str = ""
    output_kind: Kind = Kind.CPDAG

    def __post_init__(self):
        self.label = self.label or f"pc_{self.alpha:g}"

    def run(self, data: Dataset) -> Graph:
        return pc(SampleFisherZ(data, self.alpha), data.columns)


@dataclass
class EntropyDag(AlgorithmHandle):
    label: str = "entropy_dag"
    output_kind: Kind = Kind.DAG

    def run(self, data: Dataset) -> Graph:
        return entropy_dag(data)


@dataclass
class EntropyAdmg(AlgorithmHandle):
    label: str = "entropy_admg"
    output_kind: Kind = Kind.ADMG

    def run(self, data: Dataset) -> Graph:
        return entropy_admg(data)


@dataclass
class OraclePc(AlgorithmHandle):
    """PC answering CI queries by separation in ``truth`` (data values unused)."""

    truth: Graph = None
    label: str = "oracle_pc"
    output_kind: Kind = Kind.CPDAG

    def run(self, data: Dataset) -> Graph:
        return pc(OracleCi(self.truth), data.columns)


@dataclass
class OracleProjector(AlgorithmHandle):
    """Returns the projection of ``truth`` onto the columns it is given.

    The truth is first expressed as a graph of ``kind`` over all of its nodes
    and then marginalised. For CPDAGs this makes the output depend on the
    Markov class of the truth only, so projecting the full-set output onto a
    subset reproduces the subset output.
    """

    truth: Graph = None
    kind: Kind = Kind.CPDAG
    label: str = "oracle_projector"

    @property
    def output_kind(self) -> Kind:
        return Kind(self.kind)

    def run(self, data: Dataset) -> Graph:
        whole = project(self.truth, self.truth.nodes, self.kind)
        return project(whole, data.columns, self.kind)


@dataclass
class External(AlgorithmHandle):
    """Runs a command template with ``{input_csv}`` and ``{output_json}`` placeholders.

    The command must write a graph document to the output path, or the token
    ``BOT`` to declare failure. A nonzero exit status or malformed output is
    also treated as failure.
    """

    command: str = ""
    label: str = "external"
    output_kind: Kind = Kind.PAG
    timeout: float | None = None

    def run(self, data: Dataset) -> Graph | _Bot:
        tmp_root = os.environ.get("SELFCOMPAT_TMPDIR") or None
        workdir = tempfile.mkdtemp(prefix="selfcompat_", dir=tmp_root)
        try:
            inp = Path(workdir) / "input.csv"
            out = Path(workdir) / "output.json"
            data.to_csv(inp)
            argv = [tok.format(input_csv=str(inp), output_json=str(out)) for tok in shlex.split(self.command)]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout)
            except (OSError, subprocess.TimeoutExpired) as exc:
                log.warning("%s: could not run command: %s", self.label, exc)
                return BOT
            if proc.returncode != 0:
                log.warning("%s: exit status %d: %s", self.label, proc.returncode, proc.stderr.strip()[-500:])
                return BOT
            try:
                text = out.read_text(encoding="utf-8")
            except OSError as exc:
                log.warning("%s: no output file: %s", self.label, exc)
                return BOT
            if text.strip() == "BOT":
                return BOT
            try:
                g = from_json(text)
            except GraphError as exc:
                log.warning("%s: malformed output: %s", self.label, exc)
                return BOT
            if set(g.nodes) != set(data.columns):
                log.warning("%s: output nodes %s differ from input columns", self.label, list(g.nodes))
                return BOT
            return g
        finally:
            shutil.rmtree(workdir, ignore_errors=True)


def run_algorithm(handle: AlgorithmHandle, data: Dataset, subset: Iterable[str] | None = None) -> Graph | _Bot:
    """Run ``handle`` on the columns ``subset`` of ``data`` (all columns by default)."""
    if subset is not None:
        subset = set(subset)
        missing = subset - set(data.columns)
        if missing:
            raise ValueError(f"subset columns not in data: {sorted(missing)}")
        data = data.subset(subset)
    return handle.run(data)


def handle_from_spec(spec: dict, truth: Graph | None = None) -> AlgorithmHandle:
    """Build a handle from a config entry such as ``{"type": "pc", "alpha": 0.01}``."""
    kind = spec.get("type")
    label = spec.get("label")
    if kind == "pc":
        return BuiltinPc(float(spec.get("alpha", 0.01)), label or "")
    if kind == "entropy_dag":
        return EntropyDag(label or "entropy_dag")
    if kind == "entropy_admg":
        return EntropyAdmg(label or "entropy_admg")
    if kind == "external":
        if not spec.get("command"):
            raise ValueError("external algorithm needs a 'command'")
        return External(spec["command"], label or "external", Kind(spec.get("output_kind", "PAG")),
                        spec.get("timeout"))
    if kind in ("oracle_pc", "oracle_projector"):
        if truth is None:
            raise ValueError(f"{kind} needs the ground truth graph")
        if kind == "oracle_pc":
            return OraclePc(truth, label or "oracle_pc")
        return OracleProjector(truth, Kind(spec.get("kind", "CPDAG")), label or "oracle_projector")
    raise ValueError(f"unknown algorithm type {kind!r}")
