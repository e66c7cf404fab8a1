"""Incompatibility scores between a joint output and outputs on subsets.

``kappa_g`` averages the structural Hamming distance between the projection
of the joint graph and each marginal graph. ``kappa_i`` counts variable pairs
on which the graphs make contradicting interventional claims, either because
their adjustment sets give statistically different effects or because one
graph identifies an effect that the matching projection does not.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .adjustment import (
    canonical_adjustment_set,
    has_possibly_directed_path,
    identifiable_in_admg,
    is_valid_adjustment,
    parent_adjustment_valid,
)
from .dataset import Dataset
from .discovery import BOT, AlgorithmHandle, run_algorithm
from .graph import Graph, GraphError, Kind, encode
from .projection import project
from .stats import BootstrapGram, StatsError, equal_effects_test

__all__ = [
    "SubsetPlan",
    "ScoreReport",
    "INCOMPATIBLE_BY_BOT",
    "sample_subsets",
    "shd",
    "shd_unit",
    "shd_marks",
    "kappa_g",
    "per_subset_shd",
    "KappaI",
    "adjustment_claim",
    "kappa_i",
    "self_compat_report",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
INCOMPATIBLE_BY_BOT = "incompatible-by-bot"
UNCOMMITTED_WARNING = "uncommitted output: no effect is identifiable in any graph, so kappa_i is 0 by convention"


@dataclass(frozen=True)
class SubsetPlan:
    subsets: tuple
    seed: int | None = None


def sample_subsets(nodes: Iterable[str], size: int | None = None, count: int = 40,
                   rng: np.random.Generator | int | None = None) -> SubsetPlan:
    """Draw ``count`` subsets of ``size`` nodes uniformly, with replacement.

    ``size`` defaults to half the nodes, rounded up.
    """
    nodes = sorted(set(nodes))
    size = math.ceil(len(nodes) / 2) if size is None else size
    if not 1 <= size <= len(nodes):
        raise ValueError(f"subset size must lie in [1, {len(nodes)}]")
    if count < 1:
        raise ValueError("count must be positive")
    seed = rng if isinstance(rng, int) else None
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    subsets = []
    for _ in range(count):
        pick = gen.choice(len(nodes), size=size, replace=False)
        subsets.append(tuple(sorted(nodes[i] for i in pick)))
    return SubsetPlan(tuple(subsets), seed)


# ---------------------------------------------------------------------------
# SHD


def _check_same(g1: Graph, g2: Graph) -> None:
    if set(g1.nodes) != set(g2.nodes):
        raise GraphError(f"node sets differ: {g1.nodes} vs {g2.nodes}")


def _records(g: Graph) -> dict:
    out: dict = {}
    for e in g.edges:
        out.setdefault((e.a, e.b), []).append((e.mark_a, e.mark_b))
    return {k: sorted(v, key=lambda t: (t[0].value, t[1].value)) for k, v in out.items()}


def shd_unit(g1: Graph, g2: Graph) -> int:
    """Number of node pairs whose edge records differ in any way."""
    _check_same(g1, g2)
    r1, r2 = _records(g1), _records(g2)
    return sum(1 for k in set(r1) | set(r2) if r1.get(k) != r2.get(k))


def shd_marks(g1: Graph, g2: Graph) -> int:
    """Number of differing endpoint marks; a missing edge counts as two."""
    _check_same(g1, g2)
    r1, r2 = _records(g1), _records(g2)
    total = 0
    for k in set(r1) | set(r2):
        a, b = r1.get(k), r2.get(k)
        if a is None or b is None:
            total += 2
        elif a != b:
            if len(a) != 1 or len(b) != 1:
                total += 2
            else:
                total += (a[0][0] is not b[0][0]) + (a[0][1] is not b[0][1])
    return total


def shd(g1: Graph, g2: Graph) -> int:
    """Unit SHD for DAG/ADMG/CPDAG, mark SHD for MAG/PAG."""
    if g1.kind is not g2.kind:
        raise GraphError(f"cannot compare a {g1.kind.value} with a {g2.kind.value}")
    if g1.kind in (Kind.MAG, Kind.PAG):
        return shd_marks(g1, g2)
    return shd_unit(g1, g2)


# ---------------------------------------------------------------------------
# graphical score


def per_subset_shd(joint: Graph, marginals: Sequence[tuple]) -> list[int]:
    return [shd(project(joint, s, m.kind), m) for s, m in marginals]


def kappa_g(joint: Graph | object, marginals: Sequence[tuple]) -> float | str:
    """Mean SHD between ``project(joint, S_i)`` and the marginal on ``S_i``.

    Returns :data:`INCOMPATIBLE_BY_BOT` when any graph is the failure token.
    """
    if joint is BOT or any(m is BOT for _, m in marginals):
        return INCOMPATIBLE_BY_BOT
    if not marginals:
        raise ValueError("need at least one marginal")
    vals = per_subset_shd(joint, marginals)
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# interventional score


NULL_EFFECT = "null"


@dataclass(frozen=True)
class Claim:
    """An adjustment set a graph declares valid, or the claim of a zero effect."""

    adjustment: frozenset | None
    note: str = ""

    @property
    def is_null(self) -> bool:
        return self.adjustment is None


def adjustment_claim(g: Graph, x: str, y: str, rng: np.random.Generator | None = None) -> Claim | None:
    """The adjustment set ``g`` offers for the effect of ``x`` on ``y``, if any.

    DAG/ADMG: the parents of ``x`` when no bidirected edge touches ``x``; the
    effect is claimed to be zero when ``y`` is itself a parent of ``x``.
    CPDAG/MAG/PAG: the canonical adjustment set when it is valid. Without a
    possibly directed path from ``x`` to ``y`` the effect is zero; the claim
    then names a random valid singleton from the canonical set (seeded by
    ``rng``), the canonical set itself if no singleton is valid, or the bare
    zero-effect claim.
    """
    if g.kind in (Kind.DAG, Kind.ADMG):
        valid, pa = parent_adjustment_valid(g, x, y)
        if not valid:
            return None
        if y in pa:
            return Claim(None, "outcome is a parent of the treatment")
        return Claim(frozenset(pa))
    if has_possibly_directed_path(g, x, y):
        canon = canonical_adjustment_set(g, x, y)
        if is_valid_adjustment(g, x, y, canon, null_convention=False):
            return Claim(frozenset(canon))
        return None
    canon = sorted(canonical_adjustment_set(g, x, y))
    singles = [w for w in canon if is_valid_adjustment(g, x, y, {w}, null_convention=False)]
    if singles:
        pick = singles[int(rng.integers(len(singles)))] if rng is not None else singles[0]
        return Claim(frozenset([pick]), f"random singleton {pick}")
    if canon and is_valid_adjustment(g, x, y, canon, null_convention=False):
        return Claim(frozenset(canon), "no possibly directed path")
    return Claim(None, "no possibly directed path")


def _identifiable(g: Graph, x: str, y: str, claim: Claim | None) -> bool:
    if g.kind in (Kind.DAG, Kind.ADMG):
        return identifiable_in_admg(g, x, y)
    return claim is not None


@dataclass
class PairDetail:
    treatment: str
    outcome: str
    t: int
    counted: bool
    reason: str
    claims: list = field(default_factory=list)
    p_value: float | None = None


@dataclass
class KappaI:
    value: float
    normalizer_c: int
    sum_t: int
    pairs: list
    warning: str | None = None


def _graph_pairs(g: Graph) -> list[tuple[str, str]]:
    return [(a, b) for a, b in itertools.permutations(g.nodes, 2)]


def kappa_i(joint: Graph | object, marginals: Sequence[tuple], data: Dataset, level: float = 0.001,
            rng: np.random.Generator | int | None = None, projections: Sequence[Graph] | None = None,
            gram: BootstrapGram | None = None) -> KappaI | str:
    """Fraction of variable pairs with contradicting interventional claims.

    For every ordered pair ``(x, y)`` each graph containing both nodes may
    claim an adjustment set (see :func:`adjustment_claim`). The pair scores 1
    if two distinct claims give significantly different effects at ``level``,
    or if a marginal graph and the projection of the joint onto the same
    subset disagree on whether a claim exists. Pairs where only the joint
    graph makes a claim and no projection can identify the effect are not
    counted. With no counted pair the score is 0 and a warning is attached.
    """
    if joint is BOT or any(m is BOT for _, m in marginals):
        return INCOMPATIBLE_BY_BOT
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    base_seed = int(gen.integers(2**63 - 1))
    if projections is None:
        projections = [project(joint, s, m.kind) for s, m in marginals]
    if gram is None:
        gram = BootstrapGram(data, np.random.default_rng([base_seed, 0]))
    node_rank = {n: i for i, n in enumerate(joint.nodes)}

    sum_t = 0
    c = 0
    details = []
    for x, y in _graph_pairs(joint):
        pair_rng = np.random.default_rng([base_seed, 1, node_rank[x], node_rank[y]])
        claims = []  # (source label, claim)
        jc = adjustment_claim(joint, x, y, pair_rng)
        if jc is not None:
            claims.append(("joint", jc))
        disagree = []
        proj_ident = False
        for i, ((subset, marg), proj) in enumerate(zip(marginals, projections)):
            if x not in subset or y not in subset:
                continue
            mc = adjustment_claim(marg, x, y, pair_rng)
            pc_ = adjustment_claim(proj, x, y, pair_rng)
            if mc is not None:
                claims.append((f"marginal {i}", mc))
            if (mc is None) != (pc_ is None):
                disagree.append(i)
            if _identifiable(proj, x, y, pc_):
                proj_ident = True
        if not claims:
            continue
        only_joint = all(src == "joint" for src, _ in claims)
        if only_joint and not proj_ident:
            details.append(PairDetail(x, y, 0, False, "only the joint graph identifies the effect",
                                      _claims_doc(claims)))
            continue
        c += 1
        t = 0
        reason = "compatible"
        p_value = None
        if disagree:
            t = 1
            reason = f"identifiability differs from the projection on subsets {disagree}"
        sets = []
        include_null = False
        for _, cl in claims:
            if cl.is_null:
                include_null = True
            elif cl.adjustment not in sets:
                sets.append(cl.adjustment)
        if t == 0 and (len(sets) >= 2 or (include_null and sets)):
            try:
                res = equal_effects_test(data, x, y, sets, level, include_null=include_null, gram=gram)
                p_value = res.p_value
                if res.reject:
                    t = 1
                    reason = "adjustment sets give different effects"
                elif res.inconclusive:
                    reason = "test inconclusive"
            except StatsError as exc:
                log.info("kappa_i: test for (%s, %s) failed: %s", x, y, exc)
                reason = f"test error: {exc}"
        sum_t += t
        details.append(PairDetail(x, y, t, True, reason, _claims_doc(claims), p_value))

    if c == 0:
        return KappaI(0.0, 0, 0, details, UNCOMMITTED_WARNING)
    return KappaI(sum_t / c, c, sum_t, details)


def _claims_doc(claims) -> list:
    return [
        {"source": src, "set": None if cl.is_null else sorted(cl.adjustment), "note": cl.note}
        for src, cl in claims
    ]


# ---------------------------------------------------------------------------
# report


@dataclass
class ScoreReport:
    kappa_g: float | None
    kappa_i: float | None
    normalizer_c: int
    per_subset_shd: list
    bot_count: int
    pair_details: list = field(default_factory=list)
    warning: str | None = None
    subsets: list = field(default_factory=list)
    joint: dict | None = None
    marginals: list = field(default_factory=list)

    @property
    def incompatible_by_bot(self) -> bool:
        return self.bot_count > 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        if self.bot_count:
            d["kappa_g"] = INCOMPATIBLE_BY_BOT
            d["kappa_i"] = INCOMPATIBLE_BY_BOT
        return d


def self_compat_report(handle: AlgorithmHandle, data: Dataset, plan: SubsetPlan, level: float = 0.001,
                       rng: np.random.Generator | int | None = None, with_kappa_i: bool = True) -> ScoreReport:
    """Run ``handle`` on all columns and on every subset of ``plan`` and score the outputs."""
    for s in plan.subsets:
        if not set(s) <= set(data.columns):
            raise ValueError(f"subset {s} is not contained in the data columns")
    joint = run_algorithm(handle, data)
    margs = [(tuple(s), run_algorithm(handle, data, s)) for s in plan.subsets]
    bots = int(joint is BOT) + sum(m is BOT for _, m in margs)
    subsets = [list(s) for s in plan.subsets]
    if bots:
        return ScoreReport(None, None, 0, [], bots, subsets=subsets,
                           joint=None if joint is BOT else encode(joint),
                           marginals=[None if m is BOT else encode(m) for _, m in margs])
    projections = [project(joint, s, m.kind) for s, m in margs]
    per = [shd(p, m) for p, (_, m) in zip(projections, margs)]
    kg = float(np.mean(per))
    ki = None
    c = 0
    pairs = []
    warning = None
    if with_kappa_i:
        res = kappa_i(joint, margs, data, level, rng, projections=projections)
        ki, c, warning = res.value, res.normalizer_c, res.warning
        pairs = [asdict(p) for p in res.pairs]
        if warning:
            log.warning("%s: %s", getattr(handle, "label", "algorithm"), warning)
    return ScoreReport(kg, ki, c, per, 0, pairs, warning, subsets, encode(joint), [encode(m) for _, m in margs])
