"""Adjustment sets and identifiability.

All functions take ``(treatment, outcome)`` in that order. The generalized
adjustment criterion is checked graphically for DAGs, CPDAGs, MAGs and PAGs;
ADMGs get the parent-adjustment and bidirected-path identifiability checks.

When there is no possibly directed path from treatment to outcome the
intervention cannot change the outcome. Following the null-effect convention,
the empty set is then reported as valid and the implied effect is zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .graph import ARROW, Graph, GraphError, Kind, parents, possible_ancestors, possible_descendants, children
from .separation import definite_status_open_paths, is_visible

__all__ = [
    "AdjustmentQuery",
    "forbidden_set",
    "canonical_adjustment_set",
    "has_possibly_directed_path",
    "is_amenable",
    "is_valid_adjustment",
    "parent_adjustment_valid",
    "identifiable_in_admg",
]

_GAC_KINDS = (Kind.DAG, Kind.CPDAG, Kind.MAG, Kind.PAG)


@dataclass(frozen=True)
class AdjustmentQuery:
    treatment: str
    outcome: str
    candidate: frozenset = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "candidate", frozenset(self.candidate))
        if self.treatment == self.outcome:
            raise GraphError("treatment and outcome must differ")
        if {self.treatment, self.outcome} & self.candidate:
            raise GraphError("candidate set overlaps treatment/outcome")


def _poss_reach(g: Graph, start: Iterable[str], blocked: str, forward: bool) -> set[str]:
    # possibly directed reachability that never enters ``blocked``
    seen = set()
    stack = list(start)
    while stack:
        v = stack.pop()
        if v in seen or v == blocked:
            continue
        seen.add(v)
        for w, mv, mw in g.neighbors(v):
            ok = mv is not ARROW if forward else mw is not ARROW
            if ok and w not in seen:
                stack.append(w)
    return seen


def _causal_nodes(g: Graph, x: str, y: str) -> set[str]:
    """Nodes other than ``x`` on possibly directed walks from ``x`` to ``y``.

    Walks may be longer than the simple paths used in the definition, but the
    possible descendants of both node sets coincide, which is all that matters
    for the forbidden set.
    """
    first = [w for w, mx, _ in g.neighbors(x) if mx is not ARROW]
    from_x = _poss_reach(g, first, x, forward=True)
    to_y = _poss_reach(g, [y], x, forward=False)
    return from_x & to_y


def has_possibly_directed_path(g: Graph, x: str, y: str) -> bool:
    g.check_node(x)
    g.check_node(y)
    return y in _causal_nodes(g, x, y)


def forbidden_set(g: Graph, x: str, y: str) -> set[str]:
    """Possible descendants of every node other than ``x`` lying on a
    possibly directed path from ``x`` to ``y``."""
    g.check_node(x)
    g.check_node(y)
    cn = _causal_nodes(g, x, y)
    return possible_descendants(g, cn) if cn else set()


def canonical_adjustment_set(g: Graph, x: str, y: str) -> set[str]:
    forb = forbidden_set(g, x, y)
    return possible_ancestors(g, [x, y]) - forb - {x, y}


def is_amenable(g: Graph, x: str, y: str) -> bool:
    """Every possibly directed path from ``x`` to ``y`` starts with a visible edge."""
    for w, mx, mw in g.neighbors(x):
        if mx is ARROW:
            continue
        if y not in _poss_reach(g, [w], x, forward=True):
            continue
        if not (mw is ARROW and g.has_directed(x, w) and is_visible(g, x, w)):
            return False
    return True


def is_valid_adjustment(g: Graph, x: str | AdjustmentQuery, y: str | None = None,
                        z: Iterable[str] = (), null_convention: bool = True) -> bool:
    """Generalized adjustment criterion.

    With ``null_convention`` the empty set is valid whenever no possibly
    directed path from ``x`` to ``y`` exists (the effect is then zero and no
    adjustment is needed). Non-empty sets are always judged by the criterion
    itself, so a set reported valid also gives the right regression
    coefficient in a linear model.
    """
    q = x if isinstance(x, AdjustmentQuery) else AdjustmentQuery(x, y, frozenset(z))
    if g.kind not in _GAC_KINDS:
        raise GraphError(f"adjustment criterion not available for a {g.kind.value}")
    for n in (q.treatment, q.outcome, *q.candidate):
        g.check_node(n)
    t, o, zs = q.treatment, q.outcome, q.candidate
    if null_convention and not zs and not has_possibly_directed_path(g, t, o):
        return True
    if not is_amenable(g, t, o):
        return False
    if zs & forbidden_set(g, t, o):
        return False
    return not definite_status_open_paths(g, t, o, zs, possibly=True)


def parent_adjustment_valid(g: Graph, x: str, y: str) -> tuple[bool, set[str]]:
    """Whether adjusting for the parents of ``x`` identifies its effect on ``y``.

    DAGs and ADMGs: valid iff no bidirected edge touches ``x``. CPDAGs, MAGs
    and PAGs use the canonical adjustment set instead of the parents.
    """
    g.check_node(x)
    g.check_node(y)
    if x == y:
        raise GraphError("treatment and outcome must differ")
    if g.kind in (Kind.DAG, Kind.ADMG):
        bidir = any(mx is ARROW and mo is ARROW for _, mx, mo in g.neighbors(x))
        return (not bidir), parents(g, x)
    canon = canonical_adjustment_set(g, x, y)
    return is_valid_adjustment(g, x, y, canon), canon


def identifiable_in_admg(g: Graph, x: str, y: str) -> bool:
    """No path of bidirected edges joins ``x`` to one of its children."""
    if g.kind not in (Kind.DAG, Kind.ADMG):
        raise GraphError(f"expected a DAG or ADMG, got a {g.kind.value}")
    g.check_node(y)
    kids = children(g, x)
    if not kids:
        return True
    seen = {x}
    stack = [x]
    while stack:
        v = stack.pop()
        for w, mv, mw in g.neighbors(v):
            if mv is ARROW and mw is ARROW and w not in seen:
                if w in kids:
                    return False
                seen.add(w)
                stack.append(w)
    return True
