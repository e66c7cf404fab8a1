"""Reference constructions with known answers, runnable as a self-check."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adjustment import is_valid_adjustment, parent_adjustment_valid
from .discovery import PopulationCi, pc
from .graph import Graph
from .projection import latent_admg, latent_pag
from .scm import covariance, merging_scm, unfaithful_fig1_scm
from .separation import is_m_separated, is_visible

__all__ = ["FixtureResult", "SIGMA", "SIGMA_TILDE", "MERGING_ORDER", "run_fixtures"]

MERGING_ORDER = ["p1", "p2", "i", "k", "j"]

SIGMA = np.array([
    [1, 0, 1, 1, 1],
    [0, 1, 1, 1, 1],
    [1, 1, 3, 3, 3],
    [1, 1, 3, 4, 4],
    [1, 1, 3, 4, 5],
], dtype=float)

SIGMA_TILDE = np.array([
    [1, 0, 1, 1, 1],
    [0, 1, 1, 1, 1],
    [1, 1, 3, 3, 3.5],
    [1, 1, 3, 4, 4],
    [1, 1, 3.5, 4, 5],
], dtype=float)

SIGMA_PPIK = np.array([[1, 0, 1, 1], [0, 1, 1, 1], [1, 1, 3, 3], [1, 1, 3, 4]], dtype=float)
SIGMA_PPKJ = np.array([[1, 0, 1, 1], [0, 1, 1, 1], [1, 1, 4, 4], [1, 1, 4, 5]], dtype=float)


@dataclass(frozen=True)
class FixtureResult:
    name: str
    passed: bool
    detail: str = ""


def _sub(m: np.ndarray, names) -> np.ndarray:
    idx = [MERGING_ORDER.index(n) for n in names]
    return m[np.ix_(idx, idx)]


def check_sigma() -> list[FixtureResult]:
    cov = covariance(merging_scm(), MERGING_ORDER)
    err = float(np.max(np.abs(cov - SIGMA)))
    out = [FixtureResult("sigma: covariance of the merging SCM", err <= 1e-12, f"max abs error {err:.2e}")]
    e1 = float(np.max(np.abs(_sub(cov, ["p1", "p2", "i", "k"]) - SIGMA_PPIK)))
    e2 = float(np.max(np.abs(_sub(cov, ["p1", "p2", "k", "j"]) - SIGMA_PPKJ)))
    out.append(FixtureResult("sigma: 4x4 marginals", max(e1, e2) <= 1e-12, f"errors {e1:.1e}, {e2:.1e}"))
    eig = np.linalg.eigvalsh(SIGMA_TILDE)
    sym = bool(np.array_equal(SIGMA_TILDE, SIGMA_TILDE.T))
    t1 = float(np.max(np.abs(_sub(SIGMA_TILDE, ["p1", "p2", "i", "k"]) - SIGMA_PPIK)))
    t2 = float(np.max(np.abs(_sub(SIGMA_TILDE, ["p1", "p2", "k", "j"]) - SIGMA_PPKJ)))
    out.append(FixtureResult("sigma tilde: symmetric positive definite", sym and eig.min() > 0,
                             f"smallest eigenvalue {eig.min():.4f}"))
    out.append(FixtureResult("sigma tilde: same 4x4 marginals", max(t1, t2) == 0.0, f"errors {t1}, {t2}"))
    out.append(FixtureResult("sigma tilde differs from sigma", not np.allclose(SIGMA, SIGMA_TILDE)))
    return out


def check_unfaithful_pc() -> list[FixtureResult]:
    scm = unfaithful_fig1_scm()
    nodes = list(scm.nodes)
    cov = covariance(scm, nodes)
    backend = PopulationCi(cov, nodes)
    g_s = pc(backend, ["X", "Y", "Z1"])
    g_t = pc(backend, ["X", "Y", "Z2"])
    want_s = Graph.parse("CPDAG", "X -> Y, Z1 -> Y")
    want_t = Graph.parse("CPDAG", "Y -> X, Z2 -> X")
    zero = abs(cov[nodes.index("Y"), nodes.index("Z2")])
    return [
        FixtureResult("unfaithful SCM: Cov(Y, Z2) = 0", zero < 1e-15, f"|cov| = {zero:.1e}"),
        FixtureResult("unfaithful SCM: Y, Z2 not d-separated", not is_m_separated(scm.dag, "Y", "Z2")),
        FixtureResult("unfaithful SCM: PC on {X, Y, Z1}", g_s == want_s, repr(g_s)),
        FixtureResult("unfaithful SCM: PC on {X, Y, Z2}", g_t == want_t, repr(g_t)),
    ]


def check_graphs() -> list[FixtureResult]:
    out = []
    merging = merging_scm().dag
    p_i = latent_pag(merging, ["p1", "p2", "k", "i"])
    p_j = latent_pag(merging, ["p1", "p2", "k", "j"])
    out.append(FixtureResult("merging PAG over {p1, p2, i, k}",
                             p_i == Graph.parse("PAG", "p1 o-> i, p2 o-> i, i -> k"), repr(p_i)))
    out.append(FixtureResult("merging PAG over {p1, p2, k, j}",
                             p_j == Graph.parse("PAG", "p1 o-> k, p2 o-> k, k -> j"), repr(p_j)))
    out.append(FixtureResult("merging PAG: k -> j visible", is_visible(p_j, "k", "j")))
    g_s = Graph.parse("PAG", "X -> Y, Z1 o-> Y, Z3 o-> X, Z4 o-> X")
    out.append(FixtureResult("visible edge X -> Y witnessed by Z3", is_visible(g_s, "X", "Y")))
    fig1 = Graph.parse("DAG", "X -> Y, Z1 -> Y, Z2 -> Y, X -> Z2")
    sets = [is_valid_adjustment(fig1, "X", "Y", z) for z in ((), ("Z1",), ("Z2",))]
    out.append(FixtureResult("joint DAG adjustment: {} and {Z1} valid, {Z2} not", sets == [True, True, False],
                             str(sets)))
    g1 = Graph.parse("DAG", "X -> Y, X -> Z, Y -> Z")
    proj = latent_admg(g1, ["Y", "Z"])
    out.append(FixtureResult("non-generic confounder projection", proj == Graph.parse("ADMG", "Y -> Z, Y <-> Z"),
                             repr(proj)))
    out.append(FixtureResult("non-generic confounder: parent adjustment invalid",
                             not parent_adjustment_valid(proj, "Y", "Z")[0]))
    return out


def run_fixtures() -> list[FixtureResult]:
    return check_sigma() + check_unfaithful_pc() + check_graphs()
