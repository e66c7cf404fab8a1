import itertools
import random

import pytest

from helpers import (
    all_separations,
    cpdag_by_enumeration,
    d_separated_moral,
    pag_by_enumeration,
    random_admg,
    random_dag,
    random_keep,
)
from selfcompat.graph import Graph, GraphError, Kind, validate
from selfcompat.projection import (
    canonical_dag,
    dag_extension,
    dag_to_cpdag,
    latent_admg,
    latent_cpdag,
    latent_mag,
    latent_pag,
    mag_to_pag,
    pag_to_mag,
    project,
)
from selfcompat.separation import is_m_separated

MERGING = Graph.parse("DAG", "p1 -> i, p2 -> i, i -> k, k -> j")
FIG1 = Graph.parse("DAG", "X -> Y, Z1 -> Y, Z2 -> Y, X -> Z2")


def test_latent_admg_examples():
    g1 = Graph.parse("DAG", "X -> Y, X -> Z, Y -> Z")
    assert latent_admg(g1, ["Y", "Z"]) == Graph.parse("ADMG", "Y -> Z, Y <-> Z")
    assert latent_admg(Graph.parse("DAG", "X -> M, M -> Y"), ["X", "Y"]) == Graph.parse("ADMG", "X -> Y")
    assert latent_admg(Graph.parse("DAG", "L -> X, L -> Y"), ["X", "Y"]) == Graph.parse("ADMG", "X <-> Y")
    # a dropped collider does not link its parents
    assert latent_admg(Graph.parse("DAG", "X -> C, Y -> C"), ["X", "Y"]) == Graph("ADMG", ["X", "Y"])
    with pytest.raises(GraphError):
        latent_admg(MERGING, [])
    with pytest.raises(GraphError):
        latent_admg(MERGING, ["i", "zz"])


def test_latent_mag_examples():
    assert latent_mag(Graph.parse("DAG", "L -> X, L -> Y"), ["X", "Y"]) == Graph.parse("MAG", "X <-> Y")
    assert latent_mag(Graph.parse("DAG", "X -> M, M -> Y"), ["X", "Y"]) == Graph.parse("MAG", "X -> Y")
    # the marginal over {X, Y, Z2} of the DAG behind the PAG G_S' example
    g = Graph.parse("DAG", "X -> Y, Z1 -> Y, Z3 -> X, Z4 -> X, Z2 -> Y, L -> Z2, L -> X")
    m = latent_mag(g, ["X", "Y", "Z2"])
    assert m == Graph.parse("MAG", "X -> Y, Z2 -> Y, Z2 <-> X")
    assert m.marks("Z2", "X")[0][1].value == "arrow"


def test_canonical_dag():
    dag, latent = canonical_dag(Graph.parse("ADMG", "X -> Y, X <-> Y"))
    assert len(latent) == 1
    (l,) = latent
    assert set(dag.edges) == set(Graph.parse("DAG", f"X -> Y, {l} -> X, {l} -> Y").edges)


def test_cpdag_examples():
    assert dag_to_cpdag(MERGING) == Graph.parse("CPDAG", "p1 -> i, p2 -> i, i -> k, k -> j")
    assert dag_to_cpdag(Graph.parse("DAG", "A -> B, B -> C")) == Graph.parse("CPDAG", "A -- B, B -- C")
    assert latent_cpdag(FIG1, ["X", "Y", "Z1"]) == Graph.parse("CPDAG", "X -> Y, Z1 -> Y")
    assert project(FIG1, ["X", "Y", "Z1"], "CPDAG") == Graph.parse("CPDAG", "X -> Y, Z1 -> Y")


def test_merging_pags():
    assert latent_pag(MERGING, ["p1", "p2", "i", "k"]) == Graph.parse("PAG", "p1 o-> i, p2 o-> i, i -> k")
    assert latent_pag(MERGING, ["p1", "p2", "k", "j"]) == Graph.parse("PAG", "p1 o-> k, p2 o-> k, k -> j")


def test_cpdag_against_enumeration():
    rng = random.Random(40)
    for _ in range(200):
        g = random_dag(rng, rng.randint(1, 5), rng.uniform(0.2, 0.8))
        assert dag_to_cpdag(g) == cpdag_by_enumeration(g), g


def test_dag_extension_in_class():
    rng = random.Random(41)
    for _ in range(100):
        g = random_dag(rng, rng.randint(1, 7), 0.5)
        cp = dag_to_cpdag(g)
        ext = dag_extension(cp)
        assert ext.kind is Kind.DAG and validate(ext) == []
        assert dag_to_cpdag(ext) == cp


def test_admg_preserves_separations():
    rng = random.Random(42)
    for _ in range(150):
        g = random_dag(rng, rng.randint(2, 7), 0.4)
        keep = random_keep(rng, g)
        admg = latent_admg(g, keep)
        mag = latent_mag(g, keep)
        assert validate(mag) == []
        for x, y in itertools.combinations(keep, 2):
            rest = [v for v in keep if v not in (x, y)]
            for k in range(len(rest) + 1):
                for z in itertools.combinations(rest, k):
                    truth = d_separated_moral(g, x, y, z)
                    assert is_m_separated(admg, x, y, z) == truth
                    assert is_m_separated(mag, x, y, z) == truth


def test_pag_against_enumeration():
    rng = random.Random(43)
    done = 0
    while done < 40:
        g = random_dag(rng, rng.randint(3, 7), 0.45)
        keep = random_keep(rng, g, 3)
        if len(keep) > 5:
            continue
        mag = latent_mag(g, keep)
        if len(mag.edges) > 7:
            continue
        assert latent_pag(g, keep) == pag_by_enumeration(mag, is_m_separated), (g, keep)
        done += 1


def test_pag_to_mag_in_class():
    rng = random.Random(44)
    for _ in range(100):
        g = random_dag(rng, rng.randint(2, 7), 0.45)
        keep = random_keep(rng, g)
        pag = latent_pag(g, keep)
        mag = pag_to_mag(pag)
        assert validate(mag) == []
        assert mag_to_pag(mag) == pag
        assert all_separations(mag, is_m_separated) == all_separations(latent_mag(g, keep), is_m_separated)


def test_identity():
    rng = random.Random(45)
    for _ in range(100):
        g = random_dag(rng, rng.randint(1, 6), 0.5)
        assert project(g, g.nodes, "DAG") == g
        assert project(dag_to_cpdag(g), g.nodes, "CPDAG") == dag_to_cpdag(g)
        a = random_admg(rng, rng.randint(1, 6))
        assert project(a, a.nodes, "ADMG") == a
        mag = latent_mag(g, random_keep(rng, g, 1))
        assert project(mag, mag.nodes, "MAG") == mag
        pag = mag_to_pag(mag)
        assert project(pag, pag.nodes, "PAG") == pag


@pytest.mark.parametrize("kind", ["ADMG", "MAG", "PAG"])
def test_transitivity(kind):
    rng = random.Random(46)
    for _ in range(100):
        g = random_dag(rng, rng.randint(2, 7), 0.45)
        a = random_keep(rng, g, 1)
        b = sorted(v for v in a if rng.random() < 0.7) or a[:1]
        assert project(project(g, a, kind), b, kind) == project(g, b, kind), (g, a, b)


def test_transitivity_cpdag_causally_sufficient():
    rng = random.Random(47)
    done = 0
    while done < 100:
        g = random_dag(rng, rng.randint(2, 7), 0.45)
        a = random_keep(rng, g, 1)
        b = sorted(v for v in a if rng.random() < 0.7) or a[:1]
        if any(e.is_bidirected for e in latent_admg(g, a).edges + latent_admg(g, b).edges):
            continue
        assert project(project(g, a, "CPDAG"), b, "CPDAG") == project(g, b, "CPDAG"), (g, a, b)
        done += 1


def test_project_errors():
    with pytest.raises(GraphError):
        project(Graph.parse("MAG", "X -> Y"), ["X", "Y"], "ADMG")
    with pytest.raises(ValueError):
        project(MERGING, ["i"], "TREE")
