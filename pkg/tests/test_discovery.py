import random
import sys

import numpy as np
import pytest

from helpers import random_dag
from selfcompat.adjustment import identifiable_in_admg
from selfcompat.dataset import Dataset
from selfcompat.discovery import (
    BOT,
    BuiltinPc,
    EntropyAdmg,
    External,
    OracleCi,
    OraclePc,
    PopulationCi,
    SampleFisherZ,
    entropy_admg,
    entropy_dag,
    handle_from_spec,
    pc,
    pc_details,
    run_algorithm,
)
from selfcompat.graph import TAIL, Graph, Kind, to_json, validate
from selfcompat.projection import dag_to_cpdag
from selfcompat.scm import covariance, random_linear_scm, sample, unfaithful_fig1_scm
from selfcompat.scm import random_dag as scm_dag
from selfcompat.scores import shd


def test_oracle_pc_examples():
    assert pc(OracleCi(Graph.parse("DAG", "X -> Z, Y -> Z")), "XYZ") == Graph.parse("CPDAG", "X -> Z, Y -> Z")
    assert pc(OracleCi(Graph.parse("DAG", "X -> Y, Y -> Z")), "XYZ") == Graph.parse("CPDAG", "X -- Y, Y -- Z")


def test_unfaithful_population_pc():
    scm = unfaithful_fig1_scm()
    nodes = list(scm.nodes)
    backend = PopulationCi(covariance(scm, nodes), nodes)
    assert pc(backend, ["X", "Y", "Z1"]) == Graph.parse("CPDAG", "X -> Y, Z1 -> Y")
    assert pc(backend, ["X", "Y", "Z2"]) == Graph.parse("CPDAG", "Y -> X, Z2 -> X")


def test_oracle_pc_recovers_cpdag():
    rng = random.Random(50)
    for _ in range(150):
        g = random_dag(rng, rng.randint(1, 7), rng.uniform(0.2, 0.7))
        assert pc(OracleCi(g), g.nodes) == dag_to_cpdag(g)


def test_pc_order_independent():
    rng = np.random.default_rng(51)
    for _ in range(10):
        dag, _ = scm_dag(7, 0, 2.5, rng)
        data = sample(random_linear_scm(dag, rng=rng), 300, rng)
        perm = list(rng.permutation(len(data.columns)))
        shuffled = Dataset(tuple(data.columns[i] for i in perm), data.values[:, perm])
        a = pc(SampleFisherZ(data, 0.05), data.columns)
        b = pc(SampleFisherZ(shuffled, 0.05), list(reversed(shuffled.columns)))
        assert a == b
        assert validate(a) == []


def test_pc_conflicts_left_undirected():
    # a 4-cycle whose opposite corners are marginally independent proposes
    # both orientations for every edge
    class Scripted:
        def independent(self, x, y, s):
            return {x, y} in ({"A", "C"}, {"B", "D"}) and s == ()

    res = pc_details(Scripted(), "ABCD")
    assert validate(res.graph) == []
    assert res.conflicts
    assert len(res.conflicts) == 4
    for a, b in res.conflicts:
        assert res.graph.marks(a, b) == [(TAIL, TAIL)]


def test_sample_pc_improves_with_m():
    rng = np.random.default_rng(52)
    errs = {500: [], 5000: [], 50000: []}
    for _ in range(50):
        dag, _ = scm_dag(6, 0, 2, rng)
        scm = random_linear_scm(dag, rng=rng)
        truth = dag_to_cpdag(dag)
        for m in errs:
            g = pc(SampleFisherZ(sample(scm, m, rng), 0.01), dag.nodes)
            errs[m].append(shd(g, truth))
    meds = [np.median(errs[m]) for m in sorted(errs)]
    assert meds[0] >= meds[1] >= meds[2]
    assert np.mean(errs[50000]) < np.mean(errs[500])


def variance_data(variances, names=("a", "b", "c")):
    rng = np.random.default_rng(53)
    cols = [rng.standard_normal(5000) for _ in variances]
    cols = [c / c.std() * np.sqrt(v) for c, v in zip(cols, variances)]
    return Dataset(tuple(names), np.column_stack(cols))


def test_entropy_dag():
    d = variance_data([3, 1, 2])
    assert entropy_dag(d) == Graph.parse("DAG", "b -> c, b -> a, c -> a")
    x = np.random.default_rng(0).standard_normal(100)
    e = Dataset(("c", "b", "a"), np.column_stack([x, -x, x]))
    assert entropy_dag(e) == Graph.parse("DAG", "a -> b, a -> c, b -> c")
    perm = [2, 0, 1]
    shuffled = Dataset(tuple(d.columns[i] for i in perm), d.values[:, perm])
    assert entropy_dag(shuffled) == entropy_dag(d)
    with pytest.raises(ValueError):
        entropy_dag(Dataset(("a", "b"), np.column_stack([np.ones(5), np.arange(5.0)])))


def test_entropy_admg():
    d = variance_data([1, 2], ("X", "Y"))
    assert entropy_admg(d) == Graph.parse("ADMG", "X -> Y, X <-> Y")
    g = entropy_admg(variance_data([1, 3, 2]))
    for a in g.nodes:
        for b in g.nodes:
            if a != b:
                assert g.has_bidirected(a, b)
                # the sink has no children, so only its own effects are trivially identified
                assert identifiable_in_admg(g, a, b) == (a == "b")


def test_run_algorithm_subset():
    rng = np.random.default_rng(54)
    data = sample(unfaithful_fig1_scm(), 1000, rng)
    h = BuiltinPc(0.01)
    assert run_algorithm(h, data) == pc(SampleFisherZ(data, 0.01), data.columns)
    assert run_algorithm(h, data, ["X", "Y"]).nodes == ("X", "Y")
    with pytest.raises(ValueError):
        run_algorithm(h, data, ["X", "Q"])
    truth = unfaithful_fig1_scm().dag
    assert run_algorithm(OraclePc(truth), data, ["X", "Y", "Z1"]) == Graph.parse("CPDAG", "X -> Y, Z1 -> Y")


def write_script(tmp_path, body):
    script = tmp_path / "algo.py"
    script.write_text("import sys, shutil\n" + body)
    return f"{sys.executable} {script} {{input_csv}} {{output_json}}"


def test_external_echo(tmp_path, monkeypatch):
    monkeypatch.setenv("SELFCOMPAT_TMPDIR", str(tmp_path))
    fixed = Graph.parse("PAG", "a o-> b, b -> c")
    (tmp_path / "fixed.json").write_text(to_json(fixed))
    cmd = write_script(tmp_path, f"shutil.copy({str(tmp_path / 'fixed.json')!r}, sys.argv[2])\n")
    data = variance_data([1, 2, 3])
    assert run_algorithm(External(cmd), data) == fixed
    # temp directories are cleaned up
    assert not [p for p in tmp_path.iterdir() if p.name.startswith("selfcompat_")]


@pytest.mark.parametrize("body", [
    "open(sys.argv[2], 'w').write('BOT')\n",
    "sys.exit(4)\n",
    "open(sys.argv[2], 'w').write('{not json')\n",
    "pass\n",
    "open(sys.argv[2], 'w').write('{\"kind\": \"DAG\", \"nodes\": [\"a\"], \"edges\": []}')\n",
])
def test_external_failures_are_bot(tmp_path, body):
    cmd = write_script(tmp_path, body)
    assert run_algorithm(External(cmd), variance_data([1, 2, 3])) is BOT


def test_external_reads_input(tmp_path):
    body = (
        "import csv, json\n"
        "cols = next(csv.reader(open(sys.argv[1])))\n"
        "json.dump({'kind': 'PAG', 'nodes': cols, 'edges': []}, open(sys.argv[2], 'w'))\n"
    )
    g = run_algorithm(External(write_script(tmp_path, body)), variance_data([1, 2, 3]), ["a", "c"])
    assert g == Graph("PAG", ["a", "c"])


def test_handle_from_spec():
    assert handle_from_spec({"type": "pc", "alpha": 0.1}).label == "pc_0.1"
    assert isinstance(handle_from_spec({"type": "entropy_admg"}), EntropyAdmg)
    assert handle_from_spec({"type": "external", "command": "x", "output_kind": "MAG"}).output_kind is Kind.MAG
    with pytest.raises(ValueError):
        handle_from_spec({"type": "external"})
    with pytest.raises(ValueError):
        handle_from_spec({"type": "oracle_pc"})
    with pytest.raises(ValueError):
        handle_from_spec({"type": "fci"})


def test_bot_token():
    assert not BOT and repr(BOT) == "BOT"
