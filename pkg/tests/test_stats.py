import numpy as np
import pytest

from selfcompat.dataset import Dataset
from selfcompat.graph import Graph
from selfcompat.scm import LinearScm, covariance, population_coefficient, sample, total_effect, unfaithful_fig1_scm
from selfcompat.stats import (
    BootstrapGram,
    StatsError,
    equal_effects_test,
    fisher_z,
    fisher_z_from_corr,
    partial_correlation_analysis,
    partial_regression_coefficient,
)

BACKDOOR = LinearScm(Graph.parse("DAG", "Z -> X, X -> Y, Z -> Y"), {("Z", "X"): 1.0, ("X", "Y"): 1.0, ("Z", "Y"): 1.0})


def test_fisher_z_zero_correlation():
    res = fisher_z_from_corr(0.0, 100, 0, 0.05)
    assert res.statistic == 0.0 and res.p_value == 1.0 and res.independent


def test_fisher_z_size():
    rng = np.random.default_rng(0)
    rejections = 0
    for _ in range(2000):
        d = Dataset(("a", "b"), rng.standard_normal((10_000, 2)))
        rejections += not fisher_z(d, "a", "b", (), 0.05).independent
    assert abs(rejections / 2000 - 0.05) <= 0.01


def test_fisher_z_unfaithful_pair():
    rng = np.random.default_rng(1)
    scm = unfaithful_fig1_scm()
    kept = sum(fisher_z(sample(scm, 100_000, rng), "Y", "Z2", (), 0.01).independent for _ in range(100))
    assert kept >= 97


def test_fisher_z_symmetric_and_conditional():
    rng = np.random.default_rng(2)
    d = sample(BACKDOOR, 5000, rng)
    a = fisher_z(d, "X", "Y", ["Z"])
    b = fisher_z(d, "Y", "X", ["Z"])
    assert a.statistic == pytest.approx(b.statistic) and a.p_value == pytest.approx(b.p_value)
    assert not a.independent
    with pytest.raises(StatsError):
        fisher_z(Dataset(("a", "b", "c"), np.ones((3, 3))), "a", "b", ["c"])


def test_fisher_z_collinear():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(200)
    d = Dataset(("a", "b", "c"), np.column_stack([x, rng.standard_normal(200), 2 * x]))
    with pytest.raises(StatsError):
        fisher_z(d, "b", "a", ["c"])


def test_partial_regression():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(100_000)
    d = Dataset(("r", "y"), np.column_stack([x, 2 * x + rng.standard_normal(100_000)]))
    assert partial_regression_coefficient(d, "y", "r") == pytest.approx(2.0, abs=0.05)
    d = sample(BACKDOOR, 100_000, rng)
    assert partial_regression_coefficient(d, "Y", "X", ["Z"]) == pytest.approx(total_effect(BACKDOOR, "X", "Y"), abs=0.02)
    nodes = list(BACKDOOR.nodes)
    confounded = population_coefficient(covariance(BACKDOOR, nodes), nodes, "Y", "X")
    assert confounded == pytest.approx(1.5)
    assert partial_regression_coefficient(d, "Y", "X") == pytest.approx(confounded, abs=0.02)
    with pytest.raises(StatsError):
        partial_regression_coefficient(d, "Y", "X", ["X"])


def test_partial_regression_rescaled_controls():
    rng = np.random.default_rng(5)
    d = sample(BACKDOOR, 2000, rng)
    z = d.column("Z")
    scaled = Dataset(d.columns, np.column_stack([d.column("X"), d.column("Y"), 7.5 * z - 3.0]))
    assert partial_regression_coefficient(d, "Y", "X", ["Z"]) == pytest.approx(
        partial_regression_coefficient(scaled, "Y", "X", ["Z"]), rel=1e-9)


def test_gram_matches_direct_regression():
    rng = np.random.default_rng(6)
    d = sample(BACKDOOR, 400, rng)
    gram = BootstrapGram(d, np.random.default_rng(0), 50)
    beta, reps = gram.coefficients("Y", "X", ["Z"])
    assert beta == pytest.approx(partial_regression_coefficient(d, "Y", "X", ["Z"]), rel=1e-9)
    assert reps.shape == (50,)
    again = BootstrapGram(d, np.random.default_rng(0), 50).coefficients("Y", "X", ["Z"])[1]
    assert np.array_equal(reps, again)


def test_identical_sets_never_reject():
    rng = np.random.default_rng(7)
    d = sample(BACKDOOR, 500, rng)
    res = equal_effects_test(d, "X", "Y", [["Z"], ["Z"]], rng=rng)
    assert res.p_value == 1.0 and not res.reject


def test_confounded_sets_reject():
    rng = np.random.default_rng(8)
    hits = sum(equal_effects_test(sample(BACKDOOR, 10_000, rng), "X", "Y", [[], ["Z"]], 0.001, rng).reject
               for _ in range(20))
    assert hits >= 19


def test_equal_valid_sets_keep():
    rng = np.random.default_rng(9)
    scm = unfaithful_fig1_scm()
    kept = sum(not equal_effects_test(sample(scm, 1000, rng), "X", "Y", [[], ["Z1"]], 0.001, rng).reject
               for _ in range(60))
    assert kept >= 57


def test_include_null():
    rng = np.random.default_rng(10)
    d = sample(BACKDOOR, 2000, rng)
    assert equal_effects_test(d, "X", "Y", [["Z"]], 0.001, rng, include_null=True).reject
    ind = Dataset(("a", "b"), rng.standard_normal((2000, 2)))
    assert len(equal_effects_test(ind, "a", "b", [[]], 0.001, rng, include_null=True).coefficients) == 1


def test_equal_effects_errors():
    d = sample(BACKDOOR, 100, np.random.default_rng(0))
    with pytest.raises(StatsError):
        equal_effects_test(d, "X", "Y", [[], ["Z"]], level=0.0)
    with pytest.raises(StatsError):
        equal_effects_test(d, "X", "Y", [])


def test_equal_effects_size_small_grid():
    # valid sets with a common effect: rejection rate at most nominal
    rng = np.random.default_rng(11)
    scm = unfaithful_fig1_scm()
    ps = np.array([equal_effects_test(sample(scm, 300, rng), "X", "Y", [[], ["Z1"]], 0.05, rng, n_boot=300).p_value
                   for _ in range(300)])
    for a in (0.01, 0.05, 0.1, 0.5):
        assert (ps < a).mean() <= a + 3 * np.sqrt(a * (1 - a) / len(ps))


def test_partial_correlation_analysis():
    xs = np.arange(10.0)
    assert partial_correlation_analysis(xs, xs)[0] == pytest.approx(1.0)
    rng = np.random.default_rng(12)
    c = rng.standard_normal(5000)
    a, b = rng.standard_normal(5000), rng.standard_normal(5000)
    r, p = partial_correlation_analysis(a + c, a + b + c, c)
    # residual parts a and a + b have correlation 1 / sqrt(2)
    assert r == pytest.approx(1 / np.sqrt(2), abs=0.02)
    assert p < 1e-10
    with pytest.raises(StatsError):
        partial_correlation_analysis([1, 1, 1, 1], [1, 2, 3, 4])
    with pytest.raises(StatsError):
        partial_correlation_analysis([1, 2], [1, 2])


def test_partial_correlation_analysis_calibration():
    rng = np.random.default_rng(13)
    ps = np.array([partial_correlation_analysis(rng.standard_normal(50), rng.standard_normal(50),
                                                rng.standard_normal(50))[1] for _ in range(2000)])
    for a in (0.05, 0.25, 0.5):
        assert abs((ps < a).mean() - a) < 4 * np.sqrt(a * (1 - a) / 2000)
