import numpy as np
import pytest

from ldpc_bounds.channels import ChannelModel
from ldpc_bounds.ensembles import DegreePolynomial, Ensemble
from ldpc_bounds.simulator import (
    GraphConstructionError,
    SimulationConfig,
    TannerGraph,
    build_graph,
    degree_sequences,
    doubled_errors,
    hard_decisions,
    monte_carlo,
    ms_decode,
    sp_decode,
    wilson_halfwidth,
)

R36 = Ensemble.regular(3, 6)


def test_regular_counts():
    g = build_graph(R36, 1000, np.random.default_rng(0))
    assert (g.n, g.m, g.num_edges) == (1000, 500, 3000)
    assert not g.has_duplicate_edges()
    assert set(g.var_degrees) == {3} and set(g.chk_degrees) == {6}


def test_tiny_graph():
    g = build_graph(R36, 10, np.random.default_rng(3))
    assert g.var_degrees.sum() == g.chk_degrees.sum() == 30


def test_same_seed_same_graph():
    a = build_graph(R36, 500, np.random.default_rng(42))
    b = build_graph(R36, 500, np.random.default_rng(42))
    np.testing.assert_array_equal(a.edge_var, b.edge_var)
    np.testing.assert_array_equal(a.edge_chk, b.edge_chk)


def test_irregular_degree_distribution():
    lam = DegreePolynomial.from_degrees({2: 0.3, 3: 0.4, 6: 0.3})
    rho = DegreePolynomial.from_degrees({6: 0.5, 7: 0.5})
    ens = Ensemble(lam, rho)
    n = 5000
    g = build_graph(ens, n, np.random.default_rng(1))
    target = lam.node_perspective().as_dict()
    emp = np.bincount(g.var_degrees, minlength=7)[[2, 3, 6]] / n
    tv = 0.5 * np.abs(emp - np.array([target[2], target[3], target[6]])).sum()
    assert tv <= 2 / np.sqrt(n)
    var_deg, chk_deg = degree_sequences(ens, n)
    assert var_deg.sum() == chk_deg.sum()


def test_repair_cap():
    # two degree-2 variables on one degree-4 check cannot avoid parallel edges
    ens = Ensemble(DegreePolynomial.monomial(2), DegreePolynomial.monomial(4))
    with pytest.raises(GraphConstructionError):
        build_graph(ens, 2, np.random.default_rng(0))


def test_infinite_llrs_no_errors():
    g = build_graph(R36, 200, np.random.default_rng(0))
    llr = np.full(200, np.inf)
    for dec in (sp_decode, ms_decode):
        posts = dec(g, llr, 5)
        assert len(posts) == 6
        assert all(doubled_errors(p) == 0 for p in posts)


def test_isolated_node_keeps_channel():
    g = TannerGraph(1, 0, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    for dec in (sp_decode, ms_decode):
        assert dec(g, np.array([-0.7]), 3)[-1][0] == -0.7


def test_tie_counting():
    post = np.array([1.0, -2.0, 0.0, 0.0])
    assert doubled_errors(post) == 4
    np.testing.assert_array_equal(hard_decisions(post), [0, 1, 0.5, 0.5])


def test_wilson():
    assert wilson_halfwidth(0, 100) > 0
    # p = 0.5, N = 100: 1.96 / 1.0384 * sqrt(0.0025 + 0.000096)
    assert wilson_halfwidth(50, 100) == pytest.approx(0.09617, abs=1e-5)


def test_config_guards():
    with pytest.raises(ValueError):
        SimulationConfig(R36, ChannelModel.bec(0.3), 100, trials=0, max_iter=5)
    with pytest.raises(ValueError):
        SimulationConfig(R36, ChannelModel.bec(0.3), 100, trials=1, max_iter=5, master_seed=-1)


def test_monte_carlo_deterministic_across_threads():
    cfg = SimulationConfig(R36, ChannelModel.bsc(0.04), 600, trials=10, max_iter=4, master_seed=11)
    a = monte_carlo(cfg, "SP", threads=1)
    b = monte_carlo(cfg, "SP", threads=3)
    np.testing.assert_array_equal(a.ber, b.ber)
    assert a.to_csv("bsc:0.04", 11) == b.to_csv("bsc:0.04", 11)
    c = monte_carlo(SimulationConfig(R36, ChannelModel.bsc(0.04), 600, 10, 4, master_seed=12), "SP", 1)
    assert not np.array_equal(a.ber, c.ber)


def test_monte_carlo_uncoded_iteration_zero():
    cfg = SimulationConfig(R36, ChannelModel.bsc(0.1), 2000, trials=10, max_iter=1, master_seed=5)
    r = monte_carlo(cfg, "MS", threads=1)
    assert abs(r.ber[0] - 0.1) < 4 * r.stderr[0] + 1e-3


def test_bec_sp_equals_ms():
    cfg = SimulationConfig(R36, ChannelModel.bec(0.35), 1000, trials=4, max_iter=8, master_seed=2)
    np.testing.assert_array_equal(monte_carlo(cfg, "SP", 1).ber, monte_carlo(cfg, "MS", 1).ber)


def test_target_error_events_stops_early():
    cfg = SimulationConfig(R36, ChannelModel.bec(0.5), 500, trials=200, max_iter=3,
                           master_seed=0, target_error_events=10, batch=4)
    r = monte_carlo(cfg, "SP", 1)
    assert r.trials < 200


@pytest.mark.slow
def test_below_and_above_bec_threshold():
    below = SimulationConfig(R36, ChannelModel.bec(0.42), 20000, trials=2, max_iter=100, master_seed=1)
    assert monte_carlo(below, "SP", 1).ber[-1] < 1e-3
    above = SimulationConfig(R36, ChannelModel.bec(0.5), 2000, trials=2, max_iter=100, master_seed=1)
    assert monte_carlo(above, "SP", 1).ber[-1] > 0.02
