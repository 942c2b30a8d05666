import numpy as np
import pytest

from ldpc_bounds.bounds import weight_enumerator
from ldpc_bounds.channels import ChannelModel, bhattacharyya
from ldpc_bounds.density import run_de_full
from ldpc_bounds.ensembles import Ensemble
from ldpc_bounds.simulator import graph_from_tree, ms_decode, sp_decode
from ldpc_bounds.tree_oracle import (
    OracleSizeError,
    _patterns,
    build_tree_code,
    exact_ms_root_error,
    exact_sp_root_error,
    oracle_record,
    reduced_codebook,
    root_decisions,
    tree_size,
    union_bound,
    weight_profile,
)


def test_sizes():
    assert tree_size(3, 6, 1) == (11, 2)
    assert tree_size(2, 3, 2) == (7, 3)
    assert tree_size(3, 4, 1, node_perspective=True) == (10, 3)


def test_codebook_is_the_code():
    t = build_tree_code(2, 3, 2)
    # every tree check is independent: 2^(n - checks) codewords
    assert t.codebook.shape == (2 ** (t.n - t.num_checks), t.n)
    assert t.satisfies_checks(t.codebook).all()
    assert len({w.tobytes() for w in t.codebook}) == len(t.codebook)


def test_guards():
    with pytest.raises(OracleSizeError):
        build_tree_code(3, 6, 1)
    with pytest.raises(OracleSizeError):
        build_tree_code(3, 4, 2)  # 37 bits
    t = build_tree_code(2, 3, 1)
    with pytest.raises(OracleSizeError):
        exact_ms_root_error(t, ChannelModel.biawgn(1.0))


def test_trivial_channels():
    t = build_tree_code(2, 3, 1)
    assert exact_ms_root_error(t, ChannelModel.bsc(0.0)) == 0.0
    assert exact_sp_root_error(t, ChannelModel.bsc(0.0)) == 0.0
    t0 = build_tree_code(2, 3, 0)
    assert exact_ms_root_error(t0, ChannelModel.bsc(0.5)) == 0.5
    assert exact_sp_root_error(t0, ChannelModel.bsc(0.2)) == pytest.approx(0.2)


def test_single_check_closed_form():
    # root seen directly (wrong w.p. p) and through the parity of two children
    # (wrong w.p. q = 2p(1-p)); the direct look is more reliable, so it wins
    # any disagreement and the root is lost exactly when the direct look is wrong
    p = 0.1
    t = build_tree_code(2, 3, 1)
    assert exact_sp_root_error(t, ChannelModel.bsc(p)) == pytest.approx(p, rel=1e-12)


@pytest.mark.parametrize("shape", [(2, 3, 1), (2, 3, 2), (3, 4, 1), (3, 3, 1)])
def test_reduced_codebook_matches_recursion(shape):
    d_v, d_c, levels = shape
    t = build_tree_code(d_v, d_c, levels)
    prof = weight_profile(reduced_codebook(t))
    en = weight_enumerator(Ensemble.regular(d_v, d_c), levels, root_inclusive=True).nonzero()
    assert prof == {w: int(a) for w, a in en.items()}


@pytest.mark.parametrize("p", [0.01, 0.05, 0.2])
def test_orderings(p):
    t = build_tree_code(2, 3, 2)
    ch = ChannelModel.bsc(p)
    ms = exact_ms_root_error(t, ch)
    sp = exact_sp_root_error(t, ch)
    assert sp <= ms + 1e-15
    assert ms <= union_bound(t, bhattacharyya(ch))


def test_bec_node_perspective_matches_de():
    eps = 0.3
    t = build_tree_code(3, 4, 1, node_perspective=True)
    oracle = exact_sp_root_error(t, ChannelModel.bec(eps))
    de = run_de_full(Ensemble.regular(3, 4), ChannelModel.bec(eps), 1).node.values[1]
    assert oracle == pytest.approx(de, abs=1e-15)


@pytest.mark.parametrize("shape", [(2, 3, 1), (3, 4, 1), (2, 3, 2)])
def test_min_sum_is_sequence_ml_on_trees(shape):
    t = build_tree_code(*shape)
    g = graph_from_tree(t)
    ch = ChannelModel.bsc(0.1)
    pats = _patterns(t.n, 0, 1 << t.n)
    want = root_decisions(t, ch, pats, "ms")
    got = []
    for pat in pats:
        llr = 1.0 - 2.0 * pat  # +-1 keeps ties exact
        post = ms_decode(g, llr, t.levels)[-1][0]
        got.append(1.0 if post < 0 else 0.5 if post == 0 else 0.0)
    np.testing.assert_array_equal(np.array(got), want)


def test_sum_product_is_bitwise_map_on_trees():
    t = build_tree_code(2, 3, 2)
    g = graph_from_tree(t)
    ch = ChannelModel.bsc(0.1)
    pats = _patterns(t.n, 0, 1 << t.n)
    want = root_decisions(t, ch, pats, "sp")
    L = np.log(9.0)
    for pat, w in zip(pats, want):
        post = sp_decode(g, L * (1.0 - 2.0 * pat), t.levels)[-1][0]
        if w != 0.5:
            assert (post < 0) == (w == 1.0)


def test_workers_do_not_change_result():
    t = build_tree_code(2, 3, 2)
    ch = ChannelModel.bsc(0.05)
    assert exact_sp_root_error(t, ch, workers=1) == exact_sp_root_error(t, ch, workers=3)


def test_record_fields():
    rec = oracle_record(2, 3, 1, ChannelModel.bsc(0.0))
    assert rec["p_ms"] == rec["p_sp"] == 0.0
    assert rec["|C_r|"] == 2
    assert rec["weight_profile"] == {"2": 2}
