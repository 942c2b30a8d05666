import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ldpc_bounds.bounds import (
    TrajectoryKind,
    bec_de,
    bec_threshold,
    bec_threshold_result,
    bhattacharyya_threshold,
    bhattacharyya_threshold_result,
    ms_upper_bound,
    sp_lower_bound,
    trajectories_to_csv,
    weight_enumerator,
)
from ldpc_bounds.ensembles import DegreePolynomial, Ensemble

R36 = Ensemble.regular(3, 6)


def test_ms_upper_closed_form():
    # (3,6): z_l = (5 z)^2
    t = ms_upper_bound(R36, 0.03, 5)
    z = 0.03
    for l in range(1, 6):
        z = 25 * z * z
        assert t.values[l] == pytest.approx(z, rel=1e-14)
    assert t.vacuous_after is None


def test_ms_upper_vacuous_overflow():
    t = ms_upper_bound(R36, 0.3, 12)
    assert t.vacuous_after == 1  # 25 * 0.09 = 2.25
    assert np.isinf(t.values[-1])
    assert t.vacuous_mask()[1:].all()


def test_root_inclusive_variant():
    a = ms_upper_bound(R36, 0.03, 3).values
    b = ms_upper_bound(R36, 0.03, 3, root_inclusive=True).values
    assert b[1] == pytest.approx(0.03 * a[1])
    assert np.all(b[1:] < a[1:])


def test_sp_lower_first_step():
    # b_1 = P0 (1 - (1 - 2 P0)^5)^2
    p = 0.05
    t = sp_lower_bound(R36, p, 1)
    assert t.values[1] == pytest.approx(p * (1 - (1 - 2 * p) ** 5) ** 2, rel=1e-14)


def test_iterations_zero():
    assert ms_upper_bound(R36, 0.2, 0).values.tolist() == [0.2]
    assert sp_lower_bound(R36, 0.1, 0).values.tolist() == [0.1]
    assert bec_de(R36, 0.4, 0).values.tolist() == [0.4]


def test_argument_checks():
    with pytest.raises(ValueError):
        ms_upper_bound(R36, 1.5, 3)
    with pytest.raises(ValueError):
        sp_lower_bound(R36, 0.6, 3)
    with pytest.raises(ValueError):
        bec_de(R36, 0.4, -1)


def test_bec_de_above_and_below_threshold():
    assert bec_de(R36, 0.42, 2000).values[-1] < 1e-10
    assert bec_de(R36, 0.44, 2000).values[-1] > 0.1


@settings(max_examples=30)
@given(st.floats(0.0, 1.0, allow_subnormal=False))
def test_bec_equality_bitexact(eps):
    a = bec_de(R36, eps, 60).values
    b = sp_lower_bound(R36, eps / 2, 60).values
    np.testing.assert_array_equal(2 * b, a)


def test_thresholds():
    assert bhattacharyya_threshold(R36, 1e-6) == pytest.approx(1 / 25, abs=1e-6)
    assert bhattacharyya_threshold(Ensemble.regular(3, 4), 1e-6) == pytest.approx(1 / 9, abs=1e-6)
    # independent oracle: BEC threshold as a fixed-point infimum
    x = np.linspace(1e-6, 1, 200001)
    oracle = np.min(x / (1 - (1 - x) ** 5) ** 2)
    assert bec_threshold(R36, 1e-7) == pytest.approx(oracle, abs=1e-6)


def test_threshold_coarse_tol_single_step():
    r = bec_threshold_result(R36, tol=1.0)
    assert r.steps == 1 and (r.lower, r.upper) == (0.0, 0.5)


def test_threshold_degree_two_only():
    # lambda = x, rho = x^5: z_l = 5^l D grows for every D > 0
    ens = Ensemble(DegreePolynomial.monomial(2), DegreePolynomial.monomial(6))
    r = bhattacharyya_threshold_result(ens, 1e-5)
    assert r.value < 1e-5


def test_weight_enumerator_level_one():
    a = weight_enumerator(R36, 1).nonzero()
    b = weight_enumerator(R36, 1, root_inclusive=True).nonzero()
    assert a == {2: 25.0}
    assert b == {3: 25.0}


def test_weight_enumerator_evaluates_bound():
    D = 0.03
    for incl in (False, True):
        en = weight_enumerator(R36, 3, root_inclusive=incl)
        assert not en.truncated
        t = ms_upper_bound(R36, D, 3, root_inclusive=incl)
        assert en.evaluate(D) == pytest.approx(t.values[3], rel=1e-12)


def test_weight_enumerator_truncation_flag():
    assert weight_enumerator(R36, 4, W=10).truncated


def test_csv_roundtrip():
    trajs = [ms_upper_bound(R36, 0.4, 3), sp_lower_bound(R36, 0.2, 3), bec_de(R36, 0.4, 3)]
    text = trajectories_to_csv(trajs)
    lines = text.strip().splitlines()
    assert lines[0] == "iteration,value,kind,vacuous"
    assert len(lines) == 1 + 3 * 4
    vals = [float(l.split(",")[1]) for l in lines[1:] if l.endswith(f"{TrajectoryKind.BEC_DE.value},0")]
    assert vals == trajs[2].values.tolist()
    buf = io.StringIO()
    trajectories_to_csv(trajs, buf)
    assert buf.getvalue() == text
