import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultraholo import weightseq as ws
from ultraholo.errors import AnchorSlopeViolation, HorizonTooSmall

log_seqs = st.lists(st.floats(-20, 20, allow_nan=False), min_size=3, max_size=40)


def test_gevrey_terms_are_log_factorial_powers():
    M = ws.gevrey(2.5, 30)
    expect = [2.5 * math.lgamma(p + 1) for p in range(31)]
    np.testing.assert_allclose(M.log_terms, expect, rtol=1e-14, atol=1e-14)
    assert M.log_term(500) == pytest.approx(2.5 * math.lgamma(501), rel=1e-14)


def test_normalization_and_validation():
    M = ws.WeightSequence([3.0, 4.0, 6.0])
    assert M.log_terms[0] == 0.0
    with pytest.raises(HorizonTooSmall):
        ws.WeightSequence([0.0, 1.0])
    with pytest.raises(ValueError):
        ws.WeightSequence([0.0, float("nan"), 1.0])
    with pytest.raises(ValueError):
        ws.gevrey(0.5, 10)


def test_factorial_views_shift_gevrey_order():
    M = ws.gevrey(2.0, 50)
    m = ws.divide_by_factorials(M)
    assert m.gevrey_order == 1.0
    np.testing.assert_allclose(m.log_terms, ws.gevrey(1.0, 50).log_terms, atol=1e-12)
    back = ws.multiply_by_factorials(m)
    np.testing.assert_allclose(back.log_terms, M.log_terms, atol=1e-12)


@given(log_seqs)
@settings(max_examples=60, deadline=None)
def test_lc_minorant_is_convex_below_and_idempotent(vals):
    M = ws.WeightSequence(vals)
    lc = ws.log_convex_minorant(M)
    assert np.all(lc.log_terms <= M.log_terms + 1e-9)
    assert ws.is_log_convex(lc.log_terms, slack=1e-9) is None
    again = ws.log_convex_minorant(lc)
    np.testing.assert_allclose(again.log_terms, lc.log_terms, atol=1e-9)
    # endpoints are always hull vertices
    assert lc.log_terms[-1] == pytest.approx(M.log_terms[-1])


@given(log_seqs)
@settings(max_examples=40, deadline=None)
def test_lc_minorant_is_the_largest_convex_minorant(vals):
    # any chord of the hull lies below M: compare with a brute-force hull value
    M = ws.WeightSequence(vals)
    y = M.log_terms
    lc = ws.log_convex_minorant(M).log_terms
    n = y.size
    for p in range(n):
        best = y[p]
        for i in range(p + 1):
            for j in range(p, n):
                if i == j:
                    continue
                best = min(best, y[i] + (y[j] - y[i]) * (p - i) / (j - i))
        assert lc[p] == pytest.approx(best, abs=1e-9)


def test_gevrey_predicates():
    M = ws.gevrey(2.0, 200)
    assert ws.predicate(M, "lc").verdict == ws.HOLDS
    assert ws.predicate(M, "slc").verdict == ws.HOLDS
    assert ws.predicate(M, "mg").verdict == ws.BOUNDED
    assert ws.predicate(M, "gamma1").verdict == ws.BOUNDED
    assert ws.predicate(ws.gevrey(1.0, 200), "gamma1").verdict == ws.DIVERGES


def test_lc_failure_reports_index():
    rep = ws.predicate(ws.WeightSequence([0.0, 2.0, 2.5, 6.0]), "lc")
    assert rep.verdict == ws.FAILS and rep.index == 1


def test_doubling_trend():
    assert ws.doubling_trend([1, 2, 3, 4, 5, 6]) == ws.DIVERGES
    assert ws.doubling_trend([1, 1.5, 1.75, 1.875, 1.9375, 1.96875]) == ws.BOUNDED
    assert ws.doubling_trend([2, 2, 2, 2]) == ws.BOUNDED


def test_horizon_guards():
    with pytest.raises(HorizonTooSmall):
        ws.predicate(ws.gevrey(1.0, 5), "mg")
    with pytest.raises(ValueError):
        ws.predicate(ws.gevrey(1.0, 50), "nope")


def test_pathological_anchors_frozen():
    assert ws.default_anchors(1440) == [2, 3, 6, 18, 72, 360, 2160]
    assert ws.default_anchors(5000) == [2, 3, 6, 18, 72, 360, 2160, 15120]


def test_pathological_values_at_anchors(pathological):
    # log m at the anchor a_j is j log(a_j!) (q = e)
    for j, a in enumerate([2, 3, 6, 18, 72, 360], start=1):
        assert pathological.log_terms[a] == pytest.approx(j * math.lgamma(a + 1), rel=1e-13)


def test_pathological_rejects_bad_input():
    with pytest.raises(ValueError):
        ws.pathological_sequence(q=2.0)
    with pytest.raises(ValueError):
        ws.pathological_sequence(anchors=[2, 3, 4], P=20)
    with pytest.raises(AnchorSlopeViolation):
        ws.pathological_sequence(anchors=[5, 6, 12, 36], P=30)


def test_pathological_example_verdicts(pathological):
    M = ws.multiply_by_factorials(pathological)
    assert ws.predicate(pathological, "lc").verdict == ws.HOLDS
    assert ws.predicate(M, "mg").verdict == ws.DIVERGES
    assert ws.predicate(M, "beta1", k=2).verdict == ws.FAILS


def test_relations():
    g1, g2 = ws.gevrey(1.0, 200), ws.gevrey(2.0, 200)
    assert ws.relation(g1, g1).verdict == ws.SIMEQ
    forward = ws.relation(g1, g2)
    assert forward.verdict == ws.PRECEQ and ws.LE in forward.forward
    assert ws.relation(g2, g1).verdict == ws.SUCCEQ
    scaled = ws.WeightSequence(g1.log_terms + np.arange(201) * math.log(3.0))
    assert ws.relation(g1, scaled).verdict == ws.SIMEQ
    with pytest.raises(ValueError):
        ws.relation(g1, ws.gevrey(1.0, 100))


def test_relation_sees_through_flat_quotient_stretches():
    m = ws.pathological_sequence(P=200)
    assert ws.relation(m, ws.gevrey(2.0, 200)).verdict == ws.SUCCSIM


def test_serialization_round_trips(pathological):
    back = ws.from_json(ws.to_json(pathological))
    np.testing.assert_array_equal(back.log_terms, pathological.log_terms)
    back = ws.from_csv(ws.to_csv(pathological))
    np.testing.assert_array_equal(back.log_terms, pathological.log_terms)
    assert json.loads(ws.to_json(pathological))["label"] == "pathological"
