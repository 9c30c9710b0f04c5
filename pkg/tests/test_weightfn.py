import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultraholo import weightseq as ws
from ultraholo.errors import DivergentTail, HorizonExhausted, NegativeArgument
from ultraholo.weightfn import (Const, FromSequence, LogPower, Max, Power, Ramified, Scaled, Sum,
                                UpperStarOf, assoc_bruteforce, diagnostics, from_json, h_direct,
                                h_eval, kappa, omega1_constant, parse_spec, to_json)

SEQS = {
    "gevrey1": ws.gevrey(1.0, 200),
    "gevrey2": ws.gevrey(2.0, 200),
    "pathological": ws.pathological_sequence(),
}


@given(st.sampled_from(sorted(SEQS)), st.floats(0.0, 1.0))
@settings(max_examples=200, deadline=None)
def test_assoc_matches_bruteforce(name, frac):
    M = SEQS[name]
    mu = np.exp(ws.quotients(M).log_mu)
    # stay below the last quotient so the supremum is attained on the horizon
    t = math.exp(frac * math.log(mu[-1] * 0.999))
    w = FromSequence(M, strict=False)
    value, p = assoc_bruteforce(M, t)
    assert float(w.eval(t)) == pytest.approx(value, abs=1e-12 * (1 + abs(value)))
    assert int(w.argmax(t)) == p


def test_gevrey_closed_form_beyond_horizon():
    short = FromSequence(ws.gevrey(1.0, 50))
    long = ws.gevrey(1.0, 3000)
    for t in (60.0, 400.0, 2500.0):
        value, _ = assoc_bruteforce(long, t)
        assert float(short.eval(t)) == pytest.approx(value, rel=1e-12)


def test_strict_sequence_raises_past_horizon():
    M = ws.WeightSequence(ws.gevrey(1.0, 20).log_terms)
    with pytest.raises(HorizonExhausted):
        FromSequence(M).eval(1e3)
    assert FromSequence(M, strict=False).eval(1e3) == pytest.approx(assoc_bruteforce(M, 1e3)[0])


def test_non_lc_input_is_regularized():
    M = ws.WeightSequence([0.0, 2.0, 2.5, 6.0, 9.0])
    w = FromSequence(M, strict=False)
    assert w.regularized
    for t in (0.5, 2.0, 7.0, 40.0):
        assert float(w.eval(t)) == pytest.approx(assoc_bruteforce(M, t)[0], abs=1e-12)


def test_h_identity(gevrey2):
    mu = np.exp(ws.quotients(gevrey2).log_mu)
    t = np.logspace(math.log10(2 / mu[-1]), 1, 50)
    np.testing.assert_allclose(np.log(h_eval(gevrey2, t)), np.log(h_direct(gevrey2, t)),
                               rtol=1e-12, atol=1e-12)
    with pytest.raises(NegativeArgument):
        h_eval(gevrey2, 0.0)


def test_elementary_nodes():
    t = np.array([0.0, 1.0, 4.0, 100.0])
    np.testing.assert_allclose(Power(0.5).eval(t), np.sqrt(t))
    np.testing.assert_allclose(LogPower(2.0).eval([0.5, math.e ** 3]), [0.0, 9.0])
    np.testing.assert_allclose(Ramified(Power(0.5), 2.0).eval(t), t)
    np.testing.assert_allclose(Scaled(3.0, Power(1.0)).eval(t), 3 * t)
    np.testing.assert_allclose(Sum(Power(1.0), Const(1.0)).eval(t), t + 1)
    np.testing.assert_allclose(Max(Power(0.5), Power(1.0)).eval(t), np.maximum(np.sqrt(t), t))
    assert Power(0.5).inverted().eval(4.0) == pytest.approx(0.5)
    with pytest.raises(NegativeArgument):
        Power(0.5).eval(-1.0)


def test_json_round_trip_of_trees():
    trees = [
        Sum(Power(0.5), Scaled(2.0, LogPower(2.0))),
        Max(Ramified(Power(0.25), 2.0), Const(0.0)),
        UpperStarOf(Power(0.5)),
        FromSequence(ws.gevrey(2.0, 40)),
    ]
    t = np.array([0.5, 2.0, 30.0])
    for tree in trees:
        back = from_json(to_json(tree))
        np.testing.assert_allclose(back.eval(t), tree.eval(t), rtol=1e-12)
    with pytest.raises(ValueError):
        from_json('{"version": 99, "kind": "Power", "args": [0.5]}')


def test_parse_spec():
    assert isinstance(parse_spec("power:0.5"), Power)
    assert isinstance(parse_spec("logpower:2"), LogPower)
    assert parse_spec("gevrey:2").seq.gevrey_order == 2.0
    assert not parse_spec("pathological").strict
    assert isinstance(parse_spec('{"kind": "Power", "args": [0.25]}'), Power)
    with pytest.raises(ValueError):
        parse_spec("cosine:1")


def test_kappa_power_half():
    # t * int_t^inf u^(1/2) u^(-2) du = 2 sqrt(t)
    for t in (0.1, 1.0, 50.0, 1e4):
        assert kappa(Power(0.5), t) == pytest.approx(2 * math.sqrt(t), rel=1e-8)
    assert kappa(Power(0.5), 0.0) == 0.0
    with pytest.raises(DivergentTail):
        kappa(Power(1.0), 1.0)


def test_diagnostics():
    d = diagnostics(Power(0.5))
    for key in ("omega1", "omega3", "omega4", "omega5", "omega6", "omega_snq"):
        assert d[key], key
    assert not diagnostics(Power(1.0))["omega5"]
    assert not diagnostics(Power(1.0))["omega_snq"]
    assert not diagnostics(LogPower(2.0))["omega6"]
    assert omega1_constant(Power(0.5)) == pytest.approx(math.sqrt(2), rel=1e-3)
