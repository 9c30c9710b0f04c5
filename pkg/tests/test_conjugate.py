import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultraholo import weightseq as ws
from ultraholo.conjugate import least_concave_majorant, lower_star, phi_star, upper_star
from ultraholo.errors import NegativeArgument, NoDecay, UnboundedObjective
from ultraholo.weightfn import FromSequence, Power


def test_phi_star_power_closed_form():
    # sup_y (x y - e^{y/2}) = 2x log(2x) - 2x
    for x in (0.3, 1.0, 7.5, 120.0):
        assert phi_star(Power(0.5), x) == pytest.approx(2 * x * math.log(2 * x) - 2 * x, rel=1e-10, abs=1e-10)


def test_phi_star_sequence_is_log_m_at_integers():
    w = FromSequence(ws.gevrey(2.0, 100))
    for p in (1, 5, 40, 100, 150):
        assert phi_star(w, float(p)) == pytest.approx(2 * math.lgamma(p + 1), rel=1e-13)


@pytest.mark.parametrize("seq", [ws.gevrey(2.0, 200), ws.pathological_sequence(P=400)],
                         ids=["gevrey2", "pathological"])
def test_phi_star_routes_agree(seq):
    w = FromSequence(seq, strict=False)
    top = 150.0 if seq.gevrey_order else 40.0
    for x in np.linspace(0.5, top, 17):
        fast = phi_star(w, float(x))
        slow = phi_star(w, float(x), method="search")
        assert fast == pytest.approx(slow, rel=1e-8, abs=1e-8)


@given(st.floats(0.05, 50.0), st.floats(-10.0, 20.0))
@settings(max_examples=100, deadline=None)
def test_fenchel_young_inequality(x, y):
    omega = Power(0.5)
    assert phi_star(omega, x) >= x * y - float(omega.eval(math.exp(y))) - 1e-9


def test_upper_and_lower_star_power_half():
    s = np.logspace(-3, 3, 25)
    vals = np.array([upper_star(Power(0.5), float(v)) for v in s])
    np.testing.assert_allclose(vals, 1 / (4 * s), rtol=1e-8)
    assert upper_star(Power(0.5), 0.0) == math.inf
    for t in (1.0, 30.0, 900.0):
        back = lower_star(lambda v: 1 / (4 * v), t)
        assert back == pytest.approx(math.sqrt(t), rel=1e-8)


def test_concave_weight_is_its_own_majorant():
    lcm = least_concave_majorant(Power(0.5))
    t = np.array([1.0, 10.0, 1000.0])
    np.testing.assert_allclose(lcm.eval(t), np.sqrt(t), rtol=1e-6)


def test_errors():
    with pytest.raises(NegativeArgument):
        phi_star(Power(0.5), -1.0)
    with pytest.raises(NegativeArgument):
        upper_star(Power(0.5), -1.0)
    with pytest.raises(NoDecay):
        lower_star(lambda v: -np.log(v), 0.0)
    with pytest.raises(UnboundedObjective):
        # w = 9 log t for t > 1, so slopes above 9 are unbounded
        phi_star(FromSequence(ws.WeightSequence(np.zeros(10)), strict=False), 11.0)
