import json
import math

import numpy as np
import pytest

from ultraholo import extension as ex
from ultraholo import flatkernel as fk
from ultraholo.errors import ClassViolation, OutsideSector, TailTooLarge
from ultraholo.weightfn import Power

from conftest import pinned_index

TAU = Power(0.5)


@pytest.fixture(scope="module")
def flat():
    return fk.build_model(TAU, 0.5, 0.5, gamma_tau=pinned_index(2.0))


@pytest.fixture(scope="module")
def delta0(flat):
    return ex.build_extension(ex.delta_sequence(0, 1.0, 1.0, 24, TAU), 0.5, flat=flat)


@pytest.fixture(scope="module")
def boundary(flat):
    return ex.build_extension(ex.boundary_sequence(1.0, 1.0, 24, TAU), 0.5, flat=flat)


def test_model_parameters(delta0):
    assert delta0.K2_hat == pytest.approx(0.5 * delta0.K2_fit)
    assert delta0.R0 == pytest.approx(delta0.K2_hat / 4)
    # b_p = lambda_p / (p! m(p))
    assert delta0.borel_coeffs[0] == pytest.approx(delta0.target.lam[0] / math.exp(delta0.log_moments[0]))
    assert np.all(delta0.borel_coeffs[1:] == 0)
    json.dumps(delta0.to_dict())


def test_routes_agree(boundary):
    # the Taylor head of the split route is only usable well inside R0
    z = [3e-3 * np.exp(0.3j), 1e-3, 5e-4 * np.exp(-0.6j)]
    direct = ex.eval_f(boundary, z, route="direct")
    split = ex.eval_f(boundary, z, route="moment-split")
    np.testing.assert_allclose(direct, split, rtol=1e-8)
    with pytest.raises(ValueError):
        ex.eval_f(boundary, z, route="sideways")


def test_remainder_shrinks_with_z(boundary):
    r = np.array([1e-3, 1e-4])
    vals = np.abs(ex.remainder(boundary, r, 2))
    # R_2(z) = O(z^2): a tenth of the radius, at least a fiftieth of the remainder
    assert vals[1] < vals[0] / 50


def test_borel_check_recovers_delta0(delta0):
    rep = ex.borel_check(delta0, p_max_check=2)
    assert rep["passed"], rep["entries"]
    assert rep["entries"][0]["error"] <= rep["entries"][0]["tolerance"]


def test_linearity(flat, delta0):
    lam1 = ex.delta_sequence(1, 1.0, 1.0, 24, TAU)
    m1 = ex.build_extension(lam1, 0.5, flat=flat)
    combined = ex.TargetSequence(delta0.target.lam + 2 * lam1.lam, 1.0, 1.0, TAU)
    mc = ex.build_extension(combined, 0.5, flat=flat)
    np.testing.assert_allclose(ex.linear_combination(delta0, m1, 2), mc.borel_coeffs, rtol=1e-13)


def test_class_violation():
    env = np.exp(ex.class_log_envelope(TAU, 1.0, 1.0, 10))
    lam = env.copy()
    lam[4] *= 2
    with pytest.raises(ClassViolation):
        ex.TargetSequence(lam, 1.0, 1.0, TAU, norm=1.0)
    assert ex.TargetSequence(lam, 1.0, 1.0, TAU).norm == pytest.approx(2.0)


def test_eval_g_guards(boundary):
    R0 = boundary.R0
    assert np.isfinite(ex.eval_g(boundary, [0.0, R0 / 2, R0])).all()
    assert ex.eval_g(boundary, 0.0) == pytest.approx(boundary.borel_coeffs[0])
    with pytest.raises(TailTooLarge):
        ex.eval_g(boundary, R0, tol=1e-12)
    with pytest.raises(OutsideSector):
        ex.eval_g(boundary, 2 * R0)


def test_flat_model_must_match(flat):
    with pytest.raises(ValueError):
        ex.build_extension(ex.delta_sequence(0, 2.0, 1.0, 10, TAU), 0.5, flat=flat)


def test_jobs():
    with pytest.raises(ValueError):
        ex.load_job({"weight": "power:0.5", "x": 1, "h": 1})
    job = ex.load_job('{"weight": "power:0.5", "x": 1, "h": 1, "gamma": 0.5, "lambda": "delta0"}')
    assert job["p_max"] == ex.P_MAX and job["precision"] == ex.DEFAULT_BITS
    with pytest.raises(ValueError):
        ex.named_sequence("zigzag", 1.0, 1.0, 4, TAU)
    seq = ex.named_sequence("random", 1.0, 1.0, 8, TAU, seed=3)
    assert seq.norm == 1.0 and np.all(np.abs(seq.lam) <= np.exp(seq.log_envelope))
