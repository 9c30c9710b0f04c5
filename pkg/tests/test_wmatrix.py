import json
import math

import numpy as np
import pytest

from ultraholo import weightseq as ws
from ultraholo.weightfn import FromSequence, Power
from ultraholo.wmatrix import (WeightMatrix, absorption_level, check_absorption,
                               check_mg_across_levels, hat, is_constant, materialize,
                               matrix_equivalence, unhat)


def power_half_level(x, P):
    # (1/x) phi*(x p) with phi*(y) = 2y log(2y) - 2y
    p = np.arange(P + 1, dtype=float)
    out = np.zeros(P + 1)
    out[1:] = 2 * p[1:] * np.log(2 * x * p[1:]) - 2 * p[1:]
    return out


@pytest.mark.parametrize("x", [0.25, 1.0, 4.0])
def test_power_half_levels_closed_form(x):
    W = WeightMatrix(Power(0.5), grid=(x,), P=60).level(x)
    np.testing.assert_allclose(W.log_terms, power_half_level(x, 60), rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(materialize(Power(0.5), x, 60).log_terms, W.log_terms)


def test_level_cache_extends_horizon():
    mat = WeightMatrix(Power(0.5), grid=(1.0,), P=20)
    short = mat.level(1.0, 20)
    long = mat.level(1.0, 50)
    np.testing.assert_array_equal(long.log_terms[:21], short.log_terms)
    assert mat.level(1.0, 30).horizon == 30


def test_hat_and_unhat():
    mat = WeightMatrix(Power(0.5), grid=(1.0,), P=30)
    lf = np.array([math.lgamma(p + 1) for p in range(31)])
    np.testing.assert_allclose(hat(mat).level(1.0).log_terms, mat.level(1.0).log_terms + lf)
    np.testing.assert_allclose(unhat(hat(mat)).level(1.0).log_terms, mat.level(1.0).log_terms)


@pytest.mark.parametrize("omega", [Power(0.5), FromSequence(ws.gevrey(2.0, 200))],
                         ids=["power", "gevrey2"])
def test_mg_across_levels_has_no_violations(omega):
    mat = WeightMatrix(omega, P=60)
    for l in (0.5, 1.0, 2.0):
        fit = check_mg_across_levels(mat, l, 60)
        assert fit.passed and fit.constants["violations"] == 0


def test_absorption_recipe():
    a, A = absorption_level(math.sqrt(2), 2.0)
    assert a == 1 and A == pytest.approx(2 + math.sqrt(2))
    assert absorption_level(3.0, 1.0) == (0, 1.0)
    fit = check_absorption(WeightMatrix(Power(0.5), P=60), 2.0, 1.0)
    assert fit.stable and fit.constants["D"] >= 1.0


def test_matrix_equivalence_and_constancy():
    A = WeightMatrix(Power(0.5), grid=(0.5, 1.0, 2.0), P=60)
    B = WeightMatrix(FromSequence(ws.gevrey(2.0, 200)), grid=(0.5, 1.0, 2.0), P=60)
    assert matrix_equivalence(A, B).verdict == "{≈}"
    assert is_constant(A)


def test_assoc_and_h_are_consistent():
    mat = WeightMatrix(Power(0.5), grid=(1.0,), P=100)
    t = np.array([2.0, 50.0, 3000.0])
    np.testing.assert_allclose(mat.h(1.0, 1 / t), np.exp(-mat.assoc(1.0, t)))
    # x w_{W^x} <= w, the lower half of the equivalence with the weight
    assert np.all(mat.assoc(1.0, t) <= np.sqrt(t) + 1e-9)


def test_to_json():
    mat = WeightMatrix(Power(0.5), grid=(1.0, 2.0), P=10)
    data = json.loads(mat.to_json())
    assert data["grid"] == [1.0, 2.0]
    assert len(data["levels"]["1.0"]) == 11
