import math

import numpy as np
import pytest
from scipy.integrate import quad

from ultraholo import flatkernel as fk
from ultraholo.errors import GammaOutOfRange, NearAxisInstability, OutsideSector
from ultraholo.weightfn import Power

from conftest import pinned_index


def closed_form_log_F(model, w):
    # sigma(t) = t^-beta for tau = Power(1/2):  log F = -a w^-beta / cos(pi beta / 2)
    b = model.beta
    return -model.a * np.asarray(w, dtype=complex) ** (-b) / math.cos(math.pi * b / 2)


def test_power_model_parameters(power_model):
    assert power_model.delta == pytest.approx(1.5)
    assert power_model.s == pytest.approx(7 / 12)
    assert power_model.beta == pytest.approx(6 / 7, rel=1e-6)


@pytest.mark.parametrize("w", [0.3, 1.0, 25.0, 2 + 1j, 0.5 - 1.2j, 3 * np.exp(1.3j)])
def test_log_F_matches_closed_form(power_model, w):
    assert fk.log_F(power_model, w) == pytest.approx(closed_form_log_F(power_model, w), rel=1e-10)


def test_log_F_vectorized_and_refined(power_model):
    w = np.array([0.1, 1 + 1j, 10 - 3j])
    np.testing.assert_allclose(fk.log_F(power_model, w), closed_form_log_F(power_model, w), rtol=1e-10)
    np.testing.assert_allclose(fk.log_F(power_model, w, refine=1), fk.log_F(power_model, w), rtol=1e-12)


def scipy_log_F(model, w):
    # independent route: real w, adaptive quadrature in u = log t, split at
    # the kinks u = -s log p of sigma for the factorial sequence
    def f(u):
        t = math.exp(u)
        return float(model.sigma(u)) * t / (t * t + w * w)

    lw = math.log(w)
    kinks = -model.s * np.log(np.arange(1, 2001))
    edges = np.union1d(np.arange(lw - 400, lw + 40, 2.0), kinks)
    total = sum(quad(f, lo, hi, limit=200, epsabs=1e-16, epsrel=1e-11)[0] for lo, hi in zip(edges[:-1], edges[1:]))
    return -(2 * model.a / math.pi) * w * total


# past p = 2000 the kinks are too dense to split at; quad then reports
# roundoff at the 1e-11 level, far below the asserted 1e-8
@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("w", [0.05, 1.0, 7.0])
def test_log_F_sequence_weight_against_scipy(gevrey1_weight, w):
    model = fk.build_model(gevrey1_weight, 0.5, 1.0, gamma_tau=pinned_index(1.0))
    assert fk.log_F(model, w).real == pytest.approx(scipy_log_F(model, w), rel=1e-8)


def test_extended_precision_route(power_model, gevrey1_weight):
    w = 1.3 + 0.4j
    assert complex(fk.log_F_mp(power_model, w, 128)) == pytest.approx(closed_form_log_F(power_model, w), rel=1e-14)
    model = fk.build_model(gevrey1_weight, 0.5, 1.0, gamma_tau=pinned_index(1.0))
    assert complex(fk.log_F_mp(model, w, 128)) == pytest.approx(fk.log_F(model, w), rel=1e-9)
    with pytest.raises(ValueError):
        fk.log_F_mp(power_model, w, 64)


def test_near_axis_route_agrees(power_model):
    w = 2 * np.exp(1j * (math.pi / 2 - 0.05))
    assert fk.log_F(power_model, w) == pytest.approx(closed_form_log_F(power_model, w), rel=1e-8)


def test_moments_closed_form(power_model):
    # G(1/t) = exp(-c sqrt t) with c = 1/cos(pi beta/2), so m(p) = 2 Gamma(2p+2) / c^(2p+2)
    c = 1 / math.cos(math.pi * power_model.beta / 2)
    p = np.arange(16)
    expect = math.log(2) + np.array([math.lgamma(2 * k + 2) for k in p]) - (2 * p + 2) * math.log(c)
    np.testing.assert_allclose(fk.log_moments(power_model, 15), expect, rtol=1e-10, atol=1e-10)
    assert fk.moment(power_model, 3) == pytest.approx(math.exp(expect[3]), rel=1e-10)


def test_moments_survive_contour_rotation(power_model):
    theta = 0.3
    u = np.linspace(-30, 12, 8001)
    t = np.exp(u)
    lg = fk.log_G(power_model, 1 / t, np.full_like(t, -theta))
    for p in range(4):
        integrand = np.exp((p + 1) * (u + 1j * theta) + lg)
        val = np.trapezoid(integrand, u) if hasattr(np, "trapezoid") else np.trapz(integrand, u)
        assert val == pytest.approx(fk.moment(power_model, p), rel=1e-8)


def test_kernel_and_G_relation(power_model):
    z = 0.7 * np.exp(0.4j)
    assert fk.eval_kernel(power_model, z) == pytest.approx(z * fk.eval_G(power_model, 1 / z), rel=1e-12)


def test_sector_point():
    p = fk.SectorPoint(2.0, 3.0)
    assert p.power(0.5) == fk.SectorPoint(math.sqrt(2), 1.5)
    assert p.invert() == fk.SectorPoint(0.5, -3.0)
    with pytest.raises(OutsideSector):
        p.to_halfplane()
    with pytest.raises(ValueError):
        fk.SectorPoint(0.0, 0.0)
    assert fk.SectorPoint.from_complex(1j).theta == pytest.approx(math.pi / 2)


def test_sector_points_beyond_the_plane(power_model):
    # delta = 3/2: arguments up to 3 pi / 4 live on the surface of the logarithm
    pt = fk.SectorPoint(1.0, 2.0)
    val = fk.eval_G(power_model, pt)
    assert np.isfinite(abs(val))
    with pytest.raises(OutsideSector):
        fk.eval_G(power_model, fk.SectorPoint(1.0, 2.4))


def test_error_paths(power_model):
    with pytest.raises(NearAxisInstability):
        fk.log_F(power_model, 1e-9 + 1j)
    with pytest.raises(OutsideSector):
        fk.log_F(power_model, 0.0)
    with pytest.raises(GammaOutOfRange):
        fk.build_model(Power(0.5), 2.5, 1.0, gamma_tau=pinned_index(2.0))
    with pytest.raises(GammaOutOfRange):
        fk.build_model(Power(0.5), 0.0, 1.0)


def test_holomorphy(power_model):
    fit = fk.check_holomorphy(power_model)
    assert fit.constants["max_residual"] < 1e-6


def test_flat_sandwich_and_moments(power_model):
    fit = fk.verify_flat_sandwich(power_model)
    assert fit.stable
    assert fit.worst_margin >= -1e-9
    assert fit.details["max_abs_G"] <= 1.0 + 1e-12
    ms = fk.verify_moment_sandwich(power_model, flat_fit=fit)
    assert ms.stable and ms.details["refinement_rel_change"] < 1e-6


def test_with_a_scales_log_F(power_model):
    m2 = power_model.with_a(2.0)
    assert fk.log_F(m2, 1.5) == pytest.approx(2 * fk.log_F(power_model, 1.5), rel=1e-12)
