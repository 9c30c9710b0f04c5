"""Numeric estimators for the growth indices gamma(M) and gamma(w)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import weightseq as ws
from .errors import HorizonTooSmall
from .weightfn import FromSequence, LowerStarOf, Ramified, UpperStarOf, WeightFunction, diagnostics

SLACK_A = 4.0
SEQ_RANGE = (-8.0, 8.0)
FN_RANGE = (0.0, 8.0)
FN_KS = (2, 4, 8, 16, 32)
FN_MARGIN = 0.02
FN_TMAX = 1e8
FN_POINTS = 400
IDENTITY_TOL = 0.1


@dataclass
class IndexEstimate:
    value: float
    method: str
    horizon: object
    stability: float
    details: dict = field(default_factory=dict)

    @property
    def is_finite(self):
        return math.isfinite(self.value)


def _bisect(passes, lo, hi, iters):
    if passes(hi):
        return math.inf
    if not passes(lo):
        return -math.inf
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# sequences

def _seq_estimate(log_mu, P, a, lo, hi):
    start = max(1, int(math.ceil(P * (1 - ws.TAIL_FRACTION))))
    p = np.arange(start, P + 1, dtype=float)
    lm = log_mu[start : P + 1]
    ratio = p[-1] / p[0]
    # a-equivalence slack spread over the window's dynamic range
    shift = math.log(a) / math.log(ratio)
    log_a = math.log(a)

    def passes(g):
        v = lm - (g + shift) * np.log(p)
        later_min = np.minimum.accumulate(v[::-1])[::-1]
        return bool(np.all(later_min[1:] - v[:-1] >= -log_a - 1e-12))

    return _bisect(passes, lo, hi, 50), (start, P)


def gamma_seq(M: ws.WeightSequence, a: float = SLACK_A, bounds=SEQ_RANGE) -> IndexEstimate:
    """Sup of gamma for which mu_p / p^gamma is almost nondecreasing on the tail.

    A pair p < q may drop by the factor a (the freedom of replacing mu by an
    a-equivalent sequence).  On a window of finite dynamic range R that slack
    lets every gamma up to the true value plus log(a)/log(R) through, so the
    test is applied at gamma + log(a)/log(R).
    """
    if M.horizon < 16:
        raise HorizonTooSmall("gamma_seq needs P >= 16")
    if ws.is_log_convex(M.log_terms) is not None:
        M = ws.log_convex_minorant(M)
    log_mu = ws.quotients(M).log_mu
    lo, hi = bounds
    v, window = _seq_estimate(log_mu, M.horizon, a, lo, hi)
    v_half, _ = _seq_estimate(log_mu, M.horizon // 2, a, lo, hi)
    if math.isfinite(v) and math.isfinite(v_half):
        stab = abs(v - v_half)
    else:
        stab = 0.0 if v == v_half else math.inf
    sens = {}
    for aa in (2.0, 8.0):
        sens[aa], _ = _seq_estimate(log_mu, M.horizon, aa, lo, hi)
    return IndexEstimate(v, "quasi-monotone-quotients", M.horizon, stab,
                         {"window": window, "a": a, "sensitivity_to_a": sens})


# ---------------------------------------------------------------------------
# weight functions

def _fn_estimate(omega, t_max, n, ks, margin, lo, hi, iters):
    t = np.logspace(0.0, math.log10(t_max), n)
    t = t[t >= t_max / 10.0]
    w = np.asarray(omega.eval(t), dtype=float)
    if not np.all(w > 0):
        keep = w > 0
        t, w = t[keep], w[keep]
    if t.size == 0:
        return -math.inf

    def passes(g):
        for K in ks:
            r = np.asarray(omega.eval(K ** g * t), dtype=float) / w
            if np.max(r) < K * (1 - margin):
                return True
        return False

    if not passes(max(lo, 1e-9)):
        return lo
    return _bisect(passes, max(lo, 1e-9), hi, iters)


def gamma_fn(omega: WeightFunction, t_max: float = FN_TMAX, n: int = FN_POINTS, ks=FN_KS,
             margin: float = FN_MARGIN, bounds=FN_RANGE, iters: int = 24) -> IndexEstimate:
    """Sup of gamma with limsup w(K^gamma t)/w(t) < K for some K in the scan."""
    lo, hi = bounds
    v = _fn_estimate(omega, t_max, n, ks, margin, lo, hi, iters)
    t_half = math.sqrt(t_max)
    v_half = _fn_estimate(omega, t_half, n // 2, ks, margin, lo, hi, iters)
    if math.isfinite(v) and math.isfinite(v_half):
        stab = abs(v - v_half)
    else:
        stab = 0.0 if v == v_half else math.inf
    return IndexEstimate(v, "ratio-limsup-scan", (1.0, t_max, n), stab,
                         {"ks": tuple(ks), "margin": margin, "coarse": v_half})


# ---------------------------------------------------------------------------
# identities

def _entry(name, lhs, rhs, lhs_est=None, rhs_est=None, tol=IDENTITY_TOL, relation="="):
    if relation == "=":
        if math.isinf(lhs) or math.isinf(rhs):
            diff = 0.0 if lhs == rhs else math.inf
        else:
            diff = abs(lhs - rhs)
        margin = tol
        for est in (lhs_est, rhs_est):
            if est is not None and math.isfinite(est.stability):
                margin += est.stability
        agree = diff <= margin
    elif relation == ">=":
        diff = rhs - lhs
        margin = tol
        agree = lhs >= rhs - tol
    else:  # boolean equivalence
        diff = 0.0 if lhs == rhs else 1.0
        margin = 0.0
        agree = lhs == rhs
    return {
        "identity": name,
        "lhs": lhs,
        "rhs": rhs,
        "difference": diff,
        "margin": margin,
        "agree": bool(agree),
        "finding": "agree" if agree else "estimator-resolution",
    }


def check_index_identities(target, ramifications=(0.5, 2.0)) -> list:
    """Evaluate both sides of the index identities for a weight or a sequence."""
    out = []
    if isinstance(target, ws.WeightSequence):
        M = target
        m = ws.divide_by_factorials(M)
        gM, gm = gamma_seq(M), gamma_seq(m)
        out.append(_entry("gamma(m)+1 = gamma(M)", gm.value + 1, gM.value, gm, gM))
        if M.gevrey_order is not None and M.gevrey_order > 1:
            wM, wm = FromSequence(M), FromSequence(m)
            gwM, gwm = gamma_fn(wM), gamma_fn(wm)
            out.append(_entry("gamma(w_M) = gamma(w_m)+1", gwM.value, gwm.value + 1, gwM, gwm))
        else:
            wM = FromSequence(M, strict=False)
            gwM = gamma_fn(wM, t_max=float(np.exp(ws.quotients(M).log_mu[-1])) * 0.5)
        out.append(_entry("gamma(w_M) >= gamma(M)", gwM.value, gM.value, relation=">="))
        mg = ws.predicate(M, "mg").holds
        if mg:
            out.append(_entry("gamma(w_M) = gamma(M) under (mg)", gwM.value, gM.value, gwM, gM))
        return out

    omega = target
    g = gamma_fn(omega)
    diag = diagnostics(omega)
    out.append(_entry("gamma(w) > 0 iff (w1)", g.value > 0, diag["omega1"], relation="iff"))
    out.append(_entry("gamma(w) > 1 iff (w_snq)", g.value > 1, diag["omega_snq"], relation="iff"))
    if diag["omega5"]:
        gs = gamma_fn(Ramified(UpperStarOf(omega), -1.0))
        out.append(_entry("gamma(w) = gamma((w*)^iota)+1", g.value, gs.value + 1, g, gs))
    gl = gamma_fn(LowerStarOf(Ramified(omega, -1.0)))
    out.append(_entry("gamma((w^iota)_star) = gamma(w)+1", gl.value, g.value + 1, gl, g))
    for s in ramifications:
        gr = gamma_fn(Ramified(omega, 1.0 / s))
        out.append(_entry(f"gamma(w^(1/{s:g})) = {s:g} gamma(w)", gr.value, s * g.value, gr, g))
    return out
