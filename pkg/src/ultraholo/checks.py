"""Registry of named inequalities and identities, and the runner behind `verify`.

Every entry carries a verbatim anchor (topic + quoted display) and one of
three strategies.  Exact checks use a 1e-9 log-domain slack and decide the
exit status; fitted checks pass on constant stability and fail soft.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from . import extension as ext
from . import flatkernel as fk
from . import weightseq as ws
from .bounds import same_log_scale, same_scale
from .conjugate import lower_star, phi_star, upper_star
from .errors import UnanchoredCheck, UnknownCheck
from .indices import _entry, check_index_identities, gamma_fn
from .weightfn import (FromSequence, LogPower, LowerStarOf, Power, Ramified, WeightFunction,
                       diagnostics, h_direct, h_eval, parse_spec)
from .wmatrix import WeightMatrix, check_absorption, check_mg_across_levels, hat, matrix_equivalence

EXACT = "exact-on-horizon"
FITTED = "fitted-constants"
TOLERANCE = "identity-within-tolerance"
STRATEGIES = (EXACT, FITTED, TOLERANCE)

EXACT_SLACK = 1e-9
IDENTITY_RTOL = 1e-7
LEVELS = (0.5, 1.0, 2.0)
MATRIX_HORIZON = 400


def _slack(v):
    return EXACT_SLACK * (1.0 + np.abs(v))


# ---------------------------------------------------------------------------
# context

def wiggled(M: ws.WeightSequence, amplitude: float = 0.5) -> ws.WeightSequence:
    """M_p e^{+-amplitude} for p >= 1: breaks log-convexity of M/p! on purpose."""
    p = np.arange(M.horizon + 1)
    bump = np.where(p > 0, amplitude * (-1.0) ** p, 0.0)
    return ws.WeightSequence(M.log_terms + bump, label=f"{M.label}~")


@dataclass
class VerifyContext:
    weight: WeightFunction
    sequence: ws.WeightSequence
    pathological: ws.WeightSequence
    extension_weight: str = "gevrey:1"
    x: float = 1.0
    h: float = 1.0
    extension_gamma: float = 0.5
    flat_gamma: float = 1.0
    flat_a: float = 1.0
    precision: int = ext.DEFAULT_BITS
    seed: int = 0
    tol: float | None = None
    horizon: int = 200
    _memo: dict = field(default_factory=dict, repr=False)
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    def memo(self, key, build):
        with self._lock:
            if key not in self._memo:
                self._memo[key] = build()
            return self._memo[key]

    def rtol(self, default=IDENTITY_RTOL):
        return default if self.tol is None else self.tol

    # shared operands
    def matrix(self):
        return self.memo("matrix", lambda: WeightMatrix(self.weight, grid=LEVELS, P=MATRIX_HORIZON))

    def weight_index(self):
        return self.memo("weight_index", lambda: gamma_fn(self.weight))

    def flat_model(self):
        return self.memo("flat", lambda: fk.build_model(self.weight, self.flat_gamma, self.flat_a,
                                                        gamma_tau=self.weight_index()))

    def flat_fit(self):
        return self.memo("flat_fit", lambda: fk.verify_flat_sandwich(self.flat_model()))

    def extension_tau(self):
        return self.memo("ext_tau", lambda: parse_spec(self.extension_weight))

    def extension_flat(self):
        def build():
            tau = self.extension_tau()
            return fk.build_model(tau, self.extension_gamma, 1.0 / (2.0 * self.x),
                                  gamma_tau=gamma_fn(tau))
        return self.memo("ext_flat", build)

    def extension_model(self, family: str, h: float | None = None):
        h = self.h if h is None else h

        def build():
            tau = self.extension_tau()
            target = ext.named_sequence(family, self.x, h, ext.P_MAX, tau, self.seed)
            return ext.build_extension(target, self.extension_gamma, flat=self.extension_flat())
        return self.memo(("ext", family, h), build)

    def describe(self) -> dict:
        return {
            "weight": self.weight.to_dict(),
            "sequence": self.sequence.label,
            "horizon": self.horizon,
            "pathological_horizon": self.pathological.horizon,
            "extension": {"weight": self.extension_weight, "x": self.x, "h": self.h,
                          "gamma": self.extension_gamma},
            "flat": {"gamma": self.flat_gamma, "a": self.flat_a},
            "precision": self.precision,
            "seed": self.seed,
            "tol": self.tol,
        }


def default_context(weight: str | WeightFunction = "power:0.5", horizon: int = 200,
                    **kwargs) -> VerifyContext:
    omega = parse_spec(weight, horizon) if isinstance(weight, str) else weight
    return VerifyContext(
        weight=omega,
        sequence=ws.gevrey(2.0, horizon),
        pathological=ws.pathological_sequence(),
        horizon=horizon,
        **kwargs,
    )


# ---------------------------------------------------------------------------
# registry types

@dataclass
class Outcome:
    exact_ok: bool | None = None
    stable: bool | None = None
    within_tol: bool | None = None
    constants: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class InequalityCheck:
    id: str
    topic: str
    quote: str
    strategy: str
    run: Callable[[VerifyContext], Outcome]
    method: str = ""

    @property
    def anchored(self) -> bool:
        return bool(self.topic.strip()) and bool(self.quote.strip())


@dataclass
class CheckResult:
    id: str
    topic: str
    quote: str
    strategy: str
    method: str
    exact_ok: bool | None = None
    stable: bool | None = None
    within_tol: bool | None = None
    constants: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    error: str | None = None
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        if self.error is not None:
            return False
        parts = [v for v in (self.exact_ok, self.stable, self.within_tol) if v is not None]
        return bool(parts) and all(parts)

    @property
    def hard_failure(self) -> bool:
        """Failures that count toward the exit status: exact parts only."""
        if self.exact_ok is False:
            return True
        return self.error is not None and self.strategy == EXACT

    def summary(self) -> dict:
        return {
            "id": self.id,
            "anchor": {"topic": self.topic, "quote": self.quote},
            "strategy": self.strategy,
            "method": self.method,
            "passed": self.passed,
            "exact_ok": self.exact_ok,
            "stable": self.stable,
            "within_tolerance": self.within_tol,
            "constants": _jsonable(self.constants),
            "error": self.error,
        }


# ---------------------------------------------------------------------------
# weight-matrix checks

def _mg_across_levels(ctx):
    rows, ok = [], True
    for name, omega in (("weight", ctx.weight), ("sequence", FromSequence(ctx.sequence))):
        mat = ctx.matrix() if name == "weight" else WeightMatrix(omega, grid=LEVELS, P=60)
        for l in LEVELS:
            fit = check_mg_across_levels(mat, l, 60)
            ok &= fit.passed and fit.constants["violations"] == 0
            rows.append({"operand": name, "l": l, **fit.constants})
    return Outcome(exact_ok=ok, rows=rows)


def _absorption(ctx):
    rows, stable = [], True
    mat = WeightMatrix(ctx.weight, P=100)
    for h in (2.0, 8.0):
        fit = check_absorption(mat, h, 1.0)
        stable &= fit.stable
        rows.append({"h": h, "l": 1.0, **fit.constants, "log_D_by_horizon": fit.details["log_D"]})
    return Outcome(stable=stable, rows=rows, constants={"A(h=8)": rows[-1]["A"]})


def _equiv_constants(ctx, evaluate, t, t_half):
    """(left margin, C) for x w_{W^x} <= w <= 2x w_{W^x} + C, per level."""
    rows, exact_ok, stable = [], True, True
    for x in LEVELS:
        w = np.asarray(ctx.weight.eval(t), dtype=float)
        wx = evaluate(x, t)
        left = x * wx - w
        exact_ok &= bool(np.all(left <= _slack(w)))
        gap = w - 2 * x * wx
        c, ch = float(np.max(gap)), float(np.max(gap[t <= t_half]))
        stable &= same_log_scale(c, ch)
        rows.append({"x": x, "max_left_excess": float(np.max(left)), "C": c, "C_half_range": ch})
    return rows, exact_ok, stable


def _assoc_equiv(ctx):
    mat = ctx.matrix()
    t = np.logspace(0.0, 5.0, 121)
    rows, exact_ok, stable = _equiv_constants(
        ctx, lambda x, s: np.asarray(mat.assoc(x, s), dtype=float), t, 10 ** 2.5)
    return Outcome(stable=stable and exact_ok, rows=rows,
                   constants={f"C_{r['x']:g}": r["C"] for r in rows})


def _hm_bounds(ctx):
    mat = ctx.matrix()
    t = np.logspace(-5.0, 0.0, 121)
    # the same inequalities read through h_{W^x}(t) = exp(-w_{W^x}(1/t))
    rows, exact_ok, stable = _equiv_constants(
        ctx, lambda x, s: -np.log(mat.h(x, 1.0 / s)), 1.0 / t, 10 ** 2.5)
    return Outcome(exact_ok=exact_ok, stable=stable, rows=rows,
                   constants={f"C_{r['x']:g}": r["C"] for r in rows})


def _tau_matrix_equiv(ctx):
    mat = ctx.matrix()
    t = np.logspace(1.0, 5.0, 81)
    tau = np.asarray(ctx.weight.eval(t), dtype=float)
    rows, stable = [], True
    half = t <= 10 ** 3
    for x in LEVELS:
        wx = np.asarray(mat.assoc(x, t), dtype=float)
        keep = (wx > 0) & (tau > 0)
        up, dn = tau[keep] / wx[keep], wx[keep] / tau[keep]
        A, B = float(np.max(up)), float(np.max(dn))
        Ah, Bh = float(np.max(up[half[keep]])), float(np.max(dn[half[keep]]))
        stable &= same_scale(A, Ah) and same_scale(B, Bh)
        rows.append({"x": x, "sup_tau_over_wTx": A, "sup_wTx_over_tau": B,
                     "half_range": [Ah, Bh]})
    return Outcome(stable=stable, rows=rows)


def _hat_matrix_equiv(ctx):
    M = ctx.sequence
    T = WeightMatrix(FromSequence(M), grid=LEVELS, P=60)
    omega = WeightMatrix(FromSequence(ws.multiply_by_factorials(M)), grid=LEVELS, P=60)
    rel = matrix_equivalence(hat(T), omega)
    rows = [{"direction": "hat(T) -> Omega", "x": x, **v} for x, v in rel.forward.items()]
    rows += [{"direction": "Omega -> hat(T)", "x": x, **v} for x, v in rel.backward.items()]
    return Outcome(within_tol=rel.verdict == "{≈}", rows=rows, details={"verdict": rel.verdict})


# ---------------------------------------------------------------------------
# conjugate checks

def _divide_by_factorial_power(M, a):
    order = None if M.gevrey_order is None else M.gevrey_order - a
    logs = M.log_terms - a * np.array([math.lgamma(p + 1) for p in range(M.horizon + 1)])
    return ws.WeightSequence(logs, label=f"{M.label}/p!^{a:g}", gevrey_order=order)


def _sandwich_rows(lhs, mid, rhs, s, rtol):
    rows, ok = [], True
    for si, l, m, r in zip(s, lhs, mid, rhs):
        tol = rtol * (1.0 + abs(m))
        good = l <= m + tol and m <= r + tol
        ok &= good
        rows.append({"s": float(si), "lhs": l, "mid": m, "rhs": r, "holds": bool(good)})
    return rows, ok


def _dynkin_a(ctx):
    M = ctx.sequence
    rows, ok = [], True
    for a, s in ((0.5, np.logspace(-4, 1, 26)), (1.0, np.logspace(-2, 1, 26))):
        ram = Ramified(FromSequence(M), a)
        quotient = FromSequence(_divide_by_factorial_power(M, a), strict=False)
        lhs = [upper_star(ram, float(v)) for v in s]
        rhs = [upper_star(ram, float(v) / math.e) for v in s]
        mid = [float(quotient.eval(a ** a / v ** a)) for v in s]
        r, good = _sandwich_rows(lhs, mid, rhs, s, ctx.rtol())
        ok &= good
        rows += [{"a": a, **row} for row in r]
    return Outcome(within_tol=ok, rows=rows)


def _dynkin_a1(ctx):
    rows, ok = [], True
    for name, M in (("pathological", ctx.pathological), ("sequence", ctx.sequence)):
        m = ws.divide_by_factorials(M)
        wM, wm = FromSequence(M, strict=False), FromSequence(m, strict=False)
        # keep 1/s where the maximizing index of w_m stays on the horizon
        mu = np.exp(ws.quotients(ws.log_convex_minorant(m)).log_mu)
        lo, hi = max(mu[1], 1.0), mu[M.horizon // 2]
        s = 1.0 / np.logspace(math.log10(lo), math.log10(hi), 30)
        lhs = [upper_star(wM, float(v)) for v in s]
        rhs = [upper_star(wM, float(v) / math.e) for v in s]
        mid = [float(wm.eval(1.0 / v)) for v in s]
        r, good = _sandwich_rows(lhs, mid, rhs, s, ctx.rtol())
        ok &= good
        rows += [{"operand": name, **row} for row in r]
    return Outcome(within_tol=ok, rows=rows)


def _conj_monotone(ctx):
    tau, sigma = FromSequence(ctx.sequence), ctx.weight
    top = np.logspace(4, 8, 41)
    A = max(1.0, float(np.max(tau.eval(top) / np.maximum(sigma.eval(top), 1e-300))))
    t = np.concatenate([[0.0], np.logspace(-4, 8, 241)])
    B = max(0.0, float(np.max(tau.eval(t) - A * sigma.eval(t))))
    s = np.logspace(-4, 2, 40)
    lhs = [upper_star(tau, float(v)) for v in s]
    rhs = [A * upper_star(sigma, float(v) / A) + B for v in s]
    rows, ok = [], True
    rtol = ctx.rtol()
    for si, l, r in zip(s, lhs, rhs):
        good = l <= r + rtol * (1.0 + abs(r))
        ok &= good
        rows.append({"s": float(si), "tau_star": l, "bound": r, "holds": bool(good)})
    return Outcome(within_tol=ok, rows=rows, constants={"A": A, "B": B})


def _lower_envelope(m):
    """(w_m^iota)_star as a weight node."""
    return LowerStarOf(Ramified(FromSequence(m, strict=False), -1.0))


def _lc_minorant_identity(ctx):
    M = wiggled(ctx.sequence)
    m = ws.divide_by_factorials(M)
    mlc = ws.log_convex_minorant(m).log_terms
    env = _lower_envelope(m)
    P = 24
    rows = []
    r = np.empty(P + 1)
    closed_gap = 0.0
    for p in range(P + 1):
        # log N_p = sup_y (p y - k(e^y)) is the Young conjugate of the envelope
        log_n = phi_star(env, float(p), method="search") if p else -float(env.eval(0.0))
        log_l = math.lgamma(p + 1) + mlc[p]
        closed = (p * math.log(p) - p if p else 0.0) + mlc[p]
        closed_gap = max(closed_gap, abs(log_n - closed) / (1.0 + abs(closed)))
        r[p] = log_n - log_l
        rows.append({"p": p, "log_N": log_n, "log_p!m_lc": log_l, "closed_form": closed})
    k = np.arange(1, P + 1)
    up, dn = float(np.max(r[1:] / k)), float(np.max(-r[1:] / k))
    uph, dnh = float(np.max(r[1:P // 2 + 1] / k[:P // 2])), float(np.max(-r[1:P // 2 + 1] / k[:P // 2]))
    stable = same_log_scale(up, uph) and same_log_scale(dn, dnh)
    return Outcome(stable=stable, rows=rows,
                   constants={"upper": math.exp(up), "lower": math.exp(dn)},
                   details={"closed_form_rel_gap": closed_gap, "regularized": bool(np.any(mlc < m.log_terms - 1e-12))})


def _concave_equiv(ctx):
    M = ctx.sequence
    m = ws.divide_by_factorials(M)
    if ws.is_log_convex(m.log_terms) is not None:
        raise ValueError("concave-equiv needs M/p! log-convex")
    wM = FromSequence(M)
    env = _lower_envelope(m)
    mu1 = math.exp(ws.quotients(M).log_mu[1])
    x = np.logspace(math.log10(mu1), 4.0, 41)
    k = np.asarray(env.eval(x), dtype=float)
    lo = np.asarray(wM.eval(x), dtype=float)
    hi = 1.0 + np.asarray(wM.eval(math.e * x), dtype=float)
    ok_lo, ok_hi = lo <= k + _slack(k), k <= hi + _slack(k)
    rows = [{"x": float(a), "w_M": float(b), "envelope": float(c), "1+w_M(ex)": float(d)}
            for a, b, c, d in zip(x, lo, k, hi)]
    return Outcome(exact_ok=bool(np.all(ok_lo) and np.all(ok_hi)), rows=rows,
                   details={"min_left_margin": float(np.min(k - lo)),
                            "min_right_margin": float(np.min(hi - k))})


def _ratio_constants(f, g, t, half):
    keep = (f > 0) & (g > 0)
    up, dn = f[keep] / g[keep], g[keep] / f[keep]
    h = half[keep]
    A, B = float(np.max(up)), float(np.max(dn))
    Ah, Bh = float(np.max(up[h])), float(np.max(dn[h]))
    return A, B, Ah, Bh, same_scale(A, Ah) and same_scale(B, Bh)


def _L_equiv(ctx):
    M = wiggled(ctx.sequence)
    m = ws.divide_by_factorials(M)
    L = ws.multiply_by_factorials(ws.log_convex_minorant(m))
    t = np.logspace(1.0, 4.0, 31)
    wl = np.asarray(FromSequence(L).eval(t), dtype=float)
    kap = np.asarray(_lower_envelope(m).eval(t), dtype=float)
    A, B, Ah, Bh, stable = _ratio_constants(kap, wl, t, t <= 10 ** 2.5)
    rows = [{"t": float(a), "w_L": float(b), "envelope": float(c)} for a, b, c in zip(t, wl, kap)]
    return Outcome(stable=stable, rows=rows,
                   constants={"sup_envelope_over_wL": A, "sup_wL_over_envelope": B},
                   details={"half_range": [Ah, Bh]})


def _Wx_Lx_equiv(ctx):
    mat = ctx.matrix()
    t = np.logspace(1.0, 5.0, 41)
    rows, stable = [], True
    for x in LEVELS:
        W = mat.level(x, MATRIX_HORIZON)
        Lx = ws.multiply_by_factorials(ws.log_convex_minorant(ws.divide_by_factorials(W)))
        ww = np.asarray(FromSequence(W).eval(t), dtype=float)
        wl = np.asarray(FromSequence(Lx).eval(t), dtype=float)
        A, B, Ah, Bh, ok = _ratio_constants(ww, wl, t, t <= 10 ** 3)
        stable &= ok
        rows.append({"x": x, "sup_wW_over_wL": A, "sup_wL_over_wW": B, "half_range": [Ah, Bh]})
    return Outcome(stable=stable, rows=rows)


# ---------------------------------------------------------------------------
# indices

def _snq_char(ctx):
    weights = [("context", ctx.weight), ("power:1", Power(1.0)), ("power:0.75", Power(0.75)),
               ("gevrey:1", FromSequence(ws.gevrey(1.0, 200))), ("logpower:2", LogPower(2.0))]
    rows, ok = [], True
    for name, omega in weights:
        g = gamma_fn(omega)
        e = _entry("gamma(w) > 1 iff (w_snq)", g.value > 1, diagnostics(omega)["omega_snq"],
                   relation="iff")
        ok &= e["agree"]
        rows.append({"weight": name, "gamma_hat": g.value, "gamma_gt_1": e["lhs"],
                     "snq_scan": e["rhs"], "agree": e["agree"]})
    return Outcome(within_tol=ok, rows=rows)


def _index_identities(ctx):
    rows = []
    for name, target in (("weight", ctx.weight), ("sequence", ctx.sequence)):
        rows += [{"operand": name, **e} for e in check_index_identities(target)]
    return Outcome(within_tol=all(r["agree"] for r in rows), rows=rows)


# ---------------------------------------------------------------------------
# flat functions and kernels

def _fit_outcome(fit, exact=False):
    rows = [{"constant": k, "value": v} for k, v in fit.constants.items()]
    if exact:
        return Outcome(exact_ok=fit.passed, constants=fit.constants, rows=rows,
                       details={"worst_margin": fit.worst_margin, **fit.details})
    return Outcome(stable=fit.passed, constants=fit.constants, rows=rows, details=fit.details)


def _integrability(ctx):
    return _fit_outcome(fk.check_integrability(ctx.weight))


def _poisson_tail(ctx):
    return _fit_outcome(fk.check_poisson_tail(ctx.flat_model()))


def _flat_sandwich(ctx):
    fit = ctx.flat_fit()
    out = _fit_outcome(fit)
    out.rows = [{"constant": k, "value": v, "half_sample": fit.details["half_sample"].get(k)}
                for k, v in fit.constants.items()]
    return out


def _optimal_lower(ctx):
    fit = ctx.flat_fit()
    k4, k4h = fit.constants["K4"], fit.details["half_sample"]["K4"]
    stable = same_scale(k4, k4h)
    return Outcome(stable=stable, constants={"K4": k4, "K2": fit.constants["K2"]},
                   rows=[{"constant": "K4", "value": k4, "half_sample": k4h}],
                   details={"level": 1.0 / (4.0 * ctx.flat_a)})


def _kernel_integrability(ctx):
    return _fit_outcome(fk.check_kernel_integrability(ctx.flat_model()), exact=True)


def _kernel_decay(ctx):
    return _fit_outcome(fk.check_kernel_decay(ctx.flat_model()))


def _moment_sandwich(ctx):
    fit = fk.verify_moment_sandwich(ctx.flat_model(), 15, ctx.flat_fit())
    out = _fit_outcome(fit)
    out.rows = [{"p": p, "log_moment": v} for p, v in enumerate(fit.details["log_moments"])]
    return out


# ---------------------------------------------------------------------------
# extension operator

def _remainder(ctx):
    fit = ext.remainder_check(ctx.extension_model("boundary"), precision=ctx.precision)
    out = _fit_outcome(fit)
    out.rows = [{"N": n, "log_c_N": v} for n, v in enumerate(fit.details["log_c_N"])]
    return out


def _borel_rightinverse(ctx):
    rows, ok, reports = [], True, {}
    for family in ("delta0", "delta1", "boundary"):
        rep = ext.borel_check(ctx.extension_model(family), precision=ctx.precision)
        ok &= rep["passed"]
        reports[family] = {"r0": rep["r0"], "route_agreement_at_r0": rep["route_agreement_at_r0"]}
        for e in rep["entries"]:
            rows.append({"target": family, "p": e["p"], "lambda_re": e["lambda"][0],
                         "estimate_re": e["estimate"][0], "estimate_im": e["estimate"][1],
                         "error": e["error"], "tolerance": e["tolerance"], "passed": e["passed"]})
    return Outcome(within_tol=ok, rows=rows, details=reports)


# ---------------------------------------------------------------------------
# sequences

def _pathological_properties(ctx, k: int = 2):
    m = ctx.pathological
    M = ws.multiply_by_factorials(m)
    lc = ws.predicate(m, "lc")
    mg = ws.predicate(M, "mg")
    b1 = ws.predicate(M, "beta1", k=k)
    PP = ws.multiply_by_factorials(M)  # p!^2 m_p
    b1p = ws.predicate(PP, "beta1", k=k)
    tail_min, tail_min_p = b1.witness["tail_min"], b1p.witness["tail_min"]
    trend_ok = (mg.verdict == ws.DIVERGES and abs(tail_min - k) <= 0.05
                and b1p.verdict == ws.HOLDS and abs(tail_min_p / k ** 2 - 1) <= 0.05)
    rows = [
        {"property": "lc of m", "verdict": lc.verdict, "value": ""},
        {"property": "mg", "verdict": mg.verdict, "value": mg.witness["log_sup"][-1]},
        {"property": f"beta1({k}) on M", "verdict": b1.verdict, "value": tail_min},
        {"property": f"beta1({k}) on p!^2 m", "verdict": b1p.verdict, "value": tail_min_p},
    ]
    return Outcome(exact_ok=lc.holds, within_tol=trend_ok, rows=rows,
                   details={"mg_log_sup": mg.witness["log_sup"], "mg_horizons": mg.witness["horizons"]})


def _h_omega_identity(ctx):
    M = ctx.sequence
    mu = np.exp(ws.quotients(M).log_mu)
    t = np.logspace(math.log10(2.0 / mu[-1]), 1.0, 121)
    via_w = np.log(np.asarray(h_eval(M, t), dtype=float))
    scan = np.log(h_direct(M, t))
    diff = np.abs(via_w - scan)
    rows = [{"t": float(a), "log_h_from_w": float(b), "log_h_scan": float(c)}
            for a, b, c in zip(t, via_w, scan)]
    return Outcome(exact_ok=bool(np.all(diff <= _slack(scan))), rows=rows,
                   details={"max_abs_diff": float(np.max(diff))})


# ---------------------------------------------------------------------------
# the registry

REGISTRY: dict[str, InequalityCheck] = {}


def register(check: InequalityCheck):
    if check.strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {check.strategy!r}")
    REGISTRY[check.id] = check
    return check


for _c in (
    InequalityCheck("mg-across-levels", "weight matrices", "W^l_{j+k} ≤ W^{2l}_j W^{2l}_k",
                    EXACT, _mg_across_levels, "all j + k <= 60, l in {1/2, 1, 2}"),
    InequalityCheck("absorption", "weight matrices", "In fact we can take A=(L(L+1))^a",
                    FITTED, _absorption, "least D with h^j W^l_j <= D W^{Al}_j under horizon doubling"),
    InequalityCheck("assoc-equiv", "weight matrices", "xω_{W^x}(t) ≤ ω(t) ≤ 2xω_{W^x}(t)+C_x",
                    FITTED, _assoc_equiv, "left side exact, C_x fitted on two t-ranges"),
    InequalityCheck("hm-bounds", "associated functions", "exp(−ω^ι(t)) ≤ (h_{W^x}(t))^x",
                    EXACT, _hm_bounds, "exact left bound; C_x of the lower bound fitted"),
    InequalityCheck("dynkin-a", "Legendre conjugates",
                    "((ω_M)^a)⋆(s) ≤ ω_{M/G^a}(a^a/s^a) ≤ ((ω_M)^a)⋆(s/e)",
                    TOLERANCE, _dynkin_a, "a in {1/2, 1}"),
    InequalityCheck("dynkin-a1", "Legendre conjugates",
                    "with a=1: ω*_M(s) ≤ ω_m(1/s) ≤ ω*_M(s/e)", TOLERANCE, _dynkin_a1),
    InequalityCheck("conj-monotone", "Legendre conjugates", "τ*(s) ≤ Aσ*(s/A)+B",
                    TOLERANCE, _conj_monotone, "A, B fitted from tau <= A sigma + B"),
    InequalityCheck("lc-minorant-identity", "Legendre conjugates", "N ≈ (p!m^lc_p)_p",
                    FITTED, _lc_minorant_identity, "N_p as the Young conjugate of the lower envelope"),
    InequalityCheck("concave-equiv", "Legendre conjugates", "ω_M(x) ≤ (ω^ι_m)⋆(x) ≤ 1+ω_M(ex)",
                    EXACT, _concave_equiv, "grid with x >= mu_1"),
    InequalityCheck("L-equiv", "Legendre conjugates",
                    "ω_L … and (ω^ι_m)⋆ are equivalent", FITTED, _L_equiv),
    InequalityCheck("Wx-Lx-equiv", "Legendre conjugates", "ω_{W^x} ∼ ω_{L^x}", FITTED, _Wx_Lx_equiv),
    InequalityCheck("snq-char", "weight functions",
                    "∃K>1 such that limsup ω(Kt)/ω(t) < K", TOLERANCE, _snq_char, "scan"),
    InequalityCheck("index-identities", "growth indices",
                    "γ(m)+1 = γ(M); γ((ω^ι)⋆) = γ(ω)+1; γ(ω^{1/s}) = sγ(ω)",
                    TOLERANCE, _index_identities),
    InequalityCheck("tau-matrix-equiv", "weight matrices", "ω_{T^x} ∼ τ ∼ ω_{T^y}",
                    FITTED, _tau_matrix_equiv),
    InequalityCheck("hat-matrix-equiv", "weight matrices", "Ŧ {≈} Ω holds true",
                    TOLERANCE, _hat_matrix_equiv, "level pairing"),
    InequalityCheck("integrability", "flat functions", "∫_0^1 −τ^ι(ty)dt ≥ −C(τ^ι(y)+1)",
                    FITTED, _integrability),
    InequalityCheck("poisson-tail", "flat functions", "∫ −τ^ι(|t|)/(1+t²) dt > −∞",
                    FITTED, _poisson_tail, "quadrature convergence"),
    InequalityCheck("flat-sandwich", "flat functions",
                    "K_1^{−a} exp(−2aτ^ι(K_2|ξ|)) ≤ |G_a(ξ)| ≤ exp(−(a/2)τ^ι(K_3|ξ|))",
                    FITTED, _flat_sandwich),
    InequalityCheck("optimal-lower", "flat functions", "|G_a(ξ)| ≥ K_4h_{T^x}(K_2|ξ|)",
                    FITTED, _optimal_lower),
    InequalityCheck("kernel-integrability", "kernels", "≤ t_0", EXACT, _kernel_integrability),
    InequalityCheck("kernel-decay", "kernels", "≤ Ch_{T^{4/a}}(K/|z|)", FITTED, _kernel_decay),
    InequalityCheck("moment-sandwich", "kernels",
                    "C_1(K_2/2)^pT_p^{1/(2a)} ≤ m_a(p) ≤ C_2K_3^pT_p^{4/a}",
                    FITTED, _moment_sandwich),
    InequalityCheck("remainder", "extension operators",
                    "|f_λ(z)−Σ_{p=0}^{N−1}λ_p z^p/p!| ≤ (2C_2|λ|/C_1)(4hK_3/K_2)^N T_N^{8x}|z|^N",
                    FITTED, _remainder),
    InequalityCheck("borel-rightinverse", "extension operators", "B(f_λ)=λ",
                    TOLERANCE, _borel_rightinverse, "extrapolation along the bisector"),
    InequalityCheck("pathological-properties", "pathological example",
                    "(β₂), (β₁) and (mg) are violated", EXACT, _pathological_properties,
                    "lc exact; mg and beta1 by trend"),
    InequalityCheck("h-omega-identity", "associated functions", "h_M(t)=exp(−ω_M(1/t))",
                    EXACT, _h_omega_identity),
):
    register(_c)


# ---------------------------------------------------------------------------
# runner

def _threads():
    env = os.environ.get("ULTRAHOLO_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


def run_one(check: InequalityCheck, ctx: VerifyContext) -> CheckResult:
    res = CheckResult(check.id, check.topic, check.quote, check.strategy, check.method)
    if not check.anchored:
        res.error = str(UnanchoredCheck(f"check {check.id!r} has no anchor"))
        return res
    start = time.perf_counter()
    try:
        out = check.run(ctx)
    except Exception as exc:  # operand-construction failures are reported per check
        res.error = f"{type(exc).__name__}: {exc}"
    else:
        res.exact_ok, res.stable, res.within_tol = out.exact_ok, out.stable, out.within_tol
        res.constants, res.rows, res.details = out.constants, out.rows, out.details
    res.seconds = time.perf_counter() - start
    return res


def run(ids="all", ctx: VerifyContext | None = None, threads: int | None = None) -> list:
    """Run registry entries (``"all"``, one id or a list of ids)."""
    ctx = default_context() if ctx is None else ctx
    if ids == "all":
        ids = list(REGISTRY)
    elif isinstance(ids, str):
        ids = [ids]
    for cid in ids:
        if cid not in REGISTRY:
            raise UnknownCheck(cid)
    checks = [REGISTRY[c] for c in ids]
    for c in checks:
        if not c.anchored:
            raise UnanchoredCheck(c.id)
    n = threads or _threads()
    if n == 1 or len(checks) == 1:
        return [run_one(c, ctx) for c in checks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda c: run_one(c, ctx), checks))


def exit_status(results) -> int:
    return 1 if any(r.hard_failure for r in results) else 0


# ---------------------------------------------------------------------------
# report bundle

def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, complex):
        return [_jsonable(v.real), _jsonable(v.imag)]
    return v


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, dict, np.ndarray)):
        return json.dumps(_jsonable(v), ensure_ascii=False)
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    header = []
    for r in rows:
        for k in r:
            if k not in header:
                header.append(k)
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(r.get(k, "")) for k in header])
    return buf.getvalue()


def write_bundle(results, out_dir, ctx: VerifyContext | None = None, meta: bool = True) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for r in results:
        name = f"{r.id}.csv"
        rows = r.rows or [{"constant": k, "value": v} for k, v in r.constants.items()]
        (out / name).write_text(rows_to_csv(rows), encoding="utf-8", newline="")
        entry = r.summary()
        entry["csv"] = name
        entry["details"] = _jsonable(r.details)
        if meta:
            entry["seconds"] = round(r.seconds, 3)
        entries.append(entry)
    index = {
        "passed": all(r.passed for r in results),
        "exit_status": exit_status(results),
        "checks": entries,
        "summary": {r.id: r.passed for r in results},
    }
    if ctx is not None:
        index["context"] = _jsonable(ctx.describe())
    if meta:
        index["meta"] = {"version": __version__,
                         "generated": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    path = out / "index.json"
    path.write_text(json.dumps(index, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def format_line(r: CheckResult) -> str:
    status = "PASS" if r.passed else ("FAIL" if r.hard_failure else "SOFT-FAIL")
    extra = f" ({r.error})" if r.error else ""
    return f"{status:9s} {r.id:24s} {r.strategy:26s} {r.seconds:7.2f}s{extra}"
