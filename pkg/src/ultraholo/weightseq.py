"""Weight sequences stored in the log domain.

A weight sequence M = (M_0, ..., M_P) is kept as the array of log M_p with
M_0 = 1.  Derived objects (m_p = M_p/p!, quotients mu_p = M_p/M_{p-1}) are
exact shifts or differences of that array.  Asymptotic conditions can only be
observed on a finite horizon, so predicates return evidence reports rather
than booleans.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import AnchorSlopeViolation, HorizonTooSmall

HOLDS = "holds-on-horizon"
FAILS = "fails-at-index"
DIVERGES = "trend-diverges"
BOUNDED = "trend-bounded"

TAIL_FRACTION = 0.25
# relative float slack for "exact" inequalities between log terms
LOG_SLACK = 1e-12
# a tail slope (per unit log p) above this counts as unbounded growth
TREND_SLOPE = 0.02
# increments of a horizon-doubling series that shrink by less than this factor
# per doubling are read as divergence
TREND_RATIO = 0.75


@dataclass(frozen=True)
class WeightSequence:
    """Positive sequence M_0..M_P held as log M_p.

    ``gevrey_order`` marks sequences with the closed form log M_p = s log p!,
    which can then be evaluated past the stored horizon.
    """

    log_terms: np.ndarray
    label: str = ""
    gevrey_order: float | None = None

    def __post_init__(self):
        arr = np.array(self.log_terms, dtype=float).ravel()
        if arr.size < 3:
            raise HorizonTooSmall("a weight sequence needs P >= 2")
        if not np.all(np.isfinite(arr)):
            raise ValueError("log terms must be finite")
        arr = arr - arr[0]
        arr.setflags(write=False)
        object.__setattr__(self, "log_terms", arr)

    @property
    def horizon(self) -> int:
        return self.log_terms.size - 1

    def __len__(self):
        return self.log_terms.size

    def log_term(self, p):
        """log M_p, using the closed form beyond the horizon when available."""
        p = np.asarray(p)
        if self.gevrey_order is not None:
            return self.gevrey_order * gammaln(p + 1.0)
        if np.any(p > self.horizon):
            raise IndexError("index beyond the sequence horizon")
        return self.log_terms[p]

    def truncated(self, P: int) -> "WeightSequence":
        return WeightSequence(self.log_terms[: P + 1], self.label, self.gevrey_order)

    def extended(self, P: int) -> "WeightSequence":
        """Same sequence on horizon P (needs a closed form if P exceeds the stored one)."""
        if P <= self.horizon:
            return self.truncated(P)
        if self.gevrey_order is None:
            raise IndexError("no closed form to extend this sequence")
        s = self.gevrey_order
        return WeightSequence(s * _log_factorials(P), self.label, s)

    def __eq__(self, other):
        if not isinstance(other, WeightSequence):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.log_terms, other.log_terms)

    def __hash__(self):
        return hash((self.label, self.log_terms.tobytes()))


@dataclass(frozen=True)
class QuotientView:
    log_mu: np.ndarray

    @property
    def mu(self):
        return np.exp(self.log_mu)


@dataclass
class PredicateReport:
    predicate: str
    verdict: str
    index: int | None = None
    witness: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict in (HOLDS, BOUNDED)


# ---------------------------------------------------------------------------
# constructors and views

def _log_factorials(P):
    return gammaln(np.arange(P + 1) + 1.0)


def gevrey(s: float, P: int) -> WeightSequence:
    if s < 1:
        raise ValueError("Gevrey order must be >= 1")
    if P < 2:
        raise HorizonTooSmall("P must be >= 2")
    return WeightSequence(s * _log_factorials(P), label=f"gevrey({s:g})", gevrey_order=float(s))


def _shifted_order(M, delta):
    return None if M.gevrey_order is None else M.gevrey_order + delta


def divide_by_factorials(M: WeightSequence) -> WeightSequence:
    out = M.log_terms - _log_factorials(M.horizon)
    return WeightSequence(out, label=f"{M.label}/p!", gevrey_order=_shifted_order(M, -1))


def multiply_by_factorials(M: WeightSequence) -> WeightSequence:
    out = M.log_terms + _log_factorials(M.horizon)
    return WeightSequence(out, label=f"p!{M.label}", gevrey_order=_shifted_order(M, 1))


def quotients(M: WeightSequence) -> QuotientView:
    lm = np.empty_like(M.log_terms)
    lm[0] = 0.0
    lm[1:] = np.diff(M.log_terms)
    lm.setflags(write=False)
    return QuotientView(lm)


def log_convex_minorant(M: WeightSequence) -> WeightSequence:
    """Lower convex hull of the points (p, log M_p), read back at integers."""
    y = M.log_terms
    hull = []
    for p in range(y.size):
        # monotone chain; collinear points stay on the hull
        while len(hull) >= 2:
            p0, p1 = hull[-2], hull[-1]
            cross = (p1 - p0) * (y[p] - y[p0]) - (y[p1] - y[p0]) * (p - p0)
            if cross < 0:
                hull.pop()
            else:
                break
        hull.append(p)
    out = np.interp(np.arange(y.size), hull, y[hull])
    # hull vertices are exact; keep the original values there
    out[hull] = y[hull]
    return WeightSequence(out, label=f"{M.label}^lc", gevrey_order=M.gevrey_order)


def is_log_convex(log_terms, slack=LOG_SLACK):
    """Index of the first (lc) violation, or None."""
    y = np.asarray(log_terms)
    defect = 2 * y[1:-1] - y[:-2] - y[2:]
    tol = slack * (1.0 + np.abs(y[1:-1]))
    bad = np.nonzero(defect > tol)[0]
    return None if bad.size == 0 else int(bad[0]) + 1


# ---------------------------------------------------------------------------
# predicates

def _tail_start(n):
    return max(1, int(math.floor(n * (1 - TAIL_FRACTION))))


def doubling_horizons(P, smallest=8):
    """Horizons P, P/2, P/4, ... down to ``smallest``, in increasing order."""
    hs = []
    h = P
    while h >= smallest:
        hs.append(h)
        h //= 2
    return hs[::-1]


def doubling_trend(values):
    """Classify a monotone series observed at successive horizon doublings.

    Convergent series have increments decaying geometrically per doubling;
    the decay factor is read off the ratio of late to early increment sums.
    """
    d = np.diff(np.asarray(values, dtype=float))
    if d.size < 2:
        return BOUNDED
    half = d.size // 2
    early = float(np.sum(d[:half]))
    late = float(np.sum(d[-half:]))
    if late <= 1e-6:
        return BOUNDED
    if early <= 0:
        return DIVERGES
    shift = d.size - half
    rho = (late / early) ** (1.0 / shift)
    return DIVERGES if rho >= TREND_RATIO else BOUNDED


def _mg_profile(y, n_max):
    """For n = 1..n_max: max_j (log M_n - log M_j - log M_{n-j}) / n."""
    out = np.empty(n_max)
    arg = np.empty(n_max, dtype=int)
    for n in range(1, n_max + 1):
        g = y[n] - y[: n + 1] - y[n::-1]
        j = int(np.argmax(g))
        out[n - 1] = g[j] / n
        arg[n - 1] = j
    return out, arg


def _mg_report(M):
    P = M.horizon
    if P < 8:
        raise HorizonTooSmall("(mg) trend needs P >= 8")
    prof, arg = _mg_profile(M.log_terms, P)
    horizons = doubling_horizons(P)
    sups = [float(np.max(prof[:h])) for h in horizons]
    n = int(np.argmax(prof)) + 1
    witness = {
        "horizons": horizons,
        "log_sup": sups,
        "sup": [math.exp(v) for v in sups],
        "argmax": (int(arg[n - 1]), n - int(arg[n - 1])),
    }
    return PredicateReport("mg", doubling_trend(sups), None, witness)


def _gamma1_values(log_mu, h):
    lm = log_mu[1 : h + 1]
    p = np.arange(1, h + 1)
    # log sum_{k=p}^{h} 1/mu_k as a reversed cumulative logsumexp
    tail = np.logaddexp.accumulate((-lm)[::-1])[::-1]
    vals = lm - np.log(p) + tail
    i = int(np.argmax(vals))
    return math.exp(vals[i]), i + 1


def _gamma1_report(M):
    P = M.horizon
    if P < 8:
        raise HorizonTooSmall("(gamma1) trend needs P >= 8")
    log_mu = quotients(M).log_mu
    horizons = doubling_horizons(P)
    res = [_gamma1_values(log_mu, h) for h in horizons]
    sups = [r[0] for r in res]
    witness = {"horizons": horizons, "sup": sups, "argmax": res[-1][1]}
    return PredicateReport("gamma1", doubling_trend(sups), None, witness)


def beta1_window(P, k):
    """Tail window of p for which kp stays on the horizon."""
    hi = P // k
    lo = max(1, int(math.ceil(hi * (1 - TAIL_FRACTION))))
    return lo, hi


def _beta1_report(M, k):
    P = M.horizon
    if P < 10:
        raise HorizonTooSmall("beta tests need P >= 10")
    lo, hi = beta1_window(P, k)
    if hi - lo < 1:
        raise HorizonTooSmall("beta1 window is empty for this k")
    log_mu = quotients(M).log_mu
    p = np.arange(lo, hi + 1)
    ratios = np.exp(log_mu[k * p] - log_mu[p])
    i = int(np.argmin(ratios))
    tail_min = float(ratios[i])
    witness = {"k": k, "window": (lo, hi), "tail_min": tail_min, "argmin": int(p[i])}
    if tail_min > k:
        return PredicateReport(f"beta1({k})", HOLDS, None, witness)
    return PredicateReport(f"beta1({k})", FAILS, int(p[i]), witness)


def beta2_expression(M, k, p):
    """log of (M_{kp}/M_p)^{1/(p(k-1))} / mu_{kp}."""
    y = M.log_terms
    p = np.asarray(p)
    return (y[k * p] - y[p]) / (p * (k - 1)) - (y[k * p] - y[k * p - 1])


def _beta2_report(M, ks, eps):
    P = M.horizon
    if P < 10:
        raise HorizonTooSmall("beta tests need P >= 10")
    table = {}
    for k in ks:
        lo, hi = beta1_window(P, k)
        if hi - lo < 1:
            continue
        p = np.arange(lo, hi + 1)
        vals = beta2_expression(M, k, p)
        i = int(np.argmax(vals))
        table[k] = {"limsup": math.exp(vals[i]), "argmax": int(p[i])}
    if not table:
        raise HorizonTooSmall("no k leaves a usable beta2 window")
    best_k = min(table, key=lambda kk: table[kk]["limsup"])
    witness = {"per_k": table, "best_k": best_k, "best": table[best_k]["limsup"]}
    if eps is None:
        # the epsilon quantifier is left to the caller
        return PredicateReport("beta2", BOUNDED, None, witness)
    if table[best_k]["limsup"] <= eps:
        return PredicateReport("beta2", HOLDS, None, witness)
    return PredicateReport("beta2", FAILS, table[best_k]["argmax"], witness)


def predicate(M: WeightSequence, pid: str, k: int = 2, eps: float | None = None,
              ks=range(2, 9)) -> PredicateReport:
    """Finite-horizon evidence for one of lc, slc, mg, gamma1, beta1, beta2."""
    if pid in ("lc", "slc"):
        y = M.log_terms if pid == "lc" else divide_by_factorials(M).log_terms
        j = is_log_convex(y)
        if j is None:
            return PredicateReport(pid, HOLDS)
        defect = float(2 * y[j] - y[j - 1] - y[j + 1])
        return PredicateReport(pid, FAILS, j, {"defect": defect})
    if pid == "mg":
        return _mg_report(M)
    if pid == "gamma1":
        return _gamma1_report(M)
    if pid == "beta1":
        return _beta1_report(M, k)
    if pid == "beta2":
        return _beta2_report(M, ks, eps)
    raise ValueError(f"unknown predicate {pid!r}")


# ---------------------------------------------------------------------------
# relations

LE = "≤"
PRECSIM = "≾"
APPROX = "≈"
PRECEQ = "≼"
SIMEQ = "≃"
INCOMPARABLE = "incomparable"
# reversed forms, used when only N relates to M
GE = "≥"
SUCCSIM = "≿"
SUCCEQ = "≽"


@dataclass
class RelationReport:
    verdict: str
    forward: set
    backward: set
    margins: dict


def _tail_slope(values, lo):
    p = np.arange(lo, lo + values.size, dtype=float)
    x = np.log(p)
    if values.size < 2 or np.ptp(x) == 0:
        return 0.0
    return float(np.polyfit(x, values, 1)[0])


def _one_way(M, N):
    P = M.horizon
    p = np.arange(1, P + 1)
    root = (M.log_terms[1:] - N.log_terms[1:]) / p
    quot = np.diff(M.log_terms) - np.diff(N.log_terms)
    lo = _tail_start(P)
    root_slope = _tail_slope(root[lo - 1:], lo)
    quot_slope = _tail_slope(quot[lo - 1:], lo)
    holds = set()
    if np.all(M.log_terms <= N.log_terms + LOG_SLACK * (1 + np.abs(N.log_terms))):
        holds.add(LE)
    # a flat stretch of quotients can hide a diverging root, and the
    # quotient relation implies the root one, so both trends must stay bounded.
    # A root trend rising like c - d/p has a positive log-slope on any finite
    # tail, so its running sup is also read at horizon doublings.  Quotients
    # get no such pass since flat stretches end in jumps.
    root_ok = root_slope <= TREND_SLOPE or doubling_trend(
        [float(np.max(root[:h])) for h in doubling_horizons(P)]) == BOUNDED
    if root_ok:
        holds.add(PRECSIM)
        if quot_slope <= TREND_SLOPE:
            holds.add(PRECEQ)
    margins = {
        "root_sup": math.exp(float(np.max(root))),
        "quotient_sup": math.exp(float(np.max(quot))),
        "root_tail_slope": root_slope,
        "quotient_tail_slope": quot_slope,
    }
    return holds, margins


def relation(M: WeightSequence, N: WeightSequence) -> RelationReport:
    """Compare M with N on their common horizon."""
    if M.horizon != N.horizon:
        raise ValueError("relation needs equal horizons")
    fwd, mf = _one_way(M, N)
    bwd, mb = _one_way(N, M)
    margins = {"forward": mf, "backward": mb}
    if PRECEQ in fwd and PRECEQ in bwd:
        verdict = SIMEQ
    elif PRECSIM in fwd and PRECSIM in bwd:
        verdict = APPROX
    elif PRECEQ in fwd:
        verdict = PRECEQ
    elif LE in fwd:
        verdict = LE
    elif PRECSIM in fwd:
        verdict = PRECSIM
    elif PRECEQ in bwd:
        verdict = SUCCEQ
    elif LE in bwd:
        verdict = GE
    elif PRECSIM in bwd:
        verdict = SUCCSIM
    else:
        verdict = INCOMPARABLE
    return RelationReport(verdict, fwd, bwd, margins)


# ---------------------------------------------------------------------------
# the sequence beyond all Gevrey orders

def _anchor_slopes(anchors):
    pts = [(0, 0.0)] + [(a, j * math.lgamma(a + 1)) for j, a in enumerate(anchors, start=1)]
    return [(y1 - y0) / (x1 - x0) for (x0, y0), (x1, y1) in zip(pts, pts[1:])]


def default_anchors(P: int, a1: int = 2):
    """Smallest admissible anchors a_1 < a_2 < ... reaching past P."""
    anchors = [a1]
    while anchors[-1] <= P:
        j = len(anchors)
        a = max(j * anchors[-1], anchors[-1] + 1)
        while True:
            slopes = _anchor_slopes(anchors + [a])
            if slopes[-1] >= slopes[-2]:
                break
            a += 1
        anchors.append(a)
    return anchors


def pathological_sequence(q: float = math.e, anchors=None, P: int = 1440) -> WeightSequence:
    """m_p = q^{f(p)} with f piecewise linear through (a_j, j log a_j!)."""
    if q < math.e:
        raise ValueError("q must be >= e")
    if anchors is None:
        anchors = default_anchors(P)
    anchors = [int(a) for a in anchors]
    if not anchors or anchors[0] < 1:
        raise ValueError("anchors must be positive integers")
    for j in range(1, len(anchors)):
        if anchors[j] <= anchors[j - 1] or anchors[j] < anchors[j - 1] * j:
            raise ValueError(f"anchor growth a_(j+1) >= j a_j violated at j={j}")
    slopes = _anchor_slopes(anchors)
    for j in range(1, len(slopes)):
        if slopes[j] < slopes[j - 1]:
            raise AnchorSlopeViolation(j)
    xs = [0] + anchors
    ys = [0.0] + [j * math.lgamma(a + 1) for j, a in enumerate(anchors, start=1)]
    p = np.arange(P + 1, dtype=float)
    f = np.interp(p, xs, ys)
    beyond = p > xs[-1]
    f[beyond] = ys[-1] + slopes[-1] * (p[beyond] - xs[-1])
    return WeightSequence(f * math.log(q), label="pathological")


# ---------------------------------------------------------------------------
# serialization

def to_json(M: WeightSequence) -> str:
    return json.dumps({"label": M.label, "log_terms": [float(v) for v in M.log_terms]})


def from_json(text: str) -> WeightSequence:
    data = json.loads(text)
    return WeightSequence(data["log_terms"], label=data.get("label", ""))


def to_csv(M: WeightSequence) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "log_M_p"])
    for p, v in enumerate(M.log_terms):
        w.writerow([p, repr(float(v))])
    return buf.getvalue()


def from_csv(text: str, label: str = "") -> WeightSequence:
    rows = list(csv.DictReader(io.StringIO(text)))
    rows.sort(key=lambda r: int(r["p"]))
    return WeightSequence([float(r["log_M_p"]) for r in rows], label=label)
