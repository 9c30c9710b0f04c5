"""Weight functions as immutable expression trees.

Primitives are evaluated in closed form (powers, log-powers, associated
functions of sequences); composite nodes apply exact operations (ramification
t -> t^s, scaling, sums) or call the conjugation operators.  Evaluation is
vectorized over numpy arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from . import weightseq as ws
from .errors import DivergentTail, HorizonExhausted, NegativeArgument

SCHEMA_VERSION = 1


class WeightFunction:
    kind = "WeightFunction"

    def _ev(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def eval(self, t):
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0):
            raise NegativeArgument("weight functions are defined for t >= 0")
        out = self._ev(np.atleast_1d(arr))
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    __call__ = eval

    def args(self):
        raise NotImplementedError

    def to_dict(self):
        return {"kind": self.kind, "args": [_arg_to_json(a) for a in self.args()]}

    # convenience builders
    def ramified(self, s):
        return Ramified(self, s)

    def inverted(self):
        """t -> w(1/t)."""
        return Ramified(self, -1.0)

    def scaled(self, c):
        return Scaled(c, self)


def _arg_to_json(a):
    if isinstance(a, WeightFunction):
        return a.to_dict()
    if isinstance(a, ws.WeightSequence):
        return _seq_to_json(a)
    if isinstance(a, tuple):
        return [_arg_to_json(x) for x in a]
    return a


@dataclass(frozen=True, eq=True)
class Power(WeightFunction):
    alpha: float
    kind = "Power"

    def _ev(self, t):
        return t ** self.alpha

    def args(self):
        return [self.alpha]


@dataclass(frozen=True)
class LogPower(WeightFunction):
    s: float
    kind = "LogPower"

    def _ev(self, t):
        with np.errstate(divide="ignore"):
            lt = np.log(t)
        return np.where(t > 1, np.maximum(lt, 0.0) ** self.s, 0.0)

    def args(self):
        return [self.s]


@dataclass(frozen=True)
class Const(WeightFunction):
    c: float
    kind = "Const"

    def _ev(self, t):
        return np.full(t.shape, float(self.c))

    def args(self):
        return [self.c]


@dataclass(frozen=True, eq=False)
class FromSequence(WeightFunction):
    """Associated function w_M(t) = sup_p log(t^p / M_p).

    Non-(lc) input is replaced by its log-convex minorant, which leaves the
    associated function unchanged.  With ``strict`` set, an argument whose
    maximizing index reaches the horizon raises HorizonExhausted unless the
    sequence has a Gevrey closed form; otherwise the supremum runs over the
    stored indices only.
    """

    seq: ws.WeightSequence
    strict: bool = True
    kind = "FromSequence"
    _lc: ws.WeightSequence = field(init=False, repr=False, compare=False)
    _log_mu: np.ndarray = field(init=False, repr=False, compare=False)
    regularized: bool = field(init=False, compare=False)

    def __post_init__(self):
        if ws.is_log_convex(self.seq.log_terms) is None:
            lc, reg = self.seq, False
        else:
            lc, reg = ws.log_convex_minorant(self.seq), True
        object.__setattr__(self, "_lc", lc)
        object.__setattr__(self, "_log_mu", ws.quotients(lc).log_mu)
        object.__setattr__(self, "regularized", reg)

    def __eq__(self, other):
        return isinstance(other, FromSequence) and self.seq == other.seq and self.strict == other.strict

    def __hash__(self):
        return hash((self.seq, self.strict))

    def argmax(self, t):
        """Index p* = max{p <= P : mu_p <= t} (0 for t <= mu_1)."""
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            lt = np.log(t)
        return np.searchsorted(self._log_mu[1:], lt, side="right")

    def _ev(self, t):
        P = self._lc.horizon
        out = np.zeros(t.shape)
        pos = t > 0
        lt = np.log(t[pos])
        k = np.searchsorted(self._log_mu[1:], lt, side="right")
        val = k * lt - self._lc.log_terms[k]
        hit = k >= P
        if np.any(hit):
            order = self._lc.gevrey_order
            if order is not None and order > 0:
                val[hit] = _gevrey_assoc(order, lt[hit])
            elif self.strict:
                bad = float(np.exp(lt[hit][0]))
                raise HorizonExhausted(bad)
        out[pos] = val
        return out

    def args(self):
        return [self.seq, self.strict]


def _gevrey_assoc(s, lt):
    """w_M for log M_p = s log p!: p* = floor(t^{1/s})."""
    p = np.floor(np.exp(np.minimum(lt / s, 700.0)))
    for _ in range(2):
        up = s * np.log(p + 1) <= lt
        p = np.where(up, p + 1, p)
        with np.errstate(divide="ignore"):
            down = (p > 0) & (s * np.log(p) > lt)
        p = np.where(down, p - 1, p)
    return p * lt - s * gammaln(p + 1)


@dataclass(frozen=True)
class Ramified(WeightFunction):
    """t -> w(t^s); s = -1 gives the inversion w^iota."""

    omega: WeightFunction
    s: float
    kind = "Ramified"

    def _ev(self, t):
        if self.s < 0:
            out = np.full(t.shape, math.inf)
            pos = t > 0
            out[pos] = self.omega._ev(t[pos] ** self.s)
            return out
        return self.omega._ev(t ** self.s)

    def args(self):
        return [self.omega, self.s]


@dataclass(frozen=True)
class Scaled(WeightFunction):
    c: float
    omega: WeightFunction
    kind = "Scaled"

    def _ev(self, t):
        return self.c * self.omega._ev(t)

    def args(self):
        return [self.c, self.omega]


@dataclass(frozen=True)
class Sum(WeightFunction):
    terms: tuple
    kind = "Sum"

    def __init__(self, *terms):
        if len(terms) == 1 and isinstance(terms[0], (list, tuple)):
            terms = tuple(terms[0])
        object.__setattr__(self, "terms", tuple(terms))

    def _ev(self, t):
        return sum(w._ev(t) for w in self.terms)

    def args(self):
        return list(self.terms)


@dataclass(frozen=True)
class Max(WeightFunction):
    terms: tuple
    kind = "Max"

    def __init__(self, *terms):
        if len(terms) == 1 and isinstance(terms[0], (list, tuple)):
            terms = tuple(terms[0])
        object.__setattr__(self, "terms", tuple(terms))

    def _ev(self, t):
        return np.maximum.reduce([w._ev(t) for w in self.terms])

    def args(self):
        return list(self.terms)


def _pointwise(fn, t):
    return np.array([fn(float(x)) for x in t.ravel()]).reshape(t.shape)


@dataclass(frozen=True)
class UpperStarOf(WeightFunction):
    """s -> w*(s) = sup_t (w(t) - s t)."""

    omega: WeightFunction
    kind = "UpperStarOf"

    def _ev(self, s):
        from .conjugate import upper_star
        return _pointwise(lambda x: upper_star(self.omega, x), s)

    def args(self):
        return [self.omega]


@dataclass(frozen=True)
class LowerStarOf(WeightFunction):
    """t -> h_star(t) = inf_s (h(s) + t s)."""

    h: WeightFunction
    kind = "LowerStarOf"

    def _ev(self, t):
        from .conjugate import lower_star
        return _pointwise(lambda x: lower_star(self.h, x), t)

    def args(self):
        return [self.h]


@dataclass(frozen=True)
class KappaOf(WeightFunction):
    omega: WeightFunction
    kind = "KappaOf"

    def _ev(self, t):
        return _pointwise(lambda x: kappa(self.omega, x), t)

    def args(self):
        return [self.omega]


# ---------------------------------------------------------------------------
# JSON schema

def _seq_to_json(M):
    if M.gevrey_order is not None and M.label.startswith("gevrey"):
        return {"gevrey": M.gevrey_order, "horizon": M.horizon}
    return {"label": M.label, "log_terms": [float(v) for v in M.log_terms]}


def _seq_from_json(d):
    if "gevrey" in d:
        return ws.gevrey(float(d["gevrey"]), int(d.get("horizon", 200)))
    if "pathological" in d:
        opts = d["pathological"] or {}
        return ws.pathological_sequence(q=float(opts.get("q", math.e)),
                                        anchors=opts.get("anchors"),
                                        P=int(opts.get("horizon", 1440)))
    return ws.WeightSequence(d["log_terms"], label=d.get("label", ""))


_KINDS = {}


def _node_from_dict(d):
    kind = d["kind"]
    a = d.get("args", [])
    if kind == "Power":
        return Power(float(a[0]))
    if kind == "LogPower":
        return LogPower(float(a[0]))
    if kind == "Const":
        return Const(float(a[0]))
    if kind == "FromSequence":
        strict = bool(a[1]) if len(a) > 1 else True
        return FromSequence(_seq_from_json(a[0]), strict)
    if kind == "Ramified":
        return Ramified(_node_from_dict(a[0]), float(a[1]))
    if kind == "Scaled":
        return Scaled(float(a[0]), _node_from_dict(a[1]))
    if kind == "Sum":
        return Sum(*[_node_from_dict(x) for x in a])
    if kind == "Max":
        return Max(*[_node_from_dict(x) for x in a])
    if kind == "UpperStarOf":
        return UpperStarOf(_node_from_dict(a[0]))
    if kind == "LowerStarOf":
        return LowerStarOf(_node_from_dict(a[0]))
    if kind == "KappaOf":
        return KappaOf(_node_from_dict(a[0]))
    raise ValueError(f"unknown weight kind {kind!r}")


def to_json(omega: WeightFunction) -> str:
    d = {"version": SCHEMA_VERSION}
    d.update(omega.to_dict())
    return json.dumps(d)


def from_dict(d: dict) -> WeightFunction:
    version = d.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported weight schema version {version}")
    if "weight" in d and "kind" not in d:
        return from_dict({"version": version, **d["weight"]})
    return _node_from_dict(d)


def from_json(text: str) -> WeightFunction:
    return from_dict(json.loads(text))


def parse_spec(spec: str, horizon: int | None = None) -> WeightFunction:
    """Weight from a short spec (power:0.5, logpower:2, gevrey:1, pathological),
    an inline JSON tree, or a path to a JSON file."""
    spec = spec.strip()
    if spec.startswith("{"):
        return from_json(spec)
    path = Path(spec)
    if path.suffix == ".json" and path.exists():
        return from_json(path.read_text(encoding="utf-8"))
    name, _, rest = spec.partition(":")
    name = name.lower()
    if name == "power":
        return Power(float(rest))
    if name == "logpower":
        return LogPower(float(rest))
    if name == "gevrey":
        return FromSequence(ws.gevrey(float(rest or 1), horizon or 200))
    if name == "pathological":
        return FromSequence(ws.pathological_sequence(P=horizon or 1440), strict=False)
    raise ValueError(f"cannot parse weight spec {spec!r}")


# ---------------------------------------------------------------------------
# associated functions of sequences

def evaluate(omega: WeightFunction, t):
    return omega.eval(t)


def h_eval(M: ws.WeightSequence, t):
    """h_M(t) = exp(-w_M(1/t))."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise NegativeArgument("h_M needs t > 0")
    w = FromSequence(M)
    out = np.exp(-w.eval(1.0 / t))
    return float(out) if out.ndim == 0 else out


def h_direct(M: ws.WeightSequence, t):
    """inf_{k <= P} M_k t^k by direct scan."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = np.arange(M.horizon + 1)
    vals = M.log_terms[None, :] + np.log(t)[:, None] * k[None, :]
    return np.exp(np.min(vals, axis=1))


def assoc_bruteforce(M: ws.WeightSequence, t):
    """(value, argmax) of sup_{p <= P} (p log t - log M_p) by full scan."""
    lt = math.log(t)
    vals = np.arange(M.horizon + 1) * lt - M.log_terms
    i = int(np.argmax(vals[::-1]))
    p = M.horizon - i  # largest maximizer, matching max{p : mu_p <= t}
    return float(vals[p]), p


# ---------------------------------------------------------------------------
# kappa

def kappa(omega: WeightFunction, t: float, tol: float = 1e-10) -> float:
    """k_w(t) = t * int_t^inf w(u)/u^2 du, by quadrature in log u.

    The upper limit moves out by decades until a power-law bound on the
    remaining tail falls below tol times the running estimate.
    """
    if t < 0:
        raise NegativeArgument("kappa needs t >= 0")
    if t == 0:
        return 0.0

    def integrand(x):
        return float(omega.eval(math.exp(x))) * math.exp(-x)

    a = math.log(t)
    total = 0.0
    step = math.log(10.0)
    for _ in range(60):
        b = a + step
        part, _ = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=tol, limit=200)
        total += part
        wb, wa = float(omega.eval(math.exp(b))), float(omega.eval(math.exp(b - step)))
        if wb <= 0:
            a = b
            continue
        slope = (math.log(wb) - math.log(wa)) / step if wa > 0 else 1.0
        if slope >= 1.0 - 1e-3:
            raise DivergentTail(f"w grows at least linearly near u={math.exp(b):.3g}")
        tail = wb * math.exp(-b) / (1.0 - slope)
        a = b
        if tail < tol * total:
            return t * (total + tail)
        if total == 0 and wb == 0:
            continue
    raise DivergentTail("kappa tail did not settle")


# ---------------------------------------------------------------------------
# property diagnostics

@dataclass
class PropertyDiagnostics:
    verdicts: dict
    evidence: dict
    grid: np.ndarray

    def __getitem__(self, key):
        return self.verdicts[key]


def diagnostics(omega: WeightFunction, t_max: float = 1e8, n: int = 200,
                ks=(2, 4, 8, 16)) -> PropertyDiagnostics:
    t = np.logspace(0.0, math.log10(t_max), n)
    w = omega.eval(t)
    top = t >= t_max / 10.0
    lower = ~top
    pos = w > 0
    ev = {}
    verdicts = {}

    w2 = omega.eval(2 * t)
    ratio = np.where(pos, w2 / np.where(pos, w, 1.0), np.nan)
    L = float(np.max(w2 / (w + 1.0)))
    r_top = np.nanmax(ratio[top]) if np.any(pos & top) else math.inf
    r_low = np.nanmax(ratio[lower & pos]) if np.any(pos & lower) else r_top
    verdicts["omega1"] = bool(np.isfinite(r_top) and r_top <= r_low * (1 + 1e-6) + 1e-12)
    ev["omega1"] = {"ratio": ratio, "L": L}

    with np.errstate(divide="ignore", invalid="ignore"):
        r3 = np.log(t) / w
    i100 = int(np.searchsorted(t, t_max / 100.0))
    verdicts["omega3"] = bool(np.all(pos[i100:]) and r3[-1] <= 0.9 * r3[i100])
    ev["omega3"] = {"log_t_over_w": r3}

    y = np.log(t)
    phi = w
    mid = phi[1:-1] - 0.5 * (phi[:-2] + phi[2:])
    # uniform y-grid, so midpoint convexity is the second difference sign
    verdicts["omega4"] = bool(np.all(mid <= 1e-9 * (1 + np.abs(phi[1:-1]))))
    ev["omega4"] = {"midpoint_defect": mid, "y": y}

    r5 = w / t
    verdicts["omega5"] = bool(r5[-1] <= 0.5 * r5[i100] and r5[-1] < 1.0)
    ev["omega5"] = {"w_over_t": r5}

    hs = 2.0 ** np.arange(1, 61)
    need = np.full(t.shape, math.inf)
    for H in hs[::-1]:
        ok = 2 * w <= omega.eval(H * t) + H
        need = np.where(ok, H, need)
    h_top = float(np.max(need[top]))
    h_low = float(np.max(need[lower]))
    verdicts["omega6"] = bool(np.isfinite(h_top) and h_top <= h_low)
    ev["omega6"] = {"H_needed": need, "H": max(h_top, h_low)}

    snq = {}
    for K in ks:
        rk = omega.eval(K * t[top]) / np.where(w[top] > 0, w[top], np.nan)
        snq[K] = float(np.nanmax(rk)) if np.any(w[top] > 0) else math.inf
    verdicts["omega_snq"] = any(v < K for K, v in snq.items())
    ev["omega_snq"] = {"limsup_proxy": snq}

    return PropertyDiagnostics(verdicts, ev, t)


def omega1_constant(omega: WeightFunction, t_max: float = 1e8, n: int = 200) -> float:
    """Smallest L with w(2t) <= L (w(t) + 1) on the sampled grid."""
    t = np.concatenate([[0.0], np.logspace(-8.0, math.log10(t_max), n)])
    return float(np.max(omega.eval(2 * t) / (omega.eval(t) + 1.0)))
