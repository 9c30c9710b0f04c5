"""Optimal flat functions on sectors, the kernel e_a and its moments.

With sigma(t) = tau(t^(-1/s)) the outer function on the right half-plane is

    log F_a(w) = -(2 a w / pi) * int_0^inf sigma(t) / (t^2 + w^2) dt

(the two halves t and -t of the symmetric Poisson-type integral combined),
G_a(xi) = F_a(xi^s) on the sector S_delta, and e_a(z) = z G_a(1/z).

The integral is taken in u = log t by composite Gauss-Legendre panels of a
fixed width, with extra breakpoints at the kinks of sigma when tau is the
associated function of a sequence.  Points close to the imaginary axis go to
an adaptive route, and an mpmath route serves extended precision.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import mpmath
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .bounds import BoundFit, same_log_scale, same_scale
from .errors import (
    GammaOutOfRange,
    HorizonExhausted,
    NearAxisInstability,
    OutsideSector,
    PrecisionExhausted,
    TruncationFailure,
)
from .indices import IndexEstimate, gamma_fn
from .weightfn import (
    Const,
    FromSequence,
    LogPower,
    Max,
    Power,
    Ramified,
    Scaled,
    Sum,
    WeightFunction,
)
from .wmatrix import WeightMatrix

__all__ = [
    "BoundFit",
    "SectorPoint",
    "FlatFunctionModel",
    "build_model",
    "eval_F",
    "eval_G",
    "eval_kernel",
    "log_F",
    "log_G",
    "log_F_mp",
    "log_moments",
    "moment",
    "moments",
    "verify_flat_sandwich",
    "verify_moment_sandwich",
]

PANEL = 0.25
ORDER = 8
LOG_EPS = 37.0  # -log(1e-16)
UPPER_REACH = 40.0
ADAPTIVE_MARGIN = 0.3
AXIS_LIMIT = 1e-6
MOMENT_FLOOR = -40  # dyadic panels start at 2^-40
MOMENT_ORDER = 16
MOMENT_TOL = 1e-15
KINK_GAP = 1e-3


# ---------------------------------------------------------------------------
# points on the Riemann surface of the logarithm

@dataclass(frozen=True)
class SectorPoint:
    r: float
    theta: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("modulus must be positive")

    @classmethod
    def from_complex(cls, z: complex) -> "SectorPoint":
        return cls(abs(z), math.atan2(z.imag, z.real))

    def power(self, s: float) -> "SectorPoint":
        return SectorPoint(self.r ** s, s * self.theta)

    def invert(self) -> "SectorPoint":
        return SectorPoint(1.0 / self.r, -self.theta)

    def to_halfplane(self) -> complex:
        if abs(self.theta) >= math.pi / 2:
            raise OutsideSector(f"argument {self.theta} is outside the right half-plane")
        return complex(self.r * math.cos(self.theta), self.r * math.sin(self.theta))


def _as_polar(zeta):
    if isinstance(zeta, SectorPoint):
        return np.array([zeta.r]), np.array([zeta.theta]), True
    if isinstance(zeta, (list, tuple)) and zeta and isinstance(zeta[0], SectorPoint):
        return (np.array([z.r for z in zeta]), np.array([z.theta for z in zeta]), False)
    z = np.asarray(zeta, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    return np.abs(z), np.angle(z), scalar


# ---------------------------------------------------------------------------
# model

@dataclass(frozen=True, eq=False)
class FlatFunctionModel:
    tau: WeightFunction
    gamma: float
    a: float
    delta: float
    s: float
    gamma_tau_estimate: IndexEstimate
    alpha_tau: float
    panel: float = PANEL
    order: int = ORDER
    _kinks: np.ndarray = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def beta(self) -> float:
        """Power-law exponent of sigma at 0."""
        return self.alpha_tau / self.s

    def with_a(self, a: float) -> "FlatFunctionModel":
        """Same tau, gamma, s and delta; only the exponent a changes."""
        return FlatFunctionModel(self.tau, self.gamma, a, self.delta, self.s,
                                 self.gamma_tau_estimate, self.alpha_tau, self.panel,
                                 self.order, self._kinks)

    def sigma(self, u):
        """sigma(e^u) = tau(e^(-u/s))."""
        with np.errstate(over="ignore"):
            return self.tau.eval(np.exp(np.minimum(-np.asarray(u) / self.s, 700.0)))

    def to_dict(self) -> dict:
        return {
            "tau": self.tau.to_dict(),
            "gamma": self.gamma,
            "a": self.a,
            "delta": self.delta,
            "s": self.s,
            "gamma_tau": self.gamma_tau_estimate.value,
            "alpha_tau": self.alpha_tau,
            "panel": self.panel,
            "order": self.order,
        }


def power_exponent(tau: WeightFunction, lo: float = 1e6, hi: float = 1e8) -> float:
    """Log-log slope of tau over [lo, hi]."""
    t = np.logspace(math.log10(lo), math.log10(hi), 21)
    v = tau.eval(t)
    return float(np.polyfit(np.log(t), np.log(v), 1)[0])


def _kink_positions(tau: WeightFunction, s: float, gap: float = KINK_GAP) -> np.ndarray:
    if not isinstance(tau, FromSequence):
        return np.empty(0)
    log_mu = tau._log_mu[1:]
    order = tau._lc.gevrey_order
    if order is not None and order > 0:
        # closed form beyond the horizon: mu_p = p^order
        p_far = int(math.ceil(s * order / gap)) + 2
        if p_far > log_mu.size:
            log_mu = np.concatenate([log_mu, order * np.log(np.arange(log_mu.size + 1, p_far + 1))])
    u = -s * log_mu
    u = np.sort(u[np.isfinite(u)])
    if u.size > 1:
        # once kinks crowd closer than ``gap`` the residual sawtooth of sigma
        # is below double precision relative to sigma itself
        dense = np.nonzero(np.diff(u) < gap)[0]
        if dense.size:
            u = u[dense[-1] + 1:]
    return u


def build_model(tau: WeightFunction, gamma: float, a: float,
                gamma_tau: IndexEstimate | None = None, panel: float = PANEL,
                order: int = ORDER) -> FlatFunctionModel:
    if not gamma > 0:
        raise GammaOutOfRange("gamma must be positive")
    if a <= 0:
        raise ValueError("a must be positive")
    est = gamma_tau if gamma_tau is not None else gamma_fn(tau)
    g_hat = est.value
    if not gamma < g_hat:
        raise GammaOutOfRange(f"gamma = {gamma} is not below the index estimate {g_hat}")
    if math.isinf(g_hat):
        # any delta > gamma is admissible; keep the ramification mild
        delta = gamma + 1.0
        s = 0.5 / delta
    else:
        delta = 0.5 * (gamma + g_hat)
        s = 0.5 * (1.0 / g_hat + 1.0 / delta)
    alpha = power_exponent(tau)
    kinks = _kink_positions(tau, s)
    return FlatFunctionModel(tau, float(gamma), float(a), delta, s, est, alpha, panel, order, kinks)


# ---------------------------------------------------------------------------
# quadrature in u = log t

def _gl(order):
    x, w = leggauss(order)
    return x, w


def _nodes(model, lw_min, lw_max, refine=0):
    h = model.panel / 2 ** refine
    one_minus = max(1.0 - model.beta, 0.05)
    u_lo = max(lw_min - min(400.0, LOG_EPS / one_minus), -690.0)
    u_hi = lw_max + UPPER_REACH
    key = ("nodes", refine, math.floor(u_lo / h), math.ceil(u_hi / h))
    hit = model._cache.get(key)
    if hit is not None:
        return hit
    edges = np.arange(math.floor(u_lo / h), math.ceil(u_hi / h) + 1) * h
    if model._kinks is not None and model._kinks.size:
        k = model._kinks[(model._kinks > edges[0]) & (model._kinks < edges[-1])]
        edges = np.unique(np.concatenate([edges, k]))
        edges = edges[np.concatenate([[True], np.diff(edges) > 1e-9])]
    x, w = _gl(model.order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    sig = model.sigma(u)
    t = np.exp(u)
    keep = sig > 0
    out = (t[keep], (wt * sig * t)[keep])
    with model._lock:
        model._cache[key] = out
    return out


def _integral_fixed(model, w, refine=0):
    lw = np.log(np.abs(w))
    t, ws = _nodes(model, float(lw.min()), float(lw.max()), refine)
    out = np.empty(w.shape, dtype=complex)
    t2 = t * t
    chunk = max(1, int(4_000_000 // max(t.size, 1)))
    for i in range(0, w.size, chunk):
        ww = w[i : i + chunk]
        out[i : i + chunk] = (ws[None, :] / (t2[None, :] + (ww * ww)[:, None])).sum(axis=1)
    return out


def _integral_adaptive(model, w):
    lw = math.log(abs(w))
    one_minus = max(1.0 - model.beta, 0.05)
    u_lo = max(lw - min(400.0, LOG_EPS / one_minus), -690.0)
    u_hi = lw + UPPER_REACH
    pts = sorted({lw, lw - 1, lw + 1, lw - 5, lw + 5})
    w2 = w * w

    def part(u, which):
        t = math.exp(u)
        v = float(model.sigma(u)) * t / (t * t + w2)
        return v.real if which == 0 else v.imag

    pieces = [u_lo] + [p for p in pts if u_lo < p < u_hi] + [u_hi]
    re = im = 0.0
    for lo, hi in zip(pieces, pieces[1:]):
        re += quad(part, lo, hi, args=(0,), limit=400, epsabs=0, epsrel=1e-12)[0]
        im += quad(part, lo, hi, args=(1,), limit=400, epsabs=0, epsrel=1e-12)[0]
    return complex(re, im)


def log_F(model: FlatFunctionModel, w, refine: int = 0):
    """log F_a(w) for Re w > 0 (vectorized, machine precision)."""
    w = np.asarray(w, dtype=complex)
    scalar = w.ndim == 0
    w = np.atleast_1d(w).ravel()
    mod = np.abs(w)
    if np.any(mod == 0) or np.any(~np.isfinite(mod)):
        raise OutsideSector("w must be finite and nonzero")
    cosang = w.real / mod
    if np.any(cosang < AXIS_LIMIT):
        raise NearAxisInstability("Re(w)/|w| is too small for the quadrature")
    margin = math.pi / 2 - np.abs(np.angle(w))
    near = margin < ADAPTIVE_MARGIN
    integ = np.empty(w.shape, dtype=complex)
    if np.any(~near):
        integ[~near] = _integral_fixed(model, w[~near], refine)
    for i in np.nonzero(near)[0]:
        integ[i] = _integral_adaptive(model, w[i])
    out = -(2.0 * model.a / math.pi) * w * integ
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# extended precision

def mp_weight(tau: WeightFunction, t):
    """tau(t) in mpmath arithmetic for the closed-form node kinds."""
    t = mpmath.mpf(t)
    if isinstance(tau, Power):
        return t ** mpmath.mpf(tau.alpha)
    if isinstance(tau, LogPower):
        return mpmath.log(t) ** tau.s if t > 1 else mpmath.mpf(0)
    if isinstance(tau, Const):
        return mpmath.mpf(tau.c)
    if isinstance(tau, Scaled):
        return tau.c * mp_weight(tau.omega, t)
    if isinstance(tau, Sum):
        return mpmath.fsum(mp_weight(x, t) for x in tau.terms)
    if isinstance(tau, Max):
        return max(mp_weight(x, t) for x in tau.terms)
    if isinstance(tau, Ramified):
        if t == 0:
            return mpmath.inf if tau.s < 0 else mp_weight(tau.omega, t)
        return mp_weight(tau.omega, t ** tau.s)
    if isinstance(tau, FromSequence):
        if t <= 0:
            return mpmath.mpf(0)
        lt = mpmath.log(t)
        lc = tau._lc
        k = int(np.searchsorted(tau._log_mu[1:], float(lt), side="right"))
        if k < lc.horizon or lc.gevrey_order is None:
            k = min(k, lc.horizon)
            return k * lt - mpmath.mpf(float(lc.log_terms[k]))
        s = mpmath.mpf(lc.gevrey_order)
        p = mpmath.floor(mpmath.exp(lt / s))
        for _ in range(3):
            if s * mpmath.log(p + 1) <= lt:
                p += 1
            elif p > 0 and s * mpmath.log(p) > lt:
                p -= 1
        return p * lt - s * mpmath.loggamma(p + 1)
    raise PrecisionExhausted(f"no extended-precision evaluator for {tau.kind}")


def log_F_mp(model: FlatFunctionModel, w, bits: int = 128):
    """log F_a(w) by tanh-sinh quadrature at the given mantissa length."""
    if bits < 100:
        raise ValueError("extended precision needs at least 100 bits")
    with mpmath.workprec(bits):
        w = mpmath.mpc(w)
        if mpmath.re(w) <= 0:
            raise OutsideSector("Re(w) must be positive")
        lw = float(mpmath.log(abs(w)))
        one_minus = max(1.0 - model.beta, 0.05)
        digits = bits * math.log(2)
        u_lo = lw - min(600.0, (digits + 5) / one_minus)
        u_hi = lw + digits + 5
        tau, s = model.tau, mpmath.mpf(model.s)

        def f(u):
            t = mpmath.exp(u)
            return mp_weight(tau, mpmath.exp(-u / s)) * t / (t * t + w * w)

        pts = set(np.arange(math.floor(u_lo), math.ceil(u_hi) + 1, 2.0).tolist())
        if model._kinks is not None:
            pts.update(float(k) for k in model._kinks if u_lo < k < u_hi)
        pts.update({lw - 1, lw, lw + 1})
        grid = [mpmath.mpf(p) for p in sorted(p for p in pts if u_lo < p < u_hi)]
        integ = mpmath.quad(f, [mpmath.mpf(u_lo)] + grid + [mpmath.mpf(u_hi)])
        return -(2 * model.a / mpmath.pi) * w * integ


def eval_F(model: FlatFunctionModel, w, precision: int | None = None):
    if precision:
        return mpmath.exp(log_F_mp(model, w, precision))
    return np.exp(log_F(model, w))


# ---------------------------------------------------------------------------
# G_a and e_a

def _check_sector(model, theta):
    if np.any(np.abs(theta) >= model.delta * math.pi / 2):
        raise OutsideSector(f"|theta| must stay below delta*pi/2 = {model.delta * math.pi / 2:.6g}")


def log_G(model: FlatFunctionModel, r, theta, refine: int = 0):
    """log G_a(r e^{i theta}) for arrays of moduli and arguments."""
    r = np.asarray(r, dtype=float)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), r.shape)
    _check_sector(model, theta)
    w = r ** model.s * np.exp(1j * model.s * theta)
    return log_F(model, w.ravel(), refine).reshape(r.shape)


def eval_G(model: FlatFunctionModel, zeta, precision: int | None = None):
    r, th, scalar = _as_polar(zeta)
    if precision:
        _check_sector(model, th)
        vals = [mpmath.exp(log_F_mp(model, mpmath.mpf(x) ** model.s
                                    * mpmath.expj(model.s * y), precision))
                for x, y in zip(r, th)]
        return vals[0] if scalar else vals
    out = np.exp(log_G(model, r, th))
    return complex(out[0]) if scalar else out


def log_kernel(model: FlatFunctionModel, r, theta, refine: int = 0):
    """log e_a(z) = log z + log G_a(1/z)."""
    r = np.asarray(r, dtype=float)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), r.shape)
    return np.log(r) + 1j * theta + log_G(model, 1.0 / r, -theta, refine)


def eval_kernel(model: FlatFunctionModel, zeta):
    r, th, scalar = _as_polar(zeta)
    out = np.exp(log_kernel(model, r, th))
    return complex(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# moments m_a(p) = int_0^inf t^p G_a(1/t) dt

def _moment_table(model, p_max, refine):
    order = MOMENT_ORDER * 2 ** refine
    x, w = _gl(order)
    h = math.log(2.0)
    p = np.arange(p_max + 1, dtype=float)
    # [0, 2^floor]: G is 1 to machine precision there
    lo = MOMENT_FLOOR * h
    log_terms = [(p + 1) * lo - np.log(p + 1)]
    k, block = MOMENT_FLOOR, 16
    total = None
    while True:
        edges = (np.arange(k, k + block + 1)) * h
        mid = 0.5 * (edges[1:] + edges[:-1])
        u = (mid[:, None] + 0.5 * h * x[None, :]).ravel()
        wt = np.tile(0.5 * h * w, mid.size)
        lg = log_G(model, np.exp(-u), np.zeros_like(u), refine).real
        # t^p G(1/t) dt = exp((p+1) u + log G) du
        lv = (p[:, None] + 1) * u[None, :] + lg[None, :] + np.log(wt)[None, :]
        log_terms.append(lv)
        k += block
        stacked = np.concatenate([np.atleast_2d(t.T).T if t.ndim == 1 else t for t in
                                  [log_terms[0][:, None]] + log_terms[1:]], axis=1)
        total = np.logaddexp.reduce(stacked, axis=1)
        # remaining mass bound: the integrand is past its peak and decays
        tail_edge = (p + 1) * u[-1] + lg[-1]
        decreasing = np.all(lv[:, -1] < lv[:, -order - 1])
        if decreasing and np.all(tail_edge + 3.0 < total + math.log(MOMENT_TOL)):
            return total
        if k > 1200:
            raise TruncationFailure("moment integrand does not decay within t < 2^1200")


def log_moments(model: FlatFunctionModel, p_max: int, refine: int = 0) -> np.ndarray:
    key = ("moments", refine)
    with model._lock:
        have = model._cache.get(key)
    if have is not None and have.size > p_max:
        return have[: p_max + 1]
    table = _moment_table(model, max(p_max, 24), refine)
    with model._lock:
        cur = model._cache.get(key)
        if cur is None or cur.size < table.size:
            model._cache[key] = table
    return table[: p_max + 1]


def moments(model: FlatFunctionModel, p_max: int, refine: int = 0) -> np.ndarray:
    return np.exp(log_moments(model, p_max, refine))


def moment(model: FlatFunctionModel, p: int) -> float:
    if p < 0:
        raise ValueError("p must be nonnegative")
    return float(np.exp(log_moments(model, p)[p]))


# ---------------------------------------------------------------------------
# sandwich fits

def default_rays(gamma: float, n: int = 5) -> np.ndarray:
    return np.linspace(-gamma * math.pi / 2, gamma * math.pi / 2, n)


def default_radii(n: int = 60) -> np.ndarray:
    return np.logspace(-3.0, 3.0, n)


def tau_upper_inverse(tau: WeightFunction, y) -> np.ndarray:
    """sup{t : tau(t) <= y}, by vectorized bisection in log t."""
    y = np.asarray(y, dtype=float)
    lo = np.full(y.shape, -300.0)
    hi = np.full(y.shape, 300.0)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        ok = tau.eval(np.exp(mid)) <= y
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return np.exp(lo)


def _sandwich_constants(model, L, R, TH):
    tau = model.tau
    # upper: L >= tau(1/(K3 r)) / 2, minimal K3
    tinv = tau_upper_inverse(tau, 2.0 * L)
    log_k3 = float(np.max(-np.log(R) - np.log(tinv)))

    # lower: L <= log K1 + 2 tau(1/(K2 r)); largest K2 with log K1 <= 1
    def log_k1(lk2):
        return max(0.0, float(np.max(L - 2.0 * tau.eval(np.exp(-lk2 - np.log(R))))))

    lo, hi = -60.0, 60.0
    if log_k1(lo) > 1.0:
        log_k2 = -math.inf
    else:
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if log_k1(mid) <= 1.0:
                lo = mid
            else:
                hi = mid
        log_k2 = lo
    return log_k1(log_k2) if math.isfinite(log_k2) else math.inf, log_k2, log_k3


def _log_K4(model, L, R, log_k2, P=200):
    x = 1.0 / (4.0 * model.a)
    mat = WeightMatrix(model.tau, grid=(x,), P=P)
    om = np.asarray(mat.assoc(x, np.exp(-log_k2) / R), dtype=float)
    return float(np.min(-model.a * L + om))


def verify_flat_sandwich(model: FlatFunctionModel, rays=None, radii=None,
                         with_lower_form: bool = True) -> BoundFit:
    """Fit K1..K4 in
        K1^-a exp(-2a tau^iota(K2|xi|)) <= |G_a(xi)| <= exp(-(a/2) tau^iota(K3|xi|))
    and |G_a(xi)| >= K4 h_{T^x}(K2|xi|) with x = 1/(4a).
    """
    rays = default_rays(model.gamma) if rays is None else np.asarray(rays, dtype=float)
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    TH, R = np.meshgrid(rays, radii, indexing="ij")
    lg = log_G(model, R, TH)
    L = -lg.real / model.a
    fits = []
    for sub in (slice(None), slice(None, None, 2)):
        Ls, Rs, Ts = L[:, sub], R[:, sub], TH[:, sub]
        fits.append(_sandwich_constants(model, Ls.ravel(), Rs.ravel(), Ts.ravel()))
    (lk1, lk2, lk3), (hk1, hk2, hk3) = fits
    const = {"K1": math.exp(lk1), "K2": math.exp(lk2), "K3": math.exp(lk3)}
    stable = (same_log_scale(lk2, hk2) and same_log_scale(lk3, hk3)
              and abs(lk1 - hk1) <= math.log(2.0))
    details = {
        "a": model.a, "s": model.s, "delta": model.delta,
        "half_sample": {"K1": math.exp(hk1), "K2": math.exp(hk2), "K3": math.exp(hk3)},
        "samples": int(L.size), "max_abs_G": float(np.max(np.exp(lg.real))),
    }
    if with_lower_form:
        lk4 = _log_K4(model, L.ravel(), R.ravel(), lk2)
        hk4 = _log_K4(model, L[:, ::2].ravel(), R[:, ::2].ravel(), hk2)
        const["K4"] = math.exp(lk4)
        details["half_sample"]["K4"] = math.exp(hk4)
        stable = stable and same_log_scale(lk4, hk4)
    # worst relative slack of the upper bound at the fitted K3
    upper = 0.5 * model.tau.eval(np.exp(-lk3) / R.ravel())
    worst = float(np.min(L.ravel() - upper))
    return BoundFit("flat-sandwich", const, worst, stable, details)


def transfer_levels(model):
    """Matrix levels entering the moment bounds: 1/(2a) below, 4/a above."""
    return 1.0 / (2.0 * model.a), 4.0 / model.a


def verify_moment_sandwich(model: FlatFunctionModel, p_max: int = 15,
                           flat_fit: BoundFit | None = None) -> BoundFit:
    """C1 (K2/2)^p T_p^{1/(2a)} <= m_a(p) <= C2 K3^p T_p^{4/a}."""
    fit = flat_fit if flat_fit is not None else verify_flat_sandwich(model, with_lower_form=False)
    K2, K3 = fit.constants["K2"], fit.constants["K3"]
    lo_x, hi_x = transfer_levels(model)
    mat = WeightMatrix(model.tau, grid=(lo_x, hi_x), P=p_max)
    lt_lo = mat.level(lo_x, p_max).log_terms
    lt_hi = mat.level(hi_x, p_max).log_terms
    lm = log_moments(model, p_max)
    lm_ref = log_moments(model, p_max, refine=1)
    p = np.arange(p_max + 1)
    lower = lm - p * math.log(K2 / 2) - lt_lo
    upper = lm - p * math.log(K3) - lt_hi
    half = p_max // 2 + 1
    c1, c2 = float(np.min(lower)), float(np.max(upper))
    c1h, c2h = float(np.min(lower[:half])), float(np.max(upper[:half]))
    refinement = float(np.max(np.abs(np.expm1(lm_ref - lm))))
    stable = same_log_scale(c1, c1h) and same_log_scale(c2, c2h) and refinement < 1e-6
    return BoundFit(
        "moment-sandwich",
        {"C1": math.exp(c1), "C2": math.exp(c2), "K2": K2, "K3": K3},
        worst_margin=0.0,
        stable=stable,
        details={
            "p_max": p_max,
            "half_range": {"C1": math.exp(c1h), "C2": math.exp(c2h)},
            "refinement_rel_change": refinement,
            "log_moments": lm.tolist(),
            "levels": [lo_x, hi_x],
        },
    )


# ---------------------------------------------------------------------------
# further flatness checks

def check_flat_upper(model: FlatFunctionModel, rays=None, radii=None) -> BoundFit:
    """|G_a(xi)| <= h_{T^{2/a}}(A1 |xi|); fits the minimal A1."""
    rays = default_rays(model.gamma) if rays is None else rays
    radii = default_radii(40) if radii is None else radii
    TH, R = np.meshgrid(rays, radii, indexing="ij")
    lg = log_G(model, R, TH).real.ravel()
    Rf = R.ravel()
    x = 2.0 / model.a
    mat = WeightMatrix(model.tau, grid=(x,), P=200)

    def ok(log_a1, rr, gg):
        om = np.asarray(mat.assoc(x, np.exp(-log_a1) / rr), dtype=float)
        return bool(np.all(gg <= -om + 1e-12))

    def fit(rr, gg):
        lo, hi = -30.0, 30.0
        if not ok(hi, rr, gg):
            return math.inf
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if ok(mid, rr, gg):
                hi = mid
            else:
                lo = mid
        return hi

    la, lah = fit(Rf, lg), fit(Rf[::2], lg[::2])
    return BoundFit("flat-upper", {"A1": math.exp(la)}, 0.0, same_log_scale(la, lah),
                    {"half_sample": math.exp(lah), "level": x})


def check_kernel_integrability(model: FlatFunctionModel, t0: float = 1.0, rays=None) -> BoundFit:
    """sup_theta int_0^t0 |e_a(t e^{i theta})| / t dt <= t0 (exact on samples)."""
    rays = default_rays(model.gamma, 9) if rays is None else rays
    x, w = _gl(32)
    edges = np.linspace(math.log(t0) - 60.0, math.log(t0), 241)
    mid = 0.5 * (edges[1:] + edges[:-1])
    h = edges[1] - edges[0]
    u = (mid[:, None] + 0.5 * h * x[None, :]).ravel()
    wt = np.tile(0.5 * h * w, mid.size)
    worst = 0.0
    for th in rays:
        # |e_a(z)|/t dt = |e_a(z)| du
        le = log_kernel(model, np.exp(u), np.full(u.shape, th)).real
        val = float(np.sum(wt * np.exp(le)))
        worst = max(worst, val)
    return BoundFit("kernel-integrability", {"sup_integral": worst, "t0": t0},
                    t0 - worst, True, {"rays": list(map(float, rays))}, exact=True,
                    tolerance=1e-9 * t0)


def check_kernel_decay(model: FlatFunctionModel, rays=None, radii=None) -> BoundFit:
    """|e_a(z)| <= C h_{T^{4/a}}(K/|z|): K fitted at the largest value with log C <= 1."""
    rays = default_rays(model.gamma) if rays is None else rays
    radii = np.logspace(-3, 1, 40) if radii is None else radii
    TH, R = np.meshgrid(rays, radii, indexing="ij")
    le = log_kernel(model, R, TH).real.ravel()
    Rf = R.ravel()
    x = 4.0 / model.a
    level = WeightMatrix(model.tau, grid=(x,), P=200).level(x)
    assoc = FromSequence(level)

    def log_c(log_k, rr, ee):
        try:
            om = np.asarray(assoc.eval(rr * math.exp(-log_k)), dtype=float)
        except HorizonExhausted:
            # arguments past the level horizon: w_{T^x} is huge there
            return math.inf
        return max(0.0, float(np.max(ee + om)))

    def fit(rr, ee):
        # smallest K with log C <= 1; larger K only weakens the bound
        lo, hi = -30.0, 30.0
        if log_c(hi, rr, ee) > 1.0:
            return math.inf, math.inf
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if log_c(mid, rr, ee) <= 1.0:
                hi = mid
            else:
                lo = mid
        return hi, log_c(hi, rr, ee)

    (lk, lc), (lkh, lch) = fit(Rf, le), fit(Rf[::2], le[::2])
    return BoundFit("kernel-decay", {"C": math.exp(lc), "K": math.exp(lk)}, 0.0,
                    same_log_scale(lk, lkh), {"half_sample": {"K": math.exp(lkh)}, "level": x})


def check_integrability(tau: WeightFunction, ys=None) -> BoundFit:
    """int_0^1 -tau^iota(t y) dt >= -C (tau^iota(y) + 1): fit the least C."""
    ys = np.logspace(-3, 3, 25) if ys is None else np.asarray(ys, dtype=float)
    x, w = _gl(16)

    def lhs(y):
        # t in (0,1] in log t, panels of width 1 down to e^-400
        edges = np.linspace(-400.0, 0.0, 401)
        mid = 0.5 * (edges[1:] + edges[:-1])
        u = (mid[:, None] + 0.5 * x[None, :]).ravel()
        wt = np.tile(0.5 * w, mid.size)
        with np.errstate(over="ignore"):
            v = tau.eval(1.0 / (np.exp(u) * y))
        return float(np.sum(wt * v * np.exp(u)))

    ratios = np.array([lhs(y) / (float(tau.eval(1.0 / y)) + 1.0) for y in ys])
    c, ch = float(np.max(ratios)), float(np.max(ratios[::2]))
    ok = math.isfinite(c)
    return BoundFit("integrability", {"C": c}, 0.0, ok and same_scale(c, ch),
                    {"half_sample": ch, "ys": [float(ys[0]), float(ys[-1])]})


def check_poisson_tail(model: FlatFunctionModel) -> BoundFit:
    """int sigma(|t|)/(1+t^2) dt is finite: the quadrature converges under refinement."""
    vals = []
    for refine in (0, 1, 2):
        t, ws = _nodes(model, 0.0, 0.0, refine)
        vals.append(float(np.sum(ws / (t * t + 1.0))))
    change = abs(vals[-1] - vals[-2]) / abs(vals[-1])
    return BoundFit("poisson-tail", {"integral": 2.0 * vals[-1]}, 0.0,
                    math.isfinite(vals[-1]) and change < 1e-8,
                    {"refinements": vals, "rel_change": change})


def check_holomorphy(model: FlatFunctionModel, n: int = 20, seed: int = 0) -> BoundFit:
    """Cauchy-Riemann residual of log F on random stencils (relative)."""
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(-3, 3, n))
    th = rng.uniform(-1.2, 1.2, n)
    w = r * np.exp(1j * th)
    eps = 1e-4 * r
    fx = (log_F(model, w + eps) - log_F(model, w - eps)) / (2 * eps)
    fy = (log_F(model, w + 1j * eps) - log_F(model, w - 1j * eps)) / (2 * eps)
    # holomorphic: df/dy = i df/dx
    resid = np.abs(fy - 1j * fx) / np.maximum(np.abs(fx), 1e-300)
    worst = float(np.max(resid))
    return BoundFit("holomorphy", {"max_residual": worst}, 1e-6 - worst, True,
                    {"points": n}, exact=True)


def check_derivative_growth(model: FlatFunctionModel, orders=range(7), radii=None,
                            shrink: float = 0.5) -> BoundFit:
    """|G^(p)(xi)| <= C k^p p! T_p^{2/a} on the subsector |theta| <= shrink*gamma*pi/2.

    Derivatives come from the Cauchy integral over a circle around xi whose
    radius keeps it inside S_delta.
    """
    radii = np.logspace(-2, 1, 12) if radii is None else radii
    thetas = np.linspace(-shrink * model.gamma * math.pi / 2, shrink * model.gamma * math.pi / 2, 3)
    orders = list(orders)
    x = 2.0 / model.a
    mat = WeightMatrix(model.tau, grid=(x,), P=max(orders) + 1)
    lT = mat.level(x, max(orders)).log_terms
    n = 64
    phi = 2 * math.pi * np.arange(n) / n
    best = np.full(len(orders), -math.inf)
    for th in thetas:
        room = model.delta * math.pi / 2 - abs(th)
        for r0 in radii:
            z0 = r0 * np.exp(1j * th)
            rho = 0.5 * r0 * math.sin(min(room, math.pi / 2))
            z = z0 + rho * np.exp(1j * phi)
            g = np.exp(log_G(model, np.abs(z), np.angle(z)))
            for i, p in enumerate(orders):
                d = math.factorial(p) * np.mean(g * np.exp(-1j * p * phi)) / rho ** p
                val = math.log(max(abs(d), 1e-300)) - math.lgamma(p + 1) - lT[p]
                best[i] = max(best[i], val)
    # minimal k with C = exp(best[0]), then C refit
    k = max([(best[i] - best[0]) / p for i, p in enumerate(orders) if p > 0] + [0.0])
    logC = float(np.max(best - k * np.array(orders)))
    half = [(best[i] - best[0]) / p for i, p in enumerate(orders) if 0 < p <= max(orders) // 2]
    kh = max(half + [0.0])
    return BoundFit("derivative-growth", {"C": math.exp(logC), "k": math.exp(k)}, 0.0,
                    abs(k - kh) < math.log(2.0) or k <= kh + math.log(2.0),
                    {"level": x, "orders": orders})
