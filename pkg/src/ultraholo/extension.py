"""Truncated Laplace extension: a right inverse of the Borel map.

For a target sequence lambda in the class of level x and norm parameter h,

    g(u) = sum_p b_p u^p,      b_p = lambda_p / (p! m_a(p)),  a = 1/(2x),
    f(z) = int_0^R0 e_a(u/z) g(u) du / u,   R0 = K2_hat / (4h).

Along a ray z = r e^{i theta} put u = R0 e^{k_z - k} with k_z = log(r/R0).
Then

    f(z) = (1/z) sum_q b_q R0^(q+1) I_q(z),
    I_q(z) = int_{k_z}^inf G_a(e^{k + i theta}) e^{-(q+1)(k - k_z)} dk,

and the full-line integral equals e^{i(q+1)theta} m_a(q) e^{(q+1)k_z}
(rotation of the moment integral inside the sector).  Two routes follow:

* direct: evaluate I_q as written;
* moment-split: I_q = rotated moment - J_q, where J_q runs over (-inf, k_z].
  The rotated moments reproduce the Taylor terms lambda_q z^q / q! exactly,
  so the remainder R_N(z) = f(z) - sum_{q<N} lambda_q z^q / q! becomes
  sum_{q>=N} lambda_q z^q / q! - (1/z) sum_q b_q R0^(q+1) J_q(z)
  with no cancellation left for small |z|.

Both integrals use shared Gauss-Legendre panels per ray, with per-point
partial panels at k_z.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from numpy.polynomial.legendre import leggauss

from .bounds import BoundFit, same_scale
from .errors import (
    ClassViolation,
    ExtrapolationDiverges,
    OutsideSector,
    PrecisionExhausted,
    TailTooLarge,
    UnstableFit,
)
from .flatkernel import FlatFunctionModel, build_model, log_G, log_moments, verify_flat_sandwich
from .weightfn import WeightFunction, parse_spec
from .wmatrix import WeightMatrix

P_MAX = 24
N_MAX = 8
K2_POLICY = 0.5
PANEL = 0.25
ORDER = 8
UPPER_REACH = 45.0
NEGLIGIBLE = -80.0
COND_LIMIT = 1e13
DEFAULT_BITS = 128


# ---------------------------------------------------------------------------
# target sequences

def class_log_envelope(tau: WeightFunction, x: float, h: float, p_max: int) -> np.ndarray:
    """log(h^p p! T^x_p) for p = 0..p_max."""
    lt = WeightMatrix(tau, grid=(x,), P=p_max).level(x, p_max).log_terms
    p = np.arange(p_max + 1)
    return p * math.log(h) + np.array([math.lgamma(k + 1) for k in p]) + lt


@dataclass
class TargetSequence:
    lam: np.ndarray
    x: float
    h: float
    tau: WeightFunction
    norm: float | None = None
    label: str = "custom"
    log_envelope: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=complex)
        self.log_envelope = class_log_envelope(self.tau, self.x, self.h, self.p_max)
        with np.errstate(divide="ignore"):
            ratios = np.log(np.abs(self.lam)) - self.log_envelope
        actual = float(np.exp(np.max(ratios)))
        if self.norm is None:
            self.norm = actual
        else:
            bad = np.nonzero(ratios > math.log(self.norm) + 1e-12)[0]
            if bad.size:
                raise ClassViolation(int(bad[0]))

    @property
    def p_max(self) -> int:
        return self.lam.size - 1

    def envelope(self, p: int) -> float:
        return float(np.exp(self.log_envelope[p]))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "x": self.x,
            "h": self.h,
            "norm": self.norm,
            "re": self.lam.real.tolist(),
            "im": self.lam.imag.tolist(),
        }


def boundary_sequence(x: float, h: float, p_max: int, tau: WeightFunction) -> TargetSequence:
    """lambda_p = h^p p! T^x_p, the equality case of the norm."""
    env = class_log_envelope(tau, x, h, p_max)
    return TargetSequence(np.exp(env), x, h, tau, norm=1.0, label="boundary")


def delta_sequence(j: int, x: float, h: float, p_max: int, tau: WeightFunction,
                   scale: float | None = None) -> TargetSequence:
    """e_j scaled into the unit ball of the class (or by ``scale``)."""
    lam = np.zeros(p_max + 1)
    env = class_log_envelope(tau, x, h, p_max)
    lam[j] = math.exp(env[j]) if scale is None else scale
    return TargetSequence(lam, x, h, tau, label=f"delta{j}")


def random_sequence(x: float, h: float, p_max: int, tau: WeightFunction,
                    seed: int = 0) -> TargetSequence:
    rng = np.random.default_rng(seed)
    env = np.exp(class_log_envelope(tau, x, h, p_max))
    lam = env * rng.uniform(-1.0, 1.0, p_max + 1)
    return TargetSequence(lam, x, h, tau, norm=1.0, label=f"random{seed}")


def named_sequence(name: str, x: float, h: float, p_max: int, tau: WeightFunction,
                   seed: int = 0) -> TargetSequence:
    if name == "boundary":
        return boundary_sequence(x, h, p_max, tau)
    if name.startswith("delta"):
        return delta_sequence(int(name[5:] or 0), x, h, p_max, tau)
    if name == "random":
        return random_sequence(x, h, p_max, tau, seed)
    raise ValueError(f"unknown sequence family {name!r}")


# ---------------------------------------------------------------------------
# model

@dataclass(frozen=True, eq=False)
class ExtensionModel:
    target: TargetSequence
    flat: FlatFunctionModel
    R0: float
    borel_coeffs: np.ndarray
    K2_hat: float
    K2_fit: float
    C1: float
    log_moments: np.ndarray
    flat_fit: dict
    panel: float = PANEL
    order: int = ORDER

    @property
    def h(self) -> float:
        return self.target.h

    @property
    def x(self) -> float:
        return self.target.x

    @property
    def p_max(self) -> int:
        return self.target.p_max

    def to_dict(self) -> dict:
        return {
            "target": self.target.to_dict(),
            "flat": self.flat.to_dict(),
            "R0": self.R0,
            "K2_hat": self.K2_hat,
            "K2_fit": self.K2_fit,
            "K2_policy": K2_POLICY,
            "C1": self.C1,
            "borel_coeffs_re": self.borel_coeffs.real.tolist(),
            "borel_coeffs_im": self.borel_coeffs.imag.tolist(),
            "flat_fit": self.flat_fit,
        }


def build_extension(lam: TargetSequence, gamma: float, flat: FlatFunctionModel | None = None,
                    gamma_tau=None) -> ExtensionModel:
    tau, x, h = lam.tau, lam.x, lam.h
    a = 1.0 / (2.0 * x)
    if flat is None:
        flat = build_model(tau, gamma, a, gamma_tau=gamma_tau)
    elif abs(flat.a - a) > 1e-15 or flat.gamma != gamma:
        raise ValueError("flat model must use a = 1/(2x) and the same gamma")
    fit = verify_flat_sandwich(flat, with_lower_form=False)
    if not fit.stable:
        raise UnstableFit(f"flat sandwich fit unstable: {fit.constants}")
    K2 = fit.constants["K2"]
    K2_hat = K2_POLICY * K2
    R0 = K2_hat / (4.0 * h)
    p_max = lam.p_max
    lm = log_moments(flat, p_max)
    p = np.arange(p_max + 1)
    lfact = np.array([math.lgamma(k + 1) for k in p])
    b = lam.lam / np.exp(lfact + lm)
    # m_a(p) >= C1 (K2/2)^p T^x_p over the computed range
    lt = lam.log_envelope - p * math.log(h) - lfact
    C1 = float(np.exp(np.min(lm - p * math.log(K2 / 2) - lt)))
    with np.errstate(divide="ignore"):
        lhs = np.log(np.abs(b))
    rhs = math.log(lam.norm / C1) + p * math.log(2 * h / K2_hat)
    if np.any(lhs > rhs + 1e-9):
        raise ClassViolation(int(np.nonzero(lhs > rhs + 1e-9)[0][0]))
    return ExtensionModel(lam, flat, R0, b, K2_hat, K2, C1, lm, fit.summary())


def linear_combination(model: ExtensionModel, other: ExtensionModel, c: complex = 1.0) -> np.ndarray:
    """b-coefficients of lambda + c lambda' (linearity of the construction)."""
    return model.borel_coeffs + c * other.borel_coeffs


def eval_g(model: ExtensionModel, u, tol: float = 1e-5):
    """Partial sum of the Borel series with the geometric tail bound."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u > model.R0 * (1 + 1e-12)):
        raise OutsideSector("u must lie in [0, R0]")
    rho = 2 * model.h * np.max(u) / model.K2_hat if u.size else 0.0
    tail = rho ** (model.p_max + 1) / (1 - rho) if rho < 1 else math.inf
    if tail > tol:
        raise TailTooLarge(f"tail bound {tail:.3g} exceeds {tol:g}")
    return np.polynomial.polynomial.polyval(u, model.borel_coeffs)


# ---------------------------------------------------------------------------
# ray integrals

def _gl_panels(lo, hi, h, order):
    x, w = leggauss(order)
    n = max(1, int(math.ceil((hi - lo) / h - 1e-12)))
    edges = np.linspace(lo, hi, n + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    return ((mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel())


def _ray_integrals(model: ExtensionModel, theta: float, kz: np.ndarray):
    """Return (I, J) with shape (len(kz), p_max+1) for one ray.

    I[i, q] = int_{kz_i}^inf  G(e^{k+i theta}) e^{-(q+1)(k-kz_i)} dk
    J[i, q] = int_{-inf}^{kz_i} (same integrand)
    """
    flat, h, order = model.flat, model.panel, model.order
    q1 = np.arange(model.p_max + 1, dtype=float) + 1.0
    x, w = leggauss(order)
    k_hi = float(np.max(kz)) + UPPER_REACH
    # walk down from min(kz) until the integrand is negligible for every q
    k_lo = float(np.min(kz))
    step = 16 * h
    while True:
        probe = np.array([k_lo - step])
        lg = float(log_G(flat, np.exp(probe), np.array([theta])).real[0])
        if lg + q1[-1] * (float(np.min(kz)) - probe[0]) < NEGLIGIBLE and lg < -50:
            k_lo = float(probe[0])
            break
        k_lo = float(probe[0])
        if k_lo < float(np.min(kz)) - 2000:
            raise PrecisionExhausted("flat tail does not decay along the ray")
    base = math.floor(k_lo / h)
    edges = (np.arange(base, math.ceil(k_hi / h) + 1)) * h
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + 0.5 * h * x).ravel()
    weights = np.tile(0.5 * h * w, mid.size)
    panel_of = np.repeat(np.arange(mid.size), order)
    lgn = log_G(flat, np.exp(nodes), np.full(nodes.shape, theta))
    I = np.zeros((kz.size, q1.size), dtype=complex)
    J = np.zeros_like(I)
    for i, k in enumerate(kz):
        j = int(math.floor(k / h)) - base  # panel containing k
        below = panel_of < j
        above = panel_of > j
        pa, pw = _gl_panels(edges[j], k, h, order) if k > edges[j] else (np.empty(0), np.empty(0))
        pb, pbw = _gl_panels(k, edges[j + 1], h, order) if k < edges[j + 1] else (np.empty(0), np.empty(0))
        extra = np.concatenate([pa, pb])
        lge = log_G(flat, np.exp(extra), np.full(extra.shape, theta)) if extra.size else np.empty(0)
        for mask_nodes, mask_w, lg_vals, out in (
            (nodes[below], weights[below], lgn[below], J),
            (pa, pw, lge[: pa.size], J),
            (nodes[above], weights[above], lgn[above], I),
            (pb, pbw, lge[pa.size:], I),
        ):
            if mask_nodes.size == 0:
                continue
            e = lg_vals[None, :] - q1[:, None] * (mask_nodes[None, :] - k)
            out[i] += (mask_w[None, :] * np.exp(e)).sum(axis=1)
    return I, J


def _polar(zeta):
    from .flatkernel import _as_polar

    r, th, scalar = _as_polar(zeta)
    return r, th, scalar


def _taylor_terms(model: ExtensionModel, r: float, th: float, bits: int | None):
    """lambda_q z^q / q! for q = 0..p_max, as mpc when bits is given."""
    lam = model.target.lam
    if bits:
        with mpmath.workprec(bits):
            z = mpmath.mpf(r) * mpmath.expj(th)
            return [mpmath.mpc(complex(lam[q])) * z ** q / mpmath.factorial(q)
                    for q in range(lam.size)]
    z = r * np.exp(1j * th)
    return [complex(lam[q]) * z ** q / math.factorial(q) for q in range(lam.size)]


@dataclass
class _Sweep:
    r: np.ndarray
    theta: np.ndarray
    direct: np.ndarray  # (n, p_max+1) per-q contributions to f
    split: np.ndarray  # (n, p_max+1) per-q contributions of the flat tail


def _sweep(model: ExtensionModel, r, theta) -> _Sweep:
    r = np.asarray(r, dtype=float).ravel()
    theta = np.broadcast_to(np.asarray(theta, dtype=float), r.shape).ravel()
    if np.any(np.abs(theta) >= model.flat.gamma * math.pi / 2 + 1e-12):
        raise OutsideSector("|theta| must stay below gamma*pi/2")
    b = model.borel_coeffs
    q1 = np.arange(model.p_max + 1) + 1.0
    direct = np.zeros((r.size, b.size), dtype=complex)
    split = np.zeros_like(direct)
    for th in np.unique(theta):
        sel = np.nonzero(theta == th)[0]
        kz = np.log(r[sel] / model.R0)
        I, J = _ray_integrals(model, float(th), kz)
        z = r[sel] * np.exp(1j * th)
        scale = b[None, :] * np.exp(q1[None, :] * math.log(model.R0)) / z[:, None]
        direct[sel] = scale * I
        split[sel] = scale * J
    return _Sweep(r, theta, direct, split)


def _remainders(model: ExtensionModel, sw: _Sweep, N: int, bits: int | None):
    """R_N at every sweep point, picking the better-conditioned route.

    Returns (values, route names, condition numbers)."""
    vals, routes, conds = [], [], []
    for i in range(sw.r.size):
        tay = _taylor_terms(model, sw.r[i], sw.theta[i], bits)
        if bits:
            with mpmath.workprec(bits):
                d_f = mpmath.fsum(mpmath.mpc(complex(c)) for c in sw.direct[i])
                head = mpmath.fsum(tay[:N]) if N else mpmath.mpc(0)
                tail = mpmath.fsum(tay[N:])
                e = mpmath.fsum(mpmath.mpc(complex(c)) for c in sw.split[i])
                r_direct, r_split = d_f - head, tail - e
                a_direct = max(abs(d_f), abs(head))
                a_split = max(abs(tail), abs(e))
                r_direct, r_split = complex(r_direct), complex(r_split)
                a_direct, a_split = float(a_direct), float(a_split)
        else:
            d_f = complex(np.sum(sw.direct[i]))
            head = complex(sum(tay[:N])) if N else 0j
            tail = complex(sum(tay[N:]))
            e = complex(np.sum(sw.split[i]))
            r_direct, r_split = d_f - head, tail - e
            a_direct, a_split = max(abs(d_f), abs(head)), max(abs(tail), abs(e))
        c_direct = a_direct / max(abs(r_direct), 1e-300)
        c_split = a_split / max(abs(r_split), 1e-300)
        if c_split <= c_direct:
            vals.append(r_split), routes.append("moment-split"), conds.append(c_split)
        else:
            vals.append(r_direct), routes.append("direct"), conds.append(c_direct)
    return np.array(vals), routes, np.array(conds)


def eval_f(model: ExtensionModel, zeta, route: str = "auto", precision: int | None = None):
    """f_lambda at sector points.

    ``route`` is "direct", "moment-split" or "auto" (the better-conditioned
    of the two for each point).
    """
    r, th, scalar = _polar(zeta)
    sw = _sweep(model, r, th)
    if route == "direct":
        out = sw.direct.sum(axis=1)
    elif route == "moment-split":
        out = np.array([complex(sum(_taylor_terms(model, sw.r[i], sw.theta[i], precision)))
                        for i in range(sw.r.size)]) - sw.split.sum(axis=1)
    elif route == "auto":
        out, _, _ = _remainders(model, sw, 0, precision)
    else:
        raise ValueError(f"unknown route {route!r}")
    return complex(out[0]) if scalar else out


def remainder(model: ExtensionModel, zeta, N: int, precision: int | None = None):
    """R_N(z) = f(z) - sum_{q<N} lambda_q z^q / q!."""
    r, th, scalar = _polar(zeta)
    vals, _, conds = _remainders(model, _sweep(model, r, th), N, precision)
    if np.any(conds > COND_LIMIT):
        raise PrecisionExhausted("remainder lost to cancellation on both routes")
    return complex(vals[0]) if scalar else vals


# ---------------------------------------------------------------------------
# verification

def default_rays(gamma: float, n: int = 5) -> np.ndarray:
    # stay strictly inside the open sector
    return np.linspace(-1.0, 1.0, n) * gamma * math.pi / 2 * (1 - 1e-9)


def remainder_check(model: ExtensionModel, N_max: int = N_MAX, rays=None, radii=None,
                    precision: int | None = DEFAULT_BITS) -> BoundFit:
    """Fit |R_N(z)| <= C k^N T^{8x}_N |z|^N jointly over N <= N_max."""
    if N_max > model.p_max:
        raise ValueError("N_max exceeds the target horizon")
    rays = default_rays(model.flat.gamma) if rays is None else np.asarray(rays, dtype=float)
    radii = np.logspace(-3.0, 0.0, 40) if radii is None else np.asarray(radii, dtype=float)
    TH, R = np.meshgrid(rays, radii, indexing="ij")
    sw = _sweep(model, R.ravel(), TH.ravel())
    level = 8.0 * model.x
    lT = WeightMatrix(model.flat.tau, grid=(level,), P=N_max).level(level, N_max).log_terms
    logc = np.empty((N_max + 1, 2))
    worst_cond = 0.0
    routes_used = set()
    rows = []
    for N in range(N_max + 1):
        vals, routes, conds = _remainders(model, sw, N, precision)
        if np.any(conds > COND_LIMIT):
            raise PrecisionExhausted(f"remainder of order {N} lost to cancellation")
        worst_cond = max(worst_cond, float(np.max(conds)))
        routes_used.update(routes)
        with np.errstate(divide="ignore"):
            ratio = np.log(np.abs(vals)) - lT[N] - N * np.log(sw.r)
        logc[N, 0] = float(np.max(ratio))
        half = ratio.reshape(R.shape)[:, ::2]
        logc[N, 1] = float(np.max(half))
        rows.append(vals)
    fits = []
    for col in range(2):
        c0 = logc[0, col]
        lk = max([(logc[N, col] - c0) / N for N in range(1, N_max + 1)] + [-math.inf])
        fits.append((c0, lk))
    (lc, lk), (lch, lkh) = fits
    stable = same_scale(math.exp(lc), math.exp(lch)) and same_scale(math.exp(lk), math.exp(lkh))
    return BoundFit(
        "remainder",
        {"C": math.exp(lc), "k": math.exp(lk)},
        worst_margin=0.0,
        stable=stable,
        details={
            "half_sample": {"C": math.exp(lch), "k": math.exp(lkh)},
            "log_c_N": logc[:, 0].tolist(),
            "N_max": N_max,
            "level": level,
            "h": model.h,
            "routes": sorted(routes_used),
            "worst_condition": worst_cond,
            "samples": int(R.size),
        },
    )


def _tolerances(model: ExtensionModel, p_max_check: int) -> np.ndarray:
    lam = np.abs(model.target.lam[: p_max_check + 1])
    env = np.exp(model.target.log_envelope[: p_max_check + 1]) * model.target.norm
    return np.maximum(1e-3 * lam, 1e-3 * env)


def choose_r0(model: ExtensionModel, p_max_check: int = 4, theta: float = 0.0,
              max_halvings: int = 60) -> float:
    """Largest R0 2^-j (j >= 1) where the flat tail term is negligible.

    At z the term p! |E(z)| / |z|^p must sit three orders below the
    tolerance of every checked order.
    """
    tol = _tolerances(model, p_max_check)
    fact = np.array([math.factorial(p) for p in range(p_max_check + 1)], dtype=float)
    for j in range(1, max_halvings + 1):
        r = model.R0 * 2.0 ** -j
        sw = _sweep(model, np.array([r]), np.array([theta]))
        e = abs(complex(np.sum(sw.split[0])))
        if np.all(fact * e / r ** np.arange(p_max_check + 1) < 1e-3 * tol):
            return r
    raise ExtrapolationDiverges("flat tail never becomes negligible along the ray")


def borel_check(model: ExtensionModel, p_max_check: int = 4, r0: float | None = None,
                n_radii: int = 11, theta: float = 0.0, precision: int | None = DEFAULT_BITS) -> dict:
    """Recover lambda_p = lim p! R_p(z) / z^p along a ray by affine extrapolation.

    The remainders come from the better-conditioned route at each radius.
    The report also carries the agreement of the two routes for f at r0 and
    the direct-route estimates of lambda_0, lambda_1, which need no moment
    identity at all.
    """
    if p_max_check > min(6, model.p_max):
        raise ValueError("p_max_check must be at most min(6, p_max)")
    r0 = choose_r0(model, p_max_check, theta) if r0 is None else r0
    radii = r0 * 2.0 ** -np.arange(n_radii)
    sw = _sweep(model, radii, np.full(radii.shape, theta))
    z = radii * np.exp(1j * theta)
    tol = _tolerances(model, p_max_check)
    A = np.vstack([np.ones_like(radii), radii]).T

    def extrapolate(vals, p, k=n_radii):
        est = math.factorial(p) * vals[:k] / z[:k] ** p
        if not np.all(np.isfinite(est)):
            raise ExtrapolationDiverges(f"order {p}: non-finite estimates")
        coef, *_ = np.linalg.lstsq(A[:k], est, rcond=None)
        # the increments must shrink as the radius halves
        inc = np.abs(np.diff(est))
        if inc[0] > 0 and inc[-1] > 0.75 * inc[0] and inc[-1] > 1e-12 * max(abs(coef[0]), 1e-300):
            raise ExtrapolationDiverges(f"order {p}: estimates do not settle")
        return complex(coef[0])

    entries, ok_all = [], True
    for p in range(p_max_check + 1):
        vals, _, conds = _remainders(model, sw, p, precision)
        if np.any(conds > COND_LIMIT):
            raise PrecisionExhausted(f"order {p}: cancellation on both routes")
        lam_hat = extrapolate(vals, p)
        lam_p = complex(model.target.lam[p])
        err = abs(lam_hat - lam_p)
        ok = err <= tol[p]
        ok_all &= ok
        entries.append({
            "p": p,
            "lambda": [lam_p.real, lam_p.imag],
            "estimate": [lam_hat.real, lam_hat.imag],
            "error": err,
            "tolerance": float(tol[p]),
            "passed": bool(ok),
        })

    # independent direct-route evidence
    f_direct = sw.direct.sum(axis=1)
    f_split = np.array([complex(sum(_taylor_terms(model, r, theta, None))) for r in radii]) \
        - sw.split.sum(axis=1)
    agreement = float(abs(f_direct[0] - f_split[0]) / max(abs(f_direct[0]), 1e-300))
    direct = []
    lam0 = complex(model.target.lam[0])
    for p in range(min(1, p_max_check) + 1):
        head = lam0 if p == 1 else 0.0
        # double precision: only the larger radii keep the cancellation mild
        try:
            est = extrapolate(f_direct - head, p, k=max(3, n_radii // 2))
        except ExtrapolationDiverges:
            direct.append({"p": p, "estimate": None, "error": None})
            continue
        direct.append({"p": p, "estimate": [est.real, est.imag],
                       "error": abs(est - complex(model.target.lam[p]))})
    routes_ok = agreement < 1e-8
    return {
        "check": "borel-rightinverse",
        "target": model.target.label,
        "theta": theta,
        "r0": r0,
        "radii": radii.tolist(),
        "precision_bits": precision,
        "entries": entries,
        "route_agreement_at_r0": agreement,
        "direct_route": direct,
        "passed": bool(ok_all and routes_ok),
    }


# ---------------------------------------------------------------------------
# job specs

def load_job(spec: dict | str) -> dict:
    job = json.loads(spec) if isinstance(spec, str) else dict(spec)
    for key in ("weight", "x", "h", "lambda", "gamma"):
        if key not in job:
            raise ValueError(f"job spec is missing {key!r}")
    job.setdefault("precision", DEFAULT_BITS)
    job.setdefault("p_max", P_MAX)
    return job


def run_job(job: dict, horizon: int | None = None):
    """Build the model of an extension job; returns (model, tau)."""
    job = load_job(job)
    tau = parse_spec(job["weight"], horizon)
    src = job["lambda"]
    x, h, p_max = float(job["x"]), float(job["h"]), int(job["p_max"])
    if isinstance(src, str):
        target = named_sequence(src, x, h, p_max, tau)
    elif "family" in src:
        target = named_sequence(src["family"], x, h, p_max, tau, int(src.get("seed", 0)))
    elif "file" in src:
        with open(src["file"]) as fh:
            data = json.load(fh)
        lam = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data.get("im", [0.0] * len(data["re"])))
        target = TargetSequence(lam, x, h, tau, norm=data.get("norm"), label=data.get("label", "file"))
    else:
        raise ValueError("lambda source must name a family or a file")
    return build_extension(target, float(job["gamma"])), tau
