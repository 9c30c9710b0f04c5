"""Legendre-type conjugates of weight functions.

phi_star  : x -> sup_y (x y - w(e^y))         (Young conjugate of phi_w)
upper_star: s -> sup_{t >= 0} (w(t) - s t)
lower_star: t -> inf_{s > 0} (h(s) + t s)

All three are scalar optimizations in the log-abscissa (see _search).
"""

from __future__ import annotations

import math

import numpy as np

from ._search import maximize_log
from .errors import NegativeArgument, NoDecay, UnboundedObjective
from .weightfn import FromSequence, LowerStarOf, UpperStarOf, WeightFunction

INF = math.inf


def _call(h, x):
    return h.eval(x) if isinstance(h, WeightFunction) else h(x)


def _phi_star_sequence(omega: FromSequence, x: float) -> float:
    """For w = w_M with M log-convex, phi* interpolates log M_p linearly."""
    lc = omega._lc
    lo = int(math.floor(x))
    order = lc.gevrey_order
    if lo + 1 <= lc.horizon:
        a, b = lc.log_terms[lo], lc.log_terms[min(lo + 1, lc.horizon)]
    elif order is not None and order > 0:
        a, b = order * math.lgamma(lo + 1), order * math.lgamma(lo + 2)
    else:
        raise UnboundedObjective("phi_star needs indices beyond the sequence horizon")
    # normalized sequences have M_0 = 1, so phi*(0) = 0 is consistent
    return float(a + (x - lo) * (b - a))


def phi_star(omega: WeightFunction, x: float, method: str = "auto") -> float:
    """sup_y (x y - w(e^y)).

    ``method="search"`` forces the generic optimizer; ``"auto"`` uses the
    exact interpolation formula for associated functions of sequences.
    """
    if x < 0:
        raise NegativeArgument("phi_star needs x >= 0")
    if x == 0:
        return 0.0
    if method == "auto" and isinstance(omega, FromSequence):
        return _phi_star_sequence(omega, x)

    def obj(t):
        return x * np.log(t) - omega.eval(t)

    val, _, at_edge = maximize_log(obj)
    if at_edge:
        raise UnboundedObjective("phi_star objective has no interior maximum")
    # the point y = 0 (t = 1) is admissible and gives -w(1)
    return max(val, -float(omega.eval(1.0)))


def upper_star(omega: WeightFunction, s: float) -> float:
    """w*(s); returns +inf at s = 0."""
    if s < 0:
        raise NegativeArgument("upper_star needs s >= 0")
    if s == 0:
        return INF

    def obj(t):
        return omega.eval(t) - s * t

    val, _, _ = maximize_log(obj)
    return max(val, float(omega.eval(0.0)), 0.0)


def _limit_at_infinity(h):
    xs = [1e8, 1e16, 1e32, 1e64, 1e128]
    vals = [float(_call(h, x)) for x in xs]
    d = [abs(b - a) for a, b in zip(vals, vals[1:])]
    if d[-1] > 1e-6 * (1 + abs(vals[-1])) or (d[-2] > 0 and d[-1] > 0.5 * d[-2] and d[-1] > 1e-12):
        raise NoDecay("h has no finite limit at infinity")
    return vals[-1]


def lower_star(h, t: float) -> float:
    """inf_{s>0} (h(s) + t s) for a nonincreasing h (callable or weight)."""
    if t < 0:
        raise NegativeArgument("lower_star needs t >= 0")
    if t == 0:
        return _limit_at_infinity(h)

    def obj(s):
        return -(np.asarray(_call(h, s), dtype=float) + t * s)

    try:
        val, _, _ = maximize_log(obj)
    except UnboundedObjective as exc:
        raise NoDecay(str(exc)) from exc
    return -val


def upper_star_fn(omega: WeightFunction) -> WeightFunction:
    return UpperStarOf(omega)


def lower_star_fn(h: WeightFunction) -> WeightFunction:
    return LowerStarOf(h)


def least_concave_majorant(omega: WeightFunction) -> WeightFunction:
    """(w*)_star as an expression node."""
    return LowerStarOf(UpperStarOf(omega))
