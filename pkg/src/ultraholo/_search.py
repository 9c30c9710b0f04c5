"""Bracketed scalar maximization over x > 0 in the log-abscissa y = log x."""

import math

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import UnboundedObjective

Y_LIMIT = 700.0  # exp(700) is still a finite float


def maximize_log(f, lo=1e-8, hi=1e8, n=64, xtol=1e-11, max_expand=8):
    """Return (sup f, argmax x, at_lower_edge).

    ``f`` must accept numpy arrays.  A 64-point grid over [lo, hi] picks the
    best start, the bracket doubles outward while the best point sits on an
    edge, and Brent's method (golden section with parabolic steps) polishes
    the interior maximum.  When the supremum escapes through the upper edge
    the objective is unbounded; an escape through the lower edge is returned
    as the edge value, which callers read as the limit x -> 0.
    """
    ylo, yhi = math.log(lo), math.log(hi)
    for _ in range(max_expand + 1):
        y = np.linspace(ylo, yhi, n)
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.asarray(f(np.exp(y)), dtype=float)
        v = np.where(np.isnan(v), -np.inf, v)
        i = int(np.argmax(v))
        width = yhi - ylo
        if i == n - 1 and v[-1] > v[-2]:
            if yhi >= Y_LIMIT:
                raise UnboundedObjective("supremum escapes to infinity")
            yhi = min(Y_LIMIT, yhi + width)
            continue
        if i == 0 and v[0] > v[1]:
            if ylo <= -Y_LIMIT:
                return float(v[0]), float(np.exp(y[0])), True
            ylo = max(-Y_LIMIT, ylo - width)
            continue
        break
    else:
        if i == n - 1:
            raise UnboundedObjective("supremum escapes to infinity")
        return float(v[0]), float(np.exp(y[0])), True

    if i == 0 or i == n - 1 or not (v[i] > v[i - 1] and v[i] > v[i + 1]):
        # plateau: the grid value already attains the supremum
        return float(v[i]), float(np.exp(y[i])), False

    def neg(yy):
        with np.errstate(over="ignore", invalid="ignore"):
            val = float(np.asarray(f(np.exp(np.array([yy]))), dtype=float)[0])
        return math.inf if math.isnan(val) else -val

    res = minimize_scalar(neg, bracket=(y[i - 1], y[i], y[i + 1]), method="brent",
                          options={"xtol": xtol})
    best = -float(res.fun)
    if best < v[i]:
        return float(v[i]), float(np.exp(y[i])), False
    return best, float(math.exp(res.x)), False
