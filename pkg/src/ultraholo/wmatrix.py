"""Weight matrices W^x_p = exp((1/x) phi*_w(x p)) built from a weight function."""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import weightseq as ws
from .bounds import BoundFit, same_log_scale
from .conjugate import phi_star
from .errors import HorizonExhausted, Omega1Fails
from .weightfn import FromSequence, WeightFunction, diagnostics, omega1_constant

DEFAULT_GRID = tuple(2.0 ** k for k in range(-3, 6))
DEFAULT_HORIZON = 200
MG_SLACK = 1e-9


def materialize(omega: WeightFunction, x: float, P: int = DEFAULT_HORIZON) -> ws.WeightSequence:
    logs = np.array([phi_star(omega, x * p) / x for p in range(P + 1)])
    return ws.WeightSequence(logs, label=f"W^{x:g}")


class WeightMatrix:
    """Levels x -> W^x, materialized lazily and cached per level.

    ``factorial_power`` k multiplies every level by (p!)^k, so the hat
    operation is k -> k + 1 on the same cache.
    """

    def __init__(self, source: WeightFunction, grid=DEFAULT_GRID, P: int = DEFAULT_HORIZON,
                 factorial_power: int = 0, _shared=None):
        self.source = source
        self.grid = tuple(float(x) for x in grid)
        self.P = int(P)
        self.factorial_power = factorial_power
        self._shared = _shared if _shared is not None else {"cache": {}, "lock": threading.Lock()}

    def _base_level(self, x, P):
        cache, lock = self._shared["cache"], self._shared["lock"]
        with lock:
            have = cache.get(x)
        if have is not None and have.horizon >= P:
            return have.truncated(P)
        start = 0 if have is None else have.horizon + 1
        new = np.array([phi_star(self.source, x * p) / x for p in range(start, P + 1)])
        logs = new if have is None else np.concatenate([have.log_terms, new])
        seq = ws.WeightSequence(logs, label=f"W^{x:g}")
        with lock:
            cur = cache.get(x)
            if cur is None or cur.horizon < seq.horizon:
                cache[x] = seq
        return seq

    def level(self, x: float, P: int | None = None) -> ws.WeightSequence:
        P = self.P if P is None else P
        base = self._base_level(float(x), P)
        if self.factorial_power == 0:
            return base
        logs = base.log_terms + self.factorial_power * gammaln(np.arange(P + 1) + 1.0)
        hat = "^" * self.factorial_power
        return ws.WeightSequence(logs, label=f"W{hat}^{x:g}")

    __getitem__ = level

    def assoc(self, x: float, t, max_horizon: int = 12800):
        """w_{W^x}(t), extending the level horizon when the argmax runs past it."""
        P = self.P
        while True:
            try:
                return FromSequence(self.level(x, P)).eval(t)
            except HorizonExhausted:
                if P >= max_horizon:
                    raise
                P *= 2

    def h(self, x: float, t):
        """h_{W^x}(t) = exp(-w_{W^x}(1/t))."""
        t = np.asarray(t, dtype=float)
        return np.exp(-self.assoc(x, 1.0 / t))

    def derived(self, factorial_power: int) -> "WeightMatrix":
        return WeightMatrix(self.source, self.grid, self.P, factorial_power, self._shared)

    def to_dict(self, P: int | None = None) -> dict:
        return {
            "source": self.source.to_dict(),
            "factorial_power": self.factorial_power,
            "grid": list(self.grid),
            "levels": {repr(x): [float(v) for v in self.level(x, P).log_terms] for x in self.grid},
        }

    def to_json(self, P: int | None = None) -> str:
        return json.dumps(self.to_dict(P))


def hat(matrix: WeightMatrix) -> WeightMatrix:
    """Levels p! W^x_p."""
    return matrix.derived(matrix.factorial_power + 1)


def unhat(matrix: WeightMatrix) -> WeightMatrix:
    return matrix.derived(matrix.factorial_power - 1)


# ---------------------------------------------------------------------------
# matrix-level inequalities

def check_mg_across_levels(matrix: WeightMatrix, l: float, j_max: int = 60) -> BoundFit:
    """W^l_{j+k} <= W^{2l}_j W^{2l}_k for all j + k <= j_max."""
    a = matrix.level(l, j_max).log_terms
    b = matrix.level(2 * l, j_max).log_terms
    worst = -math.inf
    where = (0, 0)
    count = 0
    for n in range(j_max + 1):
        j = np.arange(n + 1)
        excess = a[n] - b[j] - b[n - j]
        i = int(np.argmax(excess))
        count += int(np.sum(excess > MG_SLACK))
        if excess[i] > worst:
            worst, where = float(excess[i]), (int(j[i]), int(n - j[i]))
    return BoundFit(
        "mg-across-levels",
        {"max_log_excess": worst, "violations": count},
        worst_margin=-worst,
        stable=True,
        details={"l": l, "j_max": j_max, "argmax": where},
        exact=True,
        tolerance=MG_SLACK,
    )


def absorption_level(L: float, h: float) -> tuple[int, float]:
    """(a, A) with a the least integer such that e^a >= h and A = (L(L+1))^a."""
    a = max(0, math.ceil(math.log(h) - 1e-12)) if h > 1 else 0
    return a, (L * (L + 1)) ** a


def _absorption_log_d(matrix, h, l, A, P):
    wl = matrix.level(l, P).log_terms
    wa = matrix.level(A * l, P).log_terms
    j = np.arange(P + 1)
    return max(0.0, float(np.max(j * math.log(h) + wl - wa)))


def check_absorption(matrix: WeightMatrix, h: float, l: float, P: int | None = None) -> BoundFit:
    """Fit the least D with h^j W^l_j <= D W^{Al}_j, A from the (w1) recipe."""
    P = matrix.P if P is None else P
    diag = diagnostics(matrix.source)
    if not diag["omega1"]:
        raise Omega1Fails("source weight fails (omega_1) on the sampled grid")
    L = omega1_constant(matrix.source)
    a, A = absorption_level(L, h)
    ld_half = _absorption_log_d(matrix, h, l, A, P // 2)
    ld = _absorption_log_d(matrix, h, l, A, P)
    ld_double = _absorption_log_d(matrix, h, l, A, 2 * P)
    stable = same_log_scale(ld, ld_double) and same_log_scale(ld_half, ld)
    return BoundFit(
        "absorption",
        {"D": math.exp(ld_double), "A": A, "L": L, "a": a},
        worst_margin=0.0,
        stable=stable,
        details={"log_D": [ld_half, ld, ld_double], "horizons": [P // 2, P, 2 * P], "h": h, "l": l},
    )


# ---------------------------------------------------------------------------
# matrix equivalence

@dataclass
class MatrixRelation:
    verdict: str
    forward: dict = field(default_factory=dict)
    backward: dict = field(default_factory=dict)
    exhausted_forward: list = field(default_factory=list)
    exhausted_backward: list = field(default_factory=list)


def _pair(A, B, P):
    pairs, exhausted = {}, []
    for x in A.grid:
        ax = A.level(x, P)
        for y in sorted(B.grid):
            rel = ws.relation(ax, B.level(y, P))
            if ws.PRECSIM in rel.forward:
                pairs[x] = {"y": y, "root_sup": rel.margins["forward"]["root_sup"]}
                break
        else:
            exhausted.append(x)
    return pairs, exhausted


def matrix_equivalence(A: WeightMatrix, B: WeightMatrix, P: int | None = None) -> MatrixRelation:
    """Pair each level of A with the least level of B dominating it (and back)."""
    P = min(A.P, B.P) if P is None else P
    fwd, ex_f = _pair(A, B, P)
    bwd, ex_b = _pair(B, A, P)
    if not ex_f and not ex_b:
        verdict = "{≈}"
    elif not ex_f:
        verdict = "{≾}"
    elif not ex_b:
        verdict = "{≿}"
    else:
        verdict = "grid-exhausted"
    return MatrixRelation(verdict, fwd, bwd, ex_f, ex_b)


def is_constant(matrix: WeightMatrix, P: int | None = None) -> bool:
    """All grid levels pairwise equivalent."""
    P = matrix.P if P is None else P
    levels = [matrix.level(x, P) for x in matrix.grid]
    return all(ws.relation(levels[i], levels[j]).verdict in (ws.APPROX, ws.SIMEQ)
               for i in range(len(levels)) for j in range(i + 1, len(levels)))
