"""Exponent and weight arithmetic for quasilinear well-posedness.

Everything in this module is closed-form bookkeeping over the
parameters (n, p, q, c, alpha): the maximal-regularity window for cone
Laplacians, the tip embedding needed for coefficients a(t^c u), the
interpolation-space parameters, the critical nonlinearity exponent
alpha* below which u -> |u|^alpha is Lipschitz between the relevant
weighted spaces, and an exhaustive witness search tying the three
conditions together.

Infinite thresholds are genuine values here (not sentinels) and are
rendered as the string "inf" in JSON reports.  Strict and non-strict
variants of the same inequality are kept distinct on purpose:
``mr_condition`` is the strict form ``2 max(p, p') < n + 1`` used for
witnesses, while ``unique_closure_pq`` is the non-strict form
``2 max(p, p') <= n + 1`` that characterizes the collapse of the
extension lattice for the Laplacian at its natural weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

INF = float("inf")


def dual_exponent(p: float) -> float:
    if p <= 1.0:
        raise DomainError(f"exponent {p} has no dual in (1, inf)")
    return p / (p - 1.0)


def mr_condition(n: int, p: float) -> bool:
    """Maximal-regularity window for the cone Laplacian: 2 max(p, p') - 1 < n.

    Equivalent to the strict bound 2 max(p, p') < n + 1.
    """
    return 2.0 * max(p, dual_exponent(p)) - 1.0 < n


def unique_closure_pq(n: int, p: float) -> bool:
    """Non-strict bound 2 max(p, p') <= n + 1 (unique closure at weight gamma_p).

    Equality is detected at 1e-12, matching the strip-edge tolerance of
    the extension analysis, so both routes agree on boundary exponents
    whose duals are not exactly representable.
    """
    return 2.0 * max(p, dual_exponent(p)) <= n + 1.0 + 1e-12


def embed_tip(n: int, c: float, p: float, q: float) -> bool:
    """Initial-value embedding into t^(-c) C_b.

    Requires p >= (n+1)/(2+c), a positive margin (2+c)p - (n+1) > 0, and
    q > max((n+3)/2, 2p / ((2+c)p - (n+1))).
    """
    margin = (2.0 + c) * p - (n + 1.0)
    if p < (n + 1.0) / (2.0 + c):
        return False
    if margin <= 0.0:
        return False
    return q > max((n + 3.0) / 2.0, 2.0 * p / margin)


def alpha_star(n: int, p: float, q: float) -> float:
    """Critical exponent for u -> |u|^alpha between the parabolic spaces.

    With q' = q/(q-1):

    * if 2p/q' <  n+1:  (n+1)/(n+1-2p/q') when q >= (n+3)/2, else the
      minimum of that value and (n+1)/(n+1-2q/q') (the second entry is
      infinite when 2q/q' >= n+1);
    * if 2p/q' >= n+1:  infinity when q >= (n+3)/2, else
      (n+1)/(n+1-2q/q').
    """
    qp = dual_exponent(q)
    top = n + 1.0

    def ratio(x: float) -> float:
        return INF if top - x <= 0.0 else top / (top - x)

    xp = 2.0 * p / qp
    xq = 2.0 * q / qp
    if xp < top:
        if q >= (n + 3.0) / 2.0:
            return ratio(xp)
        return min(ratio(xp), ratio(xq))
    if q >= (n + 3.0) / 2.0:
        return INF
    return ratio(xq)


def lipschitz_alpha_bound(n: int, s: float, q: float, gamma: float,
                          delta: float) -> float:
    """Upper bound on alpha for Lipschitz continuity between two weighted spaces.

    For the map between smoothness-s weight-delta data and weight-gamma
    values (gamma < delta required):

    * sq <  n+1, delta <  (n+1)/2:  min((n+1-2 gamma)/(n+1-2 delta),
                                        (n+1)/(n+1-sq))
    * sq <  n+1, delta >= (n+1)/2:  (n+1)/(n+1-sq)
    * sq >= n+1, delta <  (n+1)/2:  (n+1-2 gamma)/(n+1-2 delta)
    * sq >= n+1, delta >= (n+1)/2:  infinity
    """
    if gamma >= delta:
        raise DomainError("the weight bound requires gamma < delta")
    if s <= 0:
        raise DomainError("smoothness must be positive")
    top = n + 1.0
    weight_ratio = (top - 2.0 * gamma) / (top - 2.0 * delta) \
        if delta < top / 2.0 else INF
    smooth_ratio = top / (top - s * q) if s * q < top else INF
    return min(weight_ratio, smooth_ratio)


def interpolation_params(s0: float, gamma0: float, s1: float, gamma1: float,
                         theta: float, q: float) -> tuple[float, float, bool]:
    """Convex interpolation parameters and the q > 2 smoothness-loss flag.

    Returns (s, gamma, s_loss) with s and gamma the theta-convex
    combinations.  Consumers must still subtract an arbitrarily small
    eps > 0 from gamma and, when s_loss is set, a delta > 0 from s; the
    flag is surfaced rather than silently absorbed because downstream
    comparisons are open.
    """
    if not 0.0 < theta < 1.0:
        raise DomainError("interpolation parameter must lie in (0, 1)")
    s = (1.0 - theta) * s0 + theta * s1
    gamma = (1.0 - theta) * gamma0 + theta * gamma1
    return (s, gamma, q > 2.0)


# ---------------------------------------------------------------------------
# witness search
# ---------------------------------------------------------------------------

def default_grid(n: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Rational scan grid: p in {1.05, 1.10, ...} below (n+1)/2, q in {2..200, 1e3, 1e4}."""
    ps = []
    i = 21  # p = 1.05
    while i * 0.05 <= (n + 1) / 2.0 - 0.05 + 1e-12:
        ps.append(i * 0.05)
        i += 1
    qs = [float(q) for q in range(2, 201)] + [1e3, 1e4]
    return tuple(ps), tuple(qs)


def quasilinear_witness(n: int, c: float, alpha: float,
                        grid: tuple = None) -> tuple[float, float] | None:
    """First (p, q) on the grid meeting all three quasilinear conditions.

    A witness must satisfy the strict maximal-regularity bound
    2 max(p, p') < n + 1, the tip embedding, and alpha < alpha*(n,p,q).
    The scan is exhaustive in lexicographic (p, q) order; None means the
    grid contains no witness.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if c <= 0:
        raise DomainError("c must be positive")
    if alpha < 1:
        raise DomainError("alpha must be >= 1")
    ps, qs = grid if grid is not None else default_grid(n)
    for p in ps:
        if not mr_condition(n, p):
            continue
        for q in qs:
            if not embed_tip(n, c, p, q):
                continue
            if alpha < alpha_star(n, p, q):
                return (p, q)
    return None


# ---------------------------------------------------------------------------
# query/report bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdmissibilityQuery:
    n: int
    c: float
    alpha: float
    p: float | None = None
    q: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if self.c <= 0:
            raise DomainError("c must be positive")
        if self.alpha < 1:
            raise DomainError("alpha must be >= 1")
        for name in ("p", "q"):
            v = getattr(self, name)
            if v is not None and (v <= 1.0 or not math.isfinite(v)):
                raise DomainError(f"{name} must lie in (1, inf), got {v}")


@dataclass(frozen=True)
class AdmissibilityReport:
    query: AdmissibilityQuery
    mr_ok: bool
    embed_ok: bool
    unique_closure_ok: bool
    alpha_star: float
    feasible: bool
    witness: tuple[float, float] | None

    def __post_init__(self):
        if self.feasible:
            if not (self.mr_ok and self.embed_ok and self.unique_closure_ok):
                raise DomainError("feasible reports require all predicates to hold")
            if not self.query.alpha < self.alpha_star:
                raise DomainError("feasible reports require alpha < alpha_star")

    def to_json_dict(self) -> dict:
        return {
            "query": {
                "n": self.query.n,
                "c": self.query.c,
                "p": self.query.p,
                "q": self.query.q,
                "alpha": self.query.alpha,
            },
            "mr": self.mr_ok,
            "embed": self.embed_ok,
            "unique_closure": self.unique_closure_ok,
            "alpha_star": self.alpha_star,
            "feasible": self.feasible,
            "witness": list(self.witness) if self.witness else None,
        }


def evaluate(query: AdmissibilityQuery, grid: tuple = None) -> AdmissibilityReport:
    """Evaluate the admissibility predicates at a query.

    With explicit (p, q) the predicates are checked there; without them
    the default grid is scanned and, when a witness exists, the
    predicates are reported at the witness.
    """
    if query.p is not None and query.q is not None:
        p, q = query.p, query.q
        mr = mr_condition(query.n, p)
        embed = embed_tip(query.n, query.c, p, q)
        astar = alpha_star(query.n, p, q)
        feasible = mr and embed and query.alpha < astar
        return AdmissibilityReport(
            query=query, mr_ok=mr, embed_ok=embed,
            unique_closure_ok=unique_closure_pq(query.n, p),
            alpha_star=astar, feasible=feasible,
            witness=(p, q) if feasible else None,
        )
    witness = quasilinear_witness(query.n, query.c, query.alpha, grid)
    if witness is None:
        return AdmissibilityReport(
            query=query, mr_ok=False, embed_ok=False,
            unique_closure_ok=False, alpha_star=INF, feasible=False,
            witness=None,
        )
    p, q = witness
    return AdmissibilityReport(
        query=query,
        mr_ok=mr_condition(query.n, p),
        embed_ok=embed_tip(query.n, query.c, p, q),
        unique_closure_ok=unique_closure_pq(query.n, p),
        alpha_star=alpha_star(query.n, p, q),
        feasible=True,
        witness=witness,
    )
