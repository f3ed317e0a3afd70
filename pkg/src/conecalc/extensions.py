"""Closed extensions of Fuchs-type operators acting on weighted L_p spaces.

Considered as an unbounded operator on the weighted space with weight
``gamma``, a Fuchs-type operator has a minimal (closure) and a maximal
extension.  Their quotient is spanned by finitely many singular
functions ``t^(-p_j) log^l(t) e_k(x)`` attached to the poles ``p_j`` of
the inverted conormal symbol inside the strip

    (n+1)/2 - gamma - mu  <  Re z  <  (n+1)/2 - gamma .

For the diagonal class every datum here is exact: the poles are roots
of the per-mode conormal polynomials, the Laurent coefficients ``R_jk``
of ``sigma_M(z)^(-1)`` come from partial fractions, and the dimension
of the quotient is the rank of the block matrix ``G_A`` assembled from
the ``R_jk``.

All functions are pure; results are deterministic with poles sorted by
(Re, Im).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (DomainError, InconsistentInputError,
                     UnsupportedOperatorError)
from .fuchs import (FuchsOperator, conormal_invertible_on_line,
                    symbols_nonvanishing)

#: A pole on a strip edge counts as outside; equality is detected at this
#: absolute tolerance (pole locations are exact algebraic numbers here).
EDGE_TOL = 1e-12

#: Roots closer than this merge into one pole location / one multiple root.
MERGE_TOL = 1e-9

#: Relative floor below which a Laurent weight counts as structurally zero.
RANK_TOL = 1e-10


# ---------------------------------------------------------------------------
# pole data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConormalPole:
    """A non-bijectivity point of the conormal symbol.

    ``order`` is the highest Laurent index m_j, i.e. the pole of the
    inverted symbol has order ``order + 1``.  ``contributing`` lists
    (mode id, local root multiplicity) for every mode whose polynomial
    vanishes at the location.
    """

    location: complex
    order: int
    contributing: tuple[tuple[int, int], ...]

    def to_json_dict(self) -> dict:
        return {
            "re": self.location.real,
            "im": self.location.imag,
            "order": self.order,
            "modes": [list(pair) for pair in self.contributing],
        }


@dataclass(frozen=True)
class LaurentData:
    """Principal part of the inverted conormal symbol at one pole.

    ``coefficients[k]`` maps mode id -> weight of ``R_jk`` on that mode,
    the coefficient of ``(z - p_j)^(-k-1)``.  Only contributing modes
    carry nonzero weight, so each ``R_jk`` has finite rank.
    """

    pole: ConormalPole
    coefficients: tuple[dict, ...]

    def weight(self, k: int, mode: int) -> complex:
        return self.coefficients[k].get(mode, 0.0 + 0.0j)


@dataclass(frozen=True)
class SingularTerm:
    """Basis element t^exponent log^log_power(t) on one angular mode."""

    exponent: complex
    log_power: int
    mode: int

    def to_json_dict(self) -> dict:
        return {
            "exponent": {"re": self.exponent.real, "im": self.exponent.imag},
            "log_power": self.log_power,
            "mode": self.mode,
        }


@dataclass(frozen=True)
class ExtensionReport:
    """Summary of D(A_max)/D(A_min) for one weight and integrability."""

    gamma: float
    order: int
    p: float
    strip: tuple[float, float]
    poles: tuple[ConormalPole, ...]
    dim_e: int
    basis: tuple[SingularTerm, ...]

    def to_json_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "p": self.p,
            "strip": [self.strip[0], self.strip[1]],
            "poles": [pole.to_json_dict() for pole in self.poles],
            "dim_E": self.dim_e,
            "basis": [term.to_json_dict() for term in self.basis],
        }


@dataclass(frozen=True)
class MinDomainDescriptor:
    """Description of the closure domain.

    ``tag`` is EXACT when the domain is the full weighted Sobolev space
    with parameters (order, weight, p); EPSILON when only the family
    with weights ``weight - eps`` (eps > 0) is available.
    """

    tag: str
    smoothness: int
    weight: float
    p: float

    def to_json_dict(self) -> dict:
        return {"tag": self.tag, "smoothness": self.smoothness,
                "weight": self.weight, "p": self.p}


# ---------------------------------------------------------------------------
# root finding
# ---------------------------------------------------------------------------

def _poly_roots(coeffs: np.ndarray) -> list[complex]:
    """Roots of sum_j coeffs[j] z^j (ascending coefficients)."""
    c = np.asarray(coeffs, dtype=complex)
    if len(c) == 3:
        # quadratic formula keeps double roots exactly double
        a, b, q = c[2], c[1], c[0]
        disc = b * b - 4.0 * a * q
        sq = np.sqrt(disc + 0j)
        return [(-b + sq) / (2 * a), (-b - sq) / (2 * a)]
    if len(c) == 2:
        return [-c[0] / c[1]]
    if len(c) <= 1:
        return []
    return list(np.roots(c[::-1]))


def _cluster(roots: list[complex]) -> list[tuple[complex, int]]:
    """Merge numerically equal roots into (location, multiplicity) pairs."""
    out: list[tuple[complex, int]] = []
    for r in sorted(roots, key=lambda z: (z.real, z.imag)):
        for i, (loc, mult) in enumerate(out):
            if abs(r - loc) <= MERGE_TOL * (1.0 + abs(loc)):
                out[i] = ((loc * mult + r) / (mult + 1), mult + 1)
                break
        else:
            out.append((r, 1))
    return out


def all_conormal_roots(op: FuchsOperator) -> list[tuple[complex, int, int]]:
    """All (root, multiplicity, mode) triples over the listed modes.

    Memoized per operator instance; operators are immutable, and sphere
    spectra can list thousands of modes.
    """
    cached = getattr(op, "_conormal_roots_cache", None)
    if cached is not None:
        return cached
    triples = []
    for mode in op.modes:
        for loc, mult in _cluster(_poly_roots(op.conormal_coefficients(mode))):
            triples.append((loc, mult, mode))
    object.__setattr__(op, "_conormal_roots_cache", triples)
    return triples


def _laplace_roots_by_family(op: FuchsOperator):
    """Closed-form roots (n-1)/2 +- sqrt((n-1)^2/4 - lambda) per family."""
    n = op.n
    half = (n - 1) / 2.0
    for family in op.cross_section.eigenvalues:
        rad = math.sqrt(half * half - family.value)
        roots = [half + rad, half - rad] if rad > 0 else [half, half]
        yield family, roots


def nonbijectivity_points(op: FuchsOperator,
                          strip: tuple[float, float]) -> tuple[ConormalPole, ...]:
    """Poles of the inverted conormal symbol with Re z in the open strip.

    Roots from distinct modes at one location merge into a single pole
    whose ``order`` is the largest local multiplicity minus one.  For
    Laplace-type operators the closed-form root formula is evaluated
    alongside direct polynomial root-finding and both are required to
    agree.
    """
    a, b = strip
    if not a < b:
        raise DomainError(f"strip ({a}, {b}) is empty")

    def in_strip(z: complex) -> bool:
        if abs(z.real - a) <= EDGE_TOL or abs(z.real - b) <= EDGE_TOL:
            return False
        return a < z.real < b

    triples = [trip for trip in all_conormal_roots(op) if in_strip(trip[0])]

    if op.laplace_like:
        formula = set()
        for family, roots in _laplace_roots_by_family(op):
            for r in roots:
                if in_strip(complex(r)):
                    for mode in family.mode_ids:
                        formula.add((round(r, 9), mode))
        direct = {(round(z.real, 9), mode) for z, _m, mode in triples
                  if abs(z.imag) < MERGE_TOL}
        if formula != direct:
            raise InconsistentInputError(
                "closed-form root locations disagree with direct root-finding"
            )

    merged: list[tuple[complex, dict]] = []
    for loc, mult, mode in triples:
        for i, (ref, contrib) in enumerate(merged):
            if abs(loc - ref) <= MERGE_TOL * (1.0 + abs(ref)):
                contrib[mode] = max(contrib.get(mode, 0), mult)
                break
        else:
            merged.append((loc, {mode: mult}))

    poles = []
    for loc, contrib in merged:
        order = max(contrib.values()) - 1
        contributing = tuple(sorted(contrib.items()))
        poles.append(ConormalPole(location=_tidy(loc), order=order,
                                  contributing=contributing))
    return tuple(sorted(poles, key=lambda p: (p.location.real, p.location.imag)))


def _tidy(z: complex) -> complex:
    """Snap floating fuzz on exact algebraic locations (half-integers etc.)."""
    re = z.real
    im = z.imag
    if abs(im) < EDGE_TOL:
        im = 0.0
    near = round(re * 2.0) / 2.0
    if abs(re - near) < 1e-12:
        re = near
    return complex(re, im)


# ---------------------------------------------------------------------------
# Laurent data
# ---------------------------------------------------------------------------

def _deflate(coeffs: np.ndarray, p: complex) -> np.ndarray:
    """Synthetic division: coefficients of poly / (z - p) assuming p is a root."""
    c = np.asarray(coeffs, dtype=complex)[::-1]  # descending
    out = np.empty(len(c) - 1, dtype=complex)
    acc = c[0]
    for i in range(len(c) - 1):
        out[i] = acc
        acc = acc * p + c[i + 1]
    return out[::-1]  # ascending coefficients of the quotient


def laurent_coefficients(op: FuchsOperator, pole: ConormalPole) -> LaurentData:
    """Principal part of 1/sigma_M at one pole, mode by mode.

    For a simple root ``p`` of the mode polynomial the weight is
    ``1/sigma'(p)`` (for a monic quadratic with roots p1 != p2 this is
    ``1/(p1-p2)``); for a double root ``p`` write
    ``sigma(z) = (z-p)^2 h(z)`` and the weights are ``1/h(p)`` at index
    k = 1 and ``-h'(p)/h(p)^2`` at index k = 0.
    """
    p = pole.location
    coeffs: list[dict] = [dict() for _ in range(pole.order + 1)]
    matched = False
    for mode, mult in pole.contributing:
        poly = op.conormal_coefficients(mode)
        value = np.polynomial.polynomial.polyval(p, poly)
        scale = max(1.0, float(np.max(np.abs(poly))))
        if abs(value) > 1e-8 * scale:
            raise InconsistentInputError(
                f"pole {p} is not a root of the mode-{mode} conormal polynomial"
            )
        matched = True
        if mult == 1:
            dpoly = np.polynomial.polynomial.polyder(poly)
            coeffs[0][mode] = 1.0 / complex(np.polynomial.polynomial.polyval(p, dpoly))
        elif mult == 2:
            h = _deflate(_deflate(poly, p), p)
            hp = complex(np.polynomial.polynomial.polyval(p, h))
            dh = np.polynomial.polynomial.polyder(h)
            dhp = complex(np.polynomial.polynomial.polyval(p, dh))
            coeffs[1][mode] = 1.0 / hp
            coeffs[0][mode] = -dhp / hp**2
        else:
            raise UnsupportedOperatorError(
                "root multiplicities above 2 (log^2 terms and higher) are not supported"
            )
    if not matched:
        raise InconsistentInputError(f"{p} is not a root of any mode polynomial")
    return LaurentData(pole=pole, coefficients=tuple(coeffs))


def _taylor_at(poly: np.ndarray, p: complex) -> list[complex]:
    """Taylor coefficients of a polynomial around p via synthetic division."""
    taylor = []
    work = np.asarray(poly, dtype=complex)
    while True:
        value = complex(np.polynomial.polynomial.polyval(p, work))
        taylor.append(value)
        if len(work) == 1:
            break
        shifted = work.copy()
        shifted[0] -= value
        work = _deflate(shifted, p)
    return taylor


def laurent_principal_part_check(op: FuchsOperator, data: LaurentData,
                                 mode: int) -> np.ndarray:
    """Coefficients of sigma(z) * principal_part(1/sigma) - 1 at powers <= 0.

    Returns the array [c_{-m-1}, ..., c_{-1}, c_0 - 1]; all entries
    vanish when the Laurent data is exact.
    """
    p = data.pole.location
    m = data.pole.order
    taylor = _taylor_at(op.conormal_coefficients(mode), p)
    taylor += [0.0] * (m + 2 - len(taylor))
    r = [data.weight(k, mode) for k in range(m + 1)]
    out = []
    for ell in range(m, -1, -1):  # coefficient of (z - p)^(-ell-1)
        out.append(sum(taylor[k - ell] * r[k] for k in range(ell, m + 1)))
    acc0 = sum(taylor[k + 1] * r[k] for k in range(m + 1))
    out.append(acc0 - 1.0)
    return np.asarray(out, dtype=complex)


# ---------------------------------------------------------------------------
# extension bookkeeping
# ---------------------------------------------------------------------------

def weight_strip(op: FuchsOperator, gamma: float) -> tuple[float, float]:
    """The strip ((n+1)/2 - gamma - mu, (n+1)/2 - gamma) attached to a weight."""
    right = (op.n + 1) / 2.0 - gamma
    return (right - op.order, right)


def _pole_rank(data: LaurentData) -> int:
    """Rank of the block G_j = (R_{j,i+k})_{i+k<=m_j} from its structure.

    Per mode the block is an anti-triangular Hankel matrix in the scalar
    weights r_0..r_m; its rank is 1 + (largest index with nonzero
    weight).  Weights are exact partial-fraction data, so a relative
    floor of RANK_TOL separates structural zeros reliably.
    """
    m = data.pole.order
    scale = max((abs(v) for row in data.coefficients for v in row.values()),
                default=0.0)
    if scale == 0.0:
        return 0
    modes = set()
    for row in data.coefficients:
        modes.update(row)
    rank = 0
    for mode in modes:
        top = -1
        for k in range(m + 1):
            if abs(data.weight(k, mode)) > RANK_TOL * scale:
                top = k
        rank += top + 1
    return rank


def singular_space_dim(op: FuchsOperator, gamma: float, p: float) -> int:
    """dim D(A_max)/D(A_min) = rank G_A for the weight gamma.

    The value does not depend on the integrability exponent p, which is
    accepted only so call sites can report it alongside.
    """
    del p  # recorded by callers, irrelevant to the rank
    total = 0
    for pole in nonbijectivity_points(op, weight_strip(op, gamma)):
        total += _pole_rank(laurent_coefficients(op, pole))
    return total


def extension_basis(op: FuchsOperator, gamma: float, p: float) -> ExtensionReport:
    """Singular-function basis of D(A_max)/D(A_min), one term per rank unit.

    A pole ``p_j`` contributes, for every mode with local multiplicity
    ``m``, the functions ``t^(-p_j) log^l t`` (l = 0..m-1) on that mode,
    multiplied by a fixed cutoff.  Requires coefficients constant in t
    near the tip; with genuine t-dependence only an enclosing space of
    the same shape is available, which this routine refuses to guess.
    """
    if not op.is_constant_coefficient:
        raise UnsupportedOperatorError(
            "extension basis is only exact for coefficients constant near the tip"
        )
    strip = weight_strip(op, gamma)
    poles = nonbijectivity_points(op, strip)
    terms = []
    dim = 0
    for pole in poles:
        data = laurent_coefficients(op, pole)
        dim += _pole_rank(data)
        exponent = complex(-pole.location.real + 0.0, -pole.location.imag + 0.0)
        for mode, mult in pole.contributing:
            for ell in range(mult):
                terms.append(SingularTerm(exponent=exponent,
                                          log_power=ell, mode=mode))
    return ExtensionReport(
        gamma=gamma,
        order=op.order,
        p=p,
        strip=strip,
        poles=poles,
        dim_e=dim,
        basis=tuple(terms),
    )


def unique_closure(op: FuchsOperator, gamma: float) -> bool:
    """True iff minimal and maximal extension coincide at this weight."""
    return len(nonbijectivity_points(op, weight_strip(op, gamma))) == 0


def elliptic_wrt_weight(op: FuchsOperator, gamma: float, theta_probe: float,
                        samples: int = 64) -> bool:
    """Ellipticity with respect to a weight.

    Condition (1): principal and rescaled symbol values stay away from
    zero on the sample grid (the probe angle only fixes the sampling
    context, nonvanishing is what is checked).  Condition (2): the
    conormal symbol is invertible on the line Re z = (n+1)/2 - gamma.
    """
    if not (0.0 < theta_probe < math.pi):
        raise DomainError(f"probe angle must lie in (0, pi), got {theta_probe}")
    return symbols_nonvanishing(op, samples) and \
        conormal_invertible_on_line(op, gamma)


def min_domain_description(op: FuchsOperator, gamma: float,
                           p: float) -> MinDomainDescriptor:
    """Domain of the closure.

    EXACT with parameters (mu, gamma + mu, p) when the conormal symbol
    is invertible on the shifted line for the weight gamma + mu;
    otherwise the closure only carries the intersection of the spaces
    with weights gamma + mu - eps, reported as the EPSILON family.
    """
    exact = conormal_invertible_on_line(op, gamma + op.order)
    return MinDomainDescriptor(
        tag="EXACT" if exact else "EPSILON",
        smoothness=op.order,
        weight=gamma + op.order,
        p=p,
    )


def bounded_tip_basis_cone2d(p: float) -> tuple[SingularTerm, ...]:
    """Named preset: singular directions of the bounded-at-tip domain on the 2-D cone.

    This is the distinguished intermediate extension of the Laplacian
    whose domain matches the image of the plane Sobolev space H^2_p in
    polar coordinates: span(1, t e^{i theta}, t e^{-i theta}) for p > 2
    and span(1) for p <= 2, on top of the minimal domain.
    """
    if p <= 1:
        raise DomainError("p must lie in (1, inf)")
    if p > 2:
        return (SingularTerm(0.0 + 0.0j, 0, 0),
                SingularTerm(1.0 + 0.0j, 0, -1),
                SingularTerm(1.0 + 0.0j, 0, 1))
    return (SingularTerm(0.0 + 0.0j, 0, 0),)
