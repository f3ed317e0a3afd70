"""Fuchs-type operators diagonal over a cross-section eigenbasis.

A cone differential operator of order ``mu`` acts, near the tip in
coordinates ``(t, x)`` with ``t`` the distance to the tip, as

    A = t^(-mu) * sum_{j=0..mu} a_j(t) (-t d/dt)^j ,

where each ``a_j(t)`` is an operator on the cross-section ``X``.  This
module restricts attention to the class where every ``a_j(t)`` acts
diagonally on one fixed eigenbasis of ``X`` (Fourier modes on the
circle, spherical-harmonic families in general).  Each coefficient then
reduces to one scalar polynomial in ``t`` per mode, which keeps the
three symbol levels computable in closed form:

* the conormal (Mellin) symbol ``sigma_M(z) = sum_j a_j(0) z^j``,
  obtained from the substitution ``(-t d/dt) -> z``;
* the rescaled boundary symbol, the degree-``mu`` homogeneous
  polynomial in the covector ``(xi, tau)`` obtained by freezing ``t=0``
  and replacing ``(-t d/dt)`` by the covariable ``-i tau``;
* the interior principal symbol, which for this diagonal warped class
  sweeps the same value rays as the rescaled symbol and is therefore
  sampled through the same homogeneous polynomial.

All values are immutable after construction and every operation here is
a pure function of its arguments, so concurrent use needs no locking.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidMetricError, ModeNotFoundError

#: Absolute tolerance used when testing whether a non-bijectivity point
#: sits on a weight line.  Pole locations in this class are exact
#: algebraic numbers, so a tight tolerance is safe.
LINE_TOL = 1e-12

#: Default number of covector directions sampled by :func:`sector_clear`.
DEFAULT_SECTOR_SAMPLES = 64


# ---------------------------------------------------------------------------
# cross-section data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenvalueFamily:
    """One eigenvalue of the cross-section Laplacian with its eigenspace labels."""

    value: float
    multiplicity: int
    mode_ids: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "mode_ids", tuple(int(m) for m in self.mode_ids))
        if self.value > 0:
            raise InvalidMetricError(f"cross-section eigenvalue {self.value} is positive")
        if self.multiplicity < 1:
            raise InvalidMetricError("eigenvalue multiplicity must be positive")
        if len(self.mode_ids) != self.multiplicity:
            raise InvalidMetricError(
                f"family at {self.value}: {len(self.mode_ids)} mode ids "
                f"for multiplicity {self.multiplicity}"
            )


@dataclass(frozen=True)
class CrossSectionSpectrum:
    """Spectrum 0 = lambda_0 > lambda_1 > ... of the cross-section Laplacian.

    ``n`` is the dimension of the cross-section, so the underlying cone
    has dimension ``n + 1``.  Mode ids are arbitrary integer labels; for
    the circle they are the Fourier frequencies.
    """

    label: str
    n: int
    eigenvalues: tuple[EigenvalueFamily, ...]

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", tuple(self.eigenvalues))
        if self.n < 1:
            raise InvalidMetricError("cross-section dimension must be >= 1")
        if not self.eigenvalues:
            raise InvalidMetricError("spectrum is empty")
        values = [f.value for f in self.eigenvalues]
        if any(b >= a for a, b in zip(values, values[1:])):
            raise InvalidMetricError("eigenvalues must be sorted strictly decreasing")
        if values[0] != 0.0:
            raise InvalidMetricError("lambda_0 = 0 must be present (constants are harmonic)")
        all_modes = [m for f in self.eigenvalues for m in f.mode_ids]
        if len(set(all_modes)) != len(all_modes):
            raise InvalidMetricError("mode ids must be unique across families")
        if sum(f.multiplicity for f in self.eigenvalues) != len(all_modes):
            raise InvalidMetricError("multiplicities do not match the number of mode ids")

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(m for f in self.eigenvalues for m in f.mode_ids)

    def eigenvalue_of(self, mode: int) -> float:
        for f in self.eigenvalues:
            if mode in f.mode_ids:
                return f.value
        raise ModeNotFoundError(f"mode {mode} not in spectrum {self.label!r}")


@dataclass(frozen=True)
class WarpedMetricSpec:
    """Warped cone metric dt^2 + t^2 g(t) described through its spectral data.

    ``logG_derivative_at_0`` is the value of (log G)'(0) for
    G = det(g_ij)^(1/2); it feeds the first-order ``t`` coefficient of
    the drift term.  ``t_dependence``, when present, holds two
    polynomial tails (coefficients of t, t^2, ...) added verbatim to the
    first-order and zero-order coefficient polynomials; when absent the
    coefficients are constant in ``t`` near the tip.
    """

    spectrum: CrossSectionSpectrum
    logG_derivative_at_0: float = 0.0
    t_dependence: tuple[tuple[float, ...], tuple[float, ...]] | None = None


# ---------------------------------------------------------------------------
# the operator class
# ---------------------------------------------------------------------------

def _trim(poly: tuple[complex, ...]) -> tuple[complex, ...]:
    coeffs = list(poly)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


@dataclass(frozen=True)
class FuchsOperator:
    """Diagonal Fuchs-type operator of order ``order``.

    ``coefficients[i][j]`` is the polynomial (ascending powers of t) of
    the coefficient ``a_j`` acting on the i-th mode of
    ``cross_section.modes``.  ``top_radial`` multiplies ``(-i tau)^mu``
    and ``top_cross`` multiplies ``xi^mu`` in the rescaled symbol; for
    Laplacians these are the exact values (1, -1) up to overall scale,
    for hand-built operators they are estimated from the eigenvalue
    growth of the listed families.
    """

    order: int
    cross_section: CrossSectionSpectrum
    coefficients: tuple[tuple[tuple[complex, ...], ...], ...]
    top_radial: complex
    top_cross: complex
    laplace_like: bool = False
    _mode_index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        modes = self.cross_section.modes
        if len(self.coefficients) != len(modes):
            raise InvalidMetricError("one coefficient stack per mode is required")
        for stack in self.coefficients:
            if len(stack) != self.order + 1:
                raise InvalidMetricError(
                    f"each mode needs coefficients a_0..a_{self.order}"
                )
            if stack[self.order][0] == 0:
                raise InvalidMetricError("a_mu(0) must be nonzero for every mode")
        object.__setattr__(self, "_mode_index", {m: i for i, m in enumerate(modes)})

    # -- bookkeeping --------------------------------------------------------

    @property
    def modes(self) -> tuple[int, ...]:
        return self.cross_section.modes

    @property
    def n(self) -> int:
        return self.cross_section.n

    def _index(self, mode: int) -> int:
        try:
            return self._mode_index[mode]
        except KeyError:
            raise ModeNotFoundError(f"mode {mode} not carried by this operator") from None

    def coefficient_poly(self, j: int, mode: int) -> tuple[complex, ...]:
        return self.coefficients[self._index(mode)][j]

    def coefficient_value(self, j: int, mode: int, t: float | np.ndarray):
        return np.polynomial.polynomial.polyval(t, np.asarray(self.coefficient_poly(j, mode)))

    @property
    def is_constant_coefficient(self) -> bool:
        return all(
            len(poly) == 1
            for stack in self.coefficients
            for poly in stack
        )

    def conormal_coefficients(self, mode: int) -> np.ndarray:
        """Coefficients [a_0(0), ..., a_mu(0)] of the conormal polynomial on one mode."""
        stack = self.coefficients[self._index(mode)]
        return np.array([poly[0] for poly in stack], dtype=complex)

    def scaled(self, c: complex) -> "FuchsOperator":
        coeffs = tuple(
            tuple(tuple(c * a for a in poly) for poly in stack)
            for stack in self.coefficients
        )
        return FuchsOperator(
            order=self.order,
            cross_section=self.cross_section,
            coefficients=coeffs,
            top_radial=c * self.top_radial,
            top_cross=c * self.top_cross,
            laplace_like=self.laplace_like,
        )

    def __neg__(self) -> "FuchsOperator":
        return self.scaled(-1.0)

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        """JSON document {order, cross_section, coefficients, top_symbol}."""
        cs = {
            "n": self.cross_section.n,
            "eigenvalues": [
                {"lambda": f.value, "mult": f.multiplicity, "modes": list(f.mode_ids)}
                for f in self.cross_section.eigenvalues
            ],
        }
        def _real(x):
            if abs(complex(x).imag) > 0:
                raise DomainError("JSON operator documents carry real coefficients only")
            return float(complex(x).real)
        coeffs = [
            [[_real(a) for a in poly] for poly in stack]
            for stack in self.coefficients
        ]
        return {
            "order": self.order,
            "cross_section": cs,
            "coefficients": coeffs,
            "top_symbol": [_real(self.top_radial), _real(self.top_cross)],
            "laplace_like": self.laplace_like,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "FuchsOperator":
        cs = doc["cross_section"]
        spectrum = CrossSectionSpectrum(
            label=doc.get("label", "json"),
            n=int(cs["n"]),
            eigenvalues=tuple(
                EigenvalueFamily(float(e["lambda"]), int(e["mult"]), tuple(e["modes"]))
                for e in cs["eigenvalues"]
            ),
        )
        coefficients = tuple(
            tuple(_trim(tuple(float(a) for a in poly)) for poly in stack)
            for stack in doc["coefficients"]
        )
        if "top_symbol" in doc:
            top_radial, top_cross = (complex(v) for v in doc["top_symbol"])
            return cls(
                order=int(doc["order"]),
                cross_section=spectrum,
                coefficients=coefficients,
                top_radial=top_radial,
                top_cross=top_cross,
                laplace_like=bool(doc.get("laplace_like", False)),
            )
        return cls.from_mode_polynomials(int(doc["order"]), spectrum, coefficients)

    @classmethod
    def from_mode_polynomials(cls, order, spectrum, coefficients) -> "FuchsOperator":
        """Build from raw per-mode polynomials, estimating the rescaled symbol data.

        The cross-section contribution of the rescaled symbol is read
        off from the eigenvalue growth of the highest listed family
        (lambda ~ top_cross * frequency^mu); pure-radial operators get a
        vanishing cross-section part.
        """
        coefficients = tuple(tuple(_trim(tuple(p)) for p in stack) for stack in coefficients)
        top_radial = coefficients[0][order][0]
        families = spectrum.eigenvalues
        if len(families) > 1:
            # family index doubles as the frequency index in the built-in
            # tables, so lambda_k / k^mu estimates the top-order symbol value
            k = len(families) - 1
            top_cross = complex(families[k].value) / k**order
        else:
            top_cross = 0.0
        return cls(
            order=order,
            cross_section=spectrum,
            coefficients=coefficients,
            top_radial=top_radial,
            top_cross=complex(top_cross),
        )


# ---------------------------------------------------------------------------
# construction of warped-cone Laplacians
# ---------------------------------------------------------------------------

def build_laplacian(metric: WarpedMetricSpec) -> FuchsOperator:
    """Laplace-Beltrami operator of a warped cone metric in Fuchs form.

    Near the tip the operator reads

        t^(-2) { (t d/dt)^2 + (n - 1 + t (log G)'(t)) (t d/dt) + Delta_X(t) } .

    Stored in the ``(-t d/dt)^j`` basis this means ``a_2 = 1``,
    ``a_1(0) = -(n-1)`` and ``a_0(0)`` acting on mode ``k`` as the
    eigenvalue ``lambda_k``, so the conormal polynomial on mode ``k``
    is ``z^2 - (n-1) z + lambda_k``.
    """
    spectrum = metric.spectrum
    if spectrum.eigenvalues[0].value != 0.0:
        raise InvalidMetricError("warped metric requires the eigenvalue 0 in its spectrum")
    n = spectrum.n
    a1_tail, a0_tail = metric.t_dependence if metric.t_dependence else ((), ())
    # (t d/dt) = -(-t d/dt): the drift coefficient flips sign in this basis.
    a1: tuple[complex, ...] = _trim((-(n - 1.0), -metric.logG_derivative_at_0)
                                    + tuple(-c for c in a1_tail))
    stacks = []
    for family in spectrum.eigenvalues:
        a0 = _trim((family.value,) + tuple(a0_tail))
        for _ in family.mode_ids:
            stacks.append((a0, a1, (1.0,)))
    return FuchsOperator(
        order=2,
        cross_section=spectrum,
        coefficients=tuple(stacks),
        top_radial=1.0,
        top_cross=-1.0,
        laplace_like=True,
    )


# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------

def conormal_symbol_value(op: FuchsOperator, z: complex, mode: int) -> complex:
    """Value of the conormal polynomial sum_j a_j(0) z^j on one mode."""
    coeffs = op.conormal_coefficients(mode)
    return complex(np.polynomial.polynomial.polyval(z, coeffs))


def rescaled_symbol_value(op: FuchsOperator, xi_norm: float, tau: float) -> complex:
    """Rescaled symbol at a boundary covector (|xi|, tau).

    The radial part contributes ``top_radial * (-i tau)^mu`` and the
    cross-section part ``top_cross * xi^mu``; for a Laplacian this is
    exactly ``-(tau^2 + xi^2)`` times the operator scale.
    """
    if xi_norm < 0:
        raise DomainError("xi_norm is a covector norm and must be >= 0")
    if xi_norm == 0.0 and tau == 0.0:
        raise DomainError("the rescaled symbol is undefined at the zero covector")
    return complex(op.top_radial) * (-1j * tau) ** op.order \
        + complex(op.top_cross) * xi_norm ** op.order


@dataclass(frozen=True)
class SectorReport:
    """Result of sampling symbol values against the closed sector Lambda_theta."""

    theta: float
    cleared: bool
    worst_sample: tuple[int, tuple[float, float], complex]

    def to_json_dict(self) -> dict:
        mode, (xi, tau), value = self.worst_sample
        return {
            "theta": self.theta,
            "cleared": self.cleared,
            "worst_sample": {
                "mode": mode,
                "covector": [xi, tau],
                "value": {"re": value.real, "im": value.imag},
            },
        }


def _symbol_samples(op: FuchsOperator, samples: int):
    """Iterate (mode, covector, value) over unit covectors and base modes.

    Per mode the top radial coefficient is the mode's own a_mu(0); the
    cross-section contribution uses the operator-level estimate, which
    for Laplace-type operators is exact on every mode.
    """
    mu = op.order
    angles = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    for mode in op.modes:
        a_top = op.conormal_coefficients(mode)[mu]
        for phi in angles:
            xi, tau = math.cos(phi), math.sin(phi)
            value = complex(a_top) * (-1j * tau) ** mu + complex(op.top_cross) * xi**mu
            yield mode, (xi, tau), value


def sector_clear(op: FuchsOperator, theta: float,
                 samples: int = DEFAULT_SECTOR_SAMPLES) -> SectorReport:
    """Check that sampled symbol values avoid Lambda_theta = {|arg z| >= theta} u {0}.

    Samples the rescaled/principal symbol family over ``samples`` unit
    covector directions for every listed mode; ``cleared`` is true iff
    every sampled value is nonzero with |arg| < theta.
    """
    if not (0.0 < theta < math.pi):
        raise DomainError(f"sector angle must lie in (0, pi), got {theta}")
    if samples < 1:
        raise DomainError("samples must be positive")
    cleared = True
    worst = None
    worst_score = -1.0
    for mode, covector, value in _symbol_samples(op, samples):
        if value == 0:
            score = math.pi + 1.0
            ok = False
        else:
            score = abs(cmath.phase(value))
            ok = score < theta
        if not ok:
            cleared = False
        if score > worst_score:
            worst_score = score
            worst = (mode, covector, value)
    return SectorReport(theta=theta, cleared=cleared, worst_sample=worst)


def symbols_nonvanishing(op: FuchsOperator, samples: int = DEFAULT_SECTOR_SAMPLES,
                         floor: float = 1e-14) -> bool:
    """Interior ellipticity probe: no sampled symbol value (numerically) vanishes."""
    scale = max(abs(complex(op.top_radial)), abs(complex(op.top_cross)), 1.0)
    return all(abs(v) > floor * scale for _, _, v in _symbol_samples(op, samples))


def conormal_invertible_on_line(op: FuchsOperator, gamma: float) -> bool:
    """Invertibility of the conormal symbol on the line Re z = (n+1)/2 - gamma.

    True iff no non-bijectivity point of any mode polynomial has real
    part on that line (within :data:`LINE_TOL`).
    """
    from . import extensions  # deferred: extensions builds on this module

    line = (op.n + 1) / 2.0 - gamma
    roots = extensions.all_conormal_roots(op)
    return all(abs(r.real - line) > LINE_TOL for r, _mult, _mode in roots)
