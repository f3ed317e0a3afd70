"""Built-in cross-section spectra and metrics.

``cone2d`` is the flat 2-D cone (unit disk seen as a cone over the
circle), ``cone-sphere-n`` the cone over the round n-sphere.  Sphere
eigenvalues are lambda_k = -k(k+n-1) with the dimension of the degree-k
spherical harmonics as multiplicity.
"""

from __future__ import annotations

import math

from .errors import DomainError
from .fuchs import (CrossSectionSpectrum, EigenvalueFamily, FuchsOperator,
                    WarpedMetricSpec, build_laplacian)


def circle_spectrum(max_mode: int = 8) -> CrossSectionSpectrum:
    """Fourier spectrum of the circle: lambda_k = -k^2 on modes +-k."""
    if max_mode < 1:
        raise DomainError("max_mode must be >= 1")
    families = [EigenvalueFamily(0.0, 1, (0,))]
    for k in range(1, max_mode + 1):
        families.append(EigenvalueFamily(-float(k * k), 2, (k, -k)))
    return CrossSectionSpectrum(label="circle", n=1, eigenvalues=tuple(families))


def sphere_harmonic_multiplicity(n: int, k: int) -> int:
    if k == 0:
        return 1
    return math.comb(n + k, n) - math.comb(n + k - 2, n)


def sphere_spectrum(n: int, max_family: int = 16) -> CrossSectionSpectrum:
    """Spectrum of the round n-sphere with synthetic integer mode labels."""
    if n < 1:
        raise DomainError("sphere dimension must be >= 1")
    if max_family < 1:
        raise DomainError("max_family must be >= 1")
    families = []
    next_id = 0
    for k in range(max_family + 1):
        mult = sphere_harmonic_multiplicity(n, k)
        ids = tuple(range(next_id, next_id + mult))
        next_id += mult
        families.append(EigenvalueFamily(-float(k * (k + n - 1)), mult, ids))
    return CrossSectionSpectrum(label=f"sphere-{n}", n=n, eigenvalues=tuple(families))


def cone2d_metric(max_mode: int = 8) -> WarpedMetricSpec:
    """Flat metric dt^2 + t^2 dtheta^2 on the 2-D cone."""
    return WarpedMetricSpec(spectrum=circle_spectrum(max_mode))


def cone_sphere_metric(n: int, max_family: int = 16) -> WarpedMetricSpec:
    """Exact cone metric over the round n-sphere."""
    return WarpedMetricSpec(spectrum=sphere_spectrum(n, max_family))


def cone2d_laplacian(max_mode: int = 8) -> FuchsOperator:
    return build_laplacian(cone2d_metric(max_mode))


def cone_sphere_laplacian(n: int, max_family: int = 16) -> FuchsOperator:
    return build_laplacian(cone_sphere_metric(n, max_family))


def operator_from_preset(name: str, n: int | None = None,
                         max_mode: int | None = None) -> FuchsOperator:
    """Resolve a preset name used by the command line."""
    if name == "cone2d":
        return cone2d_laplacian(max_mode or 8)
    if name in ("cone-sphere", "cone-sphere-n"):
        if n is None:
            raise DomainError("preset cone-sphere requires the cross-section dimension")
        return cone_sphere_laplacian(n, max_mode or 16)
    raise DomainError(f"unknown operator preset {name!r}")
