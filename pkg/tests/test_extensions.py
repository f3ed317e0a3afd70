import numpy as np
import pytest

from conecalc import presets
from conecalc.errors import (DomainError, InconsistentInputError,
                             UnsupportedOperatorError)
from conecalc.extensions import (bounded_tip_basis_cone2d, elliptic_wrt_weight,
                                 extension_basis, laurent_coefficients,
                                 laurent_principal_part_check,
                                 min_domain_description, nonbijectivity_points,
                                 singular_space_dim, unique_closure,
                                 weight_strip)
from conecalc.fuchs import WarpedMetricSpec, build_laplacian
from conecalc.spaces import gamma_p


def pole_at(poles, z, tol=1e-9):
    for pole in poles:
        if abs(pole.location - z) < tol:
            return pole
    raise AssertionError(f"no pole near {z} in {poles}")


def test_circle_pole_set(cone2d):
    poles = nonbijectivity_points(cone2d, (-2.5, 2.5))
    assert [p.location for p in poles] == [-2, -1, 0, 1, 2]
    assert pole_at(poles, 0).order == 1
    assert pole_at(poles, 0).contributing == ((0, 2),)
    assert pole_at(poles, 2).order == 0
    assert pole_at(poles, 2).contributing == ((-2, 1), (2, 1))


def test_sphere_n3_strip_empty():
    op = presets.cone_sphere_laplacian(3, max_family=4)
    assert nonbijectivity_points(op, (0.0, 2.0)) == ()


def test_sphere_n2_pole_set():
    op = presets.cone_sphere_laplacian(2, max_family=4)
    poles = nonbijectivity_points(op, (-1.5, 2.5))
    assert [p.location for p in poles] == [-1, 0, 1, 2]


def test_strip_edges_excluded(cone2d):
    poles = nonbijectivity_points(cone2d, (-2.0, 2.0))
    assert [p.location for p in poles] == [-1, 0, 1]
    poles = nonbijectivity_points(cone2d, (-2.0 + 1e-13, 2.0 - 1e-13))
    assert [p.location for p in poles] == [-1, 0, 1]


def test_empty_strip_rejected(cone2d):
    with pytest.raises(DomainError):
        nonbijectivity_points(cone2d, (1.0, 1.0))


def test_pole_symmetry_under_reflection():
    # roots of z^2 - (n-1) z + lambda pair up under z -> (n-1) - z
    for n, op in ((1, presets.cone2d_laplacian(5)),
                  (4, presets.cone_sphere_laplacian(4, 4))):
        poles = nonbijectivity_points(op, (-6.0, n + 5.0))
        locs = sorted(p.location.real for p in poles)
        reflected = sorted((n - 1) - x for x in locs)
        assert np.allclose(locs, reflected, atol=1e-9)


def test_laurent_double_pole(cone2d):
    pole = pole_at(nonbijectivity_points(cone2d, (-0.5, 0.5)), 0)
    data = laurent_coefficients(cone2d, pole)
    assert data.weight(1, 0) == pytest.approx(1.0)
    assert data.weight(0, 0) == pytest.approx(0.0)


def test_laurent_simple_poles(cone2d):
    for j in (1, 2, 3):
        pole = pole_at(nonbijectivity_points(cone2d, (j - 0.5, j + 0.5)), j)
        data = laurent_coefficients(cone2d, pole)
        assert data.weight(0, j) == pytest.approx(1.0 / (2 * j))
        assert data.weight(0, -j) == pytest.approx(1.0 / (2 * j))


def test_laurent_sphere_partial_fraction():
    # family k=1 on the 3-sphere: roots -1 and 3, residue 1/(3-(-1)) = 1/4
    op = presets.cone_sphere_laplacian(3, max_family=3)
    pole = pole_at(nonbijectivity_points(op, (2.5, 3.5)), 3)
    data = laurent_coefficients(op, pole)
    mode = op.cross_section.eigenvalues[1].mode_ids[0]
    assert data.weight(0, mode) == pytest.approx(0.25)


def test_laurent_inconsistent_pole(cone2d):
    pole = pole_at(nonbijectivity_points(cone2d, (0.5, 1.5)), 1)
    fake = pole.__class__(location=0.5 + 0j, order=0,
                          contributing=pole.contributing)
    with pytest.raises(InconsistentInputError):
        laurent_coefficients(cone2d, fake)


def test_laurent_identity_all_poles(cone2d):
    # sigma(z) * principal part - 1 has no principal part left
    for pole in nonbijectivity_points(cone2d, (-3.5, 3.5)):
        data = laurent_coefficients(cone2d, pole)
        for mode, _mult in pole.contributing:
            residue = laurent_principal_part_check(cone2d, data, mode)
            assert np.max(np.abs(residue)) < 1e-12


def test_singular_space_dims(cone2d):
    for gamma in (-1.0, 0.0, 1.0):
        assert singular_space_dim(cone2d, gamma, 2.0) == 2
    for gamma in (-0.5, 0.3, 0.5, gamma_p(1, 3.0)):
        assert singular_space_dim(cone2d, gamma, 2.0) == 4
    op3 = presets.cone_sphere_laplacian(3, max_family=4)
    assert singular_space_dim(op3, 0.0, 2.0) == 0


def test_singular_space_dim_p_independent(cone2d):
    for gamma in (-0.4, 0.0, 0.7):
        dims = {singular_space_dim(cone2d, gamma, p) for p in (1.5, 2.0, 3.0, 10.0)}
        assert len(dims) == 1


def test_rank_additivity_width_two_strips(cone2d):
    # every pole of the 2-D cone in a width-2 strip contributes rank 2
    for gamma in (-0.25, 0.4, 0.6):
        report = extension_basis(cone2d, gamma, 2.0)
        assert report.dim_e == 2 * len(report.poles)


def test_rank_matches_dense_svd(cone2d):
    # dual route: assemble the block G_j densely and rank-reveal it
    for pole in nonbijectivity_points(cone2d, (-2.5, 2.5)):
        data = laurent_coefficients(cone2d, pole)
        m = pole.order
        modes = [mode for mode, _ in pole.contributing]
        size = (m + 1) * len(modes)
        dense = np.zeros((size, size), dtype=complex)
        for i in range(m + 1):
            for k in range(m + 1):
                if i + k > m:
                    continue
                for a, mode in enumerate(modes):
                    dense[i * len(modes) + a, k * len(modes) + a] = \
                        data.weight(i + k, mode)
        svals = np.linalg.svd(dense, compute_uv=False)
        dense_rank = int(np.sum(svals > 1e-10 * svals[0]))
        report = extension_basis(cone2d, 0.0, 2.0)
        del report
        from conecalc.extensions import _pole_rank
        assert _pole_rank(data) == dense_rank


def test_extension_basis_three_regimes(cone2d):
    def terms(report):
        return sorted((t.exponent.real, t.exponent.imag, t.log_power, t.mode)
                      for t in report.basis)

    high = extension_basis(cone2d, gamma_p(1, 3.0), 3.0)
    assert terms(high) == [(0.0, 0.0, 0, 0), (0.0, 0.0, 1, 0),
                           (1.0, 0.0, 0, -1), (1.0, 0.0, 0, 1)]
    mid = extension_basis(cone2d, gamma_p(1, 2.0), 2.0)
    assert terms(mid) == [(0.0, 0.0, 0, 0), (0.0, 0.0, 1, 0)]
    low = extension_basis(cone2d, gamma_p(1, 1.5), 1.5)
    assert terms(low) == [(-1.0, 0.0, 0, -1), (-1.0, 0.0, 0, 1),
                          (0.0, 0.0, 0, 0), (0.0, 0.0, 1, 0)]


def test_extension_basis_rejects_t_dependence():
    metric = WarpedMetricSpec(presets.circle_spectrum(3),
                              t_dependence=((0.5,), (0.1,)))
    op = build_laplacian(metric)
    with pytest.raises(UnsupportedOperatorError):
        extension_basis(op, 0.0, 2.0)


def test_unique_closure(cone2d):
    op3 = presets.cone_sphere_laplacian(3, max_family=4)
    assert unique_closure(op3, 0.0)
    for gamma in (-1.0, -0.3, 0.0, 0.5, 1.0):
        assert not unique_closure(cone2d, gamma)
    op4 = presets.cone_sphere_laplacian(4, max_family=4)
    for p in (5 / 3 + 0.01, 2.0, 2.5):
        # 2 max(p, p') <= 5 region
        assert unique_closure(op4, gamma_p(4, p))


def test_unique_closure_iff_zero_dim(cone2d):
    ops = [cone2d,
           presets.cone_sphere_laplacian(3, 4),
           presets.cone_sphere_laplacian(5, 4)]
    for op in ops:
        for gamma in np.linspace(-1.5, 1.5, 11):
            dim = singular_space_dim(op, float(gamma), 2.0)
            assert unique_closure(op, float(gamma)) == (dim == 0)


def test_elliptic_wrt_weight(cone2d):
    assert elliptic_wrt_weight(cone2d, 0.5, 1.0)
    assert not elliptic_wrt_weight(cone2d, 1.0, 1.0)
    op4 = presets.cone_sphere_laplacian(4, max_family=4)
    assert elliptic_wrt_weight(op4, 1.0, 1.0)  # line Re z = 1.5
    with pytest.raises(DomainError):
        elliptic_wrt_weight(cone2d, 0.5, 0.0)


def test_min_domain_description(cone2d):
    for p in (1.5, 3.0, 4.0):
        desc = min_domain_description(cone2d, gamma_p(1, p), p)
        assert desc.tag == "EXACT"
        assert desc.smoothness == 2
        assert desc.weight == pytest.approx(gamma_p(1, p) + 2.0)
    # gamma = 0 shifts the check line onto the pole at -1
    eps = min_domain_description(cone2d, 0.0, 2.0)
    assert eps.tag == "EPSILON"
    # no pole anywhere near the shifted line: vacuously EXACT
    op3 = presets.cone_sphere_laplacian(3, max_family=4)
    assert min_domain_description(op3, 0.25, 2.0).tag == "EXACT"


def test_weight_strip(cone2d):
    assert weight_strip(cone2d, 0.5) == (-1.5, 0.5)


def test_bounded_tip_preset():
    assert [(t.exponent.real, t.log_power, t.mode)
            for t in bounded_tip_basis_cone2d(3.0)] == \
        [(0.0, 0, 0), (1.0, 0, -1), (1.0, 0, 1)]
    assert [(t.exponent.real, t.log_power, t.mode)
            for t in bounded_tip_basis_cone2d(2.0)] == [(0.0, 0, 0)]
    with pytest.raises(DomainError):
        bounded_tip_basis_cone2d(0.5)


def test_extension_report_json(cone2d):
    doc = extension_basis(cone2d, 0.5, 2.0).to_json_dict()
    assert set(doc) == {"gamma", "p", "strip", "poles", "dim_E", "basis"}
    assert doc["dim_E"] == 4
    assert set(doc["poles"][0]) == {"re", "im", "order", "modes"}
    assert set(doc["basis"][0]) == {"exponent", "log_power", "mode"}
    assert set(doc["basis"][0]["exponent"]) == {"re", "im"}
