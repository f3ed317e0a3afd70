"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Golden values come from the worked 2-D cone examples; numeric criteria
carry explicit tolerances and a wall-clock budget.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
from scipy.special import j0

from conecalc import admissibility as adm
from conecalc import presets
from conecalc.extensions import (extension_basis, nonbijectivity_points,
                                 singular_space_dim, unique_closure)
from conecalc.solver import (Diffusion, SolverConfig, discretize_operator,
                             extract_tip_asymptotics, mr_functional,
                             resolvent_scan, solve_linear, solve_quasilinear)
from conecalc.spaces import (GridFunction, LogRadialGrid, gamma_p,
                             mellin_transform, reference_cutoff,
                             s_gamma_transform, weighted_norm)
from conftest import radial_bump, radial_bump_ds

J01 = 2.404825557695773
J01_SQ = 5.783185962946785


@contextmanager
def criterion(number: int, description: str, budget_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"criterion {number:02d} FAIL  {description}")
        raise
    elapsed = time.perf_counter() - start
    print(f"criterion {number:02d} PASS  {description}  [{elapsed:.2f}s]")
    assert elapsed < budget_s, f"criterion {number} exceeded {budget_s}s budget"


def e0(values, grid):
    return weighted_norm(GridFunction(grid, values), 0, 0.0, 2.0)


def test_criterion_01_pole_set(cone2d):
    with criterion(1, "2-D cone poles in (-2.5, 2.5) are {-2,-1,0,1,2}", 1.0):
        poles = nonbijectivity_points(cone2d, (-2.5, 2.5))
        assert [p.location for p in poles] == [-2, -1, 0, 1, 2]
        assert all(p.location.imag == 0 for p in poles)


def test_criterion_02_quotient_dimensions(cone2d):
    with criterion(2, "dim E is 2 on integer weights and 4 otherwise", 1.0):
        for gamma in (-1.0, 0.0, 1.0):
            assert singular_space_dim(cone2d, gamma, 2.0) == 2
        for gamma in (-0.5, 0.3, 0.5, gamma_p(1, 3.0)):
            assert singular_space_dim(cone2d, gamma, 2.0) == 4


def test_criterion_03_extension_bases(cone2d):
    with criterion(3, "maximal-domain bases match in all three p-regimes", 1.0):
        def terms(p):
            report = extension_basis(cone2d, gamma_p(1, p), p)
            return sorted((t.exponent.real, t.exponent.imag,
                           t.log_power, t.mode) for t in report.basis)

        assert terms(3.0) == [(0.0, 0.0, 0, 0), (0.0, 0.0, 1, 0),
                              (1.0, 0.0, 0, -1), (1.0, 0.0, 0, 1)]
        assert terms(2.0) == [(0.0, 0.0, 0, 0), (0.0, 0.0, 1, 0)]
        assert terms(1.5) == [(-1.0, 0.0, 0, -1), (-1.0, 0.0, 0, 1),
                              (0.0, 0.0, 0, 0), (0.0, 0.0, 1, 0)]


def test_criterion_04_unique_closure_window():
    with criterion(4, "unique closure at gamma_p iff 2 max(p,p') <= n+1 "
                      "on 200 (n,p) pairs", 1.0):
        p_grid = (1.05, 1.25, 1.4, 1.5, 1.6, 1.75, 2.0, 2.2, 2.4, 2.5,
                  2.6, 2.8, 3.0, 3.5, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0)
        checked = 0
        for n in range(1, 11):
            if n == 1:
                op = presets.cone2d_laplacian(4)
            else:
                op = presets.cone_sphere_laplacian(n, max_family=4)
            for p in p_grid:
                predicted = adm.unique_closure_pq(n, p)
                observed = unique_closure(op, gamma_p(n, p))
                assert predicted == observed, (n, p)
                checked += 1
        assert checked == 200


def test_criterion_05_alpha_star_reduction():
    with criterion(5, "alpha*(n,p,p) = (n+1)/(n+3-2p) to 1e-14 relative", 1.0):
        count = 0
        for n in range(1, 11):
            for i in range(1, 11):
                p = 1.05 + (((n + 3) / 2 - 0.05) - 1.05) * i / 11.0
                expected = (n + 1.0) / (n + 3.0 - 2.0 * p)
                got = adm.alpha_star(n, p, p)
                assert abs(got - expected) < 1e-14 * abs(expected), (n, p)
                count += 1
        assert count == 100


def test_criterion_06_mellin_identity(fine_radial_grid):
    with criterion(6, "Mellin identity M(-t d_t u) = z M(u) below 1e-8 "
                      "on 20 profiles x 10 z-values", 5.0):
        grid = fine_radial_grid
        z_values = [0.5, 1.0, 1.5, 2.0, 3.0,
                    0.5 + 1.0j, 1.0 - 0.5j, 2.0 + 2.0j, 4.0, 2.5 - 1.0j]
        windows = [(1.0 + 0.4 * i, 9.0 + 0.55 * i) for i in range(10)]
        profiles = []
        for a, b in windows:
            profiles.append((radial_bump(grid.s, a, b),
                             radial_bump_ds(grid.s, a, b)))
            profiles.append((np.sin(grid.s) * radial_bump(grid.s, a, b),
                             np.cos(grid.s) * radial_bump(grid.s, a, b)
                             + np.sin(grid.s) * radial_bump_ds(grid.s, a, b)))
        assert len(profiles) == 20
        for u, du in profiles:
            for z in z_values:
                lhs = mellin_transform(grid, du, z)
                rhs = z * mellin_transform(grid, u, z)
                assert abs(lhs - rhs) < 1e-8


def test_criterion_07_norm_transform_consistency():
    with criterion(7, "weighted norm at s=0 equals the plain L_p norm of the "
                      "log-weight transform below 1e-8 on 20 functions", 5.0):
        grid = LogRadialGrid.make(513, 16.0, max_mode=3)
        rng = np.random.default_rng(42)
        n_theta = 64
        for trial in range(20):
            gamma = float(rng.uniform(-1.5, 1.5))
            p = float(rng.uniform(1.3, 4.0))
            values = (rng.standard_normal((513, 7))
                      + 1j * rng.standard_normal((513, 7)))
            values *= np.exp(-2.5 * grid.s)[:, None]
            u = GridFunction(grid, values)
            direct = weighted_norm(u, 0, gamma, p, n_theta=n_theta)
            v = s_gamma_transform(u, gamma)
            phys = v.to_physical(n_theta)
            rho = np.sum(np.abs(phys) ** p, axis=1) * (2 * np.pi / n_theta)
            plain = float(np.trapezoid(rho, grid.s)) ** (1.0 / p)
            assert abs(direct - plain) < 1e-8, trial


def _disk_decay_rate(nodes):
    grid = LogRadialGrid.make(nodes, 16.0, max_mode=0)
    ops = discretize_operator(-presets.cone2d_laplacian(1), grid)
    cfg = SolverConfig(grid=grid, horizon=0.2, steps=512,
                       scheme="crank-nicolson", save_every=128)
    u0 = GridFunction.from_radial_profile(grid, j0(J01 * grid.t))
    traj = solve_linear(ops, None, u0, cfg)
    norms = [weighted_norm(s, 0, 0.0, 2.0) for s in traj.snapshots]
    return math.log(norms[2] / norms[4]) / (traj.times[4] - traj.times[2])


def test_criterion_08_disk_heat_decay():
    with criterion(8, "heat decay rate hits the principal Dirichlet eigenvalue"
                      " (1% at 256 nodes, 0.1% at 1024, slope 2 +- 0.2)", 60.0):
        errs = {}
        for nodes in (256, 512, 1024):
            rate = _disk_decay_rate(nodes)
            errs[nodes] = abs(rate - J01_SQ) / J01_SQ
        assert errs[256] < 0.01, errs
        assert errs[1024] < 0.001, errs
        slope = math.log2(errs[256] / errs[1024]) / 2.0
        assert 1.8 < slope < 2.2, (errs, slope)


def _quasilinear_error(nodes, steps):
    grid = LogRadialGrid.make(nodes, 16.0, max_mode=2)
    op = presets.cone2d_laplacian(2)
    cfg = SolverConfig(grid=grid, horizon=0.1, steps=steps,
                       scheme="implicit-euler",
                       diffusion=Diffusion(kind="poly",
                                           coeffs=(1.0, 0.0, 0.5), c=1.0),
                       save_every=steps)

    def forcing(tau, grid=grid):
        t = grid.t
        ustar = math.exp(-tau) * (1.0 - t**2)
        a = 1.0 + (t * ustar) ** 2 / 2.0
        return GridFunction.from_radial_profile(
            grid, -math.exp(-tau) * (1.0 - t**2) + 4.0 * a * math.exp(-tau))

    u0 = GridFunction.from_radial_profile(grid, 1.0 - grid.t**2)
    traj = solve_quasilinear(op, cfg, forcing, u0)
    radial = LogRadialGrid.make(nodes, 16.0, max_mode=0)
    exact = math.exp(-0.1) * (1.0 - grid.t**2)
    return weighted_norm(GridFunction.from_radial_profile(
        radial, traj.final.mode_profile(0) - exact), 0, 0.0, 2.0)


def test_criterion_09_quasilinear_manufactured():
    with criterion(9, "manufactured quasilinear solution recovered at "
                      "order >= 1.8 under grid halving", 120.0):
        errs = [_quasilinear_error(n, s)
                for n, s in ((65, 10), (129, 40), (257, 160))]
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) >= 1.8, (errs, orders)


def test_criterion_10_resolvent_decay():
    with criterion(10, "scaled resolvent norms flat (log-log slope within "
                       "0.1 of 0) along arg = 2 pi / 3", 60.0):
        grid = LogRadialGrid.make(257, 16.0, max_mode=2)
        ops = discretize_operator(-presets.cone2d_laplacian(2), grid)
        report = resolvent_scan(ops, 2 * math.pi / 3,
                                [10.0, 100.0, 1000.0, 10000.0])
        assert report.spectral_hits == ()
        mags = [r for r, _ in report.entries]
        vals = [v for _, v in report.entries]
        slope = np.polyfit(np.log(mags), np.log(vals), 1)[0]
        assert abs(slope) <= 0.1, (vals, slope)


def _mr_ratio(nodes, steps):
    grid = LogRadialGrid.make(nodes, 16.0, max_mode=4)
    ops = discretize_operator(-presets.cone2d_laplacian(4), grid)
    cfg = SolverConfig(grid=grid, horizon=0.3, steps=steps,
                       save_every=max(1, steps // 30))
    values = np.zeros((nodes, 9), dtype=complex)
    prof = radial_bump(grid.t)
    values[:, grid.mode_index(0)] = prof
    values[:, grid.mode_index(1)] = 0.25 * prof
    values[:, grid.mode_index(-1)] = 0.25 * prof
    f = GridFunction(grid, values)
    u0 = GridFunction.zeros(grid)
    traj = solve_linear(ops, f, u0, cfg)
    return mr_functional(traj, f, u0, 0.0, 2.0, 2.0).ratio


def test_criterion_11_mr_ratio_stable():
    with criterion(11, "maximal-regularity ratio finite and stable under one "
                       "refinement (< 5%)", 120.0):
        r1 = _mr_ratio(128, 60)
        r2 = _mr_ratio(256, 120)
        assert r1 is not None and math.isfinite(r1) and r1 > 0
        assert abs(r2 - r1) / r1 < 0.05, (r1, r2)


def test_criterion_12_witness_search():
    with criterion(12, "witness found for n=4, alpha in {1,2,3,10}; none for "
                       "n=3", 10.0):
        for alpha in (1.0, 2.0, 3.0, 10.0):
            witness = adm.quasilinear_witness(4, 1.0, alpha)
            assert witness is not None
            p, q = witness
            assert adm.mr_condition(4, p)
            assert adm.embed_tip(4, 1.0, p, q)
            assert alpha < adm.alpha_star(4, p, q)
        assert adm.quasilinear_witness(3, 1.0, 1.0) is None


def test_criterion_13_tip_asymptotics():
    with criterion(13, "planted (c0, c1) = (3, 2) recovered to 1e-6; heat "
                       "evolution log-free to 1e-4", 30.0):
        grid = LogRadialGrid.make(257, 16.0, max_mode=0)
        prof = reference_cutoff(grid.t) * (3.0 + 2.0 * np.log(grid.t)) \
            + grid.t**2 * np.cos(grid.t)
        planted = extract_tip_asymptotics(
            GridFunction.from_radial_profile(grid, prof))
        assert abs(planted.c0 - 3.0) < 1e-6
        assert abs(planted.c1 - 2.0) < 1e-6

        ops = discretize_operator(-presets.cone2d_laplacian(1), grid)
        cfg = SolverConfig(grid=grid, horizon=0.1, steps=50, save_every=10)
        u0 = GridFunction.from_radial_profile(grid,
                                              radial_bump(grid.t, 0.3, 0.7))
        traj = solve_linear(ops, None, u0, cfg)
        for snap in traj.snapshots[1:]:
            tip = extract_tip_asymptotics(snap)
            assert abs(tip.c1) < 1e-4
