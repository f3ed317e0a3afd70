"""Parabolic solves on the truncated 2-D cone.

The compact cone is realized as the unit disk: Fourier modes on the
circle cross a uniform grid in s = -log t, truncated at t = exp(-smax)
so the tip itself is never a node.  A second-order diagonal Fuchs
operator then decouples into one tridiagonal operator per mode,

    A_k = e^{2s} ( a2(t) d_s^2 + a1(t) d_s + a0_k(t) ) ,

with centered differences in s, a Dirichlet row at t = 1 carrying the
boundary data and a homogeneous Neumann row at the truncation radius
closing the system (smooth-at-the-tip fields are flat in s there).
Truncating plus decay selects the bounded-at-tip solution space; the
singular directions t^(-j) and log t are never discretized.

Linear problems u' + A u = f step implicitly per mode.  Quasilinear
problems u' - a(t^c u) Delta u = F(u) + g freeze the diffusivity at the
step start (lagged diffusivity) and converge each step with a few
fixed-point corrections against the mode-diagonal part of the frozen
coefficient.  Nonlinear terms are evaluated pointwise on a dealiased
collocation circle and re-expanded in modes.

Per-mode linear solves are independent and may run on a small thread
pool capped by the CONECALC_THREADS environment variable; results are
assembled by mode index, so the output is deterministic either way.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import (CoefficientError, DomainError, InconsistentInputError,
                     ModeNotFoundError, NonconvergenceError, ResolutionError,
                     SingularSolveError, UnsupportedOperatorError)
from .fuchs import FuchsOperator
from .spaces import GridFunction, LogRadialGrid, dealias_size
from . import admissibility, spaces

DEFAULT_PROBE_SEED = 2024


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("CONECALC_THREADS", "1")))
    except ValueError:
        return 1


def _map_modes(fn, items):
    workers = _thread_count()
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# mode operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeOperator:
    """Tridiagonal realization of one angular mode of a Fuchs operator.

    ``lower/diag/upper`` hold the interior stencil rows (entries at the
    two end rows are unused by solves, which replace them with the
    Dirichlet row at t = 1 and the Neumann closure at the truncation
    radius).  ``boundary_value`` is the Dirichlet datum for the mode.
    """

    mode: int
    grid: LogRadialGrid
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    boundary_value: complex = 0.0

    def apply(self, values: np.ndarray) -> np.ndarray:
        """A_k u with one-sided second-order stencils at both ends."""
        g = self.grid
        h = g.h
        ds = spaces._ds(values, h)
        ds2 = spaces._ds2(values, h)
        return self._amp * (self._a2 * ds2 + self._a1 * ds) + self._azero * values

    # cached coefficient arrays (set in discretize_mode)
    _amp: np.ndarray = field(default=None, repr=False, compare=False)
    _a2: np.ndarray = field(default=None, repr=False, compare=False)
    _a1: np.ndarray = field(default=None, repr=False, compare=False)
    _azero: np.ndarray = field(default=None, repr=False, compare=False)

    def step_banded(self, coeff: float | np.ndarray) -> np.ndarray:
        """Banded matrix of I + coeff * A_k with constraint rows installed.

        ``coeff`` may be a scalar or a per-node radial profile (used for
        frozen variable diffusivities).
        """
        n = len(self.grid.s)
        c = np.broadcast_to(np.asarray(coeff), (n,))
        ab = np.zeros((3, n), dtype=complex)
        ab[1, 0] = 1.0
        ab[1, 1:-1] = 1.0 + c[1:-1] * self.diag[1:-1]
        ab[0, 2:] = c[1:-1] * self.upper[1:-1]
        ab[2, :-2] = c[1:-1] * self.lower[1:-1]
        ab[1, -1] = 1.0
        ab[2, -2] = -1.0
        return ab

    def apply_interior(self, values: np.ndarray,
                       coeff: float | np.ndarray = 1.0) -> np.ndarray:
        """coeff * A_k u on interior rows, zero at the constraint rows."""
        n = len(values)
        c = np.broadcast_to(np.asarray(coeff), (n,))
        out = np.zeros_like(values)
        out[1:-1] = c[1:-1] * (self.lower[1:-1] * values[:-2]
                               + self.diag[1:-1] * values[1:-1]
                               + self.upper[1:-1] * values[2:])
        return out


def discretize_mode(op: FuchsOperator, mode: int, grid: LogRadialGrid,
                    boundary: complex = 0.0) -> ModeOperator:
    """Second-order finite-difference realization of one mode of ``op``."""
    if op.order != 2:
        raise UnsupportedOperatorError("the solver handles second-order operators")
    if mode not in grid.modes:
        raise ModeNotFoundError(f"mode {mode} is not on the grid")
    t = grid.t
    h = grid.h
    amp = np.exp(op.order * grid.s)
    a2 = np.asarray(op.coefficient_value(2, mode, t), dtype=complex) * np.ones_like(t)
    a1 = np.asarray(op.coefficient_value(1, mode, t), dtype=complex) * np.ones_like(t)
    a0 = np.asarray(op.coefficient_value(0, mode, t), dtype=complex) * np.ones_like(t)
    azero = amp * a0
    diag = amp * (-2.0 * a2 / h**2) + azero
    upper = amp * (a2 / h**2 + a1 / (2 * h))
    lower = amp * (a2 / h**2 - a1 / (2 * h))
    out = ModeOperator(mode=mode, grid=grid, lower=lower, diag=diag, upper=upper,
                       boundary_value=complex(boundary))
    object.__setattr__(out, "_amp", amp)
    object.__setattr__(out, "_a2", a2)
    object.__setattr__(out, "_a1", a1)
    object.__setattr__(out, "_azero", azero)
    return out


def discretize_operator(op: FuchsOperator, grid: LogRadialGrid,
                        boundary=None) -> tuple[ModeOperator, ...]:
    """ModeOperators for every grid mode, with per-mode Dirichlet data."""
    bc = _boundary_table(boundary, grid)
    return tuple(discretize_mode(op, m, grid, bc[j])
                 for j, m in enumerate(grid.modes))


def _boundary_table(boundary, grid: LogRadialGrid) -> np.ndarray:
    if boundary is None:
        return np.zeros(len(grid.modes), dtype=complex)
    if isinstance(boundary, dict):
        out = np.zeros(len(grid.modes), dtype=complex)
        for mode, value in boundary.items():
            out[grid.mode_index(mode)] = value
        return out
    arr = np.asarray(boundary, dtype=complex)
    if arr.shape != (len(grid.modes),):
        raise DomainError("boundary data must list one value per grid mode")
    return arr


def apply_operator(operators: tuple[ModeOperator, ...],
                   u: GridFunction) -> GridFunction:
    """Pointwise image A u, mode by mode."""
    values = np.empty_like(u.values)
    for j, mo in enumerate(operators):
        values[:, j] = mo.apply(u.values[:, j])
    return GridFunction(u.grid, values)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonlinearityTerm:
    """One additive right-hand-side term evaluated pointwise in physical space."""

    coeff: float
    kind: str  # abs_power | odd_power | lipschitz
    alpha: float | None = None
    fn_name: str = ""

    _FN = {"sin": np.sin, "tanh": np.tanh}

    def __post_init__(self):
        if self.kind == "abs_power":
            if self.alpha is None or self.alpha < 1:
                raise DomainError("|u|^alpha needs alpha >= 1")
        elif self.kind == "odd_power":
            if self.alpha is None or int(self.alpha) != self.alpha or self.alpha < 1:
                raise DomainError("u^alpha needs a natural alpha")
        elif self.kind == "lipschitz":
            if self.fn_name not in self._FN:
                raise DomainError(f"unknown Lipschitz nonlinearity {self.fn_name!r}")
        else:
            raise DomainError(f"unknown nonlinearity kind {self.kind!r}")

    def evaluate(self, v: np.ndarray) -> np.ndarray:
        if self.kind == "abs_power":
            return self.coeff * np.abs(v) ** self.alpha
        if self.kind == "odd_power":
            return self.coeff * v ** int(self.alpha)
        return self.coeff * self._FN[self.fn_name](np.real(v))

    def to_json_dict(self) -> dict:
        return {"coeff": self.coeff, "kind": self.kind, "alpha": self.alpha,
                "fn": self.fn_name or None}


def ginzburg_landau_terms() -> tuple[NonlinearityTerm, ...]:
    """The cubic reaction term u - u^3."""
    return (NonlinearityTerm(1.0, "odd_power", 1),
            NonlinearityTerm(-1.0, "odd_power", 3))


def evaluate_nonlinearity(terms, v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    for term in terms:
        out = out + term.evaluate(v)
    return out


@dataclass(frozen=True)
class Diffusion:
    """Coefficient family a(t^c u); ``one`` means a == 1 (pure Laplacian)."""

    kind: str = "one"  # one | poly | callable
    coeffs: tuple[float, ...] = ()
    c: float = 1.0
    fn: object = None

    def __post_init__(self):
        if self.kind not in ("one", "poly", "callable"):
            raise DomainError(f"unknown diffusion kind {self.kind!r}")
        if self.kind == "poly" and not self.coeffs:
            raise DomainError("polynomial diffusion needs coefficients")
        if self.kind == "callable" and not callable(self.fn):
            raise DomainError("callable diffusion needs a function")
        if self.c <= 0:
            raise DomainError("the weight exponent c must be positive")

    @property
    def is_identity(self) -> bool:
        return self.kind == "one"

    def evaluate(self, v: np.ndarray) -> np.ndarray:
        if self.kind == "one":
            return np.ones_like(np.real(v))
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(np.real(v), np.asarray(self.coeffs))
        return np.asarray(self.fn(np.real(v)), dtype=float)

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "coeffs": list(self.coeffs), "c": self.c,
                "fn": getattr(self.fn, "__name__", None) if self.fn else None}


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping configuration.

    ``scheme`` is implicit-Euler or Crank-Nicolson; steps must keep
    T/steps <= 0.1.  ``boundary`` carries the Dirichlet data at t = 1
    (per-mode table; zero when omitted).  ``q`` is the time
    integrability used by maximal-regularity reports.
    """

    grid: LogRadialGrid
    horizon: float
    steps: int
    scheme: str = "implicit-euler"
    boundary: object = None
    q: float = 2.0
    nonlinearity: tuple[NonlinearityTerm, ...] = ()
    diffusion: Diffusion = Diffusion()
    save_every: int = 1
    max_corrections: int = 8
    step_tol: float = 1e-10

    def __post_init__(self):
        if self.horizon <= 0:
            raise DomainError("time horizon must be positive")
        if self.steps < 1:
            raise DomainError("steps must be >= 1")
        if self.horizon / self.steps > 0.1 + 1e-12:
            raise DomainError("time step T/steps must not exceed 0.1")
        if self.scheme not in ("implicit-euler", "crank-nicolson"):
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if self.q <= 1:
            raise DomainError("q must lie in (1, inf)")
        if self.save_every < 1 or self.steps % self.save_every:
            raise DomainError("save_every must divide steps")
        object.__setattr__(self, "nonlinearity", tuple(self.nonlinearity))

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def theta(self) -> float:
        return 1.0 if self.scheme == "implicit-euler" else 0.5

    def to_json_dict(self) -> dict:
        return {
            "nodes": len(self.grid.s),
            "smax": self.grid.smax,
            "modes": list(self.grid.modes),
            "horizon": self.horizon,
            "steps": self.steps,
            "scheme": self.scheme,
            "q": self.q,
            "nonlinearity": [t.to_json_dict() for t in self.nonlinearity],
            "diffusion": self.diffusion.to_json_dict(),
            "save_every": self.save_every,
        }


@dataclass(frozen=True)
class Trajectory:
    """Uniformly spaced snapshots of an evolution, first one at time zero."""

    times: tuple[float, ...]
    snapshots: tuple[GridFunction, ...]
    config: SolverConfig
    operators: tuple[ModeOperator, ...]

    def __post_init__(self):
        if not self.times or self.times[0] != 0.0:
            raise DomainError("trajectories start at time zero")
        gaps = np.diff(self.times)
        if len(gaps) and np.max(np.abs(gaps - gaps[0])) > 1e-12:
            raise DomainError("snapshot times must be uniformly spaced")

    @property
    def final(self) -> GridFunction:
        return self.snapshots[-1]

    def to_csv(self, path) -> None:
        """Columns time, s, t, mode, re, im."""
        grid = self.config.grid
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("time,s,t,mode,re,im\n")
            for time, snap in zip(self.times, self.snapshots):
                for i in range(len(grid.s)):
                    for j, mode in enumerate(grid.modes):
                        v = snap.values[i, j]
                        fh.write(f"{time:.17g},{grid.s[i]:.17g},{grid.t[i]:.17g},"
                                 f"{mode},{v.real:.17g},{v.imag:.17g}\n")


# ---------------------------------------------------------------------------
# forcing resolution
# ---------------------------------------------------------------------------

def _forcing_resolver(f, cfg: SolverConfig):
    """Normalize the forcing argument to a function of the step index."""
    shape = (len(cfg.grid.s), len(cfg.grid.modes))
    zeros = np.zeros(shape, dtype=complex)

    def _checked(gf: GridFunction) -> np.ndarray:
        if gf.values.shape != shape:
            raise InconsistentInputError(
                f"forcing samples have shape {gf.values.shape}, grid wants {shape}"
            )
        return gf.values

    if f is None:
        return lambda m: zeros
    if isinstance(f, GridFunction):
        values = _checked(f)
        return lambda m: values
    if callable(f):
        return lambda m: _checked(f(m * cfg.dt))
    snapshots = list(f)
    if len(snapshots) != cfg.steps + 1:
        raise InconsistentInputError(
            f"forcing trajectory has {len(snapshots)} snapshots, "
            f"needs steps+1 = {cfg.steps + 1}"
        )
    return lambda m: _checked(snapshots[m])


# ---------------------------------------------------------------------------
# linear solve
# ---------------------------------------------------------------------------

def solve_linear(operators: tuple[ModeOperator, ...], f, u0: GridFunction,
                 cfg: SolverConfig) -> Trajectory:
    """March u' + A u = f with per-mode implicit stepping.

    ``operators`` realize A (for the heat equation pass the
    discretization of -Laplacian).  Dirichlet rows pin the boundary data
    carried by each ModeOperator; the Neumann closure row keeps the
    truncation radius passive.
    """
    grid = cfg.grid
    if u0.grid.s.shape != grid.s.shape or u0.grid.modes != grid.modes:
        raise DomainError("initial data must live on the solver grid")
    if len(operators) != len(grid.modes):
        raise DomainError("one ModeOperator per grid mode is required")
    force = _forcing_resolver(f, cfg)
    dt, theta = cfg.dt, cfg.theta

    mats = [mo.step_banded(dt * theta) for mo in operators]

    times = [0.0]
    saved = [u0]
    current = u0.values.copy()

    def _advance(args):
        j, rhs = args
        try:
            return solve_banded((1, 1), mats[j], rhs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise SingularSolveError(
                f"implicit step failed on mode {operators[j].mode}: {exc}"
            ) from exc

    for m in range(1, cfg.steps + 1):
        f_new = force(m)
        f_old = force(m - 1)
        rhs_cols = []
        for j, mo in enumerate(operators):
            rhs = current[:, j].copy()
            if theta < 1.0:
                rhs[1:-1] -= (1.0 - theta) * dt * mo.apply_interior(current[:, j])[1:-1]
            rhs[1:-1] += dt * (theta * f_new[1:-1, j]
                               + (1.0 - theta) * f_old[1:-1, j])
            rhs[0] = mo.boundary_value
            rhs[-1] = 0.0
            rhs_cols.append((j, rhs))
        cols = _map_modes(_advance, rhs_cols)
        current = np.column_stack(cols)
        if m % cfg.save_every == 0:
            times.append(m * dt)
            saved.append(GridFunction(grid, current.copy()))

    return Trajectory(times=tuple(times), snapshots=tuple(saved),
                      config=cfg, operators=operators)


# ---------------------------------------------------------------------------
# quasilinear solve
# ---------------------------------------------------------------------------

def solve_quasilinear(op: FuchsOperator, cfg: SolverConfig, g, u0: GridFunction,
                      laplacian_ops: tuple[ModeOperator, ...] = None) -> Trajectory:
    """March u' - a(t^c u) Delta u = F(u) + g with lagged diffusivity.

    Per step the coefficient w = a(t^c u_n) is evaluated in physical
    space and frozen; the implicit system is then solved by fixed-point
    corrections preconditioned with the angular mean of w (which keeps
    every linear solve mode-diagonal), iterated until the step residual
    drops below ``cfg.step_tol``.  The residual is row-equilibrated
    against the implicit system (the t^(-2) amplification makes raw
    defects near the tip meaningless at double precision).  Stagnation
    past ``cfg.max_corrections`` raises with the last residual; a
    nonpositive coefficient sample raises immediately.
    """
    grid = cfg.grid
    if u0.grid.s.shape != grid.s.shape or u0.grid.modes != grid.modes:
        raise DomainError("initial data must live on the solver grid")
    ops = laplacian_ops if laplacian_ops is not None \
        else discretize_operator(op, grid, cfg.boundary)
    force = _forcing_resolver(g, cfg)
    dt, theta = cfg.dt, cfg.theta
    diffusion = cfg.diffusion
    max_mode = max((abs(m) for m in grid.modes), default=0)
    n_theta = dealias_size(max_mode)
    tc = (grid.t ** diffusion.c)[:, None]

    def to_phys(vals):
        return spaces.modes_to_physical(vals, grid.modes, n_theta)

    def to_modes(phys):
        return spaces.physical_to_modes(phys, grid.modes)

    def laplace(vals):
        out = np.empty_like(vals)
        for j, mo in enumerate(ops):
            out[:, j] = mo.apply(vals[:, j])
        return out

    times = [0.0]
    saved = [u0]
    current = u0.values.copy()

    for m in range(1, cfg.steps + 1):
        g_new, g_old = force(m), force(m - 1)
        u_phys = to_phys(current)
        w_phys = diffusion.evaluate(np.real(to_phys(tc * current)))
        if np.min(w_phys) <= 0.0:
            raise CoefficientError(
                f"diffusion coefficient reached {np.min(w_phys):.3e} <= 0 at step {m}"
            )
        w_bar = np.mean(w_phys, axis=1)  # radial profile, mode-independent
        lap_old = laplace(current)
        w_lap_old = to_modes(w_phys * to_phys(lap_old))
        f_old = to_modes(evaluate_nonlinearity(cfg.nonlinearity, u_phys)) \
            if cfg.nonlinearity else np.zeros_like(current)

        base = current.copy()
        base[1:-1] += dt * ((1.0 - theta) * (w_lap_old[1:-1] + f_old[1:-1])
                            + theta * g_new[1:-1] + (1.0 - theta) * g_old[1:-1])

        mats = [mo.step_banded(-dt * theta * w_bar) for mo in ops]
        row_scale = np.column_stack([
            1.0 + dt * theta * w_bar * (np.abs(mo.lower) + np.abs(mo.diag)
                                        + np.abs(mo.upper))
            for mo in ops
        ])

        u_next = current.copy()
        residual = math.inf
        for _ in range(cfg.max_corrections):
            lap = laplace(u_next)
            w_lap = to_modes(w_phys * to_phys(lap))
            f_now = to_modes(evaluate_nonlinearity(cfg.nonlinearity, to_phys(u_next))) \
                if cfg.nonlinearity else np.zeros_like(current)
            correction = w_lap - np.column_stack(
                [ops[j].apply_interior(u_next[:, j], w_bar) for j in range(len(ops))]
            )
            rhs_all = base + dt * theta * (correction + f_now)
            cols = []
            for j, mo in enumerate(ops):
                rhs = rhs_all[:, j].copy()
                rhs[0] = mo.boundary_value
                rhs[-1] = 0.0
                try:
                    cols.append(solve_banded((1, 1), mats[j], rhs))
                except np.linalg.LinAlgError as exc:  # pragma: no cover
                    raise SingularSolveError(
                        f"quasilinear step failed on mode {mo.mode}: {exc}") from exc
            candidate = np.column_stack(cols)
            lap_c = laplace(candidate)
            w_lap_c = to_modes(w_phys * to_phys(lap_c))
            f_c = to_modes(evaluate_nonlinearity(cfg.nonlinearity, to_phys(candidate))) \
                if cfg.nonlinearity else np.zeros_like(current)
            res_field = candidate - base - dt * theta * (w_lap_c + f_c)
            residual = float(np.max(np.abs(res_field[1:-1]) / row_scale[1:-1]))
            u_next = candidate
            if residual < cfg.step_tol:
                break
        else:
            raise NonconvergenceError(
                f"step {m}: corrector stalled at residual {residual:.3e}",
                residual=residual,
            )
        current = u_next
        if m % cfg.save_every == 0:
            times.append(m * dt)
            saved.append(GridFunction(grid, current.copy()))

    return Trajectory(times=tuple(times), snapshots=tuple(saved),
                      config=cfg, operators=ops)


# ---------------------------------------------------------------------------
# maximal-regularity functional
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MRReport:
    """Discrete maximal-regularity functional of a linear trajectory.

    ``lhs`` is (int ||u'||^q + int ||A u||^q)^(1/q) with the base-space
    norm, ``rhs`` is (int ||f||^q + ||u0||_interp^q)^(1/q).  The
    initial-data norm is a surrogate: the smoothness-1 weighted norm at
    the interpolation weight gamma + 2/q', not a genuine
    interpolation-space norm, and is flagged as such.  ``ratio`` is only
    defined when rhs > 0.
    """

    lhs_time_derivative: float
    lhs_operator: float
    lhs: float
    rhs_forcing: float
    rhs_initial: float
    rhs: float
    ratio: float | None
    zero_data: bool
    interp_surrogate: bool = True

    def to_json_dict(self) -> dict:
        return {
            "lhs_time_derivative": self.lhs_time_derivative,
            "lhs_operator": self.lhs_operator,
            "lhs": self.lhs,
            "rhs_forcing": self.rhs_forcing,
            "rhs_initial": self.rhs_initial,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "zero_data": self.zero_data,
            "initial_norm": "SURROGATE" if self.interp_surrogate else "EXACT",
        }


def mr_functional(traj: Trajectory, f, u0: GridFunction, gamma: float,
                  p_space: float, q: float) -> MRReport:
    """Measure the maximal-regularity quotient of a linear solve.

    Time derivatives are forward differences of the snapshots, A is the
    stored mode discretization, space norms are the weighted quadrature
    norms at (0, gamma, p_space), and time integrals are right-endpoint
    sums matching the implicit stepping.
    """
    cfg = traj.config
    grid = cfg.grid
    if len(traj.snapshots) < 2:
        raise DomainError("need at least two snapshots")
    dtau = traj.times[1] - traj.times[0]
    force = _forcing_resolver(f, cfg)
    stride = cfg.save_every

    def e0(values: np.ndarray) -> float:
        return spaces.weighted_norm(GridFunction(grid, values), 0, gamma, p_space)

    int_du = 0.0
    int_au = 0.0
    int_f = 0.0
    for m in range(1, len(traj.snapshots)):
        du = (traj.snapshots[m].values - traj.snapshots[m - 1].values) / dtau
        int_du += dtau * e0(du) ** q
        au = np.column_stack([mo.apply(traj.snapshots[m].values[:, j])
                              for j, mo in enumerate(traj.operators)])
        int_au += dtau * e0(au) ** q
        int_f += dtau * e0(force(m * stride)) ** q

    s_i, delta, _loss = admissibility.interpolation_params(
        2.0, gamma + 2.0, 0.0, gamma, 1.0 / q, q)
    del s_i  # the surrogate fixes smoothness 1; only the weight is used
    rhs_initial = spaces.weighted_norm(u0, 1, delta, p_space)

    lhs = (int_du + int_au) ** (1.0 / q)
    rhs = (int_f + rhs_initial ** q) ** (1.0 / q)
    zero_data = rhs == 0.0
    if zero_data and lhs > 1e-12:
        raise InconsistentInputError("zero data produced a nonzero solution")
    # an infinite surrogate (data outside the interpolation space) leaves
    # the quotient undefined rather than vacuously zero
    ratio = None if (zero_data or not math.isfinite(rhs)) else lhs / rhs
    return MRReport(
        lhs_time_derivative=int_du ** (1.0 / q),
        lhs_operator=int_au ** (1.0 / q),
        lhs=lhs,
        rhs_forcing=int_f ** (1.0 / q),
        rhs_initial=rhs_initial,
        rhs=rhs,
        ratio=ratio,
        zero_data=zero_data,
    )


# ---------------------------------------------------------------------------
# resolvent scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResolventReport:
    """sup over probes and modes of |lambda| ||(lambda - A)^(-1) b|| / ||b||."""

    phi: float
    entries: tuple[tuple[float, float], ...]  # (|lambda|, scaled sup)
    overall_max: float
    spectral_hits: tuple[float, ...]

    def to_json_dict(self) -> dict:
        return {
            "phi": self.phi,
            "entries": [{"magnitude": r, "scaled_norm": v} for r, v in self.entries],
            "overall_max": self.overall_max,
            "spectral_hits": list(self.spectral_hits),
        }


def _reduced_tridiag(mo: ModeOperator):
    """Interior system with the Dirichlet column dropped and the Neumann row folded."""
    lower = mo.lower[1:-1].copy()
    diag = mo.diag[1:-1].copy()
    upper = mo.upper[1:-1].copy()
    diag[-1] += upper[-1]   # u_{N-1} = u_{N-2}
    upper[-1] = 0.0
    lower[0] = 0.0          # u_0 = 0
    return lower, diag, upper


def _reduced_weights(grid: LogRadialGrid) -> np.ndarray:
    """Quadrature weights of the base-space norm (p = 2, weight gamma_2) inside."""
    w = np.exp(-2.0 * grid.s[1:-1]) * grid.h * 2.0 * np.pi
    return w


def resolvent_scan(operators: tuple[ModeOperator, ...], phi: float,
                   magnitudes, probes: int = 4, refine: int = 2,
                   seed: int = DEFAULT_PROBE_SEED) -> ResolventReport:
    """Probe the resolvent decay along the ray arg(lambda) = phi.

    For each lambda = r e^{i phi} and each mode the reduced interior
    system (lambda - A_k) x = b is solved over a seeded probe basis;
    reported per magnitude is the sup of |lambda| ||x|| / ||b|| in the
    weighted base norm.  Each raw Gaussian probe is sharpened by
    ``refine`` inverse-power passes (re-solving with the normalized
    previous solution), which aligns it with the dominant singular
    direction; the discrete resolvents here are normal, so the refined
    ratios approach the operator norm from below.  A singular solve is
    recorded as a spectral hit at that magnitude instead of a value.
    """
    if not (math.pi / 2.0 < phi <= math.pi):
        raise DomainError("the ray must satisfy pi/2 < phi <= pi")
    mags = [float(r) for r in magnitudes]
    if not mags:
        return ResolventReport(phi=phi, entries=(), overall_max=0.0,
                               spectral_hits=())
    rng = np.random.default_rng(seed)
    entries = []
    hits = []
    grid = operators[0].grid
    w = _reduced_weights(grid)
    nred = len(grid.s) - 2
    probe_table = {
        mo.mode: rng.standard_normal((probes, nred))
        + 1j * rng.standard_normal((probes, nred))
        for mo in operators
    }

    def wnorm(x):
        return math.sqrt(float(np.sum(w * np.abs(x) ** 2)))

    for r in mags:
        lam = r * complex(math.cos(phi), math.sin(phi))
        best = 0.0
        singular = False
        for mo in operators:
            lower, diag, upper = _reduced_tridiag(mo)
            ab = np.zeros((3, nred), dtype=complex)
            ab[1] = lam - diag
            ab[0, 1:] = -upper[:-1]
            ab[2, :-1] = -lower[1:]
            for b0 in probe_table[mo.mode]:
                b = b0
                try:
                    for _ in range(refine + 1):
                        x = solve_banded((1, 1), ab, b)
                        if not np.all(np.isfinite(x)):
                            raise np.linalg.LinAlgError("non-finite solve")
                        ratio = wnorm(x) / wnorm(b)
                        b = x / wnorm(x)
                except np.linalg.LinAlgError:
                    singular = True
                    break
                best = max(best, r * ratio)
            if singular:
                break
        if singular:
            hits.append(r)
        else:
            entries.append((r, best))
    overall = max((v for _r, v in entries), default=0.0)
    return ResolventReport(phi=phi, entries=tuple(entries), overall_max=overall,
                           spectral_hits=tuple(hits))


# ---------------------------------------------------------------------------
# tip asymptotics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TipAsymptotics:
    """Fit u_0(t) ~ c0 + c1 log t near the tip, with the weighted misfit."""

    c0: complex
    c1: complex
    residual: float

    def to_json_dict(self) -> dict:
        return {
            "c0": {"re": self.c0.real, "im": self.c0.imag},
            "c1": {"re": self.c1.real, "im": self.c1.imag},
            "residual": self.residual,
        }


def extract_tip_asymptotics(snapshot: GridFunction,
                            t_cut: float = 0.1) -> TipAsymptotics:
    """Least-squares fit of the mode-0 profile against {1, log t} for t <= t_cut.

    Weights grow like 1/t^2 toward the tip, so the fit reads the
    coefficients off the deepest nodes where the constant-plus-log
    ansatz dominates any smooth O(t^2) remainder.  Solutions evolving in
    the bounded-at-tip domain must show |c1| at noise level.
    """
    grid = snapshot.grid
    mask = grid.t <= t_cut
    if int(np.count_nonzero(mask)) < 4:
        raise ResolutionError(
            f"fewer than 4 nodes below t = {t_cut}; refine the grid or deepen smax"
        )
    s = grid.s[mask]
    y = snapshot.mode_profile(0)[mask]
    # 1/t^2 weights, normalized at the deepest node to avoid overflow
    w = np.exp(2.0 * (s - s[-1]))
    sw = np.sqrt(w)
    sbar = float(np.sum(w * s) / np.sum(w))
    design = np.column_stack([np.ones_like(s), -(s - sbar)])
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    c1 = coef[1]
    c0 = coef[0] + c1 * sbar
    fit = c0 + c1 * (-s)
    residual = math.sqrt(float(np.sum(w * np.abs(y - fit) ** 2) / np.sum(w)))
    return TipAsymptotics(c0=complex(c0), c1=complex(c1), residual=residual)
