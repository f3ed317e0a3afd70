"""Batch command line: analysis and solver workflows with JSON reports.

Every subcommand validates its inputs, runs the owning module, and
writes one machine-readable JSON report (plus CSV for trajectories).
Exit codes: 0 success, 2 validation problem, 3 numeric failure.
Identical requests produce byte-identical reports; random seeds are
explicit flags with fixed defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import admissibility, extensions, fuchs, presets, solver, spaces
from .errors import (CoefficientError, ConecalcError, DivergentTransformError,
                     DomainError, NonconvergenceError, SingularSolveError)
from .reports import render_json, write_report

VALIDATION_EXIT = 2
NUMERIC_EXIT = 3

_NUMERIC_ERRORS = (NonconvergenceError, SingularSolveError,
                   DivergentTransformError, CoefficientError)

SUBCOMMANDS = ("analyze", "extension", "alpha-star", "feasible", "norm",
               "solve-heat", "solve-quasilinear", "resolvent-scan")


@dataclass(frozen=True)
class CommandRequest:
    """Programmatic request: one subcommand, flag values, output path."""

    subcommand: str
    parameters: dict = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise DomainError(f"unknown subcommand {self.subcommand!r}")

    def to_argv(self) -> list[str]:
        argv = [self.subcommand]
        for key, value in self.parameters.items():
            flag = "--" + str(key).replace("_", "-")
            if isinstance(value, bool):
                if value:
                    argv.append(flag)
            elif isinstance(value, (list, tuple)):
                argv.append(flag)
                argv.extend(str(v) for v in value)
            else:
                argv.extend([flag, str(value)])
        if self.output:
            argv.extend(["--output", self.output])
        return argv


def run(request: CommandRequest) -> int:
    """Dispatch a request to its owning module; returns the exit status."""
    return main(request.to_argv())


# ---------------------------------------------------------------------------
# small shared helpers
# ---------------------------------------------------------------------------

def _emit(doc: dict, output: str | None) -> None:
    text = render_json(doc)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _load_operator(args) -> fuchs.FuchsOperator:
    if getattr(args, "operator", None):
        with open(args.operator, "r", encoding="utf-8") as fh:
            return fuchs.FuchsOperator.from_json_dict(json.load(fh))
    return presets.operator_from_preset(args.preset, getattr(args, "n", None),
                                        getattr(args, "max_mode", None))


def _radial_bump(t: np.ndarray, a: float = 0.2, b: float = 0.8) -> np.ndarray:
    y = np.zeros_like(t)
    m = (t > a) & (t < b)
    x = (t[m] - a) / (b - a)
    y[m] = np.exp(1.0 - 1.0 / (4.0 * x * (1.0 - x)))
    return y


def _initial_data(name: str, grid: spaces.LogRadialGrid,
                  scale: float = 1.0) -> spaces.GridFunction:
    from scipy.special import j0
    j01 = 2.404825557695773
    if name == "zero":
        return spaces.GridFunction.zeros(grid)
    if name == "bessel":
        return spaces.GridFunction.from_radial_profile(
            grid, scale * j0(j01 * grid.t))
    if name == "bump":
        return spaces.GridFunction.from_radial_profile(
            grid, scale * _radial_bump(grid.t))
    if name == "bump-cos":
        values = np.zeros((len(grid.s), len(grid.modes)), dtype=complex)
        prof = 0.5 * scale * _radial_bump(grid.t)
        values[:, grid.mode_index(1)] = prof
        values[:, grid.mode_index(-1)] = prof
        return spaces.GridFunction(grid, values)
    raise DomainError(f"unknown initial-data preset {name!r}")


def _forcing_data(name: str, grid: spaces.LogRadialGrid,
                  scale: float = 1.0):
    if name in ("zero", "none"):
        return None
    if name == "bump":
        values = np.zeros((len(grid.s), len(grid.modes)), dtype=complex)
        prof = _radial_bump(grid.t)
        values[:, grid.mode_index(0)] = scale * prof
        if 1 in grid.modes:
            values[:, grid.mode_index(1)] = 0.25 * scale * prof
            values[:, grid.mode_index(-1)] = 0.25 * scale * prof
        return spaces.GridFunction(grid, values)
    raise DomainError(f"unknown forcing preset {name!r}")


def _nonlinearity_terms(spec) -> tuple[solver.NonlinearityTerm, ...]:
    if spec in (None, "none", []):
        return ()
    if spec == "gl":
        return solver.ginzburg_landau_terms()
    if isinstance(spec, str):
        raise DomainError(f"unknown nonlinearity preset {spec!r}")
    terms = []
    for entry in spec:
        terms.append(solver.NonlinearityTerm(
            coeff=float(entry.get("coeff", 1.0)),
            kind=str(entry["kind"]),
            alpha=entry.get("alpha"),
            fn_name=entry.get("fn", "") or "",
        ))
    return tuple(terms)


def _diffusion_from(spec) -> solver.Diffusion:
    if spec is None:
        return solver.Diffusion()
    return solver.Diffusion(kind=str(spec.get("kind", "poly")),
                            coeffs=tuple(float(c) for c in spec.get("coeffs", ())),
                            c=float(spec.get("c", 1.0)))


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------

def _cmd_analyze(args) -> int:
    op = _load_operator(args)
    sector = fuchs.sector_clear(op, args.theta, args.samples)
    line = (op.n + 1) / 2.0 - args.gamma
    invertible = fuchs.conormal_invertible_on_line(op, args.gamma)
    doc = {
        "kind": "analyze",
        "operator": op.to_json_dict(),
        "gamma": args.gamma,
        "sector": sector.to_json_dict(),
        "conormal_line": {"re": line, "invertible": invertible},
        "elliptic": extensions.elliptic_wrt_weight(op, args.gamma, args.theta,
                                                   args.samples),
        "unique_closure": extensions.unique_closure(op, args.gamma),
        "min_domain": extensions.min_domain_description(
            op, args.gamma, args.p).to_json_dict(),
    }
    _emit(doc, args.output)
    return 0


def _cmd_extension(args) -> int:
    op = _load_operator(args)
    if args.gamma is None:
        gamma = spaces.gamma_p(op.n, args.p)
    else:
        gamma = args.gamma
    report = extensions.extension_basis(op, gamma, args.p)
    doc = {"kind": "extension", **report.to_json_dict()}
    _emit(doc, args.output)
    return 0


def _cmd_alpha_star(args) -> int:
    for name, v in (("p", args.p), ("q", args.q)):
        if v <= 1.0 or not math.isfinite(v):
            raise DomainError(f"{name} must lie in (1, inf), got {v}")
    value = admissibility.alpha_star(args.n, args.p, args.q)
    doc = {
        "kind": "alpha_star",
        "query": {"n": args.n, "p": args.p, "q": args.q},
        "alpha_star": value,
    }
    _emit(doc, args.output)
    return 0


def _cmd_feasible(args) -> int:
    query = admissibility.AdmissibilityQuery(
        n=args.n, c=args.c, alpha=args.alpha, p=args.p, q=args.q)
    report = admissibility.evaluate(query)
    doc = {"kind": "feasible", **report.to_json_dict()}
    _emit(doc, args.output)
    return 0


def _cmd_norm(args) -> int:
    if args.input:
        u = spaces.grid_function_from_csv(args.input, n=args.n)
    else:
        grid = spaces.LogRadialGrid.make(args.nodes, args.smax, args.max_mode,
                                         n=args.n)
        if args.profile == "t2":
            u = spaces.GridFunction.from_radial_profile(grid, grid.t ** 2)
        elif args.profile == "bump":
            u = spaces.GridFunction.from_radial_profile(grid, _radial_bump(grid.t))
        else:
            raise DomainError(f"unknown profile {args.profile!r}")
    value = spaces.weighted_norm(u, args.s, args.gamma, args.p)
    doc = {
        "kind": "weighted_norm",
        "params": {"s": args.s, "gamma": args.gamma, "p": args.p,
                   "n": u.grid.n, "nodes": len(u.grid.s),
                   "modes": list(u.grid.modes)},
        "value": value,
    }
    _emit(doc, args.output)
    return 0


def _trajectory_document(traj: solver.Trajectory, mr_report, tips,
                         csv_name: str) -> dict:
    final_norm = spaces.weighted_norm(traj.final, 0, 0.0, 2.0)
    return {
        "kind": "trajectory",
        "config": traj.config.to_json_dict(),
        "csv": csv_name,
        "final_norm": final_norm,
        "mr": mr_report.to_json_dict() if mr_report else None,
        "tip_asymptotics": [
            {"time": time, **tip.to_json_dict()} for time, tip in tips
        ] if tips is not None else None,
    }


def _solve_common(args, quasilinear: bool) -> int:
    grid = spaces.LogRadialGrid.make(args.nodes, args.smax, args.max_mode)
    op = presets.cone2d_laplacian(args.max_mode or 1)
    spec = getattr(args, "nonlinearity", None)
    if spec == "abs-power":
        if getattr(args, "alpha", None) is None or args.alpha < 1:
            raise DomainError("--nonlinearity abs-power needs --alpha >= 1")
        nonlinearity = (solver.NonlinearityTerm(1.0, "abs_power", args.alpha),)
    else:
        nonlinearity = _nonlinearity_terms(spec)
    diffusion = solver.Diffusion()
    if quasilinear and args.a_coeffs:
        diffusion = solver.Diffusion(kind="poly",
                                     coeffs=tuple(args.a_coeffs), c=args.c)
    save_every = args.save_every or max(1, args.steps // 16)
    if args.steps % save_every:
        save_every = 1
    cfg = solver.SolverConfig(
        grid=grid, horizon=args.horizon, steps=args.steps, scheme=args.scheme,
        q=args.q, nonlinearity=nonlinearity, diffusion=diffusion,
        save_every=save_every,
    )
    u0 = _initial_data(args.u0, grid, args.u0_scale)
    f = _forcing_data(args.forcing, grid)
    if quasilinear:
        traj = solver.solve_quasilinear(op, cfg, f, u0)
        mr_report = None
    else:
        ops = solver.discretize_operator(-op, grid)
        traj = solver.solve_linear(ops, f, u0, cfg)
        gamma = spaces.gamma_p(1, args.p)
        mr_report = solver.mr_functional(traj, f, u0, gamma, args.p, args.q)
    tips = [(time, solver.extract_tip_asymptotics(snap))
            for time, snap in zip(traj.times, traj.snapshots)]
    os.makedirs(args.outdir, exist_ok=True)
    csv_path = os.path.join(args.outdir, "trajectory.csv")
    traj.to_csv(csv_path)
    doc = _trajectory_document(traj, mr_report, tips, "trajectory.csv")
    report_path = os.path.join(args.outdir, "report.json")
    write_report(report_path, doc)
    sys.stdout.write(render_json({"kind": "pointer", "report": report_path,
                                  "csv": csv_path}))
    return 0


def _cmd_solve_heat(args) -> int:
    return _solve_common(args, quasilinear=False)


def _cmd_solve_quasilinear(args) -> int:
    return _solve_common(args, quasilinear=True)


def _cmd_resolvent_scan(args) -> int:
    grid = spaces.LogRadialGrid.make(args.nodes, args.smax, args.max_mode)
    op = presets.cone2d_laplacian(args.max_mode or 1)
    ops = solver.discretize_operator(-op, grid)
    magnitudes = [float(x) for x in args.magnitudes.split(",") if x.strip()]
    report = solver.resolvent_scan(ops, args.phi, magnitudes,
                                   probes=args.probes, seed=args.seed)
    doc = {"kind": "resolvent_scan",
           "grid": {"nodes": args.nodes, "smax": args.smax,
                    "max_mode": args.max_mode},
           "seed": args.seed,
           **report.to_json_dict()}
    _emit(doc, args.output)
    return 0


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def _scenario_path(name: str) -> str:
    if os.path.exists(name):
        return name
    base = name if name.endswith(".json") else name + ".json"
    ref = resources.files("conecalc").joinpath("scenarios", base)
    if ref.is_file():
        return str(ref)
    raise DomainError(f"scenario {name!r} is neither a file nor a bundled scenario")


def _require(doc: dict, pointer: str, key: str, kind=None):
    if key not in doc:
        raise DomainError(f"scenario field {pointer}.{key} is missing")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise DomainError(f"scenario field {pointer}.{key} has the wrong type")
    return value


def run_scenario(name: str, force: bool = False,
                 outdir: str = "scenario-out") -> tuple[int, dict]:
    """Chain feasibility -> operator -> solve -> reports into one document.

    Refuses to run the solve (exit 2) when the feasibility block finds
    no witness, unless ``force`` is set.
    """
    path = _scenario_path(name)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            scenario = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"scenario JSON is invalid: {exc}") from exc

    doc: dict = {"kind": "scenario", "name": scenario.get("name", name),
                 "forced": bool(force)}

    feas_block = scenario.get("feasibility")
    refused = False
    if feas_block is not None:
        query = admissibility.AdmissibilityQuery(
            n=int(_require(feas_block, "feasibility", "n", (int,))),
            c=float(_require(feas_block, "feasibility", "c", (int, float))),
            alpha=float(_require(feas_block, "feasibility", "alpha", (int, float))),
        )
        feas = admissibility.evaluate(query)
        doc["feasibility"] = feas.to_json_dict()
        if not feas.feasible and not force:
            refused = True
    else:
        doc["feasibility"] = None

    solve_block = _require(scenario, "(root)", "solve", dict)
    nodes = int(_require(solve_block, "solve", "nodes", int))
    smax = float(solve_block.get("smax", spaces.DEFAULT_SMAX))
    max_mode = int(_require(solve_block, "solve", "max_mode", int))
    kind = _require(solve_block, "solve", "kind", str)
    if kind not in ("heat", "quasilinear"):
        raise DomainError("scenario field solve.kind must be heat or quasilinear")

    op_block = scenario.get("operator", {"preset": "cone2d"})
    op = presets.operator_from_preset(op_block.get("preset", "cone2d"),
                                      op_block.get("n"),
                                      op_block.get("max_mode", max_mode))
    doc["operator"] = op.to_json_dict()

    doc["refused"] = refused
    if refused:
        doc["solve"] = None
        os.makedirs(outdir, exist_ok=True)
        write_report(os.path.join(outdir, "scenario_report.json"), doc)
        return VALIDATION_EXIT, doc

    grid = spaces.LogRadialGrid.make(nodes, smax, max_mode)
    steps = int(_require(solve_block, "solve", "steps", int))
    save_every = int(solve_block.get("save_every", max(1, steps // 10)))
    if steps % save_every:
        save_every = 1
    cfg = solver.SolverConfig(
        grid=grid,
        horizon=float(_require(solve_block, "solve", "horizon", (int, float))),
        steps=steps,
        scheme=str(solve_block.get("scheme", "implicit-euler")),
        q=float(solve_block.get("q", 2.0)),
        nonlinearity=_nonlinearity_terms(solve_block.get("nonlinearity")),
        diffusion=_diffusion_from(solve_block.get("diffusion")),
        save_every=save_every,
    )
    u0_block = solve_block.get("u0", {"preset": "zero"})
    u0 = _initial_data(u0_block.get("preset", "zero"), grid,
                       float(u0_block.get("scale", 1.0)))
    f_block = solve_block.get("forcing", {"preset": "zero"})
    f = _forcing_data(f_block.get("preset", "zero"), grid,
                      float(f_block.get("scale", 1.0)))

    reports_block = scenario.get("reports", {})
    p_space = float(solve_block.get("p", 2.0))

    if kind == "heat":
        ops = solver.discretize_operator(-op, grid)
        traj = solver.solve_linear(ops, f, u0, cfg)
        mr_report = None
        if reports_block.get("mr", kind == "heat"):
            gamma = spaces.gamma_p(1, p_space)
            mr_report = solver.mr_functional(traj, f, u0, gamma, p_space, cfg.q)
    else:
        traj = solver.solve_quasilinear(op, cfg, f, u0)
        mr_report = None

    tips = None
    if reports_block.get("tip_asymptotics", True):
        tips = [(time, solver.extract_tip_asymptotics(snap))
                for time, snap in zip(traj.times, traj.snapshots)]

    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, "trajectory.csv")
    traj.to_csv(csv_path)
    doc["solve"] = _trajectory_document(traj, mr_report, tips, "trajectory.csv")
    write_report(os.path.join(outdir, "scenario_report.json"), doc)
    return 0, doc


def _cmd_scenario(args) -> int:
    code, doc = run_scenario(args.scenario, force=args.force, outdir=args.outdir)
    sys.stdout.write(render_json(doc))
    if code != 0:
        sys.stderr.write("scenario refused: feasibility check found no witness "
                         "(use --force to run anyway)\n")
    return code


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_operator_flags(sp) -> None:
    sp.add_argument("--preset", default="cone2d",
                    choices=["cone2d", "cone-sphere", "cone-sphere-n"])
    sp.add_argument("--operator", help="JSON operator document", default=None)
    sp.add_argument("--n", type=int, default=None,
                    help="cross-section dimension for sphere presets")
    sp.add_argument("--max-mode", type=int, default=None, dest="max_mode")


def _add_solver_flags(sp, quasilinear: bool) -> None:
    sp.add_argument("--nodes", type=int, default=256)
    sp.add_argument("--max-mode", type=int, default=4, dest="max_mode")
    sp.add_argument("--smax", type=float, default=spaces.DEFAULT_SMAX)
    sp.add_argument("--horizon", "--T", type=float, default=0.2, dest="horizon")
    sp.add_argument("--steps", type=int, default=64)
    sp.add_argument("--scheme", default="implicit-euler",
                    choices=["implicit-euler", "crank-nicolson"])
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--u0", default="bump",
                    choices=["zero", "bessel", "bump", "bump-cos"])
    sp.add_argument("--u0-scale", type=float, default=1.0, dest="u0_scale")
    sp.add_argument("--forcing", default="zero", choices=["zero", "bump"])
    sp.add_argument("--save-every", type=int, default=None, dest="save_every")
    sp.add_argument("--outdir", default="conecalc-out")
    if quasilinear:
        sp.add_argument("--c", type=float, default=1.0)
        sp.add_argument("--a-coeffs", type=float, nargs="*", default=(),
                        dest="a_coeffs",
                        help="polynomial coefficients of the diffusion a(v)")
        sp.add_argument("--nonlinearity", default="none",
                        choices=["none", "gl", "abs-power"])
        sp.add_argument("--alpha", type=float, default=None,
                        help="exponent for --nonlinearity abs-power")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conecalc",
        description="Cone-operator analysis and desk-scale parabolic solves",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("analyze", help="symbols, sector and weight checks")
    _add_operator_flags(sp)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--theta", type=float, default=math.pi / 2)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--samples", type=int, default=fuchs.DEFAULT_SECTOR_SAMPLES)
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=_cmd_analyze)

    sp = sub.add_parser("extension", help="singular-function basis and rank")
    _add_operator_flags(sp)
    sp.add_argument("--gamma", type=float, default=None,
                    help="defaults to the natural weight for p")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=_cmd_extension)

    sp = sub.add_parser("alpha-star", help="critical nonlinearity exponent")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=_cmd_alpha_star)

    sp = sub.add_parser("feasible", help="witness search for quasilinear well-posedness")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--q", type=float, default=None)
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=_cmd_feasible)

    sp = sub.add_parser("norm", help="weighted Sobolev norm of sampled data")
    sp.add_argument("--input", default=None, help="GridFunction CSV")
    sp.add_argument("--profile", default=None, choices=["t2", "bump"])
    sp.add_argument("--nodes", type=int, default=512)
    sp.add_argument("--smax", type=float, default=spaces.DEFAULT_SMAX)
    sp.add_argument("--max-mode", type=int, default=0, dest="max_mode")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=_cmd_norm)

    sp = sub.add_parser("solve-heat", help="linear heat flow on the disk cone")
    _add_solver_flags(sp, quasilinear=False)
    sp.set_defaults(fn=_cmd_solve_heat)

    sp = sub.add_parser("solve-quasilinear",
                        help="quasilinear flow with lagged diffusivity")
    _add_solver_flags(sp, quasilinear=True)
    sp.set_defaults(fn=_cmd_solve_quasilinear)

    sp = sub.add_parser("resolvent-scan", help="resolvent decay along a ray")
    sp.add_argument("--phi", type=float, default=2 * math.pi / 3)
    sp.add_argument("--magnitudes", default="10,100,1000,10000")
    sp.add_argument("--nodes", type=int, default=256)
    sp.add_argument("--smax", type=float, default=spaces.DEFAULT_SMAX)
    sp.add_argument("--max-mode", type=int, default=2, dest="max_mode")
    sp.add_argument("--probes", type=int, default=4)
    sp.add_argument("--seed", type=int, default=solver.DEFAULT_PROBE_SEED)
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=_cmd_resolvent_scan)

    sp = sub.add_parser("scenario", help="run a bundled or local scenario file")
    sp.add_argument("scenario")
    sp.add_argument("--force", action="store_true")
    sp.add_argument("--outdir", default="scenario-out")
    sp.set_defaults(fn=_cmd_scenario)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except _NUMERIC_ERRORS as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return NUMERIC_EXIT
    except (ConecalcError, ValueError, OSError, KeyError) as exc:
        sys.stderr.write(f"invalid request: {exc}\n")
        return VALIDATION_EXIT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
