"""Command-line experiment runner.

    fractorus solve <config>
    fractorus sweep <config>
    fractorus convergence <config>
    fractorus diagnose <config>
    fractorus stable-density --beta <b> --xmax <X> --n <N> [--out FILE]

Outputs are CSV files under the configured out_dir. Failures print one JSON
line on stderr and exit with 2 (config), 3 (solver) or 4 (invariant).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .config import ConfigError, RunConfig, load_config
from .fracops import IllConditionedEigenbasisError, MLConvergenceError, TimeGrid
from .galerkin import (
    ProblemSpec,
    Trajectory,
    assemble,
    field_on,
    mass_drift,
    solve_ml,
    solve_stepping,
)
from .spectral import SpectralField, grid_points, to_grid
from .stable import QuadratureError, stable_density

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INVARIANT = 4

MASS_TOL = 1e-8
AUDIT_TOL = 1e-8
IMAG_TOL = 1e-8
AUDIT_SAMPLES = 20


class InvariantViolation(RuntimeError):
    pass


class SolverError(RuntimeError):
    pass


@dataclass
class RunOutput:
    files: list[Path] = field(default_factory=list)
    diagnostics: dict[str, object] = field(default_factory=dict)


# --- CSV ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest round-trip decimal
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")
    return path


# --- solving -----------------------------------------------------------------------


def _problem(cfg: RunConfig) -> ProblemSpec:
    # construction warnings (beta <= 1/2) go to the log once instead of stderr twice
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        problem = cfg.problem()
        lat = cfg.lattice()
        f0 = field_on(problem.source, lat, 0.0 if problem.source_time_dependent else None)
        scale = max(1.0, float(np.max(np.abs(f0.coeffs), initial=0.0)))
        zero_mean = abs(f0.coeffs[lat.zero_index]) <= 1e-12 * scale
        problem = ProblemSpec(**{**problem.__dict__, "zero_mean_source": bool(zero_mean)})
    for message in dict.fromkeys(str(w.message) for w in caught):
        log.warning(message)
    return problem


def _grid_indices(times, grid: TimeGrid) -> list[int]:
    out = []
    for t in times:
        j = int(round(t / grid.dt))
        if not math.isclose(j * grid.dt, t, rel_tol=1e-9, abs_tol=1e-12):
            raise ConfigError(
                f"snapshot t={t} is not a node of the {grid.n}-step grid", key="snapshots"
            )
        out.append(j)
    return out


def integrate(cfg: RunConfig, problem: ProblemSpec, full_grid: bool) -> Trajectory:
    """Solve per cfg.solver. The propagator evaluates only the snapshot times
    unless full_grid is set; the stepper always runs the whole grid."""
    system = assemble(problem, cfg.lattice())
    grid = TimeGrid(cfg.T, cfg.n_steps)
    use_ml = cfg.solver == "ml" or (cfg.solver == "auto" and system.autonomous)
    if cfg.solver == "ml" and not system.autonomous:
        raise ConfigError("solver = ml needs time-independent potential and source", key="solver")
    try:
        if use_ml:
            times = grid.t if full_grid else np.unique(np.r_[0.0, cfg.snapshot_times])
            try:
                return solve_ml(system, times)
            except IllConditionedEigenbasisError as exc:
                if cfg.solver == "ml":
                    raise SolverError(str(exc)) from exc
                log.warning("propagator unavailable (%s); using the stepper", exc)
        return solve_stepping(system, grid)
    except MLConvergenceError as exc:
        raise SolverError(str(exc)) from exc
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"linear algebra failure: {exc}") from exc


def _snapshot_rows(traj: Trajectory, times, n: int):
    lat = traj.lattice
    coords = [c.ravel() for c in grid_points(lat.d, n)]
    worst = 0.0
    for t in times:
        vals = to_grid(traj.field_at(t), n).ravel()
        worst = max(worst, float(np.max(np.abs(vals.imag), initial=0.0)))
        for i in range(vals.size):
            yield [c[i] for c in coords] + [t, vals.real[i]]
    if worst > IMAG_TOL:
        log.warning("solution has imaginary part up to %.2e", worst)


def _mode_rows(traj: Trajectory, times):
    ks = traj.lattice.ks
    for t in times:
        s = traj.states[traj.index_of_time(t)]
        for i in range(len(s)):
            yield [t, *ks[i], s[i].real, s[i].imag]


def write_solution(out: Path, traj: Trajectory, times) -> list[Path]:
    d = traj.lattice.d
    n = 4 * (traj.lattice.m + 1)
    xs = [f"x_{i + 1}" for i in range(d)]
    ks = [f"k_{i + 1}" for i in range(d)]
    return [
        write_csv(out / "snapshots.csv", xs + ["t", "u"], _snapshot_rows(traj, times, n)),
        write_csv(out / "modes.csv", ["t"] + ks + ["re", "im"], _mode_rows(traj, times)),
    ]


def _write_diagnostics(out: Path, values: dict[str, object]) -> Path:
    return write_csv(out / "diagnostics.csv", ["name", "value"], values.items())


def _check_mass(problem: ProblemSpec, traj: Trajectory, values: dict) -> None:
    drift = mass_drift(traj)
    values["mass_drift"] = drift
    values["zero_mean_source"] = problem.zero_mean_source
    if problem.zero_mean_source and drift > MASS_TOL:
        raise InvariantViolation(f"mass drift {drift:.3e} exceeds {MASS_TOL:.0e}")


def run_solve(cfg: RunConfig, out: Path, problem: ProblemSpec | None = None) -> RunOutput:
    problem = _problem(cfg) if problem is None else problem
    traj = integrate(cfg, problem, full_grid=False)
    times = list(cfg.snapshot_times)
    if traj.method == "stepping":
        idx = _grid_indices(times, traj.grid)
        times = [float(traj.times[j]) for j in idx]
    result = RunOutput()
    result.files += write_solution(out, traj, times)
    values: dict[str, object] = {"solver": traj.method, "modes": cfg.lattice().size}
    try:
        _check_mass(problem, traj, values)
    finally:
        result.diagnostics = values
        result.files.append(_write_diagnostics(out, values))
    return result


def _member_config(cfg: RunConfig, value: float) -> RunConfig:
    key = cfg.sweep_key
    if key in ("d", "m", "n_steps"):
        if value != int(value):
            raise ConfigError(f"sweep value {value} for {key} must be an integer", key="sweep_values")
        value = int(value)
    return cfg.replace(**{key: value, "experiment": "solve"})


def _member_dir(out: Path, key: str, value: float) -> Path:
    text = _fmt(int(value)) if key in ("d", "m", "n_steps") else _fmt(float(value))
    return out / f"{key}={text}"


def run_sweep(cfg: RunConfig, out: Path) -> RunOutput:
    members = [(_member_config(cfg, v), _member_dir(out, cfg.sweep_key, v)) for v in cfg.sweep_values]
    workers = max(1, min(len(members), os.cpu_count() or 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # problems are built here: warning capture in _problem is not thread-safe
        problems = [_problem(c) for c, _ in members]
        futures = [pool.submit(run_solve, c, d, p) for (c, d), p in zip(members, problems)]
        results = [f.exception() or f.result() for f in futures]
    result = RunOutput()
    for (c, d), r in zip(members, results):
        if isinstance(r, BaseException):
            raise r
        result.files += r.files
        for k, v in r.diagnostics.items():
            result.diagnostics[f"{d.name}/{k}"] = v
    return result


def _refinement_lists(cfg: RunConfig) -> tuple[list[int], list[float]]:
    if cfg.sweep_key == "m":
        m_list = sorted({int(v) for v in cfg.sweep_values})
    else:
        m_list = sorted({max(1, cfg.m // 4), max(1, cfg.m // 2), cfg.m})
    if cfg.sweep_key == "n_steps":
        n_list = sorted({int(v) for v in cfg.sweep_values})
    else:
        if cfg.n_steps % 4:
            raise ConfigError("n_steps must be divisible by 4 for the default temporal study", key="n_steps")
        n_list = [cfg.n_steps // 4, cfg.n_steps // 2, cfg.n_steps]
    if len(m_list) < 3 or len(n_list) < 3:
        raise ConfigError("a convergence study needs at least 3 lattice sizes and 3 step counts")
    return m_list, [cfg.T / n for n in n_list]


def run_convergence(cfg: RunConfig, out: Path) -> RunOutput:
    m_list, dt_list = _refinement_lists(cfg)
    problem = _problem(cfg)
    try:
        table = diag.convergence_study(problem, m_list, dt_list)
    except (MLConvergenceError, np.linalg.LinAlgError) as exc:
        raise SolverError(str(exc)) from exc
    values = {
        "m_ref": table.m_ref,
        "spatial_rate": table.spatial_rate,
        "temporal_order": table.temporal_order,
    }
    files = [
        write_csv(out / "convergence.csv", ["m", "dt", "sup_t_l2_error"], table.rows()),
        _write_diagnostics(out, values),
    ]
    return RunOutput(files, values)


def _random_zero_mean(lat, rng) -> SpectralField:
    c = rng.normal(size=lat.size) + 1j * rng.normal(size=lat.size)
    c[lat.zero_index] = 0
    return SpectralField(lat, c)


def run_diagnose(cfg: RunConfig, out: Path) -> RunOutput:
    problem = _problem(cfg)
    lat = cfg.lattice()
    traj = integrate(cfg, problem, full_grid=True)
    values: dict[str, object] = {"solver": traj.method}
    violations = []

    t_v = 0.0 if problem.potential_time_dependent else None
    V = field_on(problem.potential, lat, t_v)
    cV = diag.potential_constant(V)
    values["c_V"] = cV
    consts = None
    try:
        consts = diag.coercivity_constants(cfg.K, cV, cfg.beta)
    except diag.DomainError as exc:
        log.warning("coercivity constants unavailable: %s", exc)
    if consts is not None:
        if cfg.beta > 0.5:
            values["young_constant"] = diag.young_constant(consts.epsilon, cfg.beta)
        values.update(epsilon=consts.epsilon, gamma1=consts.gamma1, gamma2=consts.gamma2)
        if consts.gamma is not None:
            values["gamma"] = consts.gamma
        rng = np.random.default_rng(0)
        fb = co = -math.inf
        for _ in range(AUDIT_SAMPLES):
            u, v = _random_zero_mean(lat, rng), _random_zero_mean(lat, rng)
            fb = max(fb, diag.forcing_bounds(u, v, V).violation)
            co = max(co, diag.coercivity_violation(u, V, consts))
        values["forcing_bound_violation"] = fb
        values["coercivity_violation"] = co
        if not problem.potential_time_dependent:
            values["gronwall_violation"] = diag.energy_gronwall_audit(traj, consts.gamma2)
        for key in ("forcing_bound_violation", "coercivity_violation", "gronwall_violation"):
            if key in values and values[key] > AUDIT_TOL:
                violations.append(f"{key} = {values[key]:.3e}")

    report = diag.energy_report(traj)
    values.update({f"energy_{k}": v for k, v in report.as_dict().items()})
    try:
        _check_mass(problem, traj, values)
    except InvariantViolation as exc:
        violations.append(str(exc))
    files = [_write_diagnostics(out, values)]
    if violations:
        raise InvariantViolation("; ".join(violations))
    return RunOutput(files, values)


RUNNERS = {
    "solve": run_solve,
    "sweep": run_sweep,
    "convergence": run_convergence,
    "diagnose": run_diagnose,
}


def execute(cfg: RunConfig, out_dir: str | Path | None = None) -> RunOutput:
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    if not out.is_absolute():
        out = Path(cfg.base_dir) / out if out_dir is None else out
    return RUNNERS[cfg.experiment](cfg, out)


def _error_line(code: int, exc: BaseException) -> str:
    payload = {"status": "error", "exit_code": code, "kind": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        if exc.line is not None:
            payload["line"] = exc.line
        if exc.key is not None:
            payload["key"] = exc.key
    return json.dumps(payload)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, InvariantViolation):
        return EXIT_INVARIANT
    return EXIT_SOLVER


def run(cfg: RunConfig, out_dir: str | Path | None = None, stderr=None) -> int:
    """Execute a config; returns the exit status and reports failures on stderr."""
    stderr = sys.stderr if stderr is None else stderr
    try:
        execute(cfg, out_dir)
    except (ConfigError, InvariantViolation, SolverError, QuadratureError, MLConvergenceError,
            np.linalg.LinAlgError, ValueError) as exc:
        code = exit_code_for(exc)
        print(_error_line(code, exc), file=stderr)
        return code
    return EXIT_OK


# --- entry point ---------------------------------------------------------------------


def _stable_density_cmd(args, stderr) -> int:
    try:
        if not 0 < args.beta <= 1:
            raise ConfigError(f"beta must lie in (0, 1], got {args.beta}", key="beta")
        if not args.xmax > 0:
            raise ConfigError(f"xmax must be positive, got {args.xmax}", key="xmax")
        if args.n < 2:
            raise ConfigError(f"n must be >= 2, got {args.n}", key="n")
        xs = np.linspace(-args.xmax, args.xmax, args.n)
        ps = stable_density(args.beta, xs)
    except (ConfigError, QuadratureError) as exc:
        code = exit_code_for(exc)
        print(_error_line(code, exc), file=stderr)
        return code
    rows = zip(xs, ps)
    if args.out:
        write_csv(Path(args.out), ["x", "p"], rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["x", "p"])
        for x, p in rows:
            w.writerow([_fmt(x), _fmt(p)])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fractorus", description="Fractional diffusion on the torus: solver and diagnostics."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name, help=f"run the {name} experiment from a config file")
        p.add_argument("config")
        p.add_argument("--out-dir", default=None, help="override out_dir from the config")
    p = sub.add_parser("stable-density", help="emit a 2*beta-stable density as CSV")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--xmax", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default=None, help="output CSV (default: stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    stderr = sys.stderr
    if args.command == "stable-density":
        return _stable_density_cmd(args, stderr)
    try:
        cfg = load_config(args.config)
        if cfg.experiment != args.command and "experiment" in cfg.declared:
            raise ConfigError(
                f"config declares experiment = {cfg.experiment} but the {args.command} command was used",
                key="experiment",
            )
        cfg = cfg.replace(experiment=args.command)
    except ConfigError as exc:
        print(_error_line(EXIT_CONFIG, exc), file=stderr)
        return EXIT_CONFIG
    return run(cfg, args.out_dir, stderr)


if __name__ == "__main__":
    sys.exit(main())
