"""Experiment harness: configured runs producing CSV result bundles.

Each experiment kind integrates the equation under a :class:`RunConfig` and
writes machine-readable tables plus a manifest that echoes the full
configuration (the manifest re-parses into an equal config; version and
timing metadata travel in comment lines, which the parser skips).

Output is deterministic: a given config produces bit-identical CSVs.  Wall
clock measurements therefore go to a separate ``timing.txt`` that is outside
that contract.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .invariants import InvariantSample
from .krylov import SolverConfig, SolverMethod, SolverReport
from .schemes import (
    ModulatedSech,
    ProblemSpec,
    StarterError,
    StepSolveError,
    Strategy,
    Trajectory,
    cn_integrate,
    cn_start,
    integrate,
)
from .spectral import Grid

KINDS = ("evolve", "convergence", "solver-bench", "drift", "rho-demo")


class ConfigError(ValueError):
    """Bad configuration file, key, or value (CLI exit code 2)."""


class NumericalFailure(RuntimeError):
    """Integration or solve failed during an experiment (CLI exit code 3)."""


@dataclass(frozen=True)
class RunConfig:
    """Flat configuration covering every experiment kind."""

    kind: str
    L: float
    N: int
    alpha: float
    rho: int
    dt: float
    t_end: float
    ic_family: str
    ic_amplitude: float
    ic_wavenumber: float
    ic_width: float
    ic_center: float
    strategy: Strategy
    strategies: Tuple[Strategy, ...]
    n_values: Tuple[int, ...]
    dt_values: Tuple[float, ...]
    ref_N: int
    ref_dt: float
    rel_tol: float
    max_iters: int
    nl_tol: float
    nl_max: int
    snapshot_every: int
    out_dir: str

    def problem(self, N: Optional[int] = None, dt: Optional[float] = None) -> ProblemSpec:
        if self.ic_family != "modulated-sech":
            raise ConfigError(f"unknown initial-condition family {self.ic_family!r}")
        return ProblemSpec(
            grid=Grid(L=self.L, N=N if N is not None else self.N),
            alpha=self.alpha,
            dt=dt if dt is not None else self.dt,
            t_end=self.t_end,
            rho=self.rho,
            initial_condition=ModulatedSech(
                amplitude=self.ic_amplitude,
                wavenumber=self.ic_wavenumber,
                width=self.ic_width,
                center=self.ic_center,
            ),
        )

    def solver(self, strategy: Optional[Strategy] = None) -> SolverConfig:
        method, preconditioned = _STRATEGY_SOLVER[strategy or self.strategy]
        return SolverConfig(
            rel_tol=self.rel_tol,
            max_iters=self.max_iters,
            method=method,
            preconditioned=preconditioned,
        )

    @property
    def bench_strategies(self) -> Tuple[Strategy, ...]:
        return self.strategies if self.strategies else (self.strategy,)

    @property
    def bench_n_values(self) -> Tuple[int, ...]:
        return self.n_values if self.n_values else (self.N,)


_STRATEGY_SOLVER = {
    Strategy.ORIGINAL_COCG: (SolverMethod.COCG, False),
    Strategy.ORIGINAL_COCR: (SolverMethod.COCR, False),
    Strategy.ORIGINAL_BICGSTAB: (SolverMethod.BICGSTAB, False),
    Strategy.TRANSFORMED_PRECOND_BICGSTAB: (SolverMethod.BICGSTAB, True),
    Strategy.TRANSFORMED_PRECOND_COCG: (SolverMethod.COCG, True),
}

_BASE_DEFAULTS: Dict[str, str] = {
    "L": "20.0",
    "N": "101",
    "alpha": "2.0",
    "rho": "1",
    "dt": "0.02",
    "t_end": "250.0",
    "ic_family": "modulated-sech",
    "ic_amplitude": "2.0",
    "ic_wavenumber": "0.5",
    "ic_width": repr(math.sqrt(2.0)),
    "ic_center": "10.0",
    "strategy": "original-cocg",
    "strategies": "",
    "n_values": "",
    "dt_values": "",
    "ref_N": "303",
    "ref_dt": "0.001",
    "rel_tol": "1e-10",
    "max_iters": "1000",
    "nl_tol": "1e-12",
    "nl_max": "100",
    "snapshot_every": "25",
    "out_dir": "",
}

_KIND_DEFAULTS: Dict[str, Dict[str, str]] = {
    "evolve": {},
    "convergence": {
        "alpha": "1.6",
        "N": "303",
        "t_end": "20.0",
        "dt_values": "0.02,0.01,0.005,0.0025",
    },
    "solver-bench": {
        "t_end": "8.0",
        "strategy": "transformed-precond-bicgstab",
    },
    "drift": {
        "alpha": "1.6",
        "t_end": "400.0",
        "rel_tol": "1e-12",
    },
    "rho-demo": {
        "rho": "2",
        "N": "31",
        "alpha": "1.6",
        "t_end": "4.0",
        "rel_tol": "1e-12",
        "ic_amplitude": "1.0",
        "ic_width": "1.0",
    },
}


def _parse_strategy(raw: str) -> Strategy:
    for s in Strategy:
        if raw == s.value or raw == s.name:
            return s
    raise ConfigError(
        f"unknown strategy {raw!r}; expected one of "
        + ", ".join(s.value for s in Strategy)
    )


def _parse_value(key: str, raw: str):
    try:
        if key in ("N", "rho", "max_iters", "nl_max", "snapshot_every", "ref_N"):
            return int(raw)
        if key in ("L", "alpha", "dt", "t_end", "rel_tol", "nl_tol", "ref_dt",
                   "ic_amplitude", "ic_wavenumber", "ic_width", "ic_center"):
            return float(raw)
        if key == "strategy":
            return _parse_strategy(raw)
        if key == "strategies":
            return tuple(_parse_strategy(p) for p in raw.split(",") if p.strip()) if raw else ()
        if key == "n_values":
            return tuple(int(p) for p in raw.split(",") if p.strip()) if raw else ()
        if key == "dt_values":
            return tuple(float(p) for p in raw.split(",") if p.strip()) if raw else ()
        if key in ("ic_family", "out_dir", "kind"):
            return raw
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({err})") from None
    raise ConfigError(f"unknown configuration key {key!r}")


def parse_kv_lines(lines: Sequence[str], source: str = "<config>") -> Dict[str, str]:
    """Parse ``key = value`` lines; blank lines and '#' comments are skipped."""
    out: Dict[str, str] = {}
    for i, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{i}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        out[key.strip()] = value.strip()
    return out


def build_config(
    kind: str,
    file_values: Optional[Dict[str, str]] = None,
    overrides: Optional[Dict[str, str]] = None,
) -> RunConfig:
    """Layer defaults <- kind defaults <- config file <- CLI overrides."""
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    merged = dict(_BASE_DEFAULTS)
    merged.update(_KIND_DEFAULTS[kind])
    for layer in (file_values or {}, overrides or {}):
        for key, raw in layer.items():
            if key == "kind":
                if raw != kind:
                    raise ConfigError(
                        f"config kind {raw!r} conflicts with subcommand {kind!r}"
                    )
                continue
            if key not in merged:
                raise ConfigError(f"unknown configuration key {key!r}")
            merged[key] = raw

    values = {key: _parse_value(key, raw) for key, raw in merged.items()}
    cfg = RunConfig(kind=kind, **values)
    _validate(cfg)
    return cfg


def load_config(
    kind: str, path: Optional[str] = None, overrides: Optional[Sequence[str]] = None
) -> RunConfig:
    file_values = None
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        file_values = parse_kv_lines(text.splitlines(), source=path)
    parsed_overrides: Dict[str, str] = {}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, _, value = item.partition("=")
        parsed_overrides[key.strip()] = value.strip()
    return build_config(kind, file_values, parsed_overrides)


def _validate(cfg: RunConfig) -> None:
    try:
        cfg.problem()
        cfg.solver()
    except (ValueError, ConfigError) as err:
        raise ConfigError(str(err)) from None
    if cfg.kind == "drift" and cfg.t_end < 400.0:
        raise ConfigError("drift runs must integrate to t_end >= 400")
    if cfg.kind == "convergence" and not cfg.dt_values:
        raise ConfigError("convergence runs need dt_values")
    if cfg.kind == "solver-bench" and cfg.rho != 1:
        raise ConfigError("solver-bench compares the two-level scheme (rho = 1)")
    try:
        for n in cfg.bench_n_values:
            Grid(L=cfg.L, N=n)
    except ValueError as err:
        raise ConfigError(str(err)) from None


# ---------------------------------------------------------------------------
# CSV output


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def write_snapshots_csv(path: Path, grid: Grid, snapshots) -> None:
    rows = []
    for _, t, state in snapshots:
        for x, value in zip(grid.nodes, state):
            rows.append((t, float(x), float(value.real), float(value.imag),
                         float(abs(value))))
    _write_csv(path, ("t", "x", "re", "im", "abs"), rows)


def write_invariants_csv(path: Path, samples: Sequence[InvariantSample]) -> None:
    rows = [
        (s.step, s.time, s.mass,
         "" if s.two_step_energy is None else repr(s.two_step_energy),
         s.single_step_energy)
        for s in samples
    ]
    _write_csv(path, ("n", "t", "mass", "H_two_step", "H_single"), rows)


def write_solver_csv(path: Path, rows: Sequence[Tuple]) -> None:
    _write_csv(
        path,
        ("n", "strategy", "iterations", "matvecs", "final_residual", "converged"),
        rows,
    )


def solver_rows(strategy: Strategy, reports: Sequence[SolverReport], first_step: int):
    rows = []
    for i, rep in enumerate(reports):
        final = rep.residual_history[-1] if rep.residual_history else 0.0
        rows.append(
            (first_step + i, strategy.value, rep.iterations, rep.matvec_count,
             float(final), rep.converged)
        )
    return rows


def write_manifest(path: Path, cfg: RunConfig, notes: Sequence[str] = ()) -> None:
    lines = [f"# fnls version {__version__}"]
    lines.extend(f"# {note}" for note in notes)
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, Strategy):
            raw = value.value
        elif isinstance(value, tuple):
            raw = ",".join(
                v.value if isinstance(v, Strategy) else _fmt(v) for v in value
            )
        else:
            raw = _fmt(value)
        lines.append(f"{f.name} = {raw}")
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path: Path) -> RunConfig:
    values = parse_kv_lines(Path(path).read_text().splitlines(), source=str(path))
    kind = values.pop("kind")
    return build_config(kind, values)


@dataclass
class ResultBundle:
    """Where an experiment wrote its tables, plus in-memory summary values."""

    out_dir: Path
    tables: Dict[str, Path]
    summary: Dict[str, object]


# ---------------------------------------------------------------------------
# Experiment kinds


def _prepare(cfg: RunConfig, out_dir) -> Path:
    out = Path(out_dir if out_dir is not None else (cfg.out_dir or "."))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ConfigError(f"output directory {out} not writable: {err}") from None
    return out


def _integrate_or_fail(cfg: RunConfig, spec: ProblemSpec, strategy: Strategy,
                       **kwargs) -> Trajectory:
    try:
        return integrate(
            spec,
            cfg.solver(strategy),
            strategy,
            snapshot_every=cfg.snapshot_every,
            nl_tol=cfg.nl_tol,
            nl_max=cfg.nl_max,
            **kwargs,
        )
    except (StepSolveError, StarterError) as err:
        raise NumericalFailure(str(err)) from err


def run_evolve(cfg: RunConfig, out_dir=None) -> ResultBundle:
    """Single integration: snapshots, invariant series, per-step solver stats."""
    out = _prepare(cfg, out_dir)
    started = time.perf_counter()
    traj = _integrate_or_fail(cfg, cfg.problem(), cfg.strategy)
    elapsed = time.perf_counter() - started

    tables = {
        "snapshots": out / "snapshots.csv",
        "invariants": out / "invariants.csv",
        "solver": out / "solver.csv",
    }
    write_snapshots_csv(tables["snapshots"], cfg.problem().grid, traj.snapshots)
    write_invariants_csv(tables["invariants"], traj.invariants)
    write_solver_csv(
        tables["solver"], solver_rows(cfg.strategy, traj.reports, cfg.rho + 1)
    )
    write_manifest(out / "manifest.txt", cfg)
    (out / "timing.txt").write_text(f"integration_seconds = {elapsed:.3f}\n")

    mass = [s.mass for s in traj.invariants]
    summary = {
        "steps": cfg.problem().n_steps,
        "mass_drift": max(abs(m - mass[0]) for m in mass),
        "seconds": elapsed,
    }
    return ResultBundle(out, tables, summary)


def run_invariant_drift(cfg: RunConfig, out_dir=None) -> ResultBundle:
    """Long run recording the single-level energy drift series."""
    out = _prepare(cfg, out_dir)
    started = time.perf_counter()
    traj = _integrate_or_fail(cfg, cfg.problem(), cfg.strategy)
    elapsed = time.perf_counter() - started

    tables = {
        "invariants": out / "invariants.csv",
        "solver": out / "solver.csv",
    }
    write_invariants_csv(tables["invariants"], traj.invariants)
    write_solver_csv(
        tables["solver"], solver_rows(cfg.strategy, traj.reports, cfg.rho + 1)
    )
    write_manifest(out / "manifest.txt", cfg)
    (out / "timing.txt").write_text(f"integration_seconds = {elapsed:.3f}\n")

    h_single = [s.single_step_energy for s in traj.invariants]
    mass = [s.mass for s in traj.invariants]
    times = [s.time for s in traj.invariants]
    summary = {
        "energy_drift_t300": max(
            abs(h - h_single[0]) for h, t in zip(h_single, times) if t <= 300.0
        ),
        "mass_drift_t300": max(
            abs(m - mass[0]) for m, t in zip(mass, times) if t <= 300.0
        ),
        "seconds": elapsed,
    }
    return ResultBundle(out, tables, summary)


def compute_reference(cfg: RunConfig) -> np.ndarray:
    """Nonlinear CN reference state at t_end on the (ref_N, ref_dt) resolution."""
    spec = ProblemSpec(
        grid=Grid(L=cfg.L, N=cfg.ref_N),
        alpha=cfg.alpha,
        dt=cfg.ref_dt,
        t_end=cfg.t_end,
        rho=1,
        initial_condition=cfg.problem().initial_condition,
    )
    try:
        return cn_integrate(spec, cfg.solver(), nl_tol=cfg.nl_tol, nl_max=cfg.nl_max)
    except (StepSolveError, StarterError) as err:
        raise NumericalFailure(f"reference run failed: {err}") from err


def max_node_error(coarse: np.ndarray, reference: np.ndarray) -> float:
    """Max-norm difference on coincident nodes; coarse N must divide ref N."""
    if len(reference) % len(coarse) != 0:
        raise ConfigError(
            f"coarse N={len(coarse)} does not divide reference N={len(reference)}; "
            "nodes would not coincide"
        )
    stride = len(reference) // len(coarse)
    return float(np.max(np.abs(coarse - reference[::stride])))


def run_convergence(
    cfg: RunConfig, out_dir=None, reference: Optional[np.ndarray] = None
) -> ResultBundle:
    """Time-step sweep against the CN reference; fits the log-log slope."""
    out = _prepare(cfg, out_dir)
    started = time.perf_counter()
    if reference is None:
        reference = compute_reference(cfg)

    errors: List[float] = []
    for dt in cfg.dt_values:
        spec = cfg.problem(dt=dt)
        traj = _integrate_or_fail(cfg, spec, cfg.strategy)
        errors.append(max_node_error(traj.final_state, reference))
    elapsed = time.perf_counter() - started

    slope = float(
        np.polyfit(np.log(np.asarray(cfg.dt_values)), np.log(np.asarray(errors)), 1)[0]
    )
    tables = {"convergence": out / "convergence.csv"}
    _write_csv(
        tables["convergence"],
        ("dt", "max_error"),
        list(zip(cfg.dt_values, errors)),
    )
    write_manifest(out / "manifest.txt", cfg, notes=[f"fitted_slope = {slope!r}"])
    (out / "timing.txt").write_text(f"sweep_seconds = {elapsed:.3f}\n")
    return ResultBundle(
        out, tables, {"slope": slope, "errors": errors, "seconds": elapsed}
    )


def _bench_strategy(
    cfg: RunConfig, spec: ProblemSpec, strategy: Strategy, u1: np.ndarray
) -> Tuple[List[SolverReport], Optional[int]]:
    """Step the two-level scheme under one strategy, keeping every report.

    Returns the per-step reports and the index of the first failed step
    (None if the whole run converged); stepping stops at the first failure.
    """
    from .schemes import SchemeState, li_rho_step

    solver_cfg = cfg.solver(strategy)
    history = [spec.initial_condition.sample(spec.grid), np.asarray(u1)]
    reports: List[SolverReport] = []
    for step in range(spec.rho, spec.n_steps):
        state = SchemeState(step_index=step, dt=spec.dt, history=history)
        try:
            nxt, rep = li_rho_step(state, spec, solver_cfg, strategy)
        except StepSolveError as err:
            if err.report is not None:
                reports.append(err.report)
            return reports, err.step_index
        reports.append(rep)
        history = history[1:] + [nxt]
    return reports, None


def run_solver_bench(cfg: RunConfig, out_dir=None) -> ResultBundle:
    """Same physical problem under each strategy and grid size.

    The starter level is computed once per grid with the transformed
    preconditioned Bi-CGSTAB configuration and shared across strategies, so
    the per-step statistics compare solvers on identical trajectories (the
    tables quote implicit-step counts only; starter cost is reported
    separately in timing.txt).  A strategy that fails at some step is
    recorded with that step index and skipped from there on.
    """
    out = _prepare(cfg, out_dir)
    summary_rows: List[Tuple] = []
    timing_lines: List[str] = []
    per_run: Dict[str, Dict[str, object]] = {}
    starter_cfg = SolverConfig(
        rel_tol=cfg.rel_tol,
        max_iters=cfg.max_iters,
        method=SolverMethod.BICGSTAB,
        preconditioned=True,
    )

    multiple_n = len(cfg.bench_n_values) > 1
    for n in cfg.bench_n_values:
        spec = cfg.problem(N=n)
        t0 = time.perf_counter()
        try:
            u1, _ = cn_start(
                spec.initial_condition.sample(spec.grid), spec, starter_cfg,
                nl_tol=cfg.nl_tol, nl_max=cfg.nl_max,
            )
        except StarterError as err:
            raise NumericalFailure(f"N={n}: {err}") from err
        timing_lines.append(f"starter_seconds N={n} = {time.perf_counter() - t0:.3f}")

        subdir = out / f"N{n}" if multiple_n else out
        subdir.mkdir(parents=True, exist_ok=True)
        all_rows: List[Tuple] = []
        for strategy in cfg.bench_strategies:
            t0 = time.perf_counter()
            reports, failed_step = _bench_strategy(cfg, spec, strategy, u1)
            elapsed = time.perf_counter() - t0
            timing_lines.append(
                f"run_seconds N={n} {strategy.value} = {elapsed:.3f}"
            )
            all_rows.extend(solver_rows(strategy, reports, cfg.rho + 1))
            iters = [r.iterations for r in reports]
            summary_rows.append(
                (
                    strategy.value,
                    n,
                    len(iters),
                    max(iters) if iters else "",
                    min(iters) if iters else "",
                    float(np.mean(iters)) if iters else "",
                    int(sum(r.matvec_count for r in reports)),
                    failed_step is None,
                    "" if failed_step is None else failed_step,
                )
            )
            per_run[f"{strategy.value}@N{n}"] = {
                "iterations": iters,
                "matvecs": [r.matvec_count for r in reports],
                "failed_step": failed_step,
            }
        write_solver_csv(subdir / "solver.csv", all_rows)

    tables = {"summary": out / "summary.csv"}
    _write_csv(
        tables["summary"],
        ("strategy", "N", "steps", "iters_max", "iters_min", "iters_avg",
         "matvecs_total", "converged_all", "failed_step"),
        summary_rows,
    )
    write_manifest(out / "manifest.txt", cfg)
    (out / "timing.txt").write_text("\n".join(timing_lines) + "\n")
    return ResultBundle(out, tables, {"runs": per_run})


def run_rho_demo(cfg: RunConfig, out_dir=None) -> ResultBundle:
    """Higher-nonlinearity multistep run; invariants carry the window energy."""
    out = _prepare(cfg, out_dir)
    started = time.perf_counter()
    traj = _integrate_or_fail(cfg, cfg.problem(), cfg.strategy)
    elapsed = time.perf_counter() - started

    tables = {
        "invariants": out / "invariants.csv",
        "solver": out / "solver.csv",
    }
    write_invariants_csv(tables["invariants"], traj.invariants)
    write_solver_csv(
        tables["solver"], solver_rows(cfg.strategy, traj.reports, cfg.rho + 1)
    )
    write_manifest(out / "manifest.txt", cfg)
    (out / "timing.txt").write_text(f"integration_seconds = {elapsed:.3f}\n")

    mass = [s.mass for s in traj.invariants]
    lag = cfg.rho + 1
    window = [
        s.two_step_energy for s in traj.invariants if s.two_step_energy is not None
    ]
    summary = {
        "mass_cycle_drift": max(
            abs(mass[i] - mass[i - lag]) for i in range(lag, len(mass))
        ),
        "energy_shift_drift": max(
            abs(window[i + 1] - window[i]) for i in range(len(window) - 1)
        ),
        "seconds": elapsed,
    }
    return ResultBundle(out, tables, summary)


RUNNERS = {
    "evolve": run_evolve,
    "convergence": run_convergence,
    "solver-bench": run_solver_bench,
    "drift": run_invariant_drift,
    "rho-demo": run_rho_demo,
}
