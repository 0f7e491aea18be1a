"""Time integrators: nonlinear starter, linearly implicit multistep, loop.

The workhorse is the two-step linearly implicit scheme

    (U+ - U-) / (2 dt) = -i Lambda (U+ + U-)/2 + i |U|^2 (U+ + U-)/2

which advances from the pair (U^(n-1), U^(n)) by one linear solve with the
complex symmetric operator I + i*dt*(Lambda - D(U^(n))).  It conserves the
discrete mass and the two-level discrete energy exactly in exact arithmetic.
The general (rho+1)-step variant freezes the product of the rho newest
squared moduli and couples U^(n+1) with U^(n-rho) through the effective step
(rho+1)*dt/2; rho = 1 reproduces the two-step scheme verbatim.

The starting level(s) come from a Crank-Nicolson step solved by fixed-point
sweeps, each sweep freezing the nonlinear density and solving the resulting
linear system with the configured Krylov method.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import krylov
from .invariants import (
    InvariantSample,
    discrete_energy_rho,
    discrete_energy_single,
    discrete_energy_two_step,
    discrete_mass,
)
from .krylov import SolverConfig, SolverMethod, SolverReport
from .operators import (
    StepOperator,
    make_preconditioner,
    precond_solve,
    rhs_build,
    step_apply,
    step_operator_from_density,
    transform_operator,
    transformed_apply,
)
from .spectral import Grid, build_symbol, dft_forward, dft_inverse


class Strategy(enum.Enum):
    """How the per-step linear system is posed and solved."""

    ORIGINAL_COCG = "original-cocg"
    ORIGINAL_COCR = "original-cocr"
    ORIGINAL_BICGSTAB = "original-bicgstab"
    TRANSFORMED_PRECOND_BICGSTAB = "transformed-precond-bicgstab"
    TRANSFORMED_PRECOND_COCG = "transformed-precond-cocg"


_STRATEGY_TABLE = {
    Strategy.ORIGINAL_COCG: (SolverMethod.COCG, False),
    Strategy.ORIGINAL_COCR: (SolverMethod.COCR, False),
    Strategy.ORIGINAL_BICGSTAB: (SolverMethod.BICGSTAB, False),
    Strategy.TRANSFORMED_PRECOND_BICGSTAB: (SolverMethod.BICGSTAB, True),
    Strategy.TRANSFORMED_PRECOND_COCG: (SolverMethod.COCG, True),
}


@dataclass(frozen=True)
class ModulatedSech:
    """Initial profile a * exp(i q x) * sech(w (x - c))."""

    amplitude: float = 2.0
    wavenumber: float = 0.5
    width: float = math.sqrt(2.0)
    center: float = 10.0

    family = "modulated-sech"

    def sample(self, grid: Grid) -> np.ndarray:
        x = grid.nodes
        envelope = self.amplitude / np.cosh(self.width * (x - self.center))
        return envelope * np.exp(1j * self.wavenumber * x)


@dataclass(frozen=True)
class ProblemSpec:
    """Equation, discretisation and horizon for one integration."""

    grid: Grid
    alpha: float
    dt: float
    t_end: float
    rho: int = 1
    initial_condition: ModulatedSech = field(default_factory=ModulatedSech)

    def __post_init__(self) -> None:
        if not 1.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (1, 2], got {self.alpha}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.rho < 1:
            raise ValueError(f"rho must be a positive integer, got {self.rho}")
        if self.t_end < self.dt:
            raise ValueError("t_end must cover at least one step")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class SchemeState:
    """Trailing window of the integration: the last rho+1 levels.

    ``history`` is chronological, history[-1] = U^(n) at time n*dt.
    """

    step_index: int
    dt: float
    history: List[np.ndarray]

    @property
    def time(self) -> float:
        return self.step_index * self.dt


@dataclass
class StarterDiagnostics:
    sweeps: int
    residual: float
    solver_reports: List[SolverReport]


class StepSolveError(RuntimeError):
    """A per-step linear solve failed; carries the step index and report."""

    def __init__(self, message: str, step_index: int, report: Optional[SolverReport]):
        super().__init__(f"step {step_index}: {message}")
        self.step_index = step_index
        self.report = report


class StarterError(RuntimeError):
    """Fixed-point starter failed to converge; carries the last iterate."""

    def __init__(self, message: str, last_iterate: np.ndarray, residual: float):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


def solve_step_system(
    op: StepOperator,
    rhs: np.ndarray,
    method: SolverMethod,
    transformed: bool,
    config: SolverConfig,
    x0: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, SolverReport]:
    """Solve A x = rhs either directly or via the Fourier-transformed system.

    The transformed route conjugates by the unitary DFT, applies the diagonal
    preconditioner I + i*dt*D_alpha, monitors the residual in transformed
    space (the relative 2-norm residual of both systems coincides), and only
    transforms the iterate back after convergence.
    """
    if not transformed:
        x, report = krylov.solve(
            lambda v: step_apply(op, v), rhs, x0=x0, M=None, config=config
        )
        return x, report

    top = transform_operator(op)
    M = make_preconditioner(op.symbol, op.dt)
    b_hat = dft_forward(rhs)
    y0 = dft_forward(x0) if x0 is not None else None
    y, report = krylov.solve(
        lambda w: transformed_apply(top, w),
        b_hat,
        x0=y0,
        M=lambda z: precond_solve(M, z),
        config=config,
    )
    return dft_inverse(y), report


def _strategy_solve(
    op: StepOperator,
    rhs: np.ndarray,
    strategy: Strategy,
    config: SolverConfig,
    x0: Optional[np.ndarray],
) -> Tuple[np.ndarray, SolverReport]:
    method, transformed = _STRATEGY_TABLE[strategy]
    return solve_step_system(op, rhs, method, transformed, config, x0=x0)


def cn_start(
    u0: np.ndarray,
    spec: ProblemSpec,
    solver_cfg: SolverConfig,
    nl_tol: float = 1e-12,
    nl_max: int = 100,
) -> Tuple[np.ndarray, StarterDiagnostics]:
    """One Crank-Nicolson step, solved by fixed-point (Picard) sweeps.

    Each sweep freezes the density (|W|^2 + |u0|^2)/2 at the current iterate
    W, which turns the step into a linear system with the step operator at
    dt/2, and solves it with the Krylov method selected by ``solver_cfg``
    (transformed + preconditioned when the config says so).  Convergence is
    measured on the max-norm residual of the dt-scaled step equation.  The
    inner solves run two orders of magnitude below nl_tol so the nonlinear
    residual is not limited by the linear one.

    Conserves both the discrete mass and the single-level discrete energy up
    to the tolerances, which makes it the canonical starter for the
    linearly implicit scheme.
    """
    u0 = np.asarray(u0, dtype=complex)
    spec.grid.check_length(u0, "initial state")
    base_density = np.abs(u0) ** 2
    half_dt = spec.dt / 2.0

    # Evaluating the residual involves dt/2 * Lambda w, whose round-off grows
    # with dt*max(d_p); below that floor the fixed point cannot resolve
    # anything, so the tolerance is clipped to a small multiple of it.
    d_max = float(np.max(build_symbol(spec.grid, spec.alpha).entries))
    scale = max(1.0, float(np.max(np.abs(u0))))
    eps = float(np.finfo(float).eps)
    tol_eff = max(nl_tol, 10.0 * eps * (1.0 + abs(half_dt) * d_max) * scale)

    inner_cfg = SolverConfig(
        rel_tol=min(solver_cfg.rel_tol, nl_tol / 100.0),
        max_iters=solver_cfg.max_iters,
        method=solver_cfg.method,
        preconditioned=solver_cfg.preconditioned,
    )

    def residual_norm(w: np.ndarray) -> float:
        dens = 0.5 * (np.abs(w) ** 2 + base_density)
        op = step_operator_from_density(spec.grid, spec.alpha, half_dt, dens)
        return float(np.max(np.abs(step_apply(op, w) - rhs_build(op, u0))))

    w = u0.copy()
    reports: List[SolverReport] = []
    for sweep in range(1, nl_max + 1):
        dens = 0.5 * (np.abs(w) ** 2 + base_density)
        op = step_operator_from_density(spec.grid, spec.alpha, half_dt, dens)
        b = rhs_build(op, u0)
        w, rep = solve_step_system(
            op, b, inner_cfg.method, inner_cfg.preconditioned, inner_cfg, x0=w
        )
        reports.append(rep)
        if not rep.converged:
            raise StarterError(
                f"starter inner solve failed on sweep {sweep}", w, float("nan")
            )
        res = residual_norm(w)
        if res <= tol_eff:
            return w, StarterDiagnostics(sweep, res, reports)
    raise StarterError(
        f"starter fixed point not converged after {nl_max} sweeps "
        f"(residual {res:.3e})",
        w,
        res,
    )


def _advance(
    history: Sequence[np.ndarray],
    step_index: int,
    spec: ProblemSpec,
    solver_cfg: SolverConfig,
    strategy: Strategy,
    rho: int,
) -> Tuple[np.ndarray, SolverReport]:
    """Shared core of the two-step and (rho+1)-step schemes."""
    if len(history) != rho + 1:
        raise ValueError(f"history holds {len(history)}, expected {rho + 1} levels")
    density = np.ones(spec.grid.N)
    for level in history[1:]:
        density = density * np.abs(level) ** 2
    dt_eff = (rho + 1) * spec.dt / 2.0
    op = step_operator_from_density(spec.grid, spec.alpha, dt_eff, density)
    b = rhs_build(op, history[0])
    try:
        x, report = _strategy_solve(op, b, strategy, solver_cfg, x0=history[-1])
    except krylov.BreakdownError as err:
        raise StepSolveError(str(err), step_index, err.report) from err
    if not report.converged:
        raise StepSolveError(
            f"linear solve not converged after {report.iterations} iterations",
            step_index,
            report,
        )
    return x, report


def li_step(
    state: SchemeState,
    spec: ProblemSpec,
    solver_cfg: SolverConfig,
    strategy: Strategy,
) -> Tuple[np.ndarray, SolverReport]:
    """Advance the two-step scheme: new level from (U^(n-1), U^(n))."""
    return _advance(state.history[-2:], state.step_index + 1, spec, solver_cfg, strategy, 1)


def li_rho_step(
    state: SchemeState,
    spec: ProblemSpec,
    solver_cfg: SolverConfig,
    strategy: Strategy,
) -> Tuple[np.ndarray, SolverReport]:
    """Advance the (rho+1)-step scheme from the trailing window."""
    return _advance(
        state.history, state.step_index + 1, spec, solver_cfg, strategy, spec.rho
    )


@dataclass
class Trajectory:
    """Everything an integration records.

    ``snapshots`` holds (step, time, state) triples at the configured
    cadence plus the first and final levels; ``invariants`` has one sample
    per time level; ``reports`` one entry per linearly implicit step.
    """

    spec: ProblemSpec
    strategy: Strategy
    snapshots: List[Tuple[int, float, np.ndarray]]
    invariants: List[InvariantSample]
    reports: List[SolverReport]
    starter: List[StarterDiagnostics]
    final_history: List[np.ndarray]

    @property
    def final_state(self) -> np.ndarray:
        return self.final_history[-1]


def _invariant_sample(
    step: int,
    spec: ProblemSpec,
    history: Sequence[np.ndarray],
) -> InvariantSample:
    """Invariants at the newest level; window energy once the window fills."""
    u = history[-1]
    window: Optional[float] = None
    if step >= spec.rho and len(history) == spec.rho + 1:
        if spec.rho == 1:
            window = discrete_energy_two_step(
                history[1], history[0], spec.grid, spec.alpha
            )
        else:
            window = discrete_energy_rho(
                list(history), spec.grid, spec.alpha, spec.rho
            )
    return InvariantSample(
        step=step,
        time=step * spec.dt,
        mass=discrete_mass(u, spec.grid),
        two_step_energy=window,
        single_step_energy=discrete_energy_single(u, spec.grid, spec.alpha),
    )


def integrate(
    spec: ProblemSpec,
    solver_cfg: SolverConfig,
    strategy: Strategy,
    probes: Optional[Sequence[float]] = None,
    snapshot_every: int = 25,
    nl_tol: float = 1e-12,
    nl_max: int = 100,
    starter_levels: Optional[Sequence[np.ndarray]] = None,
    step_callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> Trajectory:
    """Run the full integration: starter step(s), then implicit steps to t_end.

    The rho starting levels U^(1) .. U^(rho) come from repeated CN steps
    (or are injected via ``starter_levels`` when a caller shares one starter
    across several solver strategies).  Snapshots are stored every
    ``snapshot_every`` steps, at probe times (rounded to the nearest step)
    and always at the first and last level.
    """
    grid = spec.grid
    n_total = spec.n_steps
    if n_total < spec.rho:
        raise ValueError(
            f"t_end spans {n_total} steps but rho = {spec.rho} starter levels are needed"
        )
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")
    probe_steps = set()
    if probes:
        probe_steps = {int(round(t / spec.dt)) for t in probes}

    u0 = spec.initial_condition.sample(grid)
    levels: List[np.ndarray] = [u0]
    starter_diags: List[StarterDiagnostics] = []
    if starter_levels is not None:
        if len(starter_levels) != spec.rho:
            raise ValueError(f"expected {spec.rho} injected starter levels")
        for lv in starter_levels:
            grid.check_length(np.asarray(lv), "starter level")
            levels.append(np.asarray(lv, dtype=complex))
    else:
        for _ in range(spec.rho):
            nxt, diag = cn_start(levels[-1], spec, solver_cfg, nl_tol, nl_max)
            levels.append(nxt)
            starter_diags.append(diag)

    snapshots: List[Tuple[int, float, np.ndarray]] = []
    invariants: List[InvariantSample] = []
    reports: List[SolverReport] = []

    def record(step: int, history: Sequence[np.ndarray]) -> None:
        invariants.append(_invariant_sample(step, spec, history))
        if (
            step == 0
            or step == n_total
            or step % snapshot_every == 0
            or step in probe_steps
        ):
            snapshots.append((step, step * spec.dt, history[-1].copy()))
        if step_callback is not None:
            step_callback(step, history[-1])

    for step in range(len(levels)):
        record(step, levels[: step + 1][-(spec.rho + 1):])

    history = [lv.copy() for lv in levels[-(spec.rho + 1):]]
    for step in range(spec.rho, n_total):
        state = SchemeState(step_index=step, dt=spec.dt, history=history)
        nxt, rep = li_rho_step(state, spec, solver_cfg, strategy)
        reports.append(rep)
        history = history[1:] + [nxt]
        record(step + 1, history)

    return Trajectory(
        spec=spec,
        strategy=strategy,
        snapshots=snapshots,
        invariants=invariants,
        reports=reports,
        starter=starter_diags,
        final_history=history,
    )


def cn_integrate(
    spec: ProblemSpec,
    solver_cfg: SolverConfig,
    nl_tol: float = 1e-10,
    nl_max: int = 100,
) -> np.ndarray:
    """Integrate with the nonlinear CN scheme alone; returns the final state.

    This is the reference integrator for convergence studies (run at a fine
    grid and small step) and the qualitative comparison target for the
    linearly implicit scheme.
    """
    u = spec.initial_condition.sample(spec.grid)
    for _ in range(spec.n_steps):
        u, _ = cn_start(u, spec, solver_cfg, nl_tol, nl_max)
    return u
