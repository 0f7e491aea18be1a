"""Matrix-free Krylov solvers for the per-step linear systems.

Three methods are provided:

* :func:`cocg` and :func:`cocr` for complex *symmetric* systems.  Both use
  the unconjugated bilinear form <x, y> = sum_k x_k y_k and need a single
  operator product per iteration.
* :func:`bicgstab` for general nonsingular systems, two products per
  iteration, with the shadow residual fixed to the initial residual.

Every solver takes the operator and optional preconditioner as closures
(``A(v) -> ndarray``, ``M(z) -> ndarray`` applying the *inverse* of the
preconditioner), stops on the relative 2-norm of the recursively updated
residual, and reports its iteration history.  Passing ``M=None`` runs the
unpreconditioned recurrence; an explicit identity closure produces the
identical iterate sequence.

Iteration counting: an iteration is one executed loop body, and
``matvec_count`` counts operator products performed inside the loop (one per
iteration for COCG/COCR, two for Bi-CGSTAB).  Computing the initial residual
for a nonzero initial guess costs one further product that is not part of
the per-iteration bookkeeping.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

MatVec = Callable[[np.ndarray], np.ndarray]

#: Denominator magnitudes at or below this are treated as exact breakdowns.
#: Underflow-level pivots are the only true breakdowns seen in practice.
BREAKDOWN_EPS = 1e-300


class SolverMethod(enum.Enum):
    COCG = "cocg"
    COCR = "cocr"
    BICGSTAB = "bicgstab"


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule and method selection for one linear solve."""

    rel_tol: float = 1e-10
    max_iters: int = 1000
    method: SolverMethod = SolverMethod.COCG
    preconditioned: bool = False

    def __post_init__(self) -> None:
        if self.rel_tol <= 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass
class SolverReport:
    """Outcome of one solve.

    ``residual_history[i]`` is the relative 2-norm residual after iteration
    i+1; if the solve converged the final entry is <= rel_tol.
    """

    converged: bool
    iterations: int
    matvec_count: int
    residual_history: List[float] = field(default_factory=list)


class BreakdownError(RuntimeError):
    """A recurrence denominator vanished; carries the partial result."""

    def __init__(self, message: str, x: np.ndarray, report: SolverReport):
        super().__init__(message)
        self.x = x
        self.report = report


def _identity(z: np.ndarray) -> np.ndarray:
    return z


def _bilinear(x: np.ndarray, y: np.ndarray) -> complex:
    # np.dot does not conjugate its first argument: this is sum x_k y_k.
    return np.dot(x, y)


def _start(
    A: MatVec, b: np.ndarray, x0: Optional[np.ndarray]
) -> Tuple[np.ndarray, np.ndarray, float]:
    b = np.asarray(b, dtype=complex)
    if x0 is None:
        x = np.zeros_like(b)
        r = b.copy()
    else:
        x = np.asarray(x0, dtype=complex).copy()
        if x.shape != b.shape:
            raise ValueError(f"x0 has shape {x.shape}, b has shape {b.shape}")
        r = b - A(x)
    return x, r, float(np.linalg.norm(b))


def cocg(
    A: MatVec,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    M: Optional[MatVec] = None,
    config: Optional[SolverConfig] = None,
) -> Tuple[np.ndarray, SolverReport]:
    """Conjugate orthogonal conjugate gradient for complex symmetric A.

    The preconditioned recurrence with search directions p_n = M r_n + beta
    p_{n-1}, step alpha_n = <r_n, M r_n> / <p_n, A p_n> under the
    unconjugated bilinear form, and residual downdate r -= alpha A p.
    """
    cfg = config or SolverConfig()
    precond = M or _identity
    x, r, bnorm = _start(A, b, x0)
    report = SolverReport(converged=False, iterations=0, matvec_count=0)
    if bnorm == 0.0:
        return np.zeros_like(r), SolverReport(True, 0, 0)

    threshold = cfg.rel_tol * bnorm
    p = np.zeros_like(r)
    rz_prev: complex = 1.0
    for n in range(cfg.max_iters + 1):
        if np.linalg.norm(r) <= threshold:
            report.converged = True
            break
        if n == cfg.max_iters:
            break
        z = precond(r)
        rz = _bilinear(r, z)
        if abs(rz) <= BREAKDOWN_EPS:
            raise BreakdownError("COCG breakdown: <r, M^-1 r> vanished", x, report)
        if n == 0:
            p = z.copy()
        else:
            p = z + (rz / rz_prev) * p
        q = A(p)
        report.matvec_count += 1
        pq = _bilinear(p, q)
        if abs(pq) <= BREAKDOWN_EPS:
            raise BreakdownError("COCG breakdown: <p, A p> vanished", x, report)
        alpha = rz / pq
        x = x + alpha * p
        r = r - alpha * q
        rz_prev = rz
        report.iterations += 1
        report.residual_history.append(float(np.linalg.norm(r)) / bnorm)
    return x, report


def cocr(
    A: MatVec,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    M: Optional[MatVec] = None,
    config: Optional[SolverConfig] = None,
) -> Tuple[np.ndarray, SolverReport]:
    """Conjugate orthogonal conjugate residual for complex symmetric A.

    Same bilinear form as COCG but with A-weighted coefficients,
    alpha_n = <z_n, A z_n> / <A p_n, M A p_n>, which damps the residual more
    evenly.  The products A p_n and M^-1 r_n are maintained by recurrence so
    each iteration still needs exactly one operator product (applied to z_n).
    """
    cfg = config or SolverConfig()
    precond = M or _identity
    x, r, bnorm = _start(A, b, x0)
    report = SolverReport(converged=False, iterations=0, matvec_count=0)
    if bnorm == 0.0:
        return np.zeros_like(r), SolverReport(True, 0, 0)

    threshold = cfg.rel_tol * bnorm
    z = None
    p = u = np.zeros_like(r)
    zaz_prev: complex = 1.0
    for n in range(cfg.max_iters + 1):
        if np.linalg.norm(r) <= threshold:
            report.converged = True
            break
        if n == cfg.max_iters:
            break
        if z is None:
            z = precond(r)
        az = A(z)
        report.matvec_count += 1
        zaz = _bilinear(z, az)
        if abs(zaz) <= BREAKDOWN_EPS:
            raise BreakdownError("COCR breakdown: <z, A z> vanished", x, report)
        if n == 0:
            p = z.copy()
            u = az.copy()
        else:
            beta = zaz / zaz_prev
            p = z + beta * p
            u = az + beta * u
        w = precond(u)
        uw = _bilinear(u, w)
        if abs(uw) <= BREAKDOWN_EPS:
            raise BreakdownError("COCR breakdown: <A p, M^-1 A p> vanished", x, report)
        alpha = zaz / uw
        x = x + alpha * p
        r = r - alpha * u
        z = z - alpha * w
        zaz_prev = zaz
        report.iterations += 1
        report.residual_history.append(float(np.linalg.norm(r)) / bnorm)
    return x, report


def bicgstab(
    A: MatVec,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    M: Optional[MatVec] = None,
    config: Optional[SolverConfig] = None,
) -> Tuple[np.ndarray, SolverReport]:
    """Stabilised bi-conjugate gradient for general nonsingular A.

    Two operator products and two preconditioner applications per iteration
    (p_hat = M^-1 p before the first product, s_hat = M^-1 s before the
    second).  The shadow residual is fixed to r_0.  If the intermediate
    residual s vanishes exactly the iteration finishes early with the
    half-update x + alpha p_hat, which is then the exact solution; this
    half-iteration still counts as one iteration but performs one product.
    """
    cfg = config or SolverConfig()
    precond = M or _identity
    x, r, bnorm = _start(A, b, x0)
    report = SolverReport(converged=False, iterations=0, matvec_count=0)
    if bnorm == 0.0:
        return np.zeros_like(r), SolverReport(True, 0, 0)

    threshold = cfg.rel_tol * bnorm
    r_shadow = r.copy()
    rho_prev: complex = 1.0
    alpha: complex = 1.0
    omega: complex = 1.0
    p = np.zeros_like(r)
    v = np.zeros_like(r)
    for n in range(cfg.max_iters + 1):
        if np.linalg.norm(r) <= threshold:
            report.converged = True
            break
        if n == cfg.max_iters:
            break
        rho = np.vdot(r_shadow, r)
        if abs(rho) <= BREAKDOWN_EPS:
            raise BreakdownError("Bi-CGSTAB breakdown: rho vanished", x, report)
        if n == 0:
            p = r.copy()
        else:
            if abs(omega) <= BREAKDOWN_EPS:
                raise BreakdownError("Bi-CGSTAB breakdown: omega vanished", x, report)
            beta = (rho / rho_prev) * (alpha / omega)
            p = r + beta * (p - omega * v)
        p_hat = precond(p)
        v = A(p_hat)
        report.matvec_count += 1
        rtv = np.vdot(r_shadow, v)
        if abs(rtv) <= BREAKDOWN_EPS:
            raise BreakdownError("Bi-CGSTAB breakdown: <r~, v> vanished", x, report)
        alpha = rho / rtv
        s = r - alpha * v
        snorm = float(np.linalg.norm(s))
        if snorm <= BREAKDOWN_EPS * max(1.0, bnorm):
            x = x + alpha * p_hat
            r = s
            report.iterations += 1
            report.residual_history.append(snorm / bnorm)
            report.converged = True
            break
        s_hat = precond(s)
        t = A(s_hat)
        report.matvec_count += 1
        tt = np.vdot(t, t)
        if abs(tt) <= BREAKDOWN_EPS:
            raise BreakdownError("Bi-CGSTAB breakdown: <t, t> vanished", x, report)
        omega = np.vdot(t, s) / tt
        x = x + alpha * p_hat + omega * s_hat
        r = s - omega * t
        rho_prev = rho
        report.iterations += 1
        report.residual_history.append(float(np.linalg.norm(r)) / bnorm)
    return x, report


_SOLVERS = {
    SolverMethod.COCG: cocg,
    SolverMethod.COCR: cocr,
    SolverMethod.BICGSTAB: bicgstab,
}


def solve(
    A: MatVec,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    M: Optional[MatVec] = None,
    config: Optional[SolverConfig] = None,
) -> Tuple[np.ndarray, SolverReport]:
    """Dispatch on ``config.method``."""
    cfg = config or SolverConfig()
    return _SOLVERS[cfg.method](A, b, x0=x0, M=M, config=cfg)
