"""Discrete mass and the energy functionals used for conservation checks.

Each functional is a plain grid sum scaled by dx.  Sums are accumulated with
``math.fsum`` (exact compensated summation) in a fixed left-to-right order:
drift series are inspected at the 1e-10 scale and must not be polluted by
accumulation noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .spectral import DimensionError, Grid, apply_multiplier, build_symbol


@dataclass(frozen=True)
class InvariantSample:
    """Invariant values recorded at one time level.

    ``two_step_energy`` couples the trailing window of time levels (the pair
    for the cubic scheme, rho+1 levels in general) and is absent until the
    window is full.
    """

    step: int
    time: float
    mass: float
    two_step_energy: Optional[float]
    single_step_energy: float


def _check_alpha(alpha: float) -> None:
    if not 1.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (1, 2], got {alpha}")


def _quarter_power_sq(u: np.ndarray, grid: Grid, alpha: float) -> np.ndarray:
    """Pointwise |Lambda^(alpha/4) u|^2, via the exponent-alpha/2 multiplier."""
    return np.abs(apply_multiplier(u, build_symbol(grid, alpha / 2.0))) ** 2


def discrete_mass(u: np.ndarray, grid: Grid) -> float:
    """dx * sum_k |u_k|^2."""
    u = np.asarray(u)
    grid.check_length(u)
    return grid.dx * math.fsum(np.abs(u) ** 2)


def discrete_energy_two_step(
    u: np.ndarray, v: np.ndarray, grid: Grid, alpha: float
) -> float:
    """Energy coupling two consecutive time levels.

    dx * sum_k [ -(|Q u|_k^2 + |Q v|_k^2)/2 + |u_k|^2 |v_k|^2 / 2 ]
    with Q the quarter-power fractional Laplacian.  Symmetric in (u, v)
    by construction, including the floating-point evaluation order.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    grid.check_length(u, "first state")
    grid.check_length(v, "second state")
    _check_alpha(alpha)
    qu = _quarter_power_sq(u, grid, alpha)
    qv = _quarter_power_sq(v, grid, alpha)
    terms = -0.5 * (qu + qv) + 0.5 * (np.abs(u) ** 2 * np.abs(v) ** 2)
    return grid.dx * math.fsum(terms)


def discrete_energy_single(u: np.ndarray, grid: Grid, alpha: float) -> float:
    """Single-level energy; by definition the two-step energy of (u, u)."""
    return discrete_energy_two_step(u, u, grid, alpha)


def discrete_energy_rho(
    history: Sequence[np.ndarray], grid: Grid, alpha: float, rho: int
) -> float:
    """Window energy over rho+1 consecutive time levels.

    dx * sum_k [ -(sum_i |Q u^(i)|_k^2)/(rho+1) + (prod_i |u^(i)_k|^2)/(rho+1) ]

    Reduces to :func:`discrete_energy_two_step` for rho = 1.  The value does
    not depend on the chronological orientation of ``history``.
    """
    if rho < 1:
        raise ValueError(f"rho must be a positive integer, got {rho}")
    if len(history) != rho + 1:
        raise DimensionError(
            f"history holds {len(history)} states, expected rho+1 = {rho + 1}"
        )
    _check_alpha(alpha)
    states = [np.asarray(u) for u in history]
    for u in states:
        grid.check_length(u, "history state")

    kinetic = np.zeros(grid.N)
    product = np.ones(grid.N)
    for u in states:
        kinetic = kinetic + _quarter_power_sq(u, grid, alpha)
        product = product * np.abs(u) ** 2
    terms = (-kinetic + product) / (rho + 1)
    return grid.dx * math.fsum(terms)
