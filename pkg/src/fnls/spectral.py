"""Periodic grid, unitary DFT, and fractional-power spectral multipliers.

All transforms use the unitary convention (a factor 1/sqrt(N) on both
directions), so forward and inverse are mutually adjoint and Parseval holds
exactly.  State vectors are plain 1-D complex ndarrays of length ``Grid.N``;
spectral coefficient vectors use the standard DFT index ordering
p = 0 .. N-1 with negative wavenumbers wrapped to the upper half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np


class DimensionError(ValueError):
    """Array length does not match the grid or a companion array."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid with N nodes on the periodic domain [0, L).

    N must be odd: the symmetric wavenumber set -(N-1)/2 .. (N-1)/2 then has
    no Nyquist mode and every spectral multiplier below is unambiguous.
    Even N is rejected rather than guessed at.
    """

    L: float
    N: int

    def __post_init__(self) -> None:
        if self.L <= 0:
            raise ValueError(f"domain length must be positive, got {self.L}")
        if self.N < 1 or self.N % 2 == 0:
            raise ValueError(f"N must be a positive odd integer, got {self.N}")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def mu(self) -> float:
        return 2.0 * math.pi / self.L

    @cached_property
    def nodes(self) -> np.ndarray:
        """Grid nodes x_j = j*dx, j = 0 .. N-1 (read-only)."""
        x = np.arange(self.N) * self.dx
        x.setflags(write=False)
        return x

    def check_length(self, u: np.ndarray, label: str = "state") -> None:
        if u.shape != (self.N,):
            raise DimensionError(
                f"{label} has shape {u.shape}, expected ({self.N},)"
            )


@dataclass(frozen=True)
class FractionalSymbol:
    """Fourier multipliers d_p = |mu * k(p)|**s over the symmetric wavenumbers.

    ``entries[p]`` is |mu*p|**s for p <= (N-1)/2 and |mu*(p-N)|**s above, so
    ``entries`` is a nonnegative palindrome with entries[0] == 0.  Exponent
    s = alpha realises the full fractional Laplacian, s = alpha/2 its
    half ("quarter-power") factor used by the energy functionals.
    """

    exponent: float
    entries: np.ndarray

    def __len__(self) -> int:
        return len(self.entries)


def dft_forward(u: np.ndarray) -> np.ndarray:
    """Unitary DFT: coeffs_p = N**-0.5 * sum_j u_j exp(-2*pi*i*j*p/N)."""
    u = np.asarray(u)
    return np.fft.fft(u) / math.sqrt(len(u))


def dft_inverse(c: np.ndarray) -> np.ndarray:
    """Unitary inverse DFT: u_j = N**-0.5 * sum_p c_p exp(+2*pi*i*j*p/N)."""
    c = np.asarray(c)
    return np.fft.ifft(c) * math.sqrt(len(c))


def wavenumbers(grid: Grid) -> np.ndarray:
    """Signed integer wavenumbers k(p) in DFT ordering: 0..(N-1)/2, -(N-1)/2..-1."""
    half = (grid.N - 1) // 2
    return np.concatenate([np.arange(half + 1), np.arange(-half, 0)])


@lru_cache(maxsize=None)
def build_symbol(grid: Grid, s: float) -> FractionalSymbol:
    """Precompute the multiplier array for exponent s > 0 on ``grid``.

    |x|**s is evaluated as exp(s*log|x|) with the zero mode special-cased,
    so d_0 is exactly 0 for every s.  Results are cached per (grid, s); they
    are reused by every operator application of every solver iteration.
    """
    if s <= 0:
        raise ValueError(f"multiplier exponent must be positive, got {s}")
    mag = np.abs(grid.mu * wavenumbers(grid)).astype(float)
    entries = np.zeros(grid.N)
    nonzero = mag > 0
    entries[nonzero] = np.exp(s * np.log(mag[nonzero]))
    entries.setflags(write=False)
    return FractionalSymbol(exponent=s, entries=entries)


def apply_multiplier(u: np.ndarray, sym: FractionalSymbol) -> np.ndarray:
    """Apply the spectral multiplier: inverse-DFT of d_p * DFT(u).

    Cost is two FFTs, O(N log N).  For real u the result is real up to
    round-off because the multiplier is an even function of the wavenumber.
    """
    u = np.asarray(u)
    if u.shape != sym.entries.shape:
        raise DimensionError(
            f"state has shape {u.shape}, symbol expects {sym.entries.shape}"
        )
    return dft_inverse(sym.entries * dft_forward(u))
