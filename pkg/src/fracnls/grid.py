"""Periodic spatial discretization and quadrature.

The whole space is truncated to the isotropic box ``[-L/2, L/2)^N`` with
``M`` nodes per axis.  Fields are plain complex numpy arrays of shape
``grid.shape`` (row-major), always passed together with their grid.

Transform convention: the forward DFT is unnormalized and the inverse
carries ``1/M^N`` (numpy's default), so for a field ``u`` with
``uh = fftn(u)``::

    integrate(|u|^2) = h^N * sum |u|^2 = (h^N / M^N) * sum |uh|^2
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Isotropic periodic grid on ``[-L/2, L/2)^dim``."""

    dim: int
    n: int
    length: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise GridError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 16 or self.n & (self.n - 1):
            raise GridError(f"points_per_axis must be a power of two >= 16, got {self.n}")
        if not (self.length > 0 and np.isfinite(self.length)):
            raise GridError(f"box_length must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return self.length**self.dim

    @cached_property
    def x(self) -> np.ndarray:
        """1-D node coordinates; node ``n//2`` sits at the origin."""
        return -0.5 * self.length + self.spacing * np.arange(self.n)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """1-D wavenumbers ``2*pi*k/L`` in FFT order, ``k`` in ``[-M/2, M/2)``."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @cached_property
    def coords(self) -> tuple:
        return tuple(np.meshgrid(*([self.x] * self.dim), indexing="ij"))

    @cached_property
    def r2(self) -> np.ndarray:
        """Squared distance of every node from the origin."""
        return sum(c * c for c in self.coords)

    @cached_property
    def k2(self) -> np.ndarray:
        """``|xi|^2`` on the wavenumber lattice (FFT order)."""
        ks = np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij")
        return sum(k * k for k in ks)

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.k2)

    def symbol(self, power: float) -> np.ndarray:
        """``|xi|^power`` with the zero mode mapped to zero."""
        if power == 0:
            out = np.ones(self.shape)
        else:
            out = self.kabs**power
        return out

    @property
    def spectral_weight(self) -> float:
        """Factor turning ``sum(w*|fftn(u)|^2)`` into an integral."""
        return self.cell_volume / self.size

    def spectral_sum(self, uh: np.ndarray, weight=None) -> float:
        p = np.abs(uh) ** 2
        if weight is not None:
            p = p * weight
        return float(self.spectral_weight * p.sum())

    def check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u)
        if u.shape != self.shape:
            raise GridError(f"field shape {u.shape} does not match grid {self.shape}")
        return u

    def companion(self, theta: float) -> "Grid":
        """Grid with the same node count and box ``L / theta``."""
        return Grid(self.dim, self.n, self.length / theta)


def make_grid(dim: int, points_per_axis: int, box_length: float) -> Grid:
    return Grid(int(dim), int(points_per_axis), float(box_length))


def integrate(u: np.ndarray, grid: Grid):
    """``h^N * sum(u)``; exact for trigonometric polynomials resolved on the grid."""
    u = grid.check(u)
    s = grid.cell_volume * u.sum()
    if np.iscomplexobj(s):
        return complex(s)
    return float(s)


def inner_product(a: np.ndarray, b: np.ndarray, grid: Grid) -> complex:
    """L2 pairing, conjugate-linear in ``a``."""
    a = grid.check(a)
    b = grid.check(b)
    return complex(grid.cell_volume * np.vdot(a, b))


def norm2(u: np.ndarray, grid: Grid) -> float:
    return float(grid.cell_volume * np.vdot(u, u).real)


def fft(u: np.ndarray) -> np.ndarray:
    return np.fft.fftn(u)


def ifft(uh: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(uh)


def tail_fraction(u: np.ndarray, grid: Grid, band: float = 0.1) -> float:
    """Fraction of ``|u|^2`` mass in the outer ``band`` of the half-width on any axis."""
    rho = np.abs(grid.check(u)) ** 2
    total = rho.sum()
    if total == 0:
        return 0.0
    edge = (1.0 - band) * 0.5 * grid.length
    mask = np.zeros(grid.shape, dtype=bool)
    for c in grid.coords:
        mask |= np.abs(c) >= edge
    return float(rho[mask].sum() / total)


def shift(u: np.ndarray, steps) -> np.ndarray:
    """Translate a field by whole grid steps (periodic)."""
    steps = np.broadcast_to(np.asarray(steps, dtype=int), (u.ndim,))
    return np.roll(u, tuple(int(s) for s in steps), axis=tuple(range(u.ndim)))
