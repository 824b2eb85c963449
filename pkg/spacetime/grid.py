"""
Dyadic tensor-product spacetime grids
"""

import math
from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    pass


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class DyadicGrid:
    """Collocation mesh at resolution level j.

    n and s count the unknowns per axis (interior space nodes, every time node
    after the initial one). The mesh itself carries n_x = n + 2 spatial and
    n_t = s + 1 temporal nodes, endpoints included.
    """
    j: int
    p_x: int
    p_t: int
    x_lo: float = -1.0
    x_hi: float = 1.0
    t_lo: float = 0.0
    t_hi: float = 1.0

    @property
    def n(self):
        return 2 ** (self.j + 1) * self.p_x - 1

    @property
    def s(self):
        return 2 ** (self.j + 1) * self.p_t

    @property
    def n_x(self):
        return self.n + 2

    @property
    def n_t(self):
        return self.s + 1

    @property
    def dofs(self):
        return self.n * self.s

    @property
    def dx(self):
        return (self.x_hi - self.x_lo) / (self.n_x - 1)

    @property
    def dt(self):
        return (self.t_hi - self.t_lo) / (self.n_t - 1)

    @property
    def bounds(self):
        return (self.x_lo, self.x_hi), (self.t_lo, self.t_hi)

    @property
    def x(self):
        # lo + L*i/N from the integer index keeps levels nested bit-for-bit
        i = np.arange(self.n_x)
        return self.x_lo + (self.x_hi - self.x_lo) * i / (self.n_x - 1)

    @property
    def t(self):
        k = np.arange(self.n_t)
        return self.t_lo + (self.t_hi - self.t_lo) * k / (self.n_t - 1)

    @property
    def shape(self):
        return self.n_x, self.n_t

    def mesh(self):
        return np.meshgrid(self.x, self.t, indexing="ij")

    def sample(self, fn):
        """Evaluate fn(x, t) on every node, space along rows."""
        X, T = self.mesh()
        return np.broadcast_to(np.asarray(fn(X, T), dtype=float), self.shape).copy()

    def check_field(self, field, name="field"):
        field = np.asarray(field, dtype=float)
        if field.shape != self.shape:
            raise ShapeError(f"{name} has shape {field.shape}, grid j={self.j} expects {self.shape}")
        return field

    def as_row(self):
        return {'j': self.j, 'p_x': self.p_x, 'p_t': self.p_t, 'n': self.n, 's': self.s}

    def __str__(self):
        return f"DyadicGrid(j={self.j}, p_x={self.p_x}, p_t={self.p_t}, n={self.n}, s={self.s})"


def _check_order(name, p, minimum):
    if not isinstance(p, (int, np.integer)) or p % 2 or p < minimum or p > 12:
        raise GridError(f"{name} must be an even integer in [{minimum}, 12], got {p}")


def build_grid(j, p_x, p_t, bounds=((-1.0, 1.0), (0.0, 1.0))):
    if not isinstance(j, (int, np.integer)) or j < 0:
        raise GridError(f"resolution level must be a non-negative integer, got {j}")
    _check_order("p_x", p_x, 4)
    _check_order("p_t", p_t, 2)

    (x_lo, x_hi), (t_lo, t_hi) = bounds
    for lo, hi, axis in ((x_lo, x_hi, "x"), (t_lo, t_hi, "t")):
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
            raise GridError(f"degenerate {axis} bounds [{lo}, {hi}]")

    return DyadicGrid(int(j), int(p_x), int(p_t), float(x_lo), float(x_hi), float(t_lo), float(t_hi))


def refine(grid):
    return DyadicGrid(grid.j + 1, grid.p_x, grid.p_t, grid.x_lo, grid.x_hi, grid.t_lo, grid.t_hi)
