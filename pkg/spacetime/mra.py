"""
Deslauriers-Dubuc interpolating wavelets on dyadic spacetime grids.

Scaling coefficients of the interpolating family are point values, so analysis
is the predict/subtract butterfly: even nodes pass through to the coarser level,
odd nodes keep the difference to the Lagrange midpoint prediction.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from spacetime.grid import ShapeError, refine


class FilterError(ValueError):
    pass


def _times_linear(coeffs, a):
    # coeffs * (x + a), lowest degree first
    out = [Fraction(0)] * (len(coeffs) + 1)
    for d, c in enumerate(coeffs):
        out[d] += c * a
        out[d + 1] += c
    return out


def lagrange_weights(nodes, at, derivative=0):
    """Exact rational weights w with sum_k w[k] f(nodes[k]) = f^(derivative)(at)
    for every polynomial f of degree < len(nodes)."""
    nodes = [Fraction(z) for z in nodes]
    at = Fraction(at)
    weights = []
    for k, z_k in enumerate(nodes):
        coeffs = [Fraction(1)]
        denom = Fraction(1)
        for i, z_i in enumerate(nodes):
            if i == k:
                continue
            coeffs = _times_linear(coeffs, -z_i)
            denom *= z_k - z_i
        for _ in range(derivative):
            coeffs = [d * c for d, c in enumerate(coeffs)][1:]
        value = sum((c * at ** d for d, c in enumerate(coeffs)), Fraction(0))
        weights.append(value / denom)
    return weights


@dataclass(frozen=True)
class FilterBank:
    p: int
    # nodes -p/2+1 .. p/2 around the midpoint between coarse nodes 0 and 1
    midpoint_weights: tuple
    # row k predicts the midpoint k + 1/2 from coarse nodes 0 .. p-1
    boundary_weights: tuple

    @property
    def interior(self):
        return np.array([float(w) for w in self.midpoint_weights])

    @property
    def boundary(self):
        rows = [[float(w) for w in row] for row in self.boundary_weights]
        return np.array(rows, dtype=float).reshape(len(rows), self.p)

    def refinement_mask(self):
        """Mask h of phi(x) = sum_k h_k phi(2x - k); h_k = phi(k/2)."""
        half = self.p // 2
        mask = {0: Fraction(1)}
        for i in range(-half, half):
            mask[2 * i + 1] = self.midpoint_weights[-i + half - 1]
        return mask


@lru_cache(maxsize=None)
def dd_filter(p):
    if not isinstance(p, (int, np.integer)) or p % 2 or not 2 <= p <= 12:
        raise FilterError(f"unsupported Deslauriers-Dubuc order p={p} (even, 2..12)")
    half = p // 2
    midpoint = tuple(lagrange_weights(range(-half + 1, half + 1), Fraction(1, 2)))
    boundary = tuple(
        tuple(lagrange_weights(range(p), Fraction(2 * k + 1, 2)))
        for k in range(half - 1)
    )
    return FilterBank(int(p), midpoint, boundary)


@lru_cache(maxsize=None)
def prediction_matrix(p, n_coarse):
    """Sparse (n_coarse-1) x n_coarse map from coarse values to midpoint predictions."""
    if n_coarse < p:
        raise FilterError(f"{n_coarse} coarse nodes cannot carry an order-{p} prediction")
    bank = dd_filter(p)
    half = p // 2
    interior, boundary = bank.interior, bank.boundary

    rows, cols, vals = [], [], []
    for i in range(n_coarse - 1):
        mirror = n_coarse - 2 - i
        if i < half - 1:
            start, w = 0, boundary[i]
        elif mirror < half - 1:
            start, w = n_coarse - p, boundary[mirror][::-1]
        else:
            start, w = i - half + 1, interior
        rows.extend([i] * p)
        cols.extend(range(start, start + p))
        vals.extend(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n_coarse - 1, n_coarse))


def _analyze(values, p, axis):
    v = np.moveaxis(values, axis, 0)
    coarse = v[0::2]
    detail = v[1::2] - prediction_matrix(p, coarse.shape[0]) @ coarse
    return np.moveaxis(coarse, 0, axis), np.moveaxis(detail, 0, axis)


def _synthesize(coarse, detail, p, axis):
    c = np.moveaxis(coarse, axis, 0)
    d = np.moveaxis(detail, axis, 0)
    if d.shape[0] != c.shape[0] - 1 or d.shape[1:] != c.shape[1:]:
        raise ShapeError(f"detail block {detail.shape} does not fit coarse block {coarse.shape}")
    out = np.empty((2 * c.shape[0] - 1,) + c.shape[1:])
    out[0::2] = c
    out[1::2] = d + prediction_matrix(p, c.shape[0]) @ c
    return np.moveaxis(out, 0, axis)


@dataclass
class WaveletCoeffs:
    base: np.ndarray
    base_level: int
    # coarse to fine; type 1 = detail in x, 2 = detail in t, 3 = both
    details: list = field(default_factory=list)

    @property
    def finest_level(self):
        return self.base_level + len(self.details)

    def count(self):
        return self.base.size + sum(block.size for level in self.details for block in level.values())

    def max_detail(self, level=-1):
        if not self.details:
            return 0.0
        return max(float(np.max(np.abs(block))) for block in self.details[level].values())


def forward_transform(values, grid, n_levels=None):
    current = grid.check_field(values)
    if n_levels is None:
        n_levels = grid.j
    if not 0 <= n_levels <= grid.j:
        raise ShapeError(f"cannot take {n_levels} levels below j={grid.j}")

    details = []
    for _ in range(n_levels):
        cx, dx = _analyze(current, grid.p_x, axis=0)
        current, t_detail = _analyze(cx, grid.p_t, axis=1)
        x_detail, xt_detail = _analyze(dx, grid.p_t, axis=1)
        details.append({1: x_detail, 2: t_detail, 3: xt_detail})
    details.reverse()
    return WaveletCoeffs(base=current, base_level=grid.j - n_levels, details=details)


def backward_transform(coeffs, grid):
    if coeffs.finest_level != grid.j:
        raise ShapeError(f"coefficients end at level {coeffs.finest_level}, grid is at j={grid.j}")
    current = np.asarray(coeffs.base, dtype=float)
    for level in coeffs.details:
        cx = _synthesize(current, level[2], grid.p_t, axis=1)
        dx = _synthesize(level[1], level[3], grid.p_t, axis=1)
        current = _synthesize(cx, dx, grid.p_x, axis=0)
    return grid.check_field(current, name="synthesized field")


def prolong(values, grid):
    """One synthesis step with zero details: the level j+1 interpolant of values."""
    values = grid.check_field(values)
    up_x = _synthesize(values, np.zeros((grid.n_x - 1, grid.n_t)), grid.p_x, axis=0)
    return _synthesize(up_x, np.zeros((up_x.shape[0], grid.n_t - 1)), grid.p_t, axis=1)


def error_estimate(values, exact_fn, grid):
    """Largest wavelet coefficient of the error field on level j+1."""
    fine = refine(grid)
    return float(np.max(np.abs(fine.sample(exact_fn) - prolong(values, grid))))
