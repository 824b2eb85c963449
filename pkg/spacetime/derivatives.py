"""
Sparse wavelet differentiation matrices built from connection coefficients
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
from loguru import logger

from spacetime.mra import dd_filter, lagrange_weights

AXES = ("space", "time")


class ConnectionCoefficientError(ValueError):
    pass


@lru_cache(maxsize=None)
def _connection_coefficients(p, alpha):
    mask = dd_filter(p).refinement_mask()
    offsets = np.arange(-(p - 1), p)
    size = len(offsets)

    # w_d = 2^alpha sum_k h_k w_(2d-k): eigenvector of T for eigenvalue 2^-alpha
    T = np.zeros((size, size))
    for a, l in enumerate(offsets):
        for b, m in enumerate(offsets):
            T[a, b] = float(mask.get(2 * l - m, 0))
    kernel = scipy.linalg.null_space(2.0 ** alpha * T - np.eye(size), rcond=1e-9)
    if kernel.shape[1] == 0:
        raise ConnectionCoefficientError(
            f"eigenvalue 2^-{alpha} not isolated for the order-{p} refinement matrix")

    # fix the scale (and any multiplicity) with sum_d d^m w_d = alpha! delta_(m, alpha)
    moments = np.vander(offsets.astype(float), p, increasing=True).T
    reach = np.abs(moments[alpha]) @ np.abs(kernel)
    if np.all(np.abs(moments[alpha] @ kernel) < 1e-8 * reach):
        raise ConnectionCoefficientError(
            f"order-{p} basis is not smooth enough for derivative order {alpha}")
    target = np.zeros(p)
    target[alpha] = math.factorial(alpha)
    coeffs, *_ = np.linalg.lstsq(moments @ kernel, target, rcond=None)
    w = kernel @ coeffs
    scale = np.maximum(np.abs(moments) @ np.abs(w), 1.0)
    misfit = np.max(np.abs(moments @ w - target) / scale)
    if misfit > 1e-8:
        raise ConnectionCoefficientError(
            f"order-{p} basis is not smooth enough for derivative order {alpha} "
            f"(moment misfit {misfit:.2e})")

    w = 0.5 * (w + (-1) ** alpha * w[::-1])
    # w at offsets +-(p-1) vanishes identically; only roundoff is left there
    w[np.abs(w) < 1e-10 * np.max(np.abs(w))] = 0.0
    nonzero = np.flatnonzero(w)
    r = max(p - 1 - nonzero[0], nonzero[-1] - (p - 1))
    logger.debug(f"connection coefficients p={p} alpha={alpha}: half-width {r}")
    return w[p - 1 - r:p + r]


def connection_coefficients(p, alpha):
    """Centered stencil w_(-r..r) with f^(alpha)(x_i) ~ sum_d w_d f(x_(i+d)) / h^alpha."""
    dd_filter(p)
    if not 1 <= alpha <= p - 2:
        raise ConnectionCoefficientError(f"derivative order {alpha} needs 1 <= alpha <= p-2 (p={p})")
    return _connection_coefficients(int(p), int(alpha)).copy()


@lru_cache(maxsize=None)
def _boundary_stencil(p, alpha, offset):
    nodes = range(p + alpha - 1)
    return np.array([float(w) for w in lagrange_weights(nodes, Fraction(offset), derivative=alpha)])


def boundary_stencils(p, alpha, offset):
    """One-sided weights on nodes 0 .. p+alpha-2 for the row at node `offset`.

    Exact for polynomials of degree <= p+alpha-2 (so at least p-1).
    """
    if p % 2 or p < 2 or alpha < 1:
        raise ConnectionCoefficientError(f"bad boundary stencil request p={p}, alpha={alpha}")
    if not 0 <= offset < p - 1:
        raise ConnectionCoefficientError(f"boundary offset {offset} outside [0, {p - 2}]")
    w = _boundary_stencil(int(p), int(alpha), int(offset))
    assert np.all(np.isfinite(w))
    return w.copy()


@dataclass(frozen=True)
class DerivOperator:
    axis: str
    alpha: int
    p: int
    size: int
    spacing: float
    matrix: sp.csr_matrix

    @property
    def nnz(self):
        return self.matrix.nnz

    @property
    def bandwidth(self):
        coo = self.matrix.tocoo()
        return int(np.max(np.abs(coo.row - coo.col))) * 2 + 1 if coo.nnz else 0

    def apply(self, values):
        """Differentiate a field along this operator's axis (rows = space, columns = time)."""
        values = np.asarray(values, dtype=float)
        if self.axis == "space":
            return self.matrix @ values
        return (self.matrix @ values.T).T

    def to_matrix_market(self, path):
        scipy.io.mmwrite(str(path), self.matrix,
                         comment=f"d^{self.alpha}/d{self.axis}^{self.alpha}, p={self.p}")


def assemble_derivative(grid, axis, alpha):
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    if axis == "space":
        p, size, h = grid.p_x, grid.n_x, grid.dx
    else:
        p, size, h = grid.p_t, grid.n_t, grid.dt

    w = connection_coefficients(p, alpha)
    r = len(w) // 2
    width = p + alpha - 1
    if size < max(2 * r + 1, width):
        raise ConnectionCoefficientError(f"{size} nodes are too few for the order-{p} stencils")

    rows, cols, vals = [], [], []
    for i in range(size):
        if i < r:
            start, row = 0, boundary_stencils(p, alpha, i)
        elif i >= size - r:
            start, row = size - width, (-1) ** alpha * boundary_stencils(p, alpha, size - 1 - i)[::-1]
        else:
            start, row = i - r, w
        for k, value in enumerate(row):
            if value != 0.0:
                rows.append(i)
                cols.append(start + k)
                vals.append(value)

    matrix = sp.csr_matrix((np.array(vals) / h ** alpha, (rows, cols)), shape=(size, size))
    return DerivOperator(axis, int(alpha), int(p), size, float(h), matrix)
