"""
Dirichlet and initial conditions by semi-orthogonal selector reduction.

X = P_x X_hat P_t^T + X_D splits a field into unknowns X_hat and known data X_D;
substituting into A X + X B = C leaves a smaller Sylvester equation for X_hat.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from spacetime.discretization import SylvesterSystem
from spacetime.grid import GridError, ShapeError


def build_permutations(grid):
    """Selectors of the spatial interior (n_x x n) and of times after t_0 (n_t x s)."""
    if grid.n < 3 or grid.s < 2:
        raise GridError(f"grid {grid} is too small to separate boundary and interior nodes")
    P_x = sp.identity(grid.n_x, format="csr")[:, 1:-1]
    P_t = sp.identity(grid.n_t, format="csr")[:, 1:]
    return sp.csr_matrix(P_x), sp.csr_matrix(P_t)


def build_dirichlet_data(pde, grid):
    exact = grid.sample(pde.exact)
    X_D = np.zeros(grid.shape)
    X_D[[0, -1], :] = exact[[0, -1], :]
    X_D[:, 0] = exact[:, 0]
    return X_D


def _sandwich(P_x, M, P_t):
    # P_x^T M P_t for dense M
    return np.asarray(P_x.T @ np.asarray(P_t.T @ M.T).T)


def _check(P_x, P_t, X_D):
    if P_x.shape[0] != X_D.shape[0] or P_t.shape[0] != X_D.shape[1]:
        raise ShapeError(f"selectors {P_x.shape}, {P_t.shape} do not fit X_D {X_D.shape}")


@dataclass(frozen=True)
class ReducedSystem:
    A_hat: sp.csr_matrix
    B_hat: sp.csr_matrix
    C_hat: np.ndarray
    P_x: sp.csr_matrix
    P_t: sp.csr_matrix
    X_D: np.ndarray
    grid: object

    def restrict(self, X):
        """Unknown part P_x^T (X - X_D) P_t of a full field."""
        X = self.grid.check_field(X)
        return _sandwich(self.P_x, X - self.X_D, self.P_t)

    def as_sylvester(self):
        return SylvesterSystem(self.A_hat, self.B_hat, self.C_hat, self.grid, reduced=True)


def reduce(system, P_x, P_t, X_D):
    X_D = np.asarray(X_D, dtype=float)
    _check(P_x, P_t, X_D)
    if system.C.shape != X_D.shape:
        raise ShapeError(f"system of size {system.C.shape} does not fit X_D {X_D.shape}")

    A_hat = sp.csr_matrix(P_x.T @ sp.csr_matrix(system.A) @ P_x)
    B_hat = sp.csr_matrix(P_t.T @ sp.csr_matrix(system.B) @ P_t)
    A_hat.eliminate_zeros()
    B_hat.eliminate_zeros()
    known = np.asarray(system.A @ X_D) + np.asarray(system.B.T @ X_D.T).T
    C_hat = _sandwich(P_x, system.C - known, P_t)
    return ReducedSystem(A_hat, B_hat, C_hat, P_x, P_t, X_D, system.grid)


def reconstruct(X_hat, P_x, P_t, X_D):
    X_D = np.asarray(X_D, dtype=float)
    _check(P_x, P_t, X_D)
    X_hat = np.asarray(X_hat, dtype=float)
    if X_hat.shape != (P_x.shape[1], P_t.shape[1]):
        raise ShapeError(f"X_hat {X_hat.shape} does not fit selectors {P_x.shape}, {P_t.shape}")
    return np.asarray(P_x @ np.asarray(P_t @ X_hat.T).T) + X_D
