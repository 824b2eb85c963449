"""
Manufactured linear PDEs and their spacetime Sylvester discretization
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.io
import scipy.sparse as sp
from loguru import logger

from spacetime.derivatives import assemble_derivative
from spacetime.grid import ShapeError
from spacetime.krylov import sylvester_residual

KINDS = ("diffusion", "convection_diffusion")
DEFAULT_KRON_CAP = 4_000_000


class KroneckerSizeError(ValueError):
    pass


@dataclass(frozen=True)
class PdeSpec:
    """f_t + c f_x - nu f_xx = forcing, with Dirichlet and initial data taken from exact."""
    kind: str
    nu: float
    c: float
    exact: Callable
    forcing: Callable
    exact_dt: Callable
    exact_dx: Callable
    exact_dxx: Callable
    params: dict = field(default_factory=dict)

    def operator_residual(self, x, t, h=1e-3):
        f = self.exact
        f_t = (-f(x, t + 2 * h) + 8 * f(x, t + h) - 8 * f(x, t - h) + f(x, t - 2 * h)) / (12 * h)
        f_x = (-f(x + 2 * h, t) + 8 * f(x + h, t) - 8 * f(x - h, t) + f(x - 2 * h, t)) / (12 * h)
        f_xx = (-f(x + 2 * h, t) + 16 * f(x + h, t) - 30 * f(x, t)
                + 16 * f(x - h, t) - f(x - 2 * h, t)) / (12 * h * h)
        return f_t + self.c * f_x - self.nu * f_xx - self.forcing(x, t)

    def consistency_residual(self, n_points=100, seed=0, bounds=((-1.0, 1.0), (0.0, 1.0))):
        """Max |PDE(exact) - forcing| over random points, derivatives by finite differences."""
        rng = np.random.default_rng(seed)
        (x_lo, x_hi), (t_lo, t_hi) = bounds
        x = rng.uniform(x_lo, x_hi, n_points)
        t = rng.uniform(t_lo, t_hi, n_points)
        return float(np.max(np.abs(self.operator_residual(x, t))))


def mms_diffusion(v=1.0, nu=0.01, sigma=0.1, x0=0.0):
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if nu < 0:
        raise ValueError(f"nu must be non-negative, got {nu}")

    def width(t):
        return 2 * nu * t + sigma ** 2

    def exact(x, t):
        S = width(t)
        return np.sqrt(v ** 2 * sigma ** 2 / S) * np.exp(-(x - x0) ** 2 / (2 * S))

    def exact_dx(x, t):
        return -(x - x0) / width(t) * exact(x, t)

    def exact_dxx(x, t):
        S = width(t)
        return ((x - x0) ** 2 / S ** 2 - 1 / S) * exact(x, t)

    def exact_dt(x, t):
        return nu * exact_dxx(x, t)

    def forcing(x, t):
        return np.zeros(np.broadcast(x, t).shape)

    return PdeSpec("diffusion", nu, 0.0, exact, forcing, exact_dt, exact_dx, exact_dxx,
                   {'v': v, 'sigma': sigma, 'x0': x0})


def mms_convdiff(v=3.0, a=5.0, b=5.0, c=1.0, nu=0.01):
    def exact(x, t):
        return v * np.sin(a * x) * np.exp(-b * t)

    def exact_dx(x, t):
        return v * a * np.cos(a * x) * np.exp(-b * t)

    def exact_dxx(x, t):
        return -a ** 2 * exact(x, t)

    def exact_dt(x, t):
        return -b * exact(x, t)

    def forcing(x, t):
        return v * (a * c * np.cos(a * x) + (a ** 2 * nu - b) * np.sin(a * x)) * np.exp(-b * t)

    return PdeSpec("convection_diffusion", nu, c, exact, forcing, exact_dt, exact_dx, exact_dxx,
                   {'v': v, 'a': a, 'b': b})


@dataclass(frozen=True)
class SylvesterSystem:
    """A X + X B = C; A acts on the spatial index, B on the temporal one."""
    A: object
    B: object
    C: np.ndarray
    grid: object = None
    reduced: bool = False

    def __post_init__(self):
        n, s = self.C.shape
        if self.A.shape != (n, n) or self.B.shape != (s, s):
            raise ShapeError(f"A {self.A.shape}, B {self.B.shape} do not match C {self.C.shape}")
        if self.grid is None:
            return
        expected = (self.grid.n, self.grid.s) if self.reduced else self.grid.shape
        if (n, s) != expected:
            raise ShapeError(f"system of size {n}x{s} does not match grid {expected}")

    def residual(self, X):
        return sylvester_residual(self.A, self.B, self.C, X)


def assemble(pde, grid):
    if pde.kind not in KINDS:
        raise ValueError(f"unknown PDE kind {pde.kind!r}")
    d_t = assemble_derivative(grid, "time", 1)
    d_xx = assemble_derivative(grid, "space", 2)

    A = -pde.nu * d_xx.matrix
    if pde.c:
        A = A + pde.c * assemble_derivative(grid, "space", 1).matrix
    A = sp.csr_matrix(A)
    A.eliminate_zeros()
    B = sp.csr_matrix(d_t.matrix.T)
    C = grid.sample(pde.forcing)

    logger.debug(f"assembled {pde.kind} on {grid}: nnz(A)={A.nnz}, nnz(B)={B.nnz}")
    return SylvesterSystem(A, B, C, grid)


def vec(X):
    return np.asarray(X).reshape(-1, order="F")


def unvec(x, shape):
    return np.asarray(x).reshape(shape, order="F")


def kronecker_form(system, max_size=DEFAULT_KRON_CAP):
    """K vec(X) = vec(C) with K = I_s (x) A + B^T (x) I_n, column-stacking vec."""
    n, s = system.C.shape
    if n * s > max_size:
        raise KroneckerSizeError(f"Kronecker system of size {n * s} exceeds the cap {max_size}")
    K = sp.kron(sp.identity(s, format="csr"), system.A) + sp.kron(sp.csr_matrix(system.B).T, sp.identity(n))
    K = sp.csr_matrix(K)
    K.eliminate_zeros()
    return K, vec(system.C)


def write_matrix_market(matrices, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, matrix in matrices.items():
        path = out_dir / f"{name}.mtx"
        scipy.io.mmwrite(str(path), sp.coo_matrix(matrix))
        paths.append(path)
        logger.info(f"wrote {path} ({sp.coo_matrix(matrix).nnz} nonzeros)")
    return paths
