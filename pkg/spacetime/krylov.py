"""
Restarted Krylov solvers for A X + X B = C.

Global GMRES works on matrix iterates with the Frobenius inner product; the
baseline is plain restarted GMRES on the vectorized (Kronecker) system. Both
share one cycle loop: modified Gram-Schmidt Arnoldi, Givens-rotation least
squares and restart from the updated iterate.
"""

import time
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from loguru import logger

from spacetime.grid import ShapeError

DEFAULT_SPECTRUM_CAP = 2000


class SpectrumSizeError(ValueError):
    pass


@dataclass
class SolveReport:
    converged: bool
    inner_iterations: int
    restarts: int
    residual_history: list
    matvec_count: int
    wall_time: float
    flops: float = 0.0
    method: str = "gl_gmres"

    @property
    def final_residual(self):
        return self.residual_history[-1]

    def as_row(self):
        row = asdict(self)
        del row['residual_history']
        row['final_residual'] = self.final_residual
        return row


def _sylvester_apply(A, B, X):
    return np.asarray(A @ X) + np.asarray(B.T @ X.T).T


def _check_sylvester(A, B, C, X):
    n, s = np.shape(C)
    if A.shape != (n, n) or B.shape != (s, s) or np.shape(X) != (n, s):
        raise ShapeError(f"A {A.shape}, B {B.shape}, X {np.shape(X)} do not fit C {(n, s)}")


def sylvester_residual(A, B, C, X):
    _check_sylvester(A, B, C, X)
    X = np.asarray(X, dtype=float)
    return np.asarray(C, dtype=float) - _sylvester_apply(A, B, X)


def _arnoldi(apply, r0, m, tol_H):
    """Yield (k, basis, H[:k+1, :k], breakdown) after each Arnoldi step.

    The basis holds k+1 entries, or k after a breakdown. Works for vectors and
    matrices alike since vdot and norm flatten their arguments.
    """
    basis = [r0 / np.linalg.norm(r0)]
    H = np.zeros((m + 1, m))
    for z in range(m):
        w = apply(basis[z])
        # modified Gram-Schmidt
        for i, v in enumerate(basis):
            H[i, z] = np.vdot(v, w)
            w = w - H[i, z] * v
        H[z + 1, z] = np.linalg.norm(w)
        breakdown = H[z + 1, z] < tol_H
        if not breakdown:
            basis.append(w / H[z + 1, z])
        yield z + 1, basis, H[:z + 2, :z + 1], breakdown
        if breakdown:
            return


def global_arnoldi(A, B, R0, m, tol_H):
    """Matrix Krylov basis V_1..V_k of W -> A W + W B and its (k+1) x k Hessenberg."""
    R0 = np.asarray(R0, dtype=float)
    _check_sylvester(A, B, R0, R0)
    if np.linalg.norm(R0) == 0:
        raise ValueError("initial residual is zero, nothing to build a Krylov space from")
    for k, basis, H, breakdown in _arnoldi(lambda V: _sylvester_apply(A, B, V), R0, m, tol_H):
        if breakdown:
            logger.debug(f"global Arnoldi breakdown at step {k}")
    return basis[:k], H.copy()


class _GivensLsq:
    """min || beta e_1 - H y || with H grown one column at a time."""

    def __init__(self, beta, m):
        self.R = np.zeros((m + 1, m))
        self.g = np.zeros(m + 1)
        self.g[0] = beta
        self.rotations = []
        self.k = 0

    def add_column(self, h):
        k = self.k
        h = np.array(h, dtype=float)
        for i, (c, s) in enumerate(self.rotations):
            h[i], h[i + 1] = c * h[i] + s * h[i + 1], -s * h[i] + c * h[i + 1]
        rho = np.hypot(h[k], h[k + 1])
        c, s = (1.0, 0.0) if rho == 0 else (h[k] / rho, h[k + 1] / rho)
        self.rotations.append((c, s))
        h[k], h[k + 1] = rho, 0.0
        self.g[k], self.g[k + 1] = c * self.g[k], -s * self.g[k]
        self.R[:k + 2, k] = h
        self.k += 1
        return abs(self.g[k + 1])

    def solve(self):
        k = self.k
        R = self.R[:k, :k]
        diag = np.abs(np.diag(R))
        # rank-deficient H: keep the leading well-conditioned part
        tiny = diag <= 1e-14 * max(diag.max(initial=0.0), np.finfo(float).tiny)
        rank = int(np.argmax(tiny)) if tiny.any() else k
        y = np.zeros(k)
        if rank:
            y[:rank] = scipy.linalg.solve_triangular(R[:rank, :rank], self.g[:rank])
        return y, float(np.linalg.norm(self.g[rank:k + 1]))


def hessenberg_lsq(H, beta):
    """Least-squares coefficients for a (k+1) x k Hessenberg H and the residual norm."""
    H = np.asarray(H, dtype=float)
    k = H.shape[1]
    if H.shape[0] != k + 1:
        raise ShapeError(f"Hessenberg matrix must be (k+1) x k, got {H.shape}")
    lsq = _GivensLsq(beta, k)
    for z in range(k):
        lsq.add_column(H[:z + 2, z])
    return lsq.solve()


def _restarted(apply, rhs, x0, config, apply_flops, method):
    start = time.perf_counter()
    x = np.array(x0, dtype=float)
    size = x.size
    r = rhs - apply(x)
    history = [float(np.linalg.norm(r))]
    matvecs, inner, cycles = 1, 0, 0
    flops = apply_flops

    while history[-1] >= config.tol and cycles <= config.max_restarts:
        cycles += 1
        lsq = _GivensLsq(history[-1], config.m)
        for k, basis, H, breakdown in _arnoldi(apply, r, config.m, config.tol_H):
            matvecs += 1
            inner += 1
            flops += apply_flops + (4 * k + 3) * size
            estimate = lsq.add_column(H[:, -1])
            if breakdown or estimate < config.tol:
                break
        y, _ = lsq.solve()
        for coeff, v in zip(y, basis):
            x += coeff * v
        flops += 2 * len(y) * size

        r = rhs - apply(x)
        matvecs += 1
        flops += apply_flops
        history.append(float(np.linalg.norm(r)))
        logger.debug(f"{method} cycle {cycles}: {k} steps, residual {history[-1]:.3e}")

    report = SolveReport(
        converged=history[-1] < config.tol,
        inner_iterations=inner,
        restarts=max(cycles - 1, 0),
        residual_history=history,
        matvec_count=matvecs,
        wall_time=time.perf_counter() - start,
        flops=float(flops),
        method=method,
    )
    if not report.converged:
        logger.warning(f"{method} stopped after {report.restarts} restarts "
                       f"with residual {report.final_residual:.3e} (tol {config.tol:.1e})")
    return x, report


def gl_gmres(A, B, C, X0, config):
    _check_sylvester(A, B, C, X0)
    C = np.asarray(C, dtype=float)
    n, s = C.shape
    cost = 2 * sp.csr_matrix(A).nnz * s + 2 * sp.csr_matrix(B).nnz * n + n * s
    return _restarted(lambda V: _sylvester_apply(A, B, V), C, X0, config, cost, "gl_gmres")


def gmres_restarted(K, r, x0, config):
    r = np.asarray(r, dtype=float)
    if K.shape != (r.size, r.size):
        raise ShapeError(f"K {K.shape} does not fit a right-hand side of length {r.size}")
    if x0 is None:
        x0 = np.zeros_like(r)
    cost = 2 * sp.csr_matrix(K).nnz
    return _restarted(lambda v: np.asarray(K @ v), r, x0, config, cost, "gmres")


def spectrum(M, max_size=DEFAULT_SPECTRUM_CAP):
    if M.shape[0] > max_size:
        raise SpectrumSizeError(f"dense eigenvalues of a {M.shape[0]}x{M.shape[0]} matrix exceed the cap {max_size}")
    dense = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    return np.sort_complex(scipy.linalg.eigvals(dense))


def spectral_gap(A_hat, B_hat, max_size=DEFAULT_SPECTRUM_CAP):
    """min |lambda + mu| over eigenvalues of A_hat and B_hat; zero means A X + X B = C is singular."""
    lam = spectrum(A_hat, max_size)
    mu = spectrum(B_hat, max_size)
    return float(np.min(np.abs(lam[:, None] + mu[None, :])))
