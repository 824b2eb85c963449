"""
Level solves, the recursive multilevel solve and the comparison studies
"""

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import pandas as pd
from loguru import logger

from spacetime.boundary import build_dirichlet_data, build_permutations, reconstruct, reduce
from spacetime.derivatives import assemble_derivative
from spacetime.discretization import DEFAULT_KRON_CAP, assemble, kronecker_form, unvec, vec
from spacetime.grid import build_grid
from spacetime.krylov import gl_gmres, gmres_restarted
from spacetime.mra import error_estimate, prolong
from spacetime.settings import SolverConfig, StudySettings

COLUMNS = ['j', 'p_x', 'p_t', 'N', 'error_inf', 'estimated_error', 'fitted_rate',
           'inner_iterations', 'restarts', 'wall_time', 'mode', 'formulation']
FORMULATIONS = ("sylvester", "kronecker")
DEFAULT_BOUNDS = ((-1.0, 1.0), (0.0, 1.0))
# convergence-study solves: the residual must resolve errors down to ~1e-11, and
# m = 30(j+1) stagnates on the order-8 time operator of the diffusion problem
STUDY_TOL = 1e-10
STUDY_M_FACTOR = 40


@dataclass
class StudyRecord:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def append(self, row):
        self.rows.append(dict(row))

    def extend(self, other):
        self.rows.extend(other.rows)

    def column(self, name):
        return [row.get(name) for row in self.rows]

    @property
    def converged(self):
        return all(row.get('converged', True) for row in self.rows)

    def to_frame(self):
        frame = pd.DataFrame(self.rows)
        extras = [c for c in frame.columns if c not in COLUMNS]
        return frame.reindex(columns=COLUMNS + extras)

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)
        logger.info(f"wrote {len(self)} study rows to {path}")


def rate(errors, j_list):
    """Least-squares slope of log2(error) against -j."""
    errors = np.asarray(errors, dtype=float)
    levels = np.asarray(j_list, dtype=float)
    if errors.shape != levels.shape or errors.size < 2:
        raise ValueError(f"need matching error and level lists of length >= 2, got {errors.size} and {levels.size}")
    if not np.all(errors > 0) or not np.all(np.isfinite(errors)):
        raise ValueError(f"rates need positive finite errors, got {errors.tolist()}")
    slope = np.polyfit(levels, np.log2(errors), 1)[0]
    return float(-slope)


def prepare_reduced(pde, grid):
    system = assemble(pde, grid)
    P_x, P_t = build_permutations(grid)
    X_D = build_dirichlet_data(pde, grid)
    return reduce(system, P_x, P_t, X_D)


def _level_config(config, j):
    if config is None:
        return SolverConfig.for_level(j)
    return config(j) if callable(config) else config


def solve_level(pde, grid, X0=None, config=None, formulation="sylvester", kron_cap=DEFAULT_KRON_CAP):
    """Assemble, reduce, solve and reconstruct on one level; X0 is a full-field guess."""
    if formulation not in FORMULATIONS:
        raise ValueError(f"formulation must be one of {FORMULATIONS}, got {formulation!r}")
    config = config or SolverConfig.for_level(grid.j)
    reduced = prepare_reduced(pde, grid)
    X_hat0 = reduced.restrict(np.zeros(grid.shape) if X0 is None else X0)

    if formulation == "sylvester":
        X_hat, report = gl_gmres(reduced.A_hat, reduced.B_hat, reduced.C_hat, X_hat0, config)
    else:
        K, r = kronecker_form(reduced.as_sylvester(), kron_cap)
        x, report = gmres_restarted(K, r, vec(X_hat0), config)
        X_hat = unvec(x, reduced.C_hat.shape)

    X = reconstruct(X_hat, reduced.P_x, reduced.P_t, reduced.X_D)
    logger.info(f"{grid}: {formulation} {'converged' if report.converged else 'NOT converged'} "
                f"in {report.inner_iterations} steps, {report.restarts} restarts, "
                f"residual {report.final_residual:.2e}, {report.wall_time:.2f}s")
    return X, report


def level_row(pde, grid, X, report, mode, formulation):
    exact = grid.sample(pde.exact)
    return {
        'j': grid.j,
        'p_x': grid.p_x,
        'p_t': grid.p_t,
        'N': grid.dofs,
        'error_inf': float(np.max(np.abs(X - exact))),
        'estimated_error': error_estimate(X, pde.exact, grid),
        'fitted_rate': math.nan,
        'inner_iterations': report.inner_iterations,
        'restarts': report.restarts,
        'wall_time': report.wall_time,
        'mode': mode,
        'formulation': formulation,
        'nu': pde.nu,
        'converged': report.converged,
        'final_residual': report.final_residual,
        'matvecs': report.matvec_count,
        'flops': report.flops,
    }


def derivative_errors(pde, grid, X):
    """Max-norm errors of the wavelet derivatives of X against the exact derivatives."""
    errors = {}
    for name, axis, alpha, exact in (('err_dx', "space", 1, pde.exact_dx),
                                     ('err_dxx', "space", 2, pde.exact_dxx),
                                     ('err_dt', "time", 1, pde.exact_dt)):
        approx = assemble_derivative(grid, axis, alpha).apply(X)
        errors[name] = float(np.max(np.abs(approx - grid.sample(exact))))
    return errors


def _recursive_levels(pde, j_start, j_max, orders, config, bounds):
    """Yield (grid, X, report) per level, each solve seeded with the prolonged coarser solution."""
    if j_start > j_max:
        raise ValueError(f"j_start={j_start} is above j_max={j_max}")
    p_x, p_t = orders
    X, grid = None, None
    for j in range(j_start, j_max + 1):
        X0 = None if X is None else prolong(X, grid)
        grid = build_grid(j, p_x, p_t, bounds)
        X, report = solve_level(pde, grid, X0, _level_config(config, j))
        yield grid, X, report


def solve_recursive(pde, j_start, j_max, orders, config_fn=None, bounds=DEFAULT_BOUNDS):
    """Solve from j_start up to j_max, each level starting from the prolonged coarser solution."""
    record = StudyRecord()
    iterations, elapsed = 0, 0.0
    X = None
    for grid, X, report in _recursive_levels(pde, j_start, j_max, orders, config_fn, bounds):
        iterations += report.inner_iterations
        elapsed += report.wall_time

        row = level_row(pde, grid, X, report, "recursive", "sylvester")
        row['cumulative_iterations'] = iterations
        row['cumulative_time'] = elapsed
        record.append(row)
    return X, record


def convergence_study(pde, j_list, order_pairs, config=None, bounds=DEFAULT_BOUNDS, j_start=0):
    """Recursive solves from j_start up to max(j_list), recording the levels in j_list.

    config is a SolverConfig or a j -> SolverConfig callable, by default m = STUDY_M_FACTOR(j+1)
    with tol STUDY_TOL. Zero-guess solves stall on the fine low-viscosity levels, so every level is
    seeded from the one below it.
    """
    j_list = list(j_list)
    if len(j_list) < 2 or any(b <= a for a, b in zip(j_list, j_list[1:])):
        raise ValueError(f"convergence study needs at least two strictly ascending levels, got {j_list}")
    j_start = min(j_start, j_list[0])
    if config is None:
        config = partial(SolverConfig.for_level, m_factor=STUDY_M_FACTOR, tol=STUDY_TOL)

    record = StudyRecord()
    for p_x, p_t in order_pairs:
        rows = []
        for grid, X, report in _recursive_levels(pde, j_start, j_list[-1], (p_x, p_t), config, bounds):
            if grid.j not in j_list:
                continue
            row = level_row(pde, grid, X, report, "recursive", "sylvester")
            row.update(derivative_errors(pde, grid, X))
            rows.append(row)

        fitted = rate([row['estimated_error'] for row in rows], j_list)
        derivative_rates = {f"rate_{name[4:]}": rate([row[name] for row in rows], j_list)
                            for name in ('err_dx', 'err_dxx', 'err_dt')}
        logger.info(f"orders ({p_x}, {p_t}): fitted rate {fitted:.2f}")
        for row in rows:
            row['fitted_rate'] = fitted
            row.update(derivative_rates)
            record.append(row)
    return record


def _complexity_exponent(rows):
    rows = [row for row in rows if not row.get('skipped')]
    if len(rows) < 2:
        return math.nan
    return float(np.polyfit(np.log([row['N'] for row in rows]), np.log([row['flops'] for row in rows]), 1)[0])


def formulation_comparison(pde, j_list, orders=(6, 4), config_fn=None, settings=None):
    """Sylvester (global GMRES) against Kronecker (vector GMRES) solves from zero guesses."""
    settings = settings or StudySettings()
    config_fn = config_fn or SolverConfig.for_level
    p_x, p_t = orders
    by_formulation = {name: [] for name in FORMULATIONS}

    for j in j_list:
        grid = build_grid(j, p_x, p_t, settings.bounds)
        reduced = prepare_reduced(pde, grid)
        nnz_A, nnz_B = reduced.A_hat.nnz, reduced.B_hat.nnz
        if grid.dofs <= settings.kron_cap:
            nnz_K = kronecker_form(reduced.as_sylvester(), settings.kron_cap)[0].nnz
        else:
            # entries of I (x) A and B^T (x) I overlap only where both diagonals are nonzero
            nnz_K = (grid.s * nnz_A + grid.n * nnz_B
                     - np.count_nonzero(reduced.A_hat.diagonal()) * np.count_nonzero(reduced.B_hat.diagonal()))
        solutions = {}

        for formulation in FORMULATIONS:
            counts = {'nnz_A': nnz_A, 'nnz_B': nnz_B, 'nnz_K': int(nnz_K)}
            if formulation == "kronecker" and grid.dofs > settings.kron_cap:
                logger.warning(f"skipping Kronecker solve at j={j}: {grid.dofs} unknowns exceed {settings.kron_cap}")
                by_formulation[formulation].append({
                    **grid.as_row(), 'N': grid.dofs, 'mode': "baseline",
                    'formulation': formulation, 'skipped': True, **counts})
                continue

            times = []
            for _ in range(settings.repeats):
                X, report = solve_level(pde, grid, None, config_fn(j), formulation, settings.kron_cap)
                times.append(report.wall_time)
            solutions[formulation] = X
            row = level_row(pde, grid, X, report, "baseline", formulation)
            row['wall_time'] = float(np.mean(times))
            row['skipped'] = False
            row.update(counts)
            by_formulation[formulation].append(row)

        if len(solutions) == 2:
            diff = float(np.max(np.abs(solutions["sylvester"] - solutions["kronecker"])))
            for formulation in FORMULATIONS:
                by_formulation[formulation][-1]['max_diff'] = diff

    record = StudyRecord()
    for formulation, rows in by_formulation.items():
        exponent = _complexity_exponent(rows)
        logger.info(f"{formulation}: flops grow like N^{exponent:.2f}")
        for row in rows:
            row['flops_exponent'] = exponent
            record.append(row)
    return record


def recursive_comparison(pde, j_max, orders, j_start=0, config_fn=None, bounds=DEFAULT_BOUNDS):
    """Per level: zeros-guess single-level solve against the recursive solve."""
    config_fn = config_fn or SolverConfig.for_level
    p_x, p_t = orders
    record = StudyRecord()

    baseline = {}
    for j in range(j_start, j_max + 1):
        grid = build_grid(j, p_x, p_t, bounds)
        X, report = solve_level(pde, grid, None, config_fn(j))
        row = level_row(pde, grid, X, report, "baseline", "sylvester")
        row['cumulative_iterations'] = report.inner_iterations
        row['cumulative_time'] = report.wall_time
        baseline[j] = row
        record.append(row)

    _, recursive = solve_recursive(pde, j_start, j_max, orders, config_fn, bounds)
    for row in recursive.rows:
        reference = baseline[row['j']]
        row['relative_iterations'] = row['inner_iterations'] / max(reference['inner_iterations'], 1)
        row['relative_time'] = row['cumulative_time'] / reference['wall_time'] if reference['wall_time'] else math.nan
        record.append(row)
    return record


def solution_frame(X, grid):
    X = grid.check_field(X, name="solution")
    x, t = grid.mesh()
    return pd.DataFrame({'x': x.ravel(), 't': t.ravel(), 'value': X.ravel()})


def spectrum_frame(eigenvalues):
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    return pd.DataFrame({'re': eigenvalues.real, 'im': eigenvalues.imag})
