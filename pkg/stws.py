"""
Spacetime wavelet solver command line: single runs, studies, matrix and spectrum exports
"""

import argparse
import os
import sys
from datetime import datetime

import numpy as np
from loguru import logger

from spacetime.derivatives import assemble_derivative
from spacetime.discretization import KroneckerSizeError, assemble, kronecker_form, write_matrix_market
from spacetime.driver import (STUDY_M_FACTOR, STUDY_TOL, StudyRecord, convergence_study, formulation_comparison,
                              level_row, prepare_reduced, recursive_comparison, solution_frame, solve_level,
                              solve_recursive, spectrum_frame)
from spacetime.grid import build_grid
from spacetime.krylov import DEFAULT_SPECTRUM_CAP, spectral_gap, spectrum
from spacetime.settings import ProblemSettings, SolverConfig, StudySettings

EXIT_OK, EXIT_FAILED, EXIT_NOT_CONVERGED = 0, 1, 2
# relaxed viscosity for the formulation and recursive studies unless --nu is given
STUDY_NU = 0.1


def parse_orders(text):
    """'6,4;8,6' -> [(6, 4), (8, 6)]"""
    pairs = []
    for chunk in text.split(";"):
        if chunk.strip():
            p_x, p_t = (int(v) for v in chunk.split(","))
            pairs.append((p_x, p_t))
    if not pairs:
        raise argparse.ArgumentTypeError(f"no order pairs in {text!r}")
    return pairs


def parse_levels(text):
    return [int(v) for v in text.split(",") if v.strip()]


class SpacetimeRun:
    def __init__(self, args):
        self.args = args
        self.out_dir = args.out
        self.timestamp = None
        nu = args.nu
        if nu is None and getattr(args, "study", None) in ("formulations", "recursive"):
            nu = STUDY_NU
        self.pde = ProblemSettings(problem=args.problem, nu=nu, c=args.c).build()

    def start_logging(self):
        os.makedirs(self.out_dir, exist_ok=True)
        self.timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        log_file = os.path.join(self.out_dir, f"stws_{self.timestamp}.log")
        # console and file
        logger.remove()
        logger.add(sys.stderr, level=self.args.log_level)
        logger.add(log_file, level="DEBUG")
        logger.info(f"logging to {log_file}")
        return log_file

    def config_fn(self, j):
        convergence = getattr(self.args, "study", None) == "convergence"
        m_factor = self.args.m_factor
        if m_factor is None:
            m_factor = STUDY_M_FACTOR if convergence else 30
        overrides = {"max_restarts": self.args.max_restarts}
        if self.args.tol is not None:
            overrides["tol"] = self.args.tol
        elif convergence:
            overrides["tol"] = STUDY_TOL
        return SolverConfig.for_level(j, m_factor, **overrides)

    def bounds(self):
        return ((self.args.x_lo, self.args.x_hi), (self.args.t_lo, self.args.t_hi))

    def run(self):
        args = self.args
        grid = build_grid(args.jmax, args.px, args.pt, self.bounds())
        if args.mode == "recursive":
            j_start = 0 if args.jstart is None else args.jstart
            X, record = solve_recursive(self.pde, j_start, args.jmax, (args.px, args.pt),
                                        self.config_fn, self.bounds())
        else:
            X, report = solve_level(self.pde, grid, None, self.config_fn(args.jmax), args.formulation)
            record = StudyRecord()
            record.append(level_row(self.pde, grid, X, report, "baseline", args.formulation))

        record.to_csv(os.path.join(self.out_dir, "study.csv"))
        solution_frame(X, grid).to_csv(os.path.join(self.out_dir, "solution.csv"), index=False)
        self.print_summary(record)
        return record.converged

    def study(self):
        args = self.args
        settings = StudySettings(bounds=self.bounds(), kron_cap=args.kron_cap, repeats=args.repeats)
        if args.study == "convergence":
            record = convergence_study(self.pde, args.levels, args.orders, self.config_fn, settings.bounds)
        elif args.study == "formulations":
            record = StudyRecord()
            for pair in args.orders:
                record.extend(formulation_comparison(self.pde, args.levels, pair, self.config_fn, settings))
        else:
            record = StudyRecord()
            for pair in args.orders:
                record.extend(recursive_comparison(self.pde, max(args.levels), pair, min(args.levels),
                                                   self.config_fn, settings.bounds))

        record.to_csv(os.path.join(self.out_dir, "study.csv"))
        self.print_summary(record)
        return record.converged

    def export_matrices(self):
        args = self.args
        grid = build_grid(args.j, args.px, args.pt, self.bounds())
        system = assemble(self.pde, grid)
        reduced = prepare_reduced(self.pde, grid)
        matrices = {'A': system.A, 'B': system.B, 'A_hat': reduced.A_hat, 'B_hat': reduced.B_hat}
        try:
            matrices['K'], _ = kronecker_form(reduced.as_sylvester(), args.kron_cap)
        except KroneckerSizeError as e:
            logger.warning(f"K not exported: {e}")
        write_matrix_market(matrices, self.out_dir)
        for axis, alpha in (("space", 1), ("space", 2), ("time", 1)):
            op = assemble_derivative(grid, axis, alpha)
            path = os.path.join(self.out_dir, f"D_{axis}_{alpha}.mtx")
            op.to_matrix_market(path)
            logger.info(f"wrote {path} ({op.nnz} nonzeros)")
        for name, matrix in matrices.items():
            print(f"{name:<8} {matrix.shape[0]:>9} x {matrix.shape[1]:<9} nnz {matrix.nnz:>12,}")
        return True

    def spectrum(self):
        args = self.args
        grid = build_grid(args.j, args.px, args.pt, self.bounds())
        cap = StudySettings(bounds=self.bounds(), spectrum_cap=args.cap).spectrum_cap
        reduced = prepare_reduced(self.pde, grid)
        for name, matrix in (('A_hat', reduced.A_hat), ('B_hat', reduced.B_hat)):
            eigenvalues = spectrum(matrix, cap)
            path = os.path.join(self.out_dir, f"spectrum_{name}.csv")
            spectrum_frame(eigenvalues).to_csv(path, index=False)
            print(f"{name:<8} min Re {eigenvalues.real.min():>12.4e}  max |Im| {np.abs(eigenvalues.imag).max():>12.4e}")
        gap = spectral_gap(reduced.A_hat, reduced.B_hat, cap)
        print(f"spectral gap min|lambda + mu| = {gap:.4e}")
        if grid.dofs <= cap:
            K, _ = kronecker_form(reduced.as_sylvester())
            spectrum_frame(spectrum(K, cap)).to_csv(os.path.join(self.out_dir, "spectrum_K.csv"), index=False)
        return True

    def print_summary(self, record):
        frame = record.to_frame()
        print("=" * 100)
        print(f"{'j':>3} {'p_x':>4} {'p_t':>4} {'N':>10} {'error_inf':>12} {'estimate':>12} {'rate':>6} "
              f"{'iters':>7} {'restarts':>8} {'time':>9}  {'mode':<10} {'formulation':<11}")
        print("-" * 100)
        for row in frame.itertuples(index=False):
            skipped = getattr(row, 'skipped', False)
            if isinstance(skipped, (bool, np.bool_)) and skipped:
                print(f"{row.j:>3} {row.p_x:>4} {row.p_t:>4} {row.N:>10} {'skipped':>12}"
                      f"{'':>51}{row.mode:<10} {row.formulation:<11}")
                continue
            print(f"{row.j:>3} {row.p_x:>4} {row.p_t:>4} {row.N:>10} {row.error_inf:>12.3e} "
                  f"{row.estimated_error:>12.3e} {row.fitted_rate:>6.2f} {row.inner_iterations:>7.0f} "
                  f"{row.restarts:>8.0f} {row.wall_time:>8.2f}s  {row.mode:<10} {row.formulation:<11}")
        print("=" * 100)


def build_parser():
    parser = argparse.ArgumentParser(prog="stws", description="Spacetime wavelet solver")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", choices=["diffusion", "convdiff"], default="diffusion")
    common.add_argument("--nu", type=float, default=None, help="Viscosity override")
    common.add_argument("--c", type=float, default=None, help="Convection speed override (convdiff)")
    common.add_argument("--px", type=int, default=6, help="Spatial basis order (default: 6)")
    common.add_argument("--pt", type=int, default=4, help="Temporal basis order (default: 4)")
    common.add_argument("--tol", type=float, default=None,
                        help="Residual tolerance (default: 1e-8, 1e-10 for the convergence study)")
    common.add_argument("--m-factor", type=int, default=None,
                        help="Restart parameter m = m_factor*(j+1) (default: 30, 40 for the convergence study)")
    common.add_argument("--max-restarts", type=int, default=500)
    common.add_argument("--kron-cap", type=int, default=4_000_000, help="Largest Kronecker system to build")
    common.add_argument("--x-lo", type=float, default=-1.0)
    common.add_argument("--x-hi", type=float, default=1.0)
    common.add_argument("--t-lo", type=float, default=0.0)
    common.add_argument("--t-hi", type=float, default=1.0)
    common.add_argument("--out", default="output", help="Output directory")
    common.add_argument("--log-level", default="INFO")

    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="Solve one problem")
    run.add_argument("--jmax", type=int, required=True)
    run.add_argument("--jstart", type=int, default=None, help="Coarsest recursive level (default: 0)")
    run.add_argument("--mode", choices=["recursive", "baseline"], default=None,
                     help="Default: recursive, or baseline with --formulation kronecker")
    run.add_argument("--formulation", choices=["sylvester", "kronecker"], default="sylvester")

    study = sub.add_parser("study", parents=[common], help="Convergence, formulation or recursive study")
    study.add_argument("--study", choices=["convergence", "formulations", "recursive"], default="convergence")
    study.add_argument("--orders", type=parse_orders, default=parse_orders("6,4"))
    study.add_argument("--levels", type=parse_levels, default=parse_levels("3,4,5"))
    study.add_argument("--repeats", type=int, default=5, help="Timing repeats (default: 5)")

    export = sub.add_parser("export-matrices", parents=[common], help="Write A, B, K in Matrix Market format")
    export.add_argument("--j", type=int, required=True)

    spectrum_cmd = sub.add_parser("spectrum", parents=[common], help="Eigenvalues of the reduced operators")
    spectrum_cmd.add_argument("--j", type=int, required=True)
    spectrum_cmd.add_argument("--cap", type=int, default=DEFAULT_SPECTRUM_CAP, help="Largest matrix for dense eigenvalues")
    return parser


def resolve_run_mode(parser, args):
    """Fill in the default --mode and reject options the chosen mode would ignore."""
    if args.mode is None:
        args.mode = "baseline" if args.formulation == "kronecker" else "recursive"
    if args.mode == "recursive" and args.formulation == "kronecker":
        parser.error("--formulation kronecker is only available with --mode baseline")
    if args.mode == "baseline" and args.jstart is not None:
        parser.error("--jstart only applies to --mode recursive")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        resolve_run_mode(parser, args)
    try:
        runner = SpacetimeRun(args)
        runner.start_logging()
        action = {
            'run': runner.run,
            'study': runner.study,
            'export-matrices': runner.export_matrices,
            'spectrum': runner.spectrum,
        }[args.command]
        ok = action()
    except Exception as e:
        logger.exception(f"{args.command} failed: {e}")
        return EXIT_FAILED

    if not ok:
        logger.warning("at least one solve did not converge")
        return EXIT_NOT_CONVERGED
    print(f"\nOutput written to: {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
