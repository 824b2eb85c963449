import pandas as pd
import pytest

from spacetime.driver import COLUMNS, STUDY_M_FACTOR, STUDY_TOL
from spacetime.grid import build_grid
from stws import SpacetimeRun, build_parser, main, parse_levels, parse_orders


def test_parse_orders():
    assert parse_orders("6,4;8,6") == [(6, 4), (8, 6)]
    assert parse_levels("3,4,5") == [3, 4, 5]


def test_export_matrices(tmp_path):
    assert main(["export-matrices", "--j", "1", "--out", str(tmp_path)]) == 0
    for name in ("A", "B", "A_hat", "B_hat", "K", "D_space_1", "D_space_2", "D_time_1"):
        assert (tmp_path / f"{name}.mtx").exists()


def test_run_writes_study_and_solution(tmp_path):
    assert main(["run", "--jmax", "1", "--problem", "convdiff", "--out", str(tmp_path)]) == 0
    study = pd.read_csv(tmp_path / "study.csv")
    assert list(study.columns[:len(COLUMNS)]) == COLUMNS
    grid = build_grid(1, 6, 4)
    assert len(pd.read_csv(tmp_path / "solution.csv")) == grid.n_x * grid.n_t
    assert list(tmp_path.glob("stws_*.log"))
    assert list(study["mode"]) == ["recursive", "recursive"]


def test_recursive_run(tmp_path):
    assert main(["run", "--jmax", "1", "--jstart", "0", "--mode", "recursive", "--nu", "0.1",
                 "--out", str(tmp_path)]) == 0
    assert list(pd.read_csv(tmp_path / "study.csv")['j']) == [0, 1]


def test_spectrum(tmp_path):
    assert main(["spectrum", "--j", "1", "--out", str(tmp_path)]) == 0
    for name in ("A_hat", "B_hat", "K"):
        assert (tmp_path / f"spectrum_{name}.csv").exists()


def test_non_convergence_exit_code(tmp_path):
    argv = ["run", "--jmax", "1", "--max-restarts", "0", "--m-factor", "1", "--out", str(tmp_path)]
    assert main(argv) == 2


def test_library_error_exit_code(tmp_path):
    assert main(["run", "--jmax", "1", "--px", "5", "--out", str(tmp_path)]) == 1


def test_recursive_study(tmp_path):
    argv = ["study", "--study", "recursive", "--levels", "0,1", "--problem", "convdiff", "--nu", "0.1",
            "--out", str(tmp_path)]
    assert main(argv) == 0
    assert set(pd.read_csv(tmp_path / "study.csv")['mode']) == {"baseline", "recursive"}


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])


def test_kronecker_run_defaults_to_baseline(tmp_path):
    argv = ["run", "--jmax", "1", "--formulation", "kronecker", "--nu", "0.1", "--out", str(tmp_path)]
    assert main(argv) == 0
    study = pd.read_csv(tmp_path / "study.csv")
    assert list(study['mode']) == ["baseline"] and list(study['formulation']) == ["kronecker"]


@pytest.mark.parametrize("extra", [["--mode", "recursive", "--formulation", "kronecker"],
                                   ["--mode", "baseline", "--jstart", "0"]],
                         ids=["kronecker-recursive", "jstart-baseline"])
def test_run_rejects_ignored_options(tmp_path, extra):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--jmax", "1", "--out", str(tmp_path)] + extra)
    assert exc.value.code == 2


def test_formulation_study_uses_relaxed_viscosity(tmp_path):
    argv = ["study", "--study", "formulations", "--levels", "0,1", "--repeats", "1", "--out", str(tmp_path)]
    assert main(argv) == 0
    assert set(pd.read_csv(tmp_path / "study.csv")['nu']) == {0.1}


def test_study_viscosity_override(tmp_path):
    argv = ["study", "--study", "recursive", "--levels", "0,1", "--nu", "0.2", "--out", str(tmp_path)]
    assert main(argv) == 0
    assert set(pd.read_csv(tmp_path / "study.csv")['nu']) == {0.2}


def test_spectrum_cap(tmp_path):
    # A_hat is 23 x 23 at j=1
    assert main(["spectrum", "--j", "1", "--cap", "20", "--out", str(tmp_path)]) == 1
    assert not (tmp_path / "spectrum_A_hat.csv").exists()


@pytest.mark.parametrize("argv, tol, m", [
    (["study", "--study", "convergence"], STUDY_TOL, 3 * STUDY_M_FACTOR),
    (["study", "--study", "convergence", "--tol", "1e-9", "--m-factor", "20"], 1e-9, 60),
    (["study", "--study", "recursive"], 1e-8, 90),
    (["run", "--jmax", "2"], 1e-8, 90),
])
def test_solver_defaults(argv, tol, m):
    config = SpacetimeRun(build_parser().parse_args(argv)).config_fn(2)
    assert config.tol == tol and config.m == m
