import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from spacetime.discretization import (KroneckerSizeError, SylvesterSystem, assemble, kronecker_form, mms_convdiff,
                                      mms_diffusion, unvec, vec, write_matrix_market)
from spacetime.grid import ShapeError, build_grid


def test_diffusion_peak():
    pde = mms_diffusion(v=1, nu=0.01, sigma=0.1, x0=0)
    assert pde.exact(0.0, 0.0) == pytest.approx(1.0)
    assert pde.forcing(0.3, 0.2) == 0.0
    assert pde.c == 0.0


def test_convdiff_forcing_at_origin():
    pde = mms_convdiff(v=3, a=5, b=5, c=1, nu=0.01)
    assert pde.forcing(0.0, 0.0) == pytest.approx(15.0)


@pytest.mark.parametrize("pde", [mms_diffusion(), mms_convdiff()], ids=["diffusion", "convdiff"])
def test_forcing_consistent_with_exact(pde):
    assert pde.consistency_residual(n_points=100, seed=3) <= 1e-6


@pytest.mark.parametrize("pde", [mms_diffusion(), mms_convdiff()], ids=["diffusion", "convdiff"])
def test_exact_derivatives(pde):
    x, t, h = np.linspace(-0.9, 0.9, 7), 0.4, 1e-5
    assert np.allclose(pde.exact_dx(x, t), (pde.exact(x + h, t) - pde.exact(x - h, t)) / (2 * h), rtol=1e-6, atol=1e-6)
    assert np.allclose(pde.exact_dt(x, t), (pde.exact(x, t + h) - pde.exact(x, t - h)) / (2 * h), rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("kwargs", [{'sigma': 0.0}, {'nu': -1.0}])
def test_diffusion_parameters_checked(kwargs):
    with pytest.raises(ValueError):
        mms_diffusion(**kwargs)


def test_assemble_diffusion_shapes():
    grid = build_grid(2, 6, 4)
    system = assemble(mms_diffusion(), grid)
    assert system.A.shape == (grid.n_x, grid.n_x)
    assert system.B.shape == (grid.n_t, grid.n_t)
    assert not system.C.any()


def test_assemble_rejects_low_time_order():
    grid = build_grid(1, 6, 2)
    with pytest.raises(ValueError):
        assemble(mms_diffusion(), grid)


def test_time_operator_right_multiplies():
    grid = build_grid(1, 6, 4)
    system = assemble(mms_diffusion(nu=0.0), grid)
    F = grid.sample(lambda x, t: (1 + x) * t ** 2)
    AF_FB = system.A @ F + F @ system.B.toarray()
    assert np.allclose(AF_FB, grid.sample(lambda x, t: 2 * (1 + x) * t), atol=1e-10)


def test_hand_computed_kronecker_sum():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    B = np.array([[5.0, 6.0], [7.0, 8.0]])
    K, r = kronecker_form(SylvesterSystem(A, B, np.array([[1.0, 2.0], [3.0, 4.0]])))
    expected = np.array([[6, 2, 7, 0], [3, 9, 0, 7], [6, 0, 9, 2], [0, 6, 3, 12]], dtype=float)
    assert np.array_equal(K.toarray(), expected)
    assert np.array_equal(r, [1.0, 3.0, 2.0, 4.0])


def test_kronecker_equivalence():
    grid = build_grid(1, 6, 4)
    system = assemble(mms_convdiff(), grid)
    K, r = kronecker_form(system)
    X = np.random.default_rng(0).standard_normal(grid.shape)
    direct = system.A @ X + X @ system.B.toarray() - system.C
    assert np.allclose(unvec(K @ vec(X) - r, grid.shape), direct, rtol=1e-12, atol=1e-10)


def test_kronecker_nonzero_collisions():
    grid = build_grid(1, 6, 4)
    system = assemble(mms_convdiff(), grid)
    K, _ = kronecker_form(system)
    n, s = system.C.shape
    collisions = np.count_nonzero(system.A.diagonal()) * np.count_nonzero(system.B.diagonal())
    assert K.nnz == s * system.A.nnz + n * system.B.nnz - collisions


def test_kronecker_size_cap():
    system = assemble(mms_diffusion(), build_grid(1, 6, 4))
    with pytest.raises(KroneckerSizeError):
        kronecker_form(system, max_size=100)


def test_exact_field_residual_decays():
    pde = mms_convdiff()
    residuals = []
    for j in (3, 4):
        grid = build_grid(j, 6, 4)
        system = assemble(pde, grid)
        residuals.append(np.max(np.abs(system.residual(grid.sample(pde.exact)))))
    assert np.log2(residuals[0] / residuals[1]) >= min(4 - 1, 6 - 2) - 0.3


def test_system_shape_checks():
    grid = build_grid(0, 6, 4)
    with pytest.raises(ShapeError):
        SylvesterSystem(sp.identity(3), sp.identity(2), np.zeros((3, 3)))
    with pytest.raises(ShapeError):
        SylvesterSystem(sp.identity(3), sp.identity(2), np.zeros((3, 2)), grid)


def test_write_matrix_market(tmp_path):
    system = assemble(mms_diffusion(), build_grid(0, 6, 4))
    paths = write_matrix_market({'A': system.A, 'B': system.B}, tmp_path / "mats")
    assert [p.name for p in paths] == ["A.mtx", "B.mtx"]
    assert scipy.io.mmread(str(paths[0])).nnz == system.A.nnz
