import numpy as np
import pytest

from spacetime.grid import GridError, ShapeError, build_grid, refine


def test_counts_at_level_two():
    grid = build_grid(2, 6, 4)
    assert (grid.n, grid.s) == (47, 32)
    assert grid.shape == (49, 33)
    assert grid.dofs == 1504


@pytest.mark.parametrize("j, p_x, p_t, dofs", [
    (5, 6, 4, 98_048),
    (6, 8, 8, 1_047_552),
])
def test_dof_counts(j, p_x, p_t, dofs):
    assert build_grid(j, p_x, p_t).dofs == dofs


def test_coordinates_include_endpoints():
    grid = build_grid(1, 6, 4)
    assert grid.x[0] == -1.0 and grid.x[-1] == 1.0
    assert grid.t[0] == 0.0 and grid.t[-1] == 1.0
    assert grid.dx == pytest.approx(2.0 / (grid.n + 1))
    assert grid.dt == pytest.approx(1.0 / grid.s)


def test_levels_nest_exactly():
    grid = build_grid(2, 6, 4, bounds=((-1.0, 3.0), (0.0, 0.7)))
    fine = refine(grid)
    assert fine.j == 3
    assert np.array_equal(fine.x[::2], grid.x)
    assert np.array_equal(fine.t[::2], grid.t)


@pytest.mark.parametrize("kwargs", [
    {'j': -1, 'p_x': 6, 'p_t': 4},
    {'j': 2, 'p_x': 5, 'p_t': 4},
    {'j': 2, 'p_x': 2, 'p_t': 4},
    {'j': 2, 'p_x': 6, 'p_t': 3},
    {'j': 2, 'p_x': 14, 'p_t': 4},
    {'j': 2, 'p_x': 6, 'p_t': 4, 'bounds': ((1.0, 1.0), (0.0, 1.0))},
    {'j': 2, 'p_x': 6, 'p_t': 4, 'bounds': ((0.0, 1.0), (0.0, float("inf")))},
])
def test_invalid_grids_rejected(kwargs):
    with pytest.raises(GridError):
        build_grid(**kwargs)


def test_sample_puts_space_on_rows():
    grid = build_grid(0, 4, 2)
    field = grid.sample(lambda x, t: x + 10 * t)
    assert field.shape == grid.shape
    assert np.allclose(field[:, 0], grid.x)
    assert np.allclose(field[0, :], -1 + 10 * grid.t)


def test_sample_broadcasts_constants():
    grid = build_grid(0, 4, 2)
    assert np.array_equal(grid.sample(lambda x, t: 0.0), np.zeros(grid.shape))


def test_check_field_shape():
    grid = build_grid(0, 4, 2)
    with pytest.raises(ShapeError):
        grid.check_field(np.zeros((grid.n, grid.s)))
