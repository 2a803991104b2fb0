import math

import numpy as np
import pytest

from talenti import fem
from talenti.fem.levels import coarea_sides, mean_value
from talenti.model_space import i_n
from talenti.rearrangement import schwarz_symmetrize


def analytic_disk(h):
    m = fem.generate_mesh(fem.Disk(1.0), h)
    return fem.interpolate(m, lambda x, y: (1 - x**2 - y**2) / 4)


def test_disk_level_circle():
    u = analytic_disk(0.025)
    assert fem.superlevel_measure(u, 1 / 16) == pytest.approx(3 * math.pi / 4, rel=0.025)
    assert fem.superlevel_perimeter(u, 1 / 16) == pytest.approx(math.pi * math.sqrt(3), rel=0.025)


def test_constant_function():
    m = fem.generate_mesh(fem.Square(1.0), 0.2)
    u = fem.FemFunction(m, np.full(m.n_vertices, 2.0))
    assert fem.superlevel_measure(u, 1.0) == pytest.approx(1.0, rel=1e-14)
    assert fem.superlevel_perimeter(u, 1.0) == 0.0
    lhs, rhs = coarea_sides(u, np.array([0.0, 1.0]))
    assert np.all(lhs == 0) and np.all(rhs == 0)
    mf = fem.fem_to_measured(u)
    assert np.all(mf.values == 2.0) and mf.total_measure == pytest.approx(1.0, rel=1e-15)


def test_signed_function_uses_absolute_value():
    m = fem.generate_mesh(fem.Square(1.0), 0.1)
    u = fem.interpolate(m, lambda x, y: x - 0.5)
    # {|x - 1/2| > 1/4} has area 1/2 and two unit level segments
    assert fem.superlevel_measure(u, 0.25) == pytest.approx(0.5, rel=1e-12)
    assert fem.superlevel_perimeter(u, 0.25) == pytest.approx(2.0, rel=1e-12)


def test_two_triangle_means():
    mesh = fem.TriMesh(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
                       np.array([[0, 1, 2], [0, 2, 3]]), np.zeros(4, bool))
    u = fem.FemFunction(mesh, np.array([0.0, 3.0, 6.0, 3.0]))
    mf = fem.fem_to_measured(u)
    np.testing.assert_allclose(mf.values, [3.0, 3.0])
    # sign change inside a triangle: mean of |w| for nodal values (-1, 1, 1) is 1/2
    v = fem.FemFunction(mesh, np.array([-1.0, 1.0, 1.0, 1.0]))
    np.testing.assert_allclose(fem.fem_to_measured(v).values, [0.5, 0.5], rtol=1e-14)
    assert mf.total_measure == mesh.area


def test_measure_is_exact_area():
    # superlevel set of an affine function on the square: area known exactly
    m = fem.generate_mesh(fem.Square(1.0), 0.1)
    u = fem.interpolate(m, lambda x, y: x + y)
    for t in (0.3, 1.0, 1.6):
        exact = 1 - t * t / 2 if t <= 1 else (2 - t) ** 2 / 2
        assert fem.superlevel_measure(u, t) == pytest.approx(exact, rel=1e-12)


def test_symmetrized_disk_solution_close_to_analytic():
    u = analytic_disk(0.05)
    star = schwarz_symmetrize(fem.fem_to_measured(u), 2)
    x = np.linspace(0, 0.95, 20)
    np.testing.assert_allclose(star(x), (1 - x**2) / 4, atol=0.05 * 0.25)
    prof = fem.distribution_profile(u, 2, x)
    np.testing.assert_allclose(prof, (1 - x**2) / 4, atol=0.05 * 0.25 * 0.1)


def test_square_small_top_set_is_isoperimetric_bounded():
    m = fem.generate_mesh(fem.Square(1.0), 0.05)
    u, _ = fem.solve_p_laplacian(m, 1.0)
    t = 0.98 * u.values.max()
    per = fem.superlevel_perimeter(u, t)
    meas = fem.superlevel_measure(u, t)
    assert meas > 0
    assert per >= i_n(2, meas)


def test_coarea_on_analytic_disk():
    u = analytic_disk(0.05)
    lhs, rhs = coarea_sides(u, np.array([0.0]))
    assert lhs[0] == pytest.approx(math.pi / 3, rel=0.02)
    assert rhs[0] == pytest.approx(lhs[0], rel=0.02)


def test_mean_value():
    m = fem.generate_mesh(fem.Square(1.0), 0.1)
    assert mean_value(fem.interpolate(m, lambda x, y: x + y)) == pytest.approx(1.0, rel=1e-14)
