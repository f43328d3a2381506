import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from adx import (
    DataError,
    ParameterError,
    RadialFunction,
    grad_m_norm,
    integrate,
    laplacian,
    lp_norm,
    make_grid,
    poly_laplacian,
)
from adx.families import BUBBLE_K, bubble
from adx.radial import clamp_map, energy_matrices, energy_parts, fd_weights, gregory_weights, tail_mass

PI2 = math.pi**2
R = sp.symbols("r", positive=True)


def sym_lap(expr, n=4):
    return sp.diff(expr, R, 2) + (n - 1) / R * sp.diff(expr, R)


def sym_radial_integral(expr, n=4):
    """omega_{n-1} int_0^inf expr r^(n-1) dr, exactly."""
    area = 2 * sp.pi ** sp.Rational(n, 2) / sp.gamma(sp.Rational(n, 2))
    return sp.simplify(area * sp.integrate(expr * R ** (n - 1), (R, 0, sp.oo)))


@pytest.fixture(scope="module")
def unit_grid():
    return make_grid(4, 1e-6, 1.0, 2048, "log")


# ---------------------------------------------------------------- make_grid

def test_log_grid_endpoints():
    g = make_grid(4, 1e-6, 50, 2048, "log-graded")
    assert g.nodes[0] == 1e-6 and g.nodes[-1] == 50 and g.r_max == 50
    assert np.all(np.diff(g.nodes) > 0)


def test_uniform_grid_spacing():
    g = make_grid(2, 1e-4, 10, 64, "uniform")
    assert g.size == 64
    assert np.allclose(np.diff(g.nodes), (10 - 1e-4) / 63, rtol=1e-12)


@pytest.mark.parametrize("grading", ["log", "uniform"])
def test_weights_nonnegative_and_constant_exact(grading):
    g = make_grid(4, 1e-3, 7.0, 512, grading)
    assert np.all(g.weights >= 0)
    total = g.weights @ g.nodes**3
    assert total == pytest.approx(7.0**4 / 4, rel=1e-8)


@pytest.mark.parametrize(
    "args",
    [(4, 0.0, 1.0, 128), (4, 2.0, 1.0, 128), (4, 1e-3, 1.0, 63), (1, 1e-3, 1.0, 128), (4, 1e-3, np.inf, 128)],
)
def test_make_grid_rejects_bad_input(args):
    with pytest.raises(ParameterError):
        make_grid(*args)


def test_make_grid_rejects_unknown_grading():
    with pytest.raises(ParameterError):
        make_grid(4, 1e-3, 1.0, 128, "cubic")


# ---------------------------------------------------------------- stencils

def test_fd_weights_central_second_derivative():
    w = fd_weights([-1, 0, 1], 2)
    assert np.allclose(w, [1, -2, 1])


def test_gregory_weights_integrate_polynomials_exactly():
    x = np.linspace(0, 1, 101)
    w = gregory_weights(101) * (x[1] - x[0])
    for k in range(8):
        assert w @ x**k == pytest.approx(1 / (k + 1), rel=1e-12)


# ---------------------------------------------------------------- integrate

def test_integrate_unit_ball_volume(unit_grid):
    one = RadialFunction(unit_grid, np.ones(unit_grid.size))
    assert integrate(unit_grid, one) == pytest.approx(PI2 / 2, abs=1e-6)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_quadrature_indicator_moments(unit_grid, k):
    f = RadialFunction(unit_grid, unit_grid.nodes**k)
    assert integrate(unit_grid, f) == pytest.approx(2 * PI2 / (k + 4), rel=1e-7)


def test_integrate_gaussian(gauss_grid):
    f = RadialFunction(gauss_grid, np.exp(-gauss_grid.nodes**2))
    exact = float(sym_radial_integral(sp.exp(-R**2)))
    assert exact == pytest.approx(PI2, rel=1e-14)
    assert integrate(gauss_grid, f) == pytest.approx(exact, rel=1e-8)


def test_integrate_zero(grid4):
    assert integrate(grid4, grid4.zeros()) == 0.0


def test_integrate_bubble_density():
    g = make_grid(4, 1e-4, 1e3, 4096, "log")
    f = RadialFunction(g, (1 + BUBBLE_K * g.nodes**2) ** -4)
    assert integrate(g, f) == pytest.approx(1.0, abs=1e-6)


def test_integrate_rejects_nonfinite(grid4):
    vals = np.zeros(grid4.size)
    vals[3] = np.nan
    with pytest.raises(DataError):
        integrate(grid4, vals)
    with pytest.raises(DataError):
        RadialFunction(grid4, vals)


def test_function_bound_to_other_grid_rejected(grid4):
    other = make_grid(4, 1e-3, 30.0, 1024, "log")
    with pytest.raises(ParameterError):
        integrate(other, grid4.zeros())


# ---------------------------------------------------------------- laplacian

def test_laplacian_of_r_squared(grid4):
    f = RadialFunction(grid4, grid4.nodes**2)
    assert np.max(np.abs(laplacian(grid4, f).values - 8.0)) < 1e-6


def test_laplacian_of_log():
    g = make_grid(4, 1e-3, 10.0, 1024, "log")
    r = g.nodes
    lap = laplacian(g, RadialFunction(g, np.log(r))).values
    inner = slice(10, -10)
    assert np.max(np.abs(lap[inner] * r[inner] ** 2 / 2 - 1)) < 1e-4


def test_laplacian_gaussian_symbolic_oracle(gauss_grid):
    expr = sp.exp(-R**2 / 2)
    oracle = sp.lambdify(R, sp.simplify(sym_lap(expr)), "numpy")
    assert sp.simplify(sym_lap(expr) - (R**2 - 4) * expr) == 0
    r = gauss_grid.nodes
    lap = laplacian(gauss_grid, RadialFunction(gauss_grid, np.exp(-r**2 / 2))).values
    assert np.max(np.abs(lap - oracle(r))) < 1e-5


def _random_closures(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        a1, a2 = rng.uniform(0.2, 1.5, 2)
        c1, c2 = rng.uniform(-1, 1, 2)
        w = rng.uniform(0.5, 2)
        expr = c1 * sp.exp(-a1 * R**2) + c2 * R**2 * sp.exp(-a2 * R**2) * sp.cos(w * R)
        out.append((sp.lambdify(R, expr, "numpy"), sp.lambdify(R, sym_lap(expr), "numpy")))
    return out


def test_laplacian_converges_at_nominal_order():
    # seven-point stencils: sixth order inside, fifth order one-sided
    orders = []
    for f, lap in _random_closures(10, seed=11):
        errs = []
        for points in (96, 192):
            g = make_grid(4, 0.1, 10.0, points, "log")
            errs.append(np.max(np.abs(g.apply_lap(f(g.nodes)) - lap(g.nodes))))
        orders.append(math.log2(errs[0] / errs[1]))
    assert min(orders) > 4.5


@pytest.fixture(scope="module")
def poly_grid():
    # Composed differences lose eps/(h r)^4; checked away from the mesh ends.
    g = make_grid(4, 1e-2, 10.0, 512, "log")
    return g, (g.nodes > 0.1) & (g.nodes < 5)


def test_poly_laplacian_r4(poly_grid):
    g, band = poly_grid
    out = poly_laplacian(g, RadialFunction(g, g.nodes**4), 2).values
    assert np.max(np.abs(out[band] - 192.0)) < 1e-4


def test_poly_laplacian_r2_is_biharmonic(poly_grid):
    g, band = poly_grid
    out = poly_laplacian(g, RadialFunction(g, g.nodes**2), 2).values
    assert np.max(np.abs(out[band])) < 1e-4


def test_poly_laplacian_bubble_equation():
    g = make_grid(4, 1e-6, 1e3, 4096, "log")
    z = RadialFunction(g, bubble(g.nodes))
    res = poly_laplacian(g, z, 2).values - np.exp(64 * PI2 * z.values)
    band = (g.nodes >= 0.1) & (g.nodes <= 10)
    assert np.max(np.abs(res[band])) < 1e-4


@pytest.mark.parametrize("k", [0, 4, 1.5])
def test_poly_laplacian_rejects_order(grid4, k):
    with pytest.raises(ParameterError):
        poly_laplacian(grid4, grid4.zeros(), k)


# ---------------------------------------------------------------- norms

def test_grad_m_norm_gaussian_moment_oracle(gauss_grid):
    expr = sp.exp(-R**2 / 2)
    exact = math.sqrt(float(sym_radial_integral(sym_lap(expr) ** 2)))
    f = RadialFunction(gauss_grid, np.exp(-gauss_grid.nodes**2 / 2))
    assert grad_m_norm(gauss_grid, f, 2, 2) == pytest.approx(exact, rel=1e-6)


def test_grad_m_norm_first_order(gauss_grid):
    f = RadialFunction(gauss_grid, np.exp(-gauss_grid.nodes**2 / 2))
    exact = math.sqrt(float(sym_radial_integral(sp.diff(sp.exp(-R**2 / 2), R) ** 2)))
    assert grad_m_norm(gauss_grid, f, 1, 2) == pytest.approx(exact, rel=1e-6)


def test_grad_m_norm_third_order(gauss_grid):
    expr = sp.exp(-R**2 / 2)
    exact = float(sym_radial_integral(sp.Abs(sp.diff(sym_lap(expr), R)) ** 2)) ** 0.5
    f = RadialFunction(gauss_grid, np.exp(-gauss_grid.nodes**2 / 2))
    assert grad_m_norm(gauss_grid, f, 3, 2) == pytest.approx(exact, rel=1e-5)


def test_grad_m_norm_zero(grid4):
    assert grad_m_norm(grid4, grid4.zeros(), 2, 2) == 0.0


def test_grad_m_norm_rejects_bad_order(grid4):
    with pytest.raises(ParameterError):
        grad_m_norm(grid4, grid4.zeros(), 4, 2)
    with pytest.raises(ParameterError):
        grad_m_norm(grid4, grid4.zeros(), 2, 1.0)


def test_lp_norm_indicator(unit_grid):
    one = RadialFunction(unit_grid, np.ones(unit_grid.size))
    assert lp_norm(unit_grid, one, 2) == pytest.approx(math.sqrt(PI2 / 2), rel=1e-7)


def test_lp_norm_matches_integrate(gauss_grid):
    f = RadialFunction(gauss_grid, np.exp(-gauss_grid.nodes**2))
    sq = RadialFunction(gauss_grid, f.values**2)
    assert lp_norm(gauss_grid, f, 2) ** 2 == pytest.approx(integrate(gauss_grid, sq), rel=1e-14)
    assert lp_norm(gauss_grid, f, 2) ** 2 == pytest.approx(PI2 / 4, rel=1e-8)


def test_lp_norm_zero(grid4):
    assert lp_norm(grid4, grid4.zeros(), 3) == 0.0


def test_zero_maps_to_zero(grid4):
    z = grid4.zeros()
    assert not np.any(laplacian(grid4, z).values)
    assert not np.any(poly_laplacian(grid4, z, 3).values)
    assert tail_mass(grid4, z) == 0.0


# ---------------------------------------------------------------- discrete energy

def test_energy_matrices_match_energy_parts(gauss_grid):
    v = np.exp(-gauss_grid.nodes**2 / 2)
    k, m = energy_matrices(gauss_grid)
    d2, l2 = energy_parts(gauss_grid, v)
    # the assembled form cancels entries of size 1/(h r)^4; the difference
    # form does not, so they agree only to a few ulps of that scale
    assert v @ (k @ v) == pytest.approx(d2, rel=1e-5)
    assert v @ (m @ v) == pytest.approx(l2, rel=1e-14)


def test_clamp_map_enforces_outer_conditions(grid4):
    p = clamp_map(grid4)
    rng = np.random.default_rng(0)
    u = p @ rng.normal(size=grid4.size - 2)
    assert u[-1] == 0.0
    assert abs(grid4.apply_d1(u)[-1]) < 1e-9 * np.max(np.abs(u)) / grid4.step


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_integrate_is_linear(a, b):
    g = make_grid(4, 1e-3, 10.0, 128, "log")
    f1 = np.exp(-g.nodes**2)
    f2 = g.nodes**2 * np.exp(-g.nodes)
    lhs = integrate(g, a * f1 + b * f2)
    rhs = a * integrate(g, f1) + b * integrate(g, f2)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
