"""Radial discretization of R^n.

A radial function on R^n is sampled on a graded mesh ``r_1 < ... < r_N``.
Integrals use ``omega_{n-1} * int f(r) r^(n-1) dr`` with end-corrected
trapezoid weights in the mesh coordinate (``ln r`` for log-graded grids,
``r`` for uniform ones). The ball ``[0, r_1]`` is filled by constant
extension of the first sample, consistent with ``u'(0) = 0``.

Derivatives are finite differences in the mesh coordinate (sixth order in
the interior, one-sided of the same width at the ends) mapped to ``r`` by
the chain rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import bernoulli

from .constants import ball_volume, sphere_area
from .validation import DataError, ParameterError

GRADINGS = ("uniform", "log")
STENCIL_WIDTH = 7
GREGORY_ORDER = 8


def fd_weights(offsets, deriv):
    """Finite-difference weights on integer ``offsets`` for ``d^deriv/dx^deriv``.

    Solves the moment conditions ``sum_j w_j o_j^k / k! = delta_{k,deriv}``
    exactly in rational arithmetic, so the weights are free of Vandermonde
    conditioning issues.
    """
    offsets = [int(o) for o in offsets]
    p = len(offsets)
    if deriv >= p:
        raise ParameterError(f"need more than {deriv} points for derivative {deriv}")
    # Gaussian elimination over Fractions on the p x p moment system.
    a = [[Fraction(o) ** k for o in offsets] for k in range(p)]
    b = [Fraction(0)] * p
    fact = 1
    for k in range(1, deriv + 1):
        fact *= k
    b[deriv] = Fraction(fact)
    for col in range(p):
        piv = next(r for r in range(col, p) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        for r in range(p):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                b[r] -= f * b[col]
    return np.array([float(b[i] / a[i][i]) for i in range(p)])


def _stencils(size, deriv, width=STENCIL_WIDTH):
    """Column indices and unit-spacing weights, one stencil row per node."""
    half = width // 2
    idx = np.empty((size, width), dtype=int)
    wts = np.empty((size, width))
    cache = {}
    for i in range(size):
        start = min(max(i - half, 0), size - width)
        offs = tuple(range(start - i, start - i + width))
        if offs not in cache:
            cache[offs] = fd_weights(offs, deriv)
        idx[i] = np.arange(start, start + width)
        wts[i] = cache[offs]
    return idx, wts


def _diff_matrix(size, step, deriv, width=STENCIL_WIDTH):
    """Banded matrix for d^deriv/dx^deriv on a uniform mesh with spacing ``step``."""
    idx, wts = _stencils(size, deriv, width)
    rows = np.repeat(np.arange(size), width)
    return sp.csr_matrix((wts.ravel() / step**deriv, (rows, idx.ravel())), shape=(size, size))


def _apply_stencil(u, idx, wts, step, deriv):
    # Differences against the centre sample keep roundoff proportional to the
    # local variation of u rather than to |u|.
    du = u[idx] - u[:, None]
    return np.einsum("ij,ij->i", wts, du) / step**deriv


def gregory_weights(size, order=GREGORY_ORDER):
    """Trapezoid weights with Gregory end corrections (unit spacing).

    Exact for polynomials of degree < ``order`` on ``size`` equispaced nodes.
    """
    if size < 2 * order:
        raise ParameterError(f"at least {2 * order} nodes needed for end corrections")
    bern = bernoulli(order + 1)
    k = np.arange(order)
    rhs = np.where(k % 2 == 1, bern[k + 1] / (k + 1), 0.0)
    vander = np.vander(np.arange(order, dtype=float), order, increasing=True).T
    d = np.linalg.solve(vander, rhs)
    w = np.ones(size)
    w[0] = w[-1] = 0.5
    w[:order] += d
    w[-order:] += d[::-1]
    return w


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Graded radial mesh with quadrature and differentiation metadata.

    Attributes
    ----------
    n : int
        Spatial dimension.
    nodes : ndarray
        Strictly increasing radii, ``nodes[-1] == r_max``.
    weights : ndarray
        Weights for ``int_0^{r_max} g(r) dr`` with ``g = f r^(n-1)``.
    grading : {"uniform", "log"}
    r_max : float
    """

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    grading: str
    r_max: float

    @property
    def size(self):
        return self.nodes.size

    @property
    def r_min(self):
        return float(self.nodes[0])

    @property
    def coord(self):
        """Mesh coordinate in which nodes are equispaced."""
        return np.log(self.nodes) if self.grading == "log" else self.nodes

    @property
    def step(self):
        c = self.coord
        return float((c[-1] - c[0]) / (self.size - 1))

    @cached_property
    def measure(self):
        """Volume weights: ``integrate(f) = measure @ f``."""
        return sphere_area(self.n) * self.weights * self.nodes ** (self.n - 1)

    @cached_property
    def d1(self):
        """Sparse matrix of d/dr."""
        dx = _diff_matrix(self.size, self.step, 1)
        if self.grading == "log":
            return sp.diags(1.0 / self.nodes) @ dx
        return dx

    @cached_property
    def d2(self):
        """Sparse matrix of d^2/dr^2."""
        dxx = _diff_matrix(self.size, self.step, 2)
        if self.grading == "log":
            dx = _diff_matrix(self.size, self.step, 1)
            return sp.diags(1.0 / self.nodes**2) @ (dxx - dx)
        return dxx

    @cached_property
    def lap(self):
        """Sparse matrix of the radial Laplacian ``u'' + (n-1)/r u'``."""
        if self.grading == "log":
            dxx = _diff_matrix(self.size, self.step, 2)
            dx = _diff_matrix(self.size, self.step, 1)
            op = sp.diags(1.0 / self.nodes**2) @ (dxx + (self.n - 2) * dx)
        else:
            op = self.d2 + sp.diags((self.n - 1) / self.nodes) @ self.d1
        return op.tocsr()

    @cached_property
    def _stencil_data(self):
        return _stencils(self.size, 1), _stencils(self.size, 2)

    def apply_d1(self, u):
        """``du/dr`` at the nodes."""
        (i1, w1), _ = self._stencil_data
        ux = _apply_stencil(u, i1, w1, self.step, 1)
        return ux / self.nodes if self.grading == "log" else ux

    def apply_lap(self, u):
        """Radial Laplacian at the nodes, applied in difference form."""
        (i1, w1), (i2, w2) = self._stencil_data
        ux = _apply_stencil(u, i1, w1, self.step, 1)
        uxx = _apply_stencil(u, i2, w2, self.step, 2)
        if self.grading == "log":
            return (uxx + (self.n - 2) * ux) / self.nodes**2
        return uxx + (self.n - 1) / self.nodes * ux

    def spec(self):
        return {"n": self.n, "r_min": self.r_min, "r_max": self.r_max,
                "points": self.size, "grading": self.grading}

    def zeros(self):
        return RadialFunction(self, np.zeros(self.size))


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Sampled radial profile bound to a grid.

    ``closure`` evaluates ``u(r)`` exactly where available. When
    ``lap_closure`` is set, it gives the exact Laplacian and is used by the
    norm routines in place of finite differences (useful for piecewise
    profiles whose second derivative jumps).
    """

    grid: RadialGrid
    values: np.ndarray
    closure: Optional[Callable] = field(default=None, repr=False)
    lap_closure: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.size,):
            raise DataError(f"expected {self.grid.size} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DataError("non-finite samples in radial function")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_closure(cls, grid, closure, lap_closure=None):
        vals = np.asarray(closure(grid.nodes), dtype=float)
        return cls(grid, vals, closure, lap_closure)

    def __call__(self, r):
        if self.closure is not None:
            return self.closure(np.asarray(r, dtype=float))
        r = np.asarray(r, dtype=float)
        out = np.interp(r, self.grid.nodes, self.values)
        return np.where(r > self.grid.r_max, 0.0, out)

    def scaled(self, c):
        """Return ``c * u`` keeping closures."""
        cl = None if self.closure is None else (lambda r, f=self.closure: c * f(r))
        lc = None if self.lap_closure is None else (lambda r, f=self.lap_closure: c * f(r))
        return RadialFunction(self.grid, c * self.values, cl, lc)


def make_grid(n, r_min, r_max, points, grading="log"):
    """Build a radial grid on ``[r_min, r_max]`` in R^n.

    Parameters
    ----------
    n : int
        Dimension, at least 2.
    r_min, r_max : float
        ``0 < r_min < r_max``.
    points : int
        Number of nodes, at least 64.
    grading : {"log", "uniform"}
        ``"log"`` uses equal steps in ``ln r``.

    Returns
    -------
    RadialGrid
    """
    if grading == "log-graded":
        grading = "log"
    if int(n) != n or n < 2:
        raise ParameterError(f"dimension must be an integer >= 2, got {n}")
    if not (0 < r_min < r_max) or not np.isfinite(r_max):
        raise ParameterError(f"need 0 < r_min < r_max, got {r_min}, {r_max}")
    if int(points) != points or points < 64:
        raise ParameterError(f"need at least 64 points, got {points}")
    if grading not in GRADINGS:
        raise ParameterError(f"grading must be one of {GRADINGS}, got {grading!r}")
    n, points = int(n), int(points)
    if grading == "log":
        s = np.linspace(np.log(r_min), np.log(r_max), points)
        nodes = np.exp(s)
        nodes[0], nodes[-1] = r_min, r_max
        h = s[1] - s[0]
        weights = gregory_weights(points) * h * nodes
    else:
        nodes = np.linspace(r_min, r_max, points)
        h = nodes[1] - nodes[0]
        weights = gregory_weights(points) * h
    # Inner ball [0, r_min] by constant extension of the first sample.
    weights[0] += r_min / n
    return RadialGrid(n, nodes, weights, grading, float(r_max))


def _check_bound(grid, f):
    if f.grid is not grid:
        raise ParameterError("function is bound to a different grid")


def integrate(grid, f):
    """Quadrature of ``int_{R^n} f dx`` for a radial profile."""
    vals = f.values if isinstance(f, RadialFunction) else np.asarray(f, dtype=float)
    if isinstance(f, RadialFunction):
        _check_bound(grid, f)
    if not np.all(np.isfinite(vals)):
        raise DataError("non-finite samples in integrand")
    return float(grid.measure @ vals)


def laplacian(grid, f):
    """Radial Laplacian of ``f`` by finite differences."""
    _check_bound(grid, f)
    if grid.size < 5:
        raise ParameterError("grid too coarse for the Laplacian stencil")
    return RadialFunction(grid, grid.apply_lap(f.values))


def poly_laplacian(grid, f, k):
    """``Delta^k f`` by repeated application of :func:`laplacian` (``1 <= k <= 3``)."""
    if int(k) != k or not 1 <= k <= 3:
        raise ParameterError(f"poly_laplacian supports 1 <= k <= 3, got {k}")
    out = f
    for _ in range(int(k)):
        out = laplacian(grid, out)
    return out


def _grad_m_values(grid, f, m):
    if m % 2 == 0:
        k = m // 2
        if f.lap_closure is not None:
            first = RadialFunction(grid, np.asarray(f.lap_closure(grid.nodes), dtype=float))
            return first.values if k == 1 else poly_laplacian(grid, first, k - 1).values
        return poly_laplacian(grid, f, k).values
    k = (m - 1) // 2
    base = f if k == 0 else poly_laplacian(grid, f, k)
    return grid.apply_d1(base.values)


def grad_m_norm(grid, f, m, p):
    """``(int |nabla^m f|^p dx)^(1/p)`` with the even/odd convention.

    For even ``m`` this is ``Delta^(m/2) f``; for odd ``m`` the radial
    derivative of ``Delta^((m-1)/2) f``.
    """
    _check_bound(grid, f)
    if int(m) != m or not 1 <= m < grid.n or m > 6:
        raise ParameterError(f"unsupported derivative order m={m} for n={grid.n}")
    if p <= 1:
        raise ParameterError(f"need p > 1, got {p}")
    vals = _grad_m_values(grid, f, int(m))
    return integrate(grid, np.abs(vals) ** p) ** (1.0 / p)


def lp_norm(grid, f, p):
    """``(int |f|^p dx)^(1/p)``."""
    _check_bound(grid, f)
    if p < 1:
        raise ParameterError(f"need p >= 1, got {p}")
    return integrate(grid, np.abs(f.values) ** p) ** (1.0 / p)


def tail_mass(grid, f, p=2):
    """Largest ``|f|^p`` sample over the outer 5% of the mesh, for truncation audits."""
    k = max(1, grid.size // 20)
    return float(np.max(np.abs(f.values[-k:])) ** p)


def energy_matrices(grid):
    """Sparse quadratic forms ``K`` and ``M`` with ``u K u = ||Delta u||^2``, ``u M u = ||u||^2``.

    The inner ball ``[0, r_min]`` carries the regular biharmonic extension
    ``c1 + c2 r^2`` matching ``u`` and ``u'`` at ``r_min``, whose Laplacian
    is ``n u'(r_min)/r_min``. This keeps the discrete energy from ignoring
    profiles that blow up like ``r^(2-n)`` at the inner edge.
    """
    n = grid.n
    meas = grid.measure.copy()
    inner = ball_volume(n) * grid.r_min**n
    meas_lap = meas.copy()
    meas_lap[0] -= inner
    lap = grid.lap
    d = (n / grid.r_min) * grid.d1[0, :].toarray().ravel()
    dvec = sp.csr_matrix(d)
    k = lap.T @ sp.diags(meas_lap) @ lap + inner * (dvec.T @ dvec)
    m = sp.diags(meas)
    return k.tocsc(), m.tocsc()


def energy_parts(grid, v):
    """``(||Delta v||_2^2, ||v||_2^2)`` with the same inner-ball convention as
    :func:`energy_matrices`, evaluated in difference form for accuracy."""
    n = grid.n
    meas = grid.measure
    inner = ball_volume(n) * grid.r_min**n
    lap = grid.apply_lap(v)
    du0 = grid.apply_d1(v)[0]
    d2 = float(meas @ lap**2 - inner * lap[0] ** 2 + inner * (n * du0 / grid.r_min) ** 2)
    return d2, float(meas @ v**2)


def clamp_map(grid):
    """Sparse ``P`` with ``u = P v`` satisfying ``u = u' = 0`` at ``r_max``.

    ``v`` holds the first ``N - 2`` samples; the last sample is zero and
    the one before it is fixed by the one-sided derivative stencil at the
    outer node. Restricting quadratic forms to ``range(P)`` removes the
    spurious low-energy modes that a free outer edge admits.
    """
    size = grid.size
    (idx, wts), _ = grid._stencil_data
    cols, w = idx[-1], wts[-1]
    free = size - 2
    rows = list(range(free))
    data = [1.0] * free
    pcols = list(range(free))
    for c, wc in zip(cols, w):
        if c < free:
            rows.append(free)
            pcols.append(c)
            data.append(-wc / w[cols == free][0])
    return sp.csr_matrix((data, (rows, pcols)), shape=(size, free))
