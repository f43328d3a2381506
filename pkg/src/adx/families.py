"""Closed-form radial families: dilations, Adams-type concentrating functions,
the fourth-order bubble, biharmonic truncation and the blow-up test function."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .constants import DimPair, adams_constant, sphere_area
from .radial import RadialFunction, integrate, make_grid
from .validation import ContractError, ParameterError, check_real

BUBBLE_K = math.pi / math.sqrt(6.0)
PI2 = math.pi**2


# ---------------------------------------------------------------- scalings

def _need_closure(u):
    if u.closure is None:
        raise ContractError("operation requires an analytic closure")


def scale_family(u, t, m=None):
    """Dilation ``H_t u(x) = t^(m/n) u(t^(1/n) x)``.

    Preserves ``||u||_{n/m}`` and multiplies ``||nabla^m u||_{n/m}^{n/m}``
    by ``t``. ``m`` defaults to ``n/2``.
    """
    _need_closure(u)
    check_real("t", t, lo=0.0, lo_open=True)
    n = u.grid.n
    m = n // 2 if m is None else m
    a, b = t ** (m / n), t ** (1.0 / n)
    f = u.closure
    lap = None
    if u.lap_closure is not None:
        lf = u.lap_closure
        lap = lambda r: a * b * b * lf(b * r)
    return RadialFunction.from_closure(u.grid, lambda r: a * f(b * r), lap)


def dilate_mass(u, tau):
    """``v(x) = u(x / tau)`` for ``n = 2m``: mass times ``tau^n``, ``||nabla^m v||_2`` unchanged."""
    _need_closure(u)
    check_real("tau", tau, lo=1.0)
    f = u.closure
    lap = None
    if u.lap_closure is not None:
        lf = u.lap_closure
        lap = lambda r: lf(r / tau) / tau**2
    return RadialFunction.from_closure(u.grid, lambda r: f(r / tau), lap)


# ------------------------------------------------------- Adams-type functions

def corner_smoother(s, deriv=0):
    """``phi(s) = 3 s^2 - 3 s^3 + s^4`` and its derivatives.

    ``phi(0) = phi'(0) = 0``, ``phi(1) = phi'(1) = 1``, ``phi''(1) = 0``.
    """
    s = np.asarray(s, dtype=float)
    if deriv == 0:
        return 3 * s**2 - 3 * s**3 + s**4
    if deriv == 1:
        return 6 * s - 9 * s**2 + 4 * s**3
    if deriv == 2:
        return 6 - 18 * s + 12 * s**2
    raise ParameterError("deriv must be 0, 1 or 2")


# int_0^1 phi'^2 and int_0^1 phi''^2 for the smoother above.
SMOOTHER_I1 = 38.0 / 35.0
SMOOTHER_I2 = 24.0 / 5.0


@dataclass(frozen=True)
class MoserParams:
    """Parameters of the concentrating family ``psi_lambda``."""

    lam: float
    eps_cut: float = 0.05
    dims: DimPair = DimPair(2, 4)

    def __post_init__(self):
        check_real("lambda", self.lam, lo=1.0, lo_open=True)
        check_real("eps_cut", self.eps_cut, lo=0.0, hi=0.5, lo_open=True, hi_open=True)
        if not self.dims.hilbert:
            raise ParameterError("moser_function is built for n = 2m")


def _cutoff_h(t, eps, deriv=0):
    """Piecewise profile ``H`` and derivatives in ``t = ln(1/r)/ln(lambda)``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    lo = (t > 0) & (t <= eps)
    mid = (t > eps) & (t < 1 - eps)
    hi = (t >= 1 - eps) & (t < 1)
    top = t >= 1
    scale = eps ** (1 - deriv)
    out[lo] = scale * corner_smoother(t[lo] / eps, deriv)
    sign = -1.0 if deriv in (0, 2) else 1.0
    out[hi] = sign * scale * corner_smoother((1 - t[hi]) / eps, deriv)
    if deriv == 0:
        out[hi] += 1.0
        out[mid] = t[mid]
        out[top] = 1.0
    elif deriv == 1:
        out[mid] = 1.0
    return out


def moser_closures(p):
    """Exact ``psi_lambda`` and ``Delta psi_lambda`` as functions of ``r``."""
    L = math.log(p.lam)
    n = p.dims.n
    eps = p.eps_cut

    def psi(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            t = np.where(r > 0, np.log(1.0 / np.maximum(r, 1e-300)) / L, np.inf)
        return math.sqrt(L) * _cutoff_h(t, eps)

    def lap(r):
        # In l = ln r: Delta u = r^-2 (u_ll + (n-2) u_l), with t = -l/L.
        r = np.asarray(r, dtype=float)
        t = np.log(1.0 / r) / L
        h1 = _cutoff_h(t, eps, 1)
        h2 = _cutoff_h(t, eps, 2)
        u_l = -h1 / math.sqrt(L)
        u_ll = h2 / L**1.5
        return (u_ll + (n - 2) * u_l) / r**2

    return psi, lap


def moser_function(p, grid=None):
    """Adams-type concentrating profile ``psi_lambda``.

    Equal to ``sqrt(ln lambda)`` on ``r <= 1/lambda``, to
    ``ln(1/r)/sqrt(ln lambda)`` in the middle band, smoothed near both
    corners, and zero for ``r >= 1``.
    """
    if grid is None:
        grid = make_grid(p.dims.n, 1e-3 / p.lam, 2.0, 4096, "log")
    psi, lap = moser_closures(p)
    return RadialFunction.from_closure(grid, psi, lap)


def moser_energy_ratio(p):
    """Exact ``A = ||Delta psi_lambda||_2^2 / (beta_0/(2m))`` for ``n = 4``.

    ``A = 1 - 2 eps + 2 eps I1 + I2 / (2 eps ln^2 lambda)`` with
    ``I1 = int phi'^2`` and ``I2 = int phi''^2``.
    """
    if p.dims.n != 4:
        raise ParameterError("closed form available for n = 4")
    L = math.log(p.lam)
    e = p.eps_cut
    return 1 - 2 * e + 2 * e * SMOOTHER_I1 + SMOOTHER_I2 / (2 * e * L**2)


def moser_energy(p):
    """Exact ``||Delta psi_lambda||_2^2`` for ``n = 4``."""
    return moser_energy_ratio(p) * adams_constant(p.dims) / (2 * p.dims.m)


def moser_energy_quad(p):
    """``||Delta psi_lambda||_2^2`` by adaptive quadrature in ``l = ln r``.

    ``Delta psi_lambda`` jumps at ``r = 1`` and ``r = 1/lambda``, where mesh
    quadrature is only first order; integrating piecewise between the
    corners restores full accuracy.
    """
    _, lap = moser_closures(p)
    n = p.dims.n
    L = math.log(p.lam)
    area = sphere_area(n)

    def dens(l):
        return area * float(lap(np.array(math.exp(l)))) ** 2 * math.exp(n * l)

    cuts = [-L, -L * (1 - p.eps_cut), -L * p.eps_cut, 0.0]
    return sum(quad(dens, a, b, limit=200, epsabs=0.0, epsrel=1e-12)[0]
               for a, b in zip(cuts, cuts[1:]))


# ----------------------------------------------------------------- bubble

def bubble(r):
    """``z(r) = -ln(1 + (pi/sqrt 6) r^2) / (16 pi^2)``; solves ``Delta^2 z = e^{64 pi^2 z}``."""
    r = np.asarray(r, dtype=float)
    out = -np.log1p(BUBBLE_K * r**2) / (16 * PI2)
    return float(out) if out.ndim == 0 else out


def bubble_laplacian(r):
    """Exact ``Delta z`` in R^4."""
    x = BUBBLE_K * np.asarray(r, dtype=float) ** 2
    return -4 * BUBBLE_K * (2 + x) / (1 + x) ** 2 / (16 * PI2)


def bubble_profile(grid):
    """Bubble sampled on a four-dimensional grid."""
    if grid.n != 4:
        raise ParameterError("the bubble lives in R^4")
    return RadialFunction.from_closure(grid, bubble, bubble_laplacian)


def bubble_tail(r_max):
    """``int_{|x| > r_max} (1 + k r^2)^-4 dx`` in closed form."""
    x = BUBBLE_K * r_max**2
    return PI2 / BUBBLE_K**2 * (1 / (2 * (1 + x) ** 2) - 1 / (3 * (1 + x) ** 3))


def bubble_mass(grid):
    """``int e^{64 pi^2 z} dx`` by quadrature plus the analytic tail (exactly 1)."""
    vals = (1 + BUBBLE_K * grid.nodes**2) ** -4.0
    return integrate(grid, vals) + bubble_tail(grid.r_max)


# ----------------------------------------------------- biharmonic truncation

def truncate_biharmonic(u, eps):
    """Replace ``u`` on ``B_eps`` by ``u(eps) + u'(eps) (r^2 - eps^2) / (2 eps)``.

    Value and first derivative match at ``r = eps``; the replacement spans
    ``{1, r^2}``, the regular radial biharmonic functions in R^4.
    """
    grid = u.grid
    r = grid.nodes
    if eps < r[1] or eps >= grid.r_max:
        raise ParameterError(f"eps={eps} is not resolvable on this grid")
    if u.closure is not None:
        f = u.closure
        h = 1e-5 * eps
        val = float(f(np.array(eps)))
        der = float((f(np.array(eps + h)) - f(np.array(eps - h))) / (2 * h))
        # Richardson step for the derivative.
        der2 = float((f(np.array(eps + 2 * h)) - f(np.array(eps - 2 * h))) / (4 * h))
        der = (4 * der - der2) / 3
    else:
        du = grid.apply_d1(u.values)
        spline = CubicHermiteSpline(r, u.values, du)
        val = float(spline(eps))
        der = float(spline(eps, 1))
    inner = lambda x: val + der * (np.asarray(x) ** 2 - eps**2) / (2 * eps)
    vals = np.where(r < eps, inner(r), u.values)
    closure = None
    if u.closure is not None:
        f = u.closure
        closure = lambda x: np.where(np.asarray(x) < eps, inner(x), f(x))
    lap = None
    if u.lap_closure is not None:
        lf = u.lap_closure
        c = grid.n * der / eps
        lap = lambda x: np.where(np.asarray(x) < eps, c, lf(x))
    return RadialFunction(grid, vals, closure, lap)


# ------------------------------------------------------ blow-up test function

@dataclass(frozen=True)
class BlowupParams:
    """Parameters of the test function ``phi_eps``.

    ``C`` is fixed by the normalization identity; ``a`` and ``b`` by the
    continuity and slope matching at ``r = L eps``.
    """

    eps: float
    L: float
    C: float
    a: float
    b: float
    K0: float
    alpha: float
    gamma: float

    @classmethod
    def from_green(cls, eps, green, alpha, gamma):
        """Derive ``L, C, a, b`` from ``eps`` and a solved Green profile."""
        check_real("eps", eps, lo=0.0, hi=1.0, lo_open=True, hi_open=True)
        L = -math.log(eps)
        K0 = green.K0
        s = alpha * (gamma + 1)
        rhs = (2 * math.log(BUBBLE_K / eps**2) - 5.0 / 3.0 + 32 * PI2 * K0
               + 32 * PI2 * s * green.l2_norm_sq)
        if rhs <= 0:
            raise ParameterError("normalization gives C^2 <= 0; eps too large")
        C = math.sqrt(rhs / (32 * PI2))
        b = -1.0 / (16 * PI2 * L**2 * eps**2 * (1 + BUBBLE_K * L**2))
        psiL = math.log1p(BUBBLE_K * L**2)
        a = -math.log(L * eps) / (8 * PI2) - C**2 + psiL / (16 * PI2) - b * L**2 * eps**2
        return cls(eps, L, C, a, b, K0, alpha, gamma)


@dataclass(frozen=True)
class TestFunction:
    """``phi_eps`` with its normalization audit."""

    u: RadialFunction
    params: BlowupParams
    norm_sq: float
    inner_norm_sq: float
    outer_norm_sq: float
    jump: float
    status: str


def blowup_testfn(p, green, grid=None):
    """Test function ``phi_eps`` glued from the bubble and the Green function.

    Inside ``r <= L eps``:
    ``C + (a - psi(r/eps)/(16 pi^2) + K0 + h(r) + b r^2) / C`` with
    ``psi(s) = ln(1 + (pi/sqrt 6) s^2)``; outside ``G(r)/C``.

    Returns
    -------
    TestFunction
        Profile, achieved ``int |Delta phi|^2 + |phi|^2`` (inner and outer
        parts), the value mismatch at ``L eps`` and a status string.
    """
    if abs(green.kappa0 - (1 - p.alpha * (p.gamma + 1))) > 1e-12:
        raise ParameterError("Green profile solved for a different kappa0")
    status = "ok"
    if p.L < 5:
        warnings.warn("eps too large for the asymptotic regime (L < 5)", RuntimeWarning, stacklevel=2)
        status = "eps-too-large"
    eps, L, C = p.eps, p.L, p.C
    rc = L * eps
    if grid is None:
        grid = make_grid(4, 1e-3 * eps, green.grid.r_max, 6144, "log")
    h, lap_h = green.h_interpolants()
    G = green.G_closure()
    lapG = green.lapG_closure()
    k = BUBBLE_K

    def inner(r):
        r = np.asarray(r, dtype=float)
        return C + (p.a - np.log1p(k * (r / eps) ** 2) / (16 * PI2) + p.K0 + h(r) + p.b * r**2) / C

    def inner_lap(r):
        r = np.asarray(r, dtype=float)
        x = k * (r / eps) ** 2
        lap_psi = 4 * k * (2 + x) / (1 + x) ** 2 / eps**2
        return (-lap_psi / (16 * PI2) + lap_h(r) + 8 * p.b) / C

    def closure(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= rc, inner(r), G(r) / C)

    def lap_closure(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= rc, inner_lap(r), lapG(r) / C)

    u = RadialFunction.from_closure(grid, closure, lap_closure)
    # Inner energy on a dedicated grid of B_{L eps}; outer part from the Green profile.
    gi = make_grid(4, 1e-4 * eps, rc, 4096, "log")
    iv = inner(gi.nodes)
    il = inner_lap(gi.nodes)
    inner_sq = integrate(gi, il**2 + iv**2)
    outer_sq = green.annulus_energy(rc) / C**2
    jump = float(inner(np.array(rc)) - G(np.array(rc)) / C)
    return TestFunction(u, p, inner_sq + outer_sq, inner_sq, outer_sq, jump, status)
