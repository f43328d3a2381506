"""Green function of ``Delta^2 + kappa0`` on R^4 and its regular part.

Write ``G = S + g`` with ``S = -chi(r) ln r / (8 pi^2)``, ``chi`` a smooth
cutoff equal to 1 on ``r <= 1`` and 0 on ``r >= 2``. Since
``Delta^2(-ln r / 8 pi^2) = delta_0`` in R^4, the remainder solves

    Delta^2 g + kappa0 g = -(Delta^2 S - delta_0) - kappa0 S,

a regular radial problem. In ``s = ln r`` one has
``r^4 Delta^2 = d^4/ds^4 - 4 d^2/ds^2``, so the rows scaled by ``r^4`` are
well conditioned down to very small radii. Regularity at the origin
excludes the ``ln r`` and ``r^-2`` homogeneous modes; decay is imposed by
``g = g' = 0`` at ``r_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicSpline

from .radial import RadialGrid, _diff_matrix, integrate, make_grid
from .validation import DomainError, ParameterError, check_real

PI2 = math.pi**2
GREEN_SLOPE = -1.0 / (8 * PI2)
DECAY_FACTOR = 25.0


def _bump(x):
    return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


def cutoff(r, r_in=1.0, r_out=2.0):
    """Smooth cutoff: 1 on ``r <= r_in``, 0 on ``r >= r_out``."""
    r = np.asarray(r, dtype=float)
    a = _bump(r_out - r)
    b = _bump(r - r_in)
    return a / (a + b)


def default_green_grid(kappa0, points=6144, r_min=1e-6):
    """Log grid reaching ``25 / sqrt(kappa0)``."""
    return make_grid(4, r_min, DECAY_FACTOR / math.sqrt(kappa0), points, "log")


def _core(grid):
    """``r^4 Delta^2`` in ``s = ln r``: ``d^4/ds^4 - 4 d^2/ds^2``."""
    h, N = grid.step, grid.size
    return _diff_matrix(N, h, 4, width=9) - 4 * _diff_matrix(N, h, 2)


def _solve(grid, kappa0, r2f):
    """Solve ``Delta^2 g + kappa0 g = f`` for regular, decaying ``g``.

    The problem is split as ``r^2 Delta g = r^2 w`` and
    ``r^2 Delta w + kappa0 r^2 g = r^2 f``; each block is second order in
    ``s``, which keeps the condition number near ``(N)^2`` instead of
    ``N^4``. Regularity at the inner node is ``g_s = w_s = 0`` (the
    ``r^-2`` modes are excluded up to ``O(r_min^2)``); decay at ``r_max``
    is ``g = g_s = 0``.

    Returns
    -------
    g, w : ndarray
    """
    h, N = grid.step, grid.size
    r2 = grid.nodes**2
    d1 = _diff_matrix(N, h, 1)
    lap = _diff_matrix(N, h, 2) + 2 * d1
    top = sp.hstack([lap, -sp.diags(r2)])
    bot = sp.hstack([sp.diags(kappa0 * r2), lap])
    op = sp.vstack([top, bot]).tolil()
    rhs = np.concatenate([np.zeros(N), r2f])
    zero = sp.csr_matrix((1, N))
    d1_first = d1[0, :]
    d1_last = d1[N - 1, :]
    unit_last = sp.csr_matrix(([1.0], ([0], [N - 1])), shape=(1, N))
    op[0, :] = sp.hstack([d1_first, zero])
    op[N, :] = sp.hstack([zero, d1_first])
    op[N - 1, :] = sp.hstack([unit_last, zero])
    op[2 * N - 1, :] = sp.hstack([d1_last, zero])
    rhs[[0, N, N - 1, 2 * N - 1]] = 0.0
    sol = spla.spsolve(op.tocsc(), rhs)
    return sol[:N], sol[N:]


@dataclass(frozen=True, eq=False)
class GreenProfile:
    """Numerical Green function of ``Delta^2 + kappa0`` in R^4.

    Attributes
    ----------
    kappa0 : float
    grid : RadialGrid
    G_values : ndarray
        ``G(r_i)``.
    K0 : float
        ``lim_{r->0} G(r) + ln r / (8 pi^2)``.
    h_values : ndarray
        ``G + ln r/(8 pi^2) - K0``; vanishes at the origin.
    l2_norm_sq : float
        ``||G||_2^2``.
    source : float
        Strength of the point source.
    """

    kappa0: float
    grid: RadialGrid
    G_values: np.ndarray
    K0: float
    h_values: np.ndarray
    l2_norm_sq: float
    source: float = 1.0
    g_values: np.ndarray = field(default=None, repr=False)

    @cached_property
    def lapG_values(self):
        return self.grid.apply_lap(self.G_values)

    @cached_property
    def lap_h_values(self):
        return self.grid.apply_lap(self.h_values)

    @cached_property
    def _splines(self):
        s = np.log(self.grid.nodes)
        r2 = self.grid.nodes**2
        return (CubicSpline(s, self.h_values), CubicSpline(s, self.lap_h_values),
                CubicSpline(s, r2 * self.lapG_values))

    def h_interpolants(self):
        """Cubic interpolants of ``h`` and ``Delta h``; ``h(r) ~ h(0) = 0`` below ``r_min``."""
        hs, lhs, _ = self._splines
        r0 = self.grid.r_min
        lh0 = float(self.lap_h_values[0])

        def h(r):
            r = np.asarray(r, dtype=float)
            inside = r < r0
            out = np.where(inside, 0.0, 0.0)
            rr = np.clip(r, r0, self.grid.r_max)
            val = hs(np.log(rr))
            # Below r_min, h is quadratic to leading order: h ~ Delta h(0) r^2 / 8.
            return np.where(inside, lh0 * r**2 / 8.0, val) + out

        def lap_h(r):
            r = np.asarray(r, dtype=float)
            rr = np.clip(r, r0, self.grid.r_max)
            return np.where(r < r0, lh0, lhs(np.log(rr)))

        return h, lap_h

    def G_closure(self):
        """``G(r) = -ln r/(8 pi^2) + K0 + h(r)`` with interpolated ``h``; 0 beyond ``r_max``."""
        h, _ = self.h_interpolants()
        c = self.source / (8 * PI2)

        def G(r):
            r = np.asarray(r, dtype=float)
            out = -c * np.log(np.maximum(r, 1e-300)) + self.K0 + h(r)
            return np.where(r > self.grid.r_max, 0.0, out)

        return G

    def lapG_closure(self):
        _, _, spl = self._splines

        def lapG(r):
            r = np.asarray(r, dtype=float)
            rr = np.clip(r, self.grid.r_min, self.grid.r_max)
            small = -self.source / (4 * PI2 * r**2) + self.lap_h_values[0]
            return np.where(r < self.grid.r_min, small,
                            np.where(r > self.grid.r_max, 0.0, spl(np.log(rr)) / rr**2))

        return lapG

    @cached_property
    def _energy_antiderivative(self):
        s = np.log(self.grid.nodes)
        r = self.grid.nodes
        dens = 2 * PI2 * r**4 * (self.lapG_values**2 + self.G_values**2)
        return CubicSpline(s, dens).antiderivative()

    def annulus_energy(self, eps):
        """``int_{|x| > eps} |Delta G|^2 + |G|^2 dx``."""
        return annulus_energy(self, eps)


def solve_green(kappa0, grid=None, source=1.0):
    """Solve ``Delta^2 G + kappa0 G = source * delta_0`` radially in R^4.

    Parameters
    ----------
    kappa0 : float
        Positive mass coefficient, ``1 - alpha (gamma + 1)`` in applications.
    grid : RadialGrid, optional
        Log-graded four-dimensional grid with ``r_max >= 25/sqrt(kappa0)``.
    source : float
        Strength of the point source.

    Returns
    -------
    GreenProfile
    """
    kappa0 = check_real("kappa0", kappa0)
    if kappa0 <= 0:
        raise ParameterError(f"kappa0 must be positive, got {kappa0}")
    if grid is None:
        grid = default_green_grid(kappa0)
    if grid.n != 4 or grid.grading != "log":
        raise ParameterError("the Green solve needs a log-graded grid in R^4")
    if grid.r_max < DECAY_FACTOR / math.sqrt(kappa0) * (1 - 1e-12):
        raise DomainError(f"r_max={grid.r_max:.4g} < 25/sqrt(kappa0) = "
                          f"{DECAY_FACTOR / math.sqrt(kappa0):.4g}; domain too small")
    r = grid.nodes
    c = source / (8 * PI2)
    S = -c * cutoff(r) * np.log(r)
    # r^4 Delta^2 annihilates ln r; apply it only to the part of S that
    # differs from -c ln r so that no roundoff enters near the origin.
    T = c * (1.0 - cutoff(r)) * np.log(r)
    r2f = -(_core(grid) @ T) / r**2 - kappa0 * r**2 * S
    g, _ = _solve(grid, kappa0, r2f)
    G = g + S
    # g = K0 + c2 r^2 + ... near the origin; eliminate c2 with two nodes.
    ra, rb = r[0], r[4]
    K0 = float((rb**2 * g[0] - ra**2 * g[4]) / (rb**2 - ra**2))
    h = G + c * np.log(r) - K0
    tail = np.abs(G[r >= 0.8 * grid.r_max]).max()
    if tail > 1e-8 * abs(source):
        raise DomainError("Green function has not decayed at r_max; enlarge the domain")
    l2 = integrate(grid, G**2)
    return GreenProfile(kappa0, grid, G, K0, h, l2, source, g)


def annulus_energy(gp, eps):
    """``int_{|x| > eps} (|Delta G|^2 + |G|^2) dx`` for a solved profile."""
    eps = check_real("eps", eps, lo=0.0, lo_open=True)
    if eps < gp.grid.nodes[2] or eps >= gp.grid.r_max:
        raise ParameterError(f"eps={eps} outside the resolvable range of the grid")
    F = gp._energy_antiderivative
    return float(F(math.log(gp.grid.r_max)) - F(math.log(eps)))


def annulus_prediction(gp, alpha_gamma_sum, eps):
    """Asymptotic ``-ln(eps)/(8 pi^2) - 1/(16 pi^2) + K0 + alpha(gamma+1)||G||^2``."""
    return (-math.log(eps) / (8 * PI2) - 1 / (16 * PI2) + gp.K0
            + alpha_gamma_sum * gp.l2_norm_sq)


def ball_green_regular(R):
    """Regular value at the centre of the Green function of ``Delta^2`` on ``B_R``:
    ``ln(R)/(8 pi^2) - 1/(16 pi^2)``."""
    R = check_real("R", R, lo=0.0, lo_open=True)
    return math.log(R) / (8 * PI2) - 1 / (16 * PI2)


def concentration_ceiling(K0):
    """Upper bound ``(pi^2/6) exp(5/3 + 32 pi^2 K0)`` for concentrating sequences."""
    return PI2 / 6 * math.exp(5.0 / 3.0 + 32 * PI2 * K0)


def solve_green_mollified(kappa0, sigma, grid=None):
    """Solve with a normalized Gaussian source of width ``sigma``.

    Returns
    -------
    G : ndarray
    energy : float
        ``int |Delta G|^2 + kappa0 G^2 dx``.
    """
    if grid is None:
        grid = default_green_grid(kappa0)
    r = grid.nodes
    src = np.exp(-(r / sigma) ** 2) / (PI2 * sigma**4)
    G, _ = _solve(grid, kappa0, r**2 * src)
    lap = grid.apply_lap(G)
    return G, integrate(grid, lap**2 + kappa0 * G**2)


@dataclass(frozen=True)
class DecayReport:
    near_constant: float
    near_ok: bool
    far_slope: float
    slope_bound: float
    far_ok: bool


def fundamental_decay_check(gp, near=(1e-5, 0.1), far=None):
    """Near-field log bound and far-field exponential decay of ``G``.

    The near-field constant is ``max |G| / ln(1 + 1/r)`` on ``near``. The
    far-field slope is a least-squares fit of ``ln |G|`` at the local maxima
    of ``|G|`` (``G`` oscillates for large ``r``), compared against
    ``-(1 - 0.2) sqrt(kappa0)/sqrt 2``.
    """
    r = gp.grid.nodes
    G = gp.G_values
    m = (r >= near[0]) & (r <= near[1])
    c = float(np.max(np.abs(G[m]) / np.log1p(1 / r[m])))
    if far is None:
        far = (3.0, 0.8 * gp.grid.r_max)
    mf = (r >= far[0]) & (r <= far[1])
    rr, aa = r[mf], np.abs(G[mf])
    peaks = np.where((aa[1:-1] >= aa[:-2]) & (aa[1:-1] >= aa[2:]))[0] + 1
    if peaks.size >= 2:
        x, y = rr[peaks], np.log(aa[peaks])
    else:
        x, y = rr, np.log(aa + 1e-300)
    slope = float(np.polyfit(x, y, 1)[0])
    bound = -(1 - 0.2) * math.sqrt(gp.kappa0) / math.sqrt(2)
    return DecayReport(c, bool(np.isfinite(c)), slope, bound, slope <= bound)
