"""Constrained maximization of the functional on the energy sphere ``||Delta u||^2 + ||u||^2 = 1``."""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse.linalg as spla
from sklearn.base import BaseEstimator

from .families import MoserParams, bubble, moser_energy, moser_function
from .functional import (
    ADParams,
    ELState,
    Tolerances,
    ad_evaluate,
    el_residual,
    rho,
    rho_prime,
)
from .constants import DimPair
from .radial import (
    RadialFunction,
    clamp_map,
    energy_matrices,
    energy_parts,
    integrate,
    make_grid,
)
from .validation import ConstraintError, ParameterError, check_int, check_real

STATUSES = ("converged", "vanishing", "concentrating", "saturated", "unconverged")
SEEDS = ("gauss", "moser", "bubble")
DEFAULT_GRID = (1e-3, 40.0, 800)

# classify thresholds
VANISH_ENERGY = 0.05
VANISH_LOCAL = 0.05
LOCAL_RADIUS = 1.0
CONCENTRATION_HEIGHT = 10.0


def worker_count():
    """Worker cap from ``ADX_THREADS`` (default: CPU count)."""
    raw = os.environ.get("ADX_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ParameterError(f"ADX_THREADS must be an integer, got {raw!r}") from exc


@dataclass(frozen=True)
class MaxResult:
    """Outcome of a constrained ascent run.

    Attributes
    ----------
    u_star : RadialFunction
        Final profile on the sphere.
    value : float
        Functional value at ``u_star``.
    theta : float
        ``||u_star||_2^2``.
    el : ELState
        Multipliers and weak residual (clamped test space).
    c_max : float
        ``max |u_star|``.
    r_blow : float
        ``(lambda / (c^2 e^{beta zeta c^2}))^(1/4)``.
    status : str
        One of :data:`STATUSES`.
    """

    u_star: RadialFunction
    value: float
    theta: float
    el: ELState
    c_max: float
    r_blow: float
    status: str
    params: ADParams
    delta_sq: float
    local_mass: float
    constraint: float
    iterations: int
    seed: str = ""
    saturated: bool = False
    c_history: tuple = field(default=(), repr=False)

    def summary(self):
        """Scalar diagnostics as a flat dict."""
        return {
            "beta": self.params.beta, "alpha": self.params.alpha, "gamma": self.params.gamma,
            "value": self.value, "theta": self.theta, "delta_sq": self.delta_sq,
            "c_max": self.c_max, "r_blow": self.r_blow, "lambda": self.el.lambda_,
            "mu": self.el.mu, "zeta": self.el.zeta, "residual": self.el.residual_norm,
            "constraint": self.constraint, "iterations": self.iterations,
            "seed": self.seed, "status": self.status,
        }


def blowup_radius(lam, c, beta, zeta):
    """``(lambda / (c^2 e^{beta zeta c^2}))^(1/4)``, evaluated in log space."""
    if lam <= 0 or c <= 0:
        return math.inf
    return math.exp((math.log(lam) - 2 * math.log(c) - beta * zeta * c * c) / 4)


def _monotone_past(history, level):
    h = np.asarray(history, dtype=float)
    return h.size >= 2 and h[-1] > level and bool(np.all(np.diff(h) >= 0))


def classify(res, tol=1e-4):
    """Label a run as vanishing, concentrating, converged or unconverged.

    Vanishing: ``||Delta u||^2 < 0.05`` and the exponential mass on the
    unit ball is below ``0.05 * value``. Concentrating: ``c_max`` grew
    monotonically past 10 and ``r_blow`` is below the first grid spacing.
    Saturated runs keep their status.
    """
    if res.saturated:
        return "saturated"
    if res.delta_sq < VANISH_ENERGY and res.local_mass < VANISH_LOCAL * res.value:
        return "vanishing"
    grid = res.u_star.grid
    if _monotone_past(res.c_history, CONCENTRATION_HEIGHT) and res.r_blow < grid.nodes[1] - grid.nodes[0]:
        return "concentrating"
    return "converged" if res.el.residual_norm < tol else "unconverged"


def diagnose(u, p, iterations=0, seed="", saturated=None, c_history=None, tol=1e-4,
             mu_form="variational"):
    """Populate a :class:`MaxResult` for any profile ``u`` and classify it."""
    grid = u.grid
    if saturated is None:
        saturated = bool(np.max(p.beta * rho(integrate(grid, u.values**2), p.alpha, p.gamma)
                                * u.values**2) > p.tol.exp_guard)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        value = ad_evaluate(u, p, check_constraint=False).value
    d2, theta = energy_parts(grid, u.values)
    el = el_residual(u, p, mu_form, clamped=True)
    c = float(np.max(np.abs(u.values)))
    z = rho(theta, p.alpha, p.gamma)
    arg = np.minimum(p.beta * z * u.values**2, p.tol.exp_guard)
    ball = grid.nodes <= LOCAL_RADIUS
    local = float(grid.measure[ball] @ np.expm1(arg[ball]))
    res = MaxResult(
        u_star=u, value=float(value), theta=theta, el=el, c_max=c,
        r_blow=blowup_radius(el.lambda_, c, p.beta, el.zeta), status="unconverged",
        params=p, delta_sq=d2, local_mass=local, constraint=d2 + theta,
        iterations=iterations, seed=seed, saturated=saturated,
        c_history=tuple(c_history if c_history is not None else [c]),
    )
    return replace(res, status=classify(res, tol))


def seed_profile(kind, grid):
    """Unnormalized initial profile from the seed menu."""
    r = grid.nodes
    if kind == "gauss":
        return np.exp(-(r**2))
    if kind == "moser":
        return moser_function(MoserParams(math.e**2), grid).values
    if kind == "bubble":
        # bubble concentrated at scale 0.1, shifted to vanish at r_max
        return bubble(r / 0.1) - bubble(grid.r_max / 0.1)
    raise ParameterError(f"unknown seed {kind!r}; expected one of {SEEDS}")


class _Problem:
    """Discrete problem on the clamped subspace ``u = P x``."""

    def __init__(self, grid, p):
        self.grid = grid
        self.p = p
        self.meas = grid.measure
        k, m = energy_matrices(grid)
        self.P = clamp_map(grid)
        self.A = (self.P.T @ (k + m) @ self.P).tocsc()
        self.lu = spla.splu(self.A)

    def full(self, x):
        return self.P @ x

    def retract(self, x):
        return x / math.sqrt(sum(energy_parts(self.grid, self.full(x))))

    def parts(self, x):
        """Value, reduced gradient and saturation flag at ``x``."""
        p = self.p
        u = self.full(x)
        t = self.meas @ u**2
        r0 = rho(t, p.alpha, p.gamma)
        raw = p.beta * r0 * u**2
        sat = bool(np.max(raw) > p.tol.exp_guard)
        arg = np.minimum(raw, p.tol.exp_guard)
        ex = np.exp(arg)
        s = self.meas @ (u**2 * ex)
        value = float(self.meas @ np.expm1(arg))
        g = self.meas * (2 * p.beta * r0 * u * ex + 2 * p.beta * rho_prime(t, p.alpha, p.gamma) * s * u)
        return value, self.P.T @ g, sat


class SubcriticalMaximizer(BaseEstimator):
    """Projected Sobolev-gradient ascent for ``n = 2m = 4``.

    Each step moves toward ``A^-1 g / (x^T g)``, the fixed point of the
    Euler-Lagrange system, retracts to the energy sphere and backtracks
    (Armijo, factor 0.5, minimum step ``min_step``). Admissible profiles
    are clamped at ``r_max``. The run stops when the dual-norm residual
    falls below ``tol`` or after ``max_iter`` steps.

    Parameters
    ----------
    beta, alpha, gamma : float
    grid_spec : tuple
        ``(r_min, r_max, points)`` of the log grid.
    seeds : tuple of str
        Subset of :data:`SEEDS`.
    max_iter : int
    tol : float
    armijo : float
    min_step : float
    mu_form : str
    """

    def __init__(self, beta=0.8 * 32 * math.pi**2, alpha=0.0, gamma=0.0, grid_spec=DEFAULT_GRID,
                 seeds=SEEDS, max_iter=20000, tol=1e-4, armijo=1e-4, min_step=1e-8,
                 mu_form="variational"):
        self.beta = beta
        self.alpha = alpha
        self.gamma = gamma
        self.grid_spec = grid_spec
        self.seeds = seeds
        self.max_iter = max_iter
        self.tol = tol
        self.armijo = armijo
        self.min_step = min_step
        self.mu_form = mu_form

    def _params(self):
        p = ADParams(DimPair(2, 4), float(self.beta), float(self.alpha), float(self.gamma), Tolerances())
        if p.beta >= p.beta0:
            raise ParameterError(f"beta must be below beta0 = {p.beta0:.10g}")
        check_int("max_iter", self.max_iter, lo=1)
        check_real("tol", self.tol, lo=0.0, lo_open=True)
        return p

    def _ascend(self, prob, x, label):
        x = prob.retract(x)
        value, g, sat = prob.parts(x)
        c_hist = [float(np.max(np.abs(prob.full(x))))]
        step = 1.0
        it = 0
        for it in range(1, self.max_iter + 1):
            nu = float(x @ g)
            d = prob.lu.solve(g) / nu - x
            if math.sqrt(max(float(-(prob.A @ x - g / nu) @ d), 0.0)) < self.tol:
                break
            slope = float(g @ d)
            step = min(1.0, 2 * step)
            while step >= self.min_step:
                w = prob.retract(x + step * d)
                v1, g1, s1 = prob.parts(w)
                if v1 >= value + self.armijo * step * slope:
                    break
                step *= 0.5
            else:
                break
            x, value, g, sat = w, v1, g1, sat or s1
            c_hist.append(float(np.max(np.abs(prob.full(x)))))
        return self._result(prob, x, it, label, sat, c_hist)

    def _result(self, prob, x, iterations, label, sat, c_hist):
        u = RadialFunction(prob.grid, prob.full(x))
        return diagnose(u, prob.p, iterations=iterations, seed=label, saturated=sat,
                        c_history=c_hist, tol=self.tol, mu_form=self.mu_form)

    def fit(self, X=None, y=None):
        """Run every seed (or the profiles in ``X``) and keep the best value.

        Parameters
        ----------
        X : RadialFunction or list of RadialFunction, optional
            Initial profiles; they fix the grid when given.
        """
        p = self._params()
        inits = [] if X is None else ([X] if isinstance(X, RadialFunction) else list(X))
        if inits:
            grid = inits[0].grid
        else:
            r_min, r_max, points = self.grid_spec
            grid = make_grid(4, r_min, r_max, int(points), "log")
        prob = _Problem(grid, p)
        starts = []
        for k, u0 in enumerate(inits):
            if u0.grid is not grid and u0.grid.spec() != grid.spec():
                raise ParameterError("initial profiles must share one grid")
            starts.append((f"init{k}", np.asarray(u0.values[:-2], dtype=float)))
        if not inits:
            for kind in self.seeds:
                starts.append((kind, seed_profile(kind, grid)[:-2]))
        self.seed_results_ = [self._ascend(prob, x0, label) for label, x0 in starts]
        self.result_ = max(self.seed_results_, key=lambda r: r.value)
        return self


def maximize_subcritical(p, init=None, opts=None):
    """Search for a maximizer of the functional at subcritical ``beta``.

    Parameters
    ----------
    p : ADParams
        ``n = 2m = 4`` and ``beta < beta0``.
    init : RadialFunction, optional
        Start on the constraint sphere; without it the seed menu is used.
    opts : dict, optional
        Keyword overrides for :class:`SubcriticalMaximizer`.

    Returns
    -------
    MaxResult
    """
    if p.dims.n != 4 or p.dims.m != 2:
        raise ParameterError("maximize_subcritical is implemented for n = 2m = 4")
    if init is not None:
        d2, t = energy_parts(init.grid, init.values)
        if abs(d2 + t - 1) > 1e-6:
            raise ConstraintError(f"init must lie on the constraint sphere, got {d2 + t:.10g}")
    est = SubcriticalMaximizer(beta=p.beta, alpha=p.alpha, gamma=p.gamma, **(opts or {}))
    return est.fit(init).result_


def _run_one(args):
    p, opts = args
    return maximize_subcritical(p, None, opts)


def sweep_beta(p_range, warm_start=True, opts=None):
    """Continuation over increasing ``beta``.

    With ``warm_start`` each run also starts from the previous optimum,
    so the recorded values are nondecreasing. Without it the runs are
    independent and use a process pool capped by ``ADX_THREADS``.

    Returns
    -------
    list of MaxResult
    """
    ps = list(p_range)
    betas = [q.beta for q in ps]
    if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ParameterError("sweep_beta needs strictly increasing beta")
    if not warm_start:
        workers = min(worker_count(), len(ps))
        if workers <= 1:
            return [_run_one((q, opts)) for q in ps]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, [(q, opts) for q in ps]))
    out = []
    prev = None
    for q in ps:
        est = SubcriticalMaximizer(beta=q.beta, alpha=q.alpha, gamma=q.gamma, **(opts or {}))
        if prev is None:
            res = est.fit().result_
        else:
            # Fresh seeds plus the previous optimum on the same grid.
            grid = prev.u_star.grid
            seeds = [RadialFunction(grid, seed_profile(k, grid)) for k in est.seeds]
            seeds = [s.scaled(1 / math.sqrt(sum(energy_parts(grid, s.values)))) for s in seeds]
            res = est.fit([prev.u_star] + seeds).result_
        out.append(res)
        if not res.saturated:
            prev = res
    return out


@dataclass(frozen=True)
class ProbeRow:
    beta: float
    lam: float
    value: float
    saturated: bool
    energy: float


def moser_sharpness_probe(beta_list, lambda_list, alpha=0.0, gamma=0.0, eps_cut=0.05, points=4096):
    """Functional along the normalized concentrating family ``psi_lambda``.

    Each ``psi_lambda`` is scaled onto the sphere ``||Delta u||^2 + ||u||^2
    = 1`` before evaluation. Saturated values are lower bounds and flagged.

    Returns
    -------
    list of ProbeRow
    """
    rows = []
    for lam in lambda_list:
        mp = MoserParams(float(lam), eps_cut)
        grid = make_grid(4, 1e-3 / mp.lam, 2.0, points, "log")
        psi = moser_function(mp, grid)
        # Delta psi jumps at the corners; mesh quadrature of it is first order.
        d2 = moser_energy(mp)
        t = integrate(grid, psi.values**2)
        u = psi.scaled(1 / math.sqrt(d2 + t))
        for beta in beta_list:
            p = ADParams(DimPair(2, 4), float(beta), alpha, gamma, Tolerances())
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                ev = ad_evaluate(u, p, check_constraint=False)
            rows.append(ProbeRow(float(beta), float(lam), ev.value, ev.saturated, d2 + t))
    rows.sort(key=lambda r: (r.beta, r.lam))
    return rows
