"""Regulated exponential, the Adimurthi-Druet factor, the functional and its gradient."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import DimPair, adams_constant, min_index
import scipy.sparse.linalg as spla

from .radial import RadialFunction, clamp_map, energy_matrices, grad_m_norm, integrate, lp_norm
from .validation import (
    ConstraintError,
    DomainError,
    ParameterError,
    check_real,
)

EXP_GUARD = 700.0


class SaturationWarning(RuntimeWarning):
    """The exponent exceeded the overflow guard and was clipped."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical settings for functional evaluation.

    Attributes
    ----------
    exp_guard : float
        Largest exponent evaluated; larger arguments are clipped and flagged.
    constraint : float
        Slack allowed on the norm constraint.
    series_rtol : float
        Relative cutoff for power-series tails.
    """

    exp_guard: float = EXP_GUARD
    constraint: float = 1e-6
    series_rtol: float = 1e-17


@dataclass(frozen=True)
class ADParams:
    """Parameters ``(n, m, beta, alpha, gamma)`` of the functional.

    Requires ``0 <= alpha < 1`` and, for ``alpha > 0``, ``gamma < 1/alpha - 1``.
    """

    dims: DimPair
    beta: float
    alpha: float = 0.0
    gamma: float = 0.0
    tol: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if not isinstance(self.dims, DimPair):
            raise ParameterError("dims must be a DimPair")
        check_real("beta", self.beta, lo=0.0, lo_open=True)
        check_real("alpha", self.alpha, lo=0.0, hi=1.0, hi_open=True)
        check_real("gamma", self.gamma, lo=0.0)
        if self.alpha > 0 and self.gamma >= 1.0 / self.alpha - 1.0:
            raise ParameterError(
                f"gamma must be < 1/alpha - 1 = {1 / self.alpha - 1:.6g}, got {self.gamma}"
            )

    @classmethod
    def make(cls, n=4, m=2, beta=1.0, alpha=0.0, gamma=0.0, **tol):
        return cls(DimPair(m, n), beta, alpha, gamma, Tolerances(**tol))

    @property
    def beta0(self):
        return adams_constant(self.dims)

    @property
    def critical(self):
        return math.isclose(self.beta, self.beta0, rel_tol=1e-12)

    @property
    def kappa0(self):
        return 1.0 - self.alpha * (self.gamma + 1.0)

    def with_beta(self, beta):
        return ADParams(self.dims, beta, self.alpha, self.gamma, self.tol)

    def as_dict(self):
        return {"n": self.dims.n, "m": self.dims.m, "beta": self.beta,
                "alpha": self.alpha, "gamma": self.gamma}


@dataclass(frozen=True)
class ELState:
    """Multipliers of the Euler-Lagrange system and the residual.

    ``lambda_`` normalizes the exponential term, ``mu`` is the mass
    multiplier and ``zeta`` the amplification factor at the profile.
    """

    lambda_: float
    mu: float
    zeta: float
    residual_norm: float
    degenerate: bool = False


@dataclass(frozen=True)
class Evaluation:
    value: float
    zeta: float
    saturated: bool


def _phi_series(t, jmn, rtol):
    j0 = jmn - 1
    term = t**j0 / math.factorial(j0)
    total = term.copy()
    j = j0
    while True:
        j += 1
        term = term * t / j
        total += term
        if np.all(term <= rtol * total) or j > j0 + 400:
            return total


def phi(t, jmn, return_saturation=False, exp_guard=EXP_GUARD):
    """Regulated exponential ``e^t - sum_{j<=jmn-2} t^j/j!``.

    Uses the power series below ``t = jmn/2`` and the direct formula with
    compensated summation above. Arguments beyond ``exp_guard`` are
    clipped; with ``return_saturation`` the flag is returned alongside.

    Parameters
    ----------
    t : float or array_like
        Nonnegative arguments.
    jmn : int
        ``j_{m,n}``, at least 1.

    Returns
    -------
    ndarray or float, and optionally bool
    """
    if int(jmn) != jmn or jmn < 1:
        raise ParameterError(f"jmn must be a positive integer, got {jmn}")
    jmn = int(jmn)
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("phi requires finite t >= 0")
    saturated = bool(np.any(arr > exp_guard))
    arr = np.minimum(arr, exp_guard)
    out = np.empty_like(arr)
    small = arr < jmn / 2
    if jmn == 1:
        out = np.exp(arr)
    else:
        if np.any(small):
            out[small] = _phi_series(arr[small], jmn, 1e-17)
        big = ~small
        if np.any(big):
            if jmn == 2:
                out[big] = np.expm1(arr[big])
            else:
                out[big] = [
                    math.fsum([math.exp(x)] + [-(x**j) / math.factorial(j) for j in range(jmn - 1)])
                    for x in arr[big]
                ]
    out = out[0] if scalar else out
    if return_saturation:
        return out, saturated
    return out


def rho(t, alpha, gamma):
    """Adimurthi-Druet ratio ``(1 + alpha t) / (1 - gamma alpha t)``."""
    den = 1.0 - gamma * alpha * np.asarray(t, dtype=float)
    if np.any(den <= 0):
        raise DomainError(f"pole of rho: gamma*alpha*t >= 1 (alpha={alpha}, gamma={gamma})")
    out = (1.0 + alpha * np.asarray(t, dtype=float)) / den
    return float(out) if np.ndim(out) == 0 else out


def rho_prime(t, alpha, gamma):
    """Derivative of :func:`rho` in ``t``."""
    den = 1.0 - gamma * alpha * t
    if den <= 0:
        raise DomainError("pole of rho")
    return alpha * (1.0 + gamma) / den**2


def mass_norm(u, p):
    """``||u||_{n/m}^{n/m}``."""
    q = p.dims.n / p.dims.m
    return lp_norm(u.grid, u, q) ** q


def constraint_value(u, p):
    """``||nabla^m u||_{n/m}^{n/m} + ||u||_{n/m}^{n/m}``."""
    q = p.dims.n / p.dims.m
    return grad_m_norm(u.grid, u, p.dims.m, q) ** q + mass_norm(u, p)


def zeta_from_mass(t, p):
    """``rho(t)^(m/(n-m))`` for a given mass ``t = ||u||_{n/m}^{n/m}``."""
    if t > 1.0 + p.tol.constraint:
        raise ConstraintError(f"||u||_(n/m)^(n/m) = {t:.8g} exceeds 1")
    m, n = p.dims.m, p.dims.n
    return rho(t, p.alpha, p.gamma) ** (m / (n - m))


def zeta(u, p):
    """Amplification factor ``zeta(u) = rho(||u||_{n/m}^{n/m})^(m/(n-m))``."""
    return zeta_from_mass(mass_norm(u, p), p)


def ad_evaluate(u, p, check_constraint=True):
    """Evaluate the functional with the saturation status.

    Returns
    -------
    Evaluation
        ``value``, ``zeta`` and ``saturated``.
    """
    if check_constraint:
        c = constraint_value(u, p)
        if c > 1.0 + p.tol.constraint:
            raise ConstraintError(f"constraint value {c:.10g} exceeds 1 + tol")
    z = zeta(u, p)
    n, m = p.dims.n, p.dims.m
    x = p.beta * z * np.abs(u.values) ** (n / (n - m))
    vals, sat = phi(x, min_index(p.dims), return_saturation=True, exp_guard=p.tol.exp_guard)
    if sat:
        warnings.warn("exponent exceeded the overflow guard; value is a lower bound",
                      SaturationWarning, stacklevel=2)
    return Evaluation(integrate(u.grid, vals), z, sat)


def ad_functional(u, p, check_constraint=True):
    """``int Phi(beta zeta(u) |u|^(n/(n-m))) dx``.

    Raises
    ------
    ConstraintError
        If the full norm exceeds ``1 + tol``.
    """
    return ad_evaluate(u, p, check_constraint).value


def _require_hilbert(p):
    if not p.dims.hilbert:
        raise ParameterError(f"only n = 2m is supported here, got {p.dims}")


def ad_gradient(u, p):
    """L^2 gradient of the functional for ``n = 2m``.

    ``g = 2 beta rho(t) u e^{beta rho u^2} + 2 beta rho'(t) S u`` with
    ``t = ||u||_2^2`` and ``S = int u^2 e^{beta rho u^2}``.
    """
    _require_hilbert(p)
    grid = u.grid
    t = integrate(grid, u.values**2)
    r0 = rho(t, p.alpha, p.gamma)
    x = np.minimum(p.beta * r0 * u.values**2, p.tol.exp_guard)
    ex = np.exp(x)
    s = integrate(grid, u.values**2 * ex)
    g = 2 * p.beta * r0 * u.values * ex + 2 * p.beta * rho_prime(t, p.alpha, p.gamma) * s * u.values
    return RadialFunction(grid, g)


def el_multipliers(t, s, p, mu_form="variational"):
    """Multipliers ``(zeta, mu, lambda)`` from mass ``t`` and ``S``.

    ``mu_form="variational"`` gives ``mu = rho'/(rho + t rho')``, the value
    that makes the weak equation exact. ``"derivative"`` gives
    ``mu = rho'(t)``, which agrees with it as ``t -> 0``. In both cases
    ``lambda = zeta S / (1 - mu t)``.
    """
    z = rho(t, p.alpha, p.gamma)
    rp = rho_prime(t, p.alpha, p.gamma)
    if mu_form == "variational":
        mu = rp / (z + t * rp)
    elif mu_form == "derivative":
        mu = rp
    else:
        raise ParameterError(f"unknown mu_form {mu_form!r}")
    if 1.0 - mu * t <= 0:
        raise DomainError(f"degenerate multiplier: 1 - mu*||u||^2 = {1 - mu * t:.3g} <= 0")
    return z, mu, z * s / (1.0 - mu * t)


def el_residual(u, p, mu_form="variational", clamped=False):
    """Euler-Lagrange multipliers and residual for ``n = 2m = 4``.

    The residual ``Delta^2 u + u - (zeta/lambda) u e^{beta zeta u^2} - mu u``
    is formed in weak form against the discrete energy ``A = K + M`` and
    measured in the dual norm ``sqrt(r^T A^-1 r)``, the natural size of a
    functional on the constraint sphere ``u^T A u = 1``. With ``clamped``
    the test space is restricted to profiles with ``u = u' = 0`` at
    ``r_max``, matching the optimizer's admissible set.
    """
    _require_hilbert(p)
    if p.dims.n != 4:
        raise ParameterError("the Euler-Lagrange residual is implemented for n = 4")
    grid = u.grid
    v = u.values
    t = integrate(grid, v**2)
    if not np.any(v):
        return ELState(0.0, rho_prime(0.0, p.alpha, p.gamma), 1.0, 0.0, degenerate=True)
    z0 = rho(t, p.alpha, p.gamma)
    ex = np.exp(np.minimum(p.beta * z0 * v**2, p.tol.exp_guard))
    s = integrate(grid, v**2 * ex)
    z, mu, lam = el_multipliers(t, s, p, mu_form)
    k, m = energy_matrices(grid)
    meas = grid.measure
    a = (k + m).tocsc()
    res = a @ v - (z / lam) * (meas * v * ex) - mu * (meas * v)
    if clamped:
        pm = clamp_map(grid)
        res = pm.T @ res
        a = (pm.T @ a @ pm).tocsc()
    norm = math.sqrt(abs(float(res @ spla.spsolve(a, res))))
    return ELState(lam, mu, z, norm, degenerate=lam <= 0)
