"""Desk-scale acceptance checks, one function per criterion.

Each check returns a :class:`CheckResult`. The thresholds are fixed here
and are not tuned to the outcome; a failing check reports the measured
quantities in ``detail``.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import DimPair, adams_constant, sphere_area
from .families import (
    BlowupParams,
    MoserParams,
    blowup_testfn,
    bubble,
    bubble_mass,
    moser_function,
    moser_energy_quad,
    moser_energy_ratio,
    scale_family,
)
from .functional import ADParams, ad_functional, zeta, zeta_from_mass
from .green import annulus_energy, concentration_ceiling, default_green_grid, solve_green
from .maximize import maximize_subcritical, moser_sharpness_probe, sweep_beta
from .radial import (
    RadialFunction,
    grad_m_norm,
    lp_norm,
    make_grid,
    poly_laplacian,
)
from .vanishing import (
    dtF_at_one,
    gn_maximize,
    gn_ratio,
    h_curve,
    increase_threshold,
    random_sphere_profiles,
    vanish_level,
)

PI2 = math.pi**2
BETA0 = 32 * PI2


@dataclass(frozen=True)
class CheckResult:
    ident: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.ident:2d} {self.name}: {self.detail} ({self.seconds:.1f} s)"


def _timed(ident, name, fn):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        passed, detail = fn()
    return CheckResult(ident, name, bool(passed), detail, time.perf_counter() - t0)


# ------------------------------------------------------------------ 1

def _c1():
    e24 = abs(adams_constant(DimPair(2, 4)) / BETA0 - 1)
    worst = 0.0
    for n in range(2, 11):
        ref = n * sphere_area(n) ** (1 / (n - 1))
        worst = max(worst, abs(adams_constant(DimPair(1, n)) / ref - 1))
    return e24 < 1e-10 and worst < 1e-10, f"rel err (2,4)={e24:.1e}, max (1,n)={worst:.1e}"


def check_constants():
    return _timed(1, "Adams constants", _c1)


# ------------------------------------------------------------------ 2

BUBBLE_GRID = (4, 1e-6, 1e3, 4096)


def _c2():
    mass = bubble_mass(make_grid(4, 1e-4, 1e3, 4096, "log"))
    grid = make_grid(*BUBBLE_GRID, "log")
    z = RadialFunction(grid, bubble(grid.nodes))
    res = poly_laplacian(grid, z, 2).values - np.exp(64 * PI2 * z.values)
    band = (grid.nodes >= 0.1) & (grid.nodes <= 10)
    sup = float(np.max(np.abs(res[band])))
    ok = abs(mass - 1) < 1e-6 and sup < 1e-4
    return ok, f"|mass-1|={abs(mass - 1):.1e}, sup residual={sup:.1e}"


def check_bubble():
    return _timed(2, "bubble identity", _c2)


# ------------------------------------------------------------------ 3

def _c3():
    _, ratio = gn_maximize()
    target = 1 / (8 * PI2)
    ok = ratio >= target - 1e-4
    parts = [f"GN ratio={ratio:.6f} vs 1/(8pi^2)-1e-4={target - 1e-4:.6f}"]
    for lam in (math.e**2, math.e**4):
        mp = MoserParams(lam)
        psi = moser_function(mp)
        A = moser_energy_quad(mp) / (BETA0 / 4)
        bound = 4 / (lam**4 * BETA0 * A)
        # the corner jumps of Delta psi call for the piecewise energy
        r = lp_norm(psi.grid, psi, 4) ** 4 / (A * BETA0 / 4 * lp_norm(psi.grid, psi, 2) ** 2)
        ok_l = A <= 1 + 3 * mp.eps_cut and r >= bound
        ok = ok and ok_l
        parts.append(f"lam=e^{math.log(lam):.0f}: A={A:.4f} (closed form {moser_energy_ratio(mp):.4f}, "
                     f"limit {1 + 3 * mp.eps_cut:.2f}), ratio={r:.2e} >= {bound:.2e}")
    return ok, "; ".join(parts)


def check_gn_witness():
    return _timed(3, "GN witness", _c3)


# ------------------------------------------------------------------ 4

def _gauss(a):
    return (lambda r: np.exp(-a * r**2),
            lambda r: (4 * a * a * r**2 - 8 * a) * np.exp(-a * r**2))


def _rational(a, k):
    def f(r):
        return (1 + a * r**2) ** (-k)

    def lap(r):
        q = 1 + a * r**2
        return -8 * a * k * q ** (-k - 1) + 4 * a * a * k * (k + 1) * r**2 * q ** (-k - 2)

    return f, lap


SCALING_CLOSURES = (
    [_gauss(a) for a in (0.25, 0.5, 1.0, 2.0, 4.0)]
    + [_rational(a, k) for a, k in ((1.0, 3), (0.5, 3), (2.0, 3), (1.0, 4), (0.3, 4))]
)


def _c4():
    grid = make_grid(4, 1e-4, 400.0, 4096, "log")
    p = ADParams.make(beta=BETA0 / 2, alpha=0.3, gamma=0.2)
    e_lap = e_mass = e_zeta = 0.0
    for f, lap in SCALING_CLOSURES:
        u = RadialFunction.from_closure(grid, f, lap)
        d = grad_m_norm(grid, u, 2, 2) ** 2
        m = lp_norm(grid, u, 2) ** 2
        # zeta is evaluated on the unit-mass normalization to stay in range
        un = u.scaled(1 / math.sqrt(m))
        for t in (0.25, 0.5, 2.0, 4.0):
            h = scale_family(u, t)
            e_lap = max(e_lap, abs(grad_m_norm(grid, h, 2, 2) ** 2 / (t * d) - 1))
            e_mass = max(e_mass, abs(lp_norm(grid, h, 2) ** 2 / m - 1))
            hn = scale_family(un, t)
            e_zeta = max(e_zeta, abs(zeta(hn, p) - zeta_from_mass(1.0, p)))
    ok = e_lap < 1e-6 and e_mass < 1e-6 and e_zeta < 1e-12
    return ok, f"max rel err lap={e_lap:.1e}, mass={e_mass:.1e}; max |zeta err|={e_zeta:.1e}"


def check_scaling():
    return _timed(4, "scaling identities", _c4)


# ------------------------------------------------------------------ 5

def _c5():
    grid = make_grid(4, 1e-3, 40.0, 1024, "log")
    alpha, gamma = 0.3, 0.2
    worst_fd = 0.0
    sign_ok = True
    for u in random_sphere_profiles(grid, 10, seed=5):
        p = ADParams.make(beta=BETA0, alpha=alpha, gamma=gamma)
        dt = 1e-4
        c = h_curve(u, p, [-2 * dt, -dt, dt, 2 * dt])
        h = c.h_values
        fd = (8 * (h[2] - h[1]) - (h[3] - h[0])) / (12 * dt)
        worst_fd = max(worst_fd, abs(fd / c.h_prime_zero_analytic - 1))
        thr = increase_threshold(alpha, gamma, gn_ratio(u))
        for factor, want in ((1.02, True), (0.98, False)):
            hp = h_curve(u, p.with_beta(factor * thr), [0.0]).h_prime_zero_analytic
            sign_ok = sign_ok and ((hp > 0) == want)
    ok = worst_fd < 1e-5 and sign_ok
    return ok, f"max rel |h'(0) analytic - FD|={worst_fd:.1e}, threshold sign test {'ok' if sign_ok else 'failed'}"


def check_vanishing_expansion():
    return _timed(5, "vanishing expansion", _c5)


# ------------------------------------------------------------------ 6

def _c6():
    grid = make_grid(4, 1e-3, 40.0, 1024, "log")
    p = ADParams.make(beta=1e-2 * BETA0, alpha=0.3, gamma=0.2)
    worst = 0.0
    top = -math.inf
    for u in random_sphere_profiles(grid, 20, seed=6):
        res = dtF_at_one(u, p)
        top = max(top, res.series)
        worst = max(worst, abs(res.series - res.finite_difference) / abs(res.series))
    ok = top < 0 and worst < 1e-5
    return ok, f"max dtF={top:.3e}, max rel series/FD gap={worst:.1e}"


def check_nonattainability():
    return _timed(6, "non-attainability sign", _c6)


# ------------------------------------------------------------------ 7

def _c7():
    coarse = [math.exp(k) for k in range(2, 9)]
    fine = [math.exp(k / 2) for k in range(4, 17)]
    hi = moser_sharpness_probe([1.05 * BETA0], [coarse[0], coarse[-1]])
    growth = hi[1].value / hi[0].value
    lo_c = max(r.value for r in moser_sharpness_probe([0.95 * BETA0], coarse))
    lo_f = max(r.value for r in moser_sharpness_probe([0.95 * BETA0], fine))
    change = abs(lo_f / lo_c - 1)
    ok = growth >= 10 and change < 0.05
    return ok, (f"F(e^8)/F(e^2) at 1.05 beta0={growth:.3f} (need >= 10); "
                f"0.95 beta0 max change under refinement={change:.1e}")


def check_sharpness():
    return _timed(7, "sharpness trend", _c7)


# ------------------------------------------------------------------ 8

def _c8():
    kappa0 = 0.7
    gp = solve_green(kappa0)
    fine = solve_green(kappa0, default_green_grid(kappa0, points=2 * gp.grid.size))
    rel = abs(fine.K0 / gp.K0 - 1)
    eps = np.exp(np.linspace(math.log(1e-4), math.log(1e-2), 9))
    en = np.array([annulus_energy(gp, e) for e in eps])
    slope, icpt = np.polyfit(np.log(eps), en, 1)
    s = 1 - kappa0
    want = -1 / (16 * PI2) + gp.K0 + s * gp.l2_norm_sq
    es = abs(slope / (-1 / (8 * PI2)) - 1)
    ei = abs(icpt / want - 1)
    ok = rel < 5e-4 and es < 0.02 and ei < 0.05
    return ok, (f"K0={gp.K0:.6f}, refined {fine.K0:.6f} (rel {rel:.1e}); "
                f"slope err={es:.1e}, intercept err={ei:.1e}")


def check_green():
    return _timed(8, "Green function", _c8)


# ------------------------------------------------------------------ 9

TESTFN_C = 1.0


def _c9():
    alpha, gamma = 0.01, 0.0
    gp = solve_green(1 - alpha * (gamma + 1))
    p = ADParams.make(beta=BETA0, alpha=alpha, gamma=gamma)
    ceiling = concentration_ceiling(gp.K0)
    devs, gaps = [], []
    for L in (8, 10, 12):
        bp = BlowupParams.from_green(math.exp(-L), gp, alpha, gamma)
        tf = blowup_testfn(bp, gp)
        devs.append(abs(tf.norm_sq - 1))
        u = tf.u.scaled(1 / math.sqrt(tf.norm_sq))
        gaps.append(ad_functional(u, p, check_constraint=False) - ceiling)
    in_band = all(d <= TESTFN_C / L**2 for d, L in zip(devs, (8, 10, 12)))
    shrinking = devs[0] > devs[1] > devs[2]
    ok = in_band and shrinking and all(g > 0 for g in gaps)
    return ok, (f"|norm-1|={', '.join(f'{d:.2e}' for d in devs)}; "
                f"AD-ceiling={', '.join(f'{g:.2f}' for g in gaps)} (ceiling {ceiling:.3f})")


def check_testfn():
    return _timed(9, "test-function ledger", _c9)


# ------------------------------------------------------------------ 10

def _c10():
    p = ADParams.make(beta=0.8 * BETA0, alpha=0.3, gamma=0.0)
    res = maximize_subcritical(p)
    level = vanish_level(p)
    sweep = sweep_beta([p.with_beta(f * BETA0) for f in (0.6, 0.7, 0.8)], warm_start=True)
    vals = [r.value for r in sweep]
    mono = all(b >= a for a, b in zip(vals, vals[1:]))
    ok = res.status == "converged" and res.el.residual_norm < 1e-4 and res.value > level and mono
    return ok, (f"status={res.status}, residual={res.el.residual_norm:.1e}, value={res.value:.4f} "
                f"vs vanish level {level:.4f}, ||Delta u||^2={res.delta_sq:.1e}, "
                f"sweep nondecreasing={mono}")


def check_attainment():
    return _timed(10, "subcritical attainment", _c10)


CHECKS = (
    check_constants, check_bubble, check_gn_witness, check_scaling, check_vanishing_expansion,
    check_nonattainability, check_sharpness, check_green, check_testfn, check_attainment,
)


def run_all(select=None):
    """Run the checks (all, or the 1-based ids in ``select``)."""
    ids = range(1, len(CHECKS) + 1) if select is None else select
    return [CHECKS[i - 1]() for i in ids]
