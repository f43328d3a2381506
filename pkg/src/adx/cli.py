"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``); explicit
flags override config keys. Scalar results are written as JSON with the
config, its hash, the grid spec and library versions embedded. Tables and
profiles are written as CSV in scientific notation with a header row.

Exit codes: 2 for invalid configuration, 3 for I/O failures, 0 otherwise
(saturated runs included).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import platform
import sys
import warnings

import numpy as np

from .constants import DimPair, adams_constant, min_index, sphere_area
from .validation import ADXError

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3



class ConfigError(Exception):
    """Invalid configuration; carries the violated constraint."""


# ----------------------------------------------------------------- config

DEFAULTS = {
    "n": 4, "m": 2, "beta": None, "beta_rel": None, "alpha": 0.0, "gamma": 0.0,
    "grid": {"r_min": 1e-3, "r_max": 40.0, "points": 800, "grading": "log"},
    "optimizer": {"max_iter": 20000, "tol": 1e-4, "seeds": ["gauss", "moser", "bubble"]},
}


def _merge(base, extra):
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(args):
    """Defaults, then the JSON file, then explicit flags."""
    cfg = json.loads(json.dumps(DEFAULTS))
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        cfg = _merge(cfg, data)
    for key in ("n", "m", "beta", "beta_rel", "alpha", "gamma"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("r_min", "r_max", "points", "grading"):
        val = getattr(args, key, None)
        if val is not None:
            cfg["grid"][key] = val
    for key in ("max_iter", "tol"):
        val = getattr(args, key, None)
        if val is not None:
            cfg["optimizer"][key] = val
    if getattr(args, "seeds", None):
        cfg["optimizer"]["seeds"] = args.seeds.split(",")
    return cfg


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _params(cfg, need_beta=True):
    from .functional import ADParams, Tolerances

    try:
        dims = DimPair(int(cfg["m"]), int(cfg["n"]))
        beta = cfg.get("beta")
        if beta is None and cfg.get("beta_rel") is not None:
            beta = float(cfg["beta_rel"]) * adams_constant(dims)
        if beta is None:
            if need_beta:
                raise ConfigError("beta: set either 'beta' or 'beta_rel'")
            beta = adams_constant(dims)
        return ADParams(dims, float(beta), float(cfg["alpha"]), float(cfg["gamma"]), Tolerances())
    except ADXError as exc:
        raise ConfigError(str(exc)) from exc
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad parameter: {exc}") from exc


def _grid(cfg, n):
    from .radial import make_grid

    g = cfg["grid"]
    try:
        return make_grid(n, float(g["r_min"]), float(g["r_max"]), int(g["points"]), g.get("grading", "log"))
    except ADXError as exc:
        raise ConfigError(f"grid: {exc}") from exc


# ----------------------------------------------------------------- output

def versions():
    import scipy
    import sklearn

    from . import __version__

    return {"adx": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "scikit-learn": sklearn.__version__}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def format_csv(header, rows):
    """CSV text with a header row; floats in ``%.17e``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.17e}" if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _emit(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _document(command, cfg, result, grid=None):
    return {"command": command, "config": cfg, "config_hash": config_hash(cfg),
            "grid": grid.spec() if grid is not None else None, "versions": versions(),
            "result": _jsonable(result)}


def _write_result(args, command, cfg, result, table=None, grid=None):
    """Write JSON (default) or the CSV table, per ``--format``."""
    if args.format == "csv" and table is not None:
        _emit(format_csv(*table), args.out)
    else:
        doc = _document(command, cfg, result, grid)
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)


def _profile_csv(u, extra=None):
    cols = [u.grid.nodes, u.values] + [c for _, c in (extra or [])]
    header = ["r", "u"] + [h for h, _ in (extra or [])]
    return format_csv(header, zip(*[map(float, c) for c in cols]))


def _read_profile(path, grid_n):
    from .radial import RadialFunction, make_grid

    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 2 or data.shape[0] < 64:
        raise ConfigError("profile CSV needs columns r,u and at least 64 rows")
    r, u = data[:, 0], data[:, 1]
    if not (r[0] > 0 and np.all(np.diff(r) > 0)):
        raise ConfigError("profile radii must be positive and strictly increasing")
    grid = make_grid(grid_n, float(r[0]), float(r[-1]), r.size, "log")
    if not np.allclose(grid.nodes, r, rtol=1e-9, atol=0):
        raise ConfigError("profile must be sampled on a log-graded grid")
    return RadialFunction(grid, u)


# ----------------------------------------------------------------- commands

def cmd_constants(args, cfg):
    d = DimPair(int(cfg["m"]), int(cfg["n"]))
    res = {"m": d.m, "n": d.n, "beta0": adams_constant(d), "j_mn": min_index(d),
           "sphere_area": sphere_area(d.n)}
    _write_result(args, "constants", cfg, res)


def cmd_evaluate(args, cfg):
    from .functional import ad_evaluate, constraint_value
    from .maximize import seed_profile
    from .radial import RadialFunction, energy_parts

    p = _params(cfg, need_beta=False)
    if args.profile:
        u = _read_profile(args.profile, p.dims.n)
        grid = u.grid
    else:
        grid = _grid(cfg, p.dims.n)
        if args.seed == "zero":
            u = grid.zeros()
        else:
            v = seed_profile(args.seed, grid)
            u = RadialFunction(grid, v / math.sqrt(sum(energy_parts(grid, v))))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ev = ad_evaluate(u, p, check_constraint=False)
    res = {"value": ev.value, "zeta": ev.zeta, "saturated": ev.saturated,
           "constraint": constraint_value(u, p), "params": p.as_dict()}
    _write_result(args, "evaluate", cfg, res, grid=grid)


def _testfn_blowup(args, cfg, p):
    from .families import BlowupParams, blowup_testfn
    from .functional import ad_functional
    from .green import concentration_ceiling, solve_green

    gp = solve_green(p.kappa0)
    ceiling = concentration_ceiling(gp.K0)
    rows, last = [], None
    for L in args.L:
        bp = BlowupParams.from_green(math.exp(-L), gp, p.alpha, p.gamma)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tf = blowup_testfn(bp, gp)
            last = tf.u.scaled(1 / math.sqrt(tf.norm_sq))
            val = ad_functional(last, p.with_beta(p.beta0), check_constraint=False)
        rows.append({"L": float(L), "eps": bp.eps, "C": bp.C, "norm_sq": tf.norm_sq,
                     "jump": tf.jump, "value": val, "ceiling": ceiling, "gap": val - ceiling,
                     "status": tf.status})
    return last, {"K0": gp.K0, "rows": rows}


def cmd_testfn(args, cfg):
    from .families import MoserParams, bubble_profile, moser_energy, moser_function
    from .radial import energy_parts, lp_norm

    p = _params(cfg, need_beta=False)
    if args.kind == "blowup":
        u, meta = _testfn_blowup(args, cfg, p)
    elif args.kind == "moser":
        mp = MoserParams(math.exp(args.log_lambda), args.eps_cut)
        u = moser_function(mp)
        meta = {"lambda": mp.lam, "eps_cut": mp.eps_cut, "delta_sq": moser_energy(mp),
                "l2_sq": lp_norm(u.grid, u, 2) ** 2, "l4_4": lp_norm(u.grid, u, 4) ** 4}
    else:
        u = bubble_profile(_grid(cfg, 4))
        d2, l2 = energy_parts(u.grid, u.values)
        meta = {"delta_sq": d2, "l2_sq": l2, "u_min": float(u.values.min())}
    meta["kind"] = args.kind
    if args.profile:
        _emit(_profile_csv(u), args.profile)
    if args.format == "csv":
        _emit(_profile_csv(u), args.out)
    else:
        _write_result(args, "testfn", cfg, meta, grid=u.grid)


def cmd_vanishing(args, cfg):
    from .maximize import seed_profile
    from .radial import RadialFunction, energy_parts
    from .vanishing import gn_ratio, h_curve, increase_threshold, vanish_level

    p = _params(cfg, need_beta=False)
    grid = _grid(cfg, p.dims.n)
    v = seed_profile(args.seed, grid)
    u = RadialFunction(grid, v / math.sqrt(sum(energy_parts(grid, v))))
    ts = np.linspace(0.0, args.t_max, args.steps)
    c = h_curve(u, p, ts)
    ratio = gn_ratio(u)
    res = {"vanish_level": vanish_level(p), "h_prime_zero": c.h_prime_zero_analytic,
           "gn_ratio": ratio, "threshold": increase_threshold(p.alpha, p.gamma, ratio),
           "params": p.as_dict()}
    table = (["t", "h", "f", "g"], [[float(a), float(b), float(x), float(y)]
                                    for a, b, x, y in zip(ts, c.h_values, c.f_values, c.g_values)])
    if args.curve:
        args.format = "csv"
    _write_result(args, "vanishing", cfg, res, table, grid)


def cmd_dtf(args, cfg):
    from .vanishing import dtF_at_one, random_sphere_profiles

    if cfg.get("beta") is None and cfg.get("beta_rel") is None:
        cfg["beta_rel"] = 0.01
    p = _params(cfg)
    grid = _grid(cfg, p.dims.n)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i, v in enumerate(random_sphere_profiles(grid, args.count, args.seed_value)):
            d = dtF_at_one(v, p)
            rows.append({"index": i, "series": d.series, "finite_difference": d.finite_difference,
                         "terms": d.terms, "saturated": d.saturated})
    res = {"rows": rows, "all_negative": all(r["series"] < 0 for r in rows), "params": p.as_dict()}
    header = ["index", "series", "finite_difference", "terms", "saturated"]
    table = (header, [[r[h] for h in header] for r in rows])
    _write_result(args, "dtf", cfg, res, table, grid)


def cmd_gn(args, cfg):
    from .vanishing import GNMaximizer

    g = cfg["grid"]
    est = GNMaximizer(n_seeds=args.n_seeds, grid_spec=(g["r_min"], g["r_max"], g["points"]),
                      random_state=args.seed_value).fit()
    res = {"ratio": est.ratio_, "seed_ratios": est.seed_ratios_, "reference": 1 / (8 * math.pi**2)}
    if args.profile:
        _emit(_profile_csv(est.profile_), args.profile)
    _write_result(args, "gn", cfg, res, grid=est.profile_.grid)


def cmd_green(args, cfg):
    from .green import concentration_ceiling, default_green_grid, solve_green

    kappa0 = args.kappa0 if args.kappa0 is not None else _params(cfg, need_beta=False).kappa0
    grid = default_green_grid(kappa0, points=args.green_points)
    gp = solve_green(kappa0, grid)
    res = {"kappa0": kappa0, "K0": gp.K0, "l2_norm_sq": gp.l2_norm_sq,
           "ceiling": concentration_ceiling(gp.K0)}
    table = (["r", "G", "h"], [[float(a), float(b), float(c)]
                               for a, b, c in zip(grid.nodes, gp.G_values, gp.h_values)])
    _write_result(args, "green", cfg, res, table, grid)


def _optimizer_opts(cfg):
    o, g = cfg["optimizer"], cfg["grid"]
    return {"max_iter": int(o["max_iter"]), "tol": float(o["tol"]), "seeds": tuple(o["seeds"]),
            "grid_spec": (float(g["r_min"]), float(g["r_max"]), int(g["points"]))}


def cmd_maximize(args, cfg):
    from .maximize import maximize_subcritical

    p = _params(cfg)
    try:
        res = maximize_subcritical(p, None, _optimizer_opts(cfg))
    except ADXError as exc:
        raise ConfigError(str(exc)) from exc
    if args.profile:
        _emit(_profile_csv(res.u_star), args.profile)
    _write_result(args, "maximize", cfg, res.summary(), grid=res.u_star.grid)


def cmd_sweep(args, cfg):
    from .maximize import sweep_beta

    p = _params(cfg, need_beta=False)
    scale = p.beta0 if args.relative else 1.0
    betas = np.linspace(args.beta_from, args.beta_to, args.steps) * scale
    try:
        results = sweep_beta([p.with_beta(float(b)) for b in betas], warm_start=not args.cold,
                             opts=_optimizer_opts(cfg))
    except ADXError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [r.summary() for r in results]
    header = ["beta", "value", "theta", "c_max", "r_blow", "residual", "status"]
    table = (header, [[r[h] for h in header] for r in rows])
    _write_result(args, "sweep", cfg, {"rows": rows}, table)


def cmd_probe(args, cfg):
    from .maximize import moser_sharpness_probe

    p = _params(cfg, need_beta=False)
    betas = [b * p.beta0 for b in args.betas]
    lams = [math.exp(x) for x in args.log_lambdas]
    rows = moser_sharpness_probe(betas, lams, p.alpha, p.gamma)
    dicts = [{"beta": r.beta, "lambda": r.lam, "value": r.value, "saturated": r.saturated}
             for r in rows]
    header = ["beta", "lambda", "value", "saturated"]
    table = (header, [[d[h] for h in header] for d in dicts])
    _write_result(args, "probe-sharpness", cfg, {"rows": dicts}, table)


def cmd_verify(args, cfg):
    from .acceptance import CHECKS, run_all

    select = None
    if args.only:
        select = [int(x) for x in args.only.split(",")]
        if any(not 1 <= i <= len(CHECKS) for i in select):
            raise ConfigError(f"--only ids must lie in 1..{len(CHECKS)}")
    results = run_all(select)
    for r in results:
        print(r.line(), flush=True)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")


# ----------------------------------------------------------------- parser

def _common(sp, params=True, grid=True, optimizer=False):
    sp.add_argument("--config", help="JSON config file; flags override its keys")
    sp.add_argument("--out", help="output file (default: stdout)")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    if params:
        sp.add_argument("--n", type=int)
        sp.add_argument("--m", type=int)
        sp.add_argument("--beta", type=float, help="absolute beta")
        sp.add_argument("--beta-rel", dest="beta_rel", type=float, help="beta as a multiple of beta0")
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--gamma", type=float)
    if grid:
        sp.add_argument("--r-min", dest="r_min", type=float)
        sp.add_argument("--r-max", dest="r_max", type=float)
        sp.add_argument("--points", type=int)
        sp.add_argument("--grading", choices=("log", "uniform"))
    if optimizer:
        sp.add_argument("--max-iter", dest="max_iter", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--seeds", help="comma-separated subset of gauss,moser,bubble")


def build_parser():
    ap = argparse.ArgumentParser(prog="adx", description="Adams-Adimurthi-Druet numerics")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("constants", help="sharp Adams constant and related values")
    _common(sp, grid=False)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("evaluate", help="evaluate the functional on a profile")
    _common(sp)
    sp.add_argument("--profile", "--input", dest="profile", help="CSV with columns r,u on a log grid")
    sp.add_argument("--seed", choices=("zero", "gauss", "moser", "bubble"), default="gauss")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("testfn", help="closed-form profiles: psi_lambda, bubble, blow-up test function")
    _common(sp)
    sp.add_argument("--kind", choices=("moser", "bubble", "blowup"), default="blowup")
    sp.add_argument("--L", type=float, nargs="+", default=[8.0, 10.0, 12.0],
                    help="values of -ln(eps) for the blow-up kind")
    sp.add_argument("--log-lambda", dest="log_lambda", type=float, default=4.0,
                    help="ln(lambda) for the moser kind")
    sp.add_argument("--eps-cut", dest="eps_cut", type=float, default=0.05)
    sp.add_argument("--profile", help="also write the profile (r,u) as CSV")
    sp.set_defaults(func=cmd_testfn)

    sp = sub.add_parser("vanishing", help="vanishing curve h(t) for a seed profile")
    _common(sp)
    sp.add_argument("--seed", choices=("gauss", "moser", "bubble"), default="gauss")
    sp.add_argument("--t-max", dest="t_max", type=float, default=0.1)
    sp.add_argument("--steps", type=int, default=21)
    sp.add_argument("--curve", action="store_true", help="write the sampled curve (t,h,f,g) as CSV")
    sp.set_defaults(func=cmd_vanishing)

    sp = sub.add_parser("dtf", help="dilation derivative of F at t = 1 on random sphere points")
    _common(sp)
    sp.add_argument("--count", type=int, default=20)
    sp.add_argument("--random-state", dest="seed_value", type=int, default=0)
    sp.set_defaults(func=cmd_dtf)

    sp = sub.add_parser("gn", help="Gagliardo-Nirenberg ratio maximization")
    _common(sp, params=False)
    sp.add_argument("--n-seeds", dest="n_seeds", type=int, default=3)
    sp.add_argument("--random-state", dest="seed_value", type=int, default=0)
    sp.add_argument("--profile", help="write the maximizing profile as CSV")
    sp.set_defaults(func=cmd_gn)

    sp = sub.add_parser("green", help="Green function of Delta^2 + kappa0")
    _common(sp, grid=False)
    sp.add_argument("--kappa0", type=float, help="defaults to 1 - alpha(gamma+1)")
    sp.add_argument("--green-points", dest="green_points", type=int, default=6144)
    sp.set_defaults(func=cmd_green)

    sp = sub.add_parser("maximize", help="constrained maximizer search")
    _common(sp, optimizer=True)
    sp.add_argument("--profile", help="write the final profile as CSV")
    sp.set_defaults(func=cmd_maximize)

    sp = sub.add_parser("sweep", help="beta continuation")
    _common(sp, optimizer=True)
    sp.add_argument("--beta-from", dest="beta_from", type=float, required=True)
    sp.add_argument("--beta-to", dest="beta_to", type=float, required=True)
    sp.add_argument("--steps", type=int, default=5)
    sp.add_argument("--relative", action="store_true", help="beta bounds are multiples of beta0")
    sp.add_argument("--cold", action="store_true", help="independent runs in a worker pool")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("probe-sharpness", help="functional along normalized psi_lambda")
    _common(sp, grid=False)
    sp.add_argument("--betas", type=float, nargs="+", default=[0.95, 1.0, 1.05],
                    help="multiples of beta0")
    sp.add_argument("--log-lambdas", dest="log_lambdas", type=float, nargs="+",
                    default=[2, 3, 4, 5, 6, 7, 8])
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("verify-all", help="run the acceptance checks")
    sp.add_argument("--quick", action="store_true", help="accepted for compatibility; the suite is desk-scale")
    sp.add_argument("--only", help="comma-separated criterion ids")
    sp.set_defaults(func=cmd_verify, config=None)
    return ap


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
        args.func(args, cfg)
    except ConfigError as exc:
        json.dump({"error": "config", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_CONFIG
    except ADXError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_CONFIG
    except OSError as exc:
        json.dump({"error": "io", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
