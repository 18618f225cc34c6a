"""Command-line experiment harness.

Each subcommand runs one experiment and writes a report: JSON
``{config, series, estimates, diagnostics}`` or a CSV series.  Nothing is
written unless the experiment succeeds.  Exit codes: 0 ok, 2 usage,
3 numeric failure, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .asymptotics import entropy_fit, gauss_bonnet_check, growth_series, katok_identity, rigidity_defect, tr_u_average
from .boundary import busemann_closed, busemann_numeric
from .errors import BudgetExceeded, DegenerateInputError, DomainError, HorolabError, MetricInvalidError, NumericFailure
from .flow import UnitTangent, hyperbolic_endpoint
from .fuchsian import build_genus2_group, count_series, reduce_to_domain
from .measures import margulis_c, ps_cocycle_check, sphere_measure
from .metric import HyperbolicMetric, PerturbedMetric, hyperbolic_distance

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_BUDGET = 0, 2, 3, 4

EXPERIMENTS = ("volume", "orbit-count", "busemann", "ps-measure", "margulis-map", "entropy", "rigidity")

# per-experiment defaults for flags whose natural value depends on the experiment
DEFAULTS = {
    "volume": {"tmax": 10.0, "ndirs": 360, "dt": 1e-3, "point": (0.0, 0.0)},
    "orbit-count": {"tmax": 12.0},
    "busemann": {"dt": 1e-2, "samples": 50},
    "ps-measure": {"radius": 10.0, "ndirs": 2048, "dt": 1e-3, "point": (0.3, 0.0)},
    "margulis-map": {"tmax": 8.0, "ndirs": 64, "dt": 1e-2, "grid": 5},
    "entropy": {"tmax": 10.0, "ndirs": 64, "dt": 1e-2},
    "rigidity": {"tmax": 10.0, "radius": 10.0, "ndirs": 128, "dt": 1e-2, "samples": 64, "point": (0.0, 0.0)},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--metric", choices=("hyperbolic", "perturbed"), default="hyperbolic")
    common.add_argument("--eps", type=float, default=None, help="perturbation amplitude (perturbed only, default 0.01)")
    common.add_argument("--bump-radius", type=float, default=0.3, help="bump radius r0 (default 0.3)")
    common.add_argument("--tmax", type=float, default=None, help="largest time / radius of growth series")
    common.add_argument("--radius", type=float, default=None, help="sphere-measure radius R")
    common.add_argument("--ndirs", type=int, default=None, help="number of initial directions")
    common.add_argument("--dt", type=float, default=None, help="RK4 step")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=5_000_000, help="orbit-enumeration word budget")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--timings", action="store_true", help="embed wall-clock timings in the report")

    parser = _Parser(prog="horolab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, parents=[common])
        if name in ("volume", "busemann", "ps-measure", "rigidity"):
            sp.add_argument("--point", type=float, nargs=2, metavar=("U", "V"), default=None)
        if name in ("busemann", "rigidity"):
            sp.add_argument("--samples", type=int, default=None, help="number of random samples")
        if name == "margulis-map":
            sp.add_argument("--grid", type=int, default=None, help="grid size n (n x n samples)")
    return parser


def resolve(args):
    """Fill experiment defaults and validate ranges; returns the config dict."""
    cfg = dict(vars(args))
    exp = cfg["experiment"]
    for k, v in DEFAULTS[exp].items():
        if cfg.get(k) is None:
            cfg[k] = v
    if cfg["metric"] == "hyperbolic":
        if cfg["eps"] not in (None, 0.0):
            raise UsageError("--eps requires --metric perturbed")
        cfg["eps"] = 0.0
    elif cfg["eps"] is None:
        cfg["eps"] = 0.01
    for key in ("tmax", "radius", "ndirs", "dt", "point", "samples", "grid"):
        cfg.setdefault(key, None)
    checks = [
        (cfg["eps"] >= 0 and cfg["eps"] <= 0.05, "--eps must be in [0, 0.05]"),
        (cfg["bump_radius"] > 0, "--bump-radius must be positive"),
        (cfg["tmax"] is None or 0 < cfg["tmax"] <= 40, "--tmax must be in (0, 40]"),
        (cfg["radius"] is None or 1 <= cfg["radius"] <= 40, "--radius must be in [1, 40]"),
        (cfg["ndirs"] is None or 8 <= cfg["ndirs"] <= 65536, "--ndirs must be in [8, 65536]"),
        (cfg["dt"] is None or 0 < cfg["dt"] <= 0.1, "--dt must be in (0, 0.1]"),
        (cfg["budget"] > 0, "--budget must be positive"),
        (cfg["samples"] is None or cfg["samples"] >= 1, "--samples must be positive"),
        (cfg["grid"] is None or 1 <= cfg["grid"] <= 64, "--grid must be in [1, 64]"),
        (cfg["point"] is None or math.hypot(*cfg["point"]) < 1, "--point must lie in the open unit disk"),
        (cfg["seed"] >= 0, "--seed must be nonnegative"),
    ]
    for ok, msg in checks:
        if not ok:
            raise UsageError(msg)
    if exp == "orbit-count" and cfg["metric"] != "hyperbolic":
        raise UsageError("orbit-count measures hyperbolic distances; use --metric hyperbolic")
    if exp == "busemann" and cfg["metric"] == "perturbed" and cfg["samples"] > 10:
        raise UsageError("perturbed busemann runs at most 10 samples")
    if cfg["point"] is not None:
        cfg["point"] = [float(cfg["point"][0]), float(cfg["point"][1])]
    return cfg


def make_metric(cfg, group):
    if cfg["metric"] == "hyperbolic":
        return HyperbolicMetric()
    try:
        return PerturbedMetric(group, eps=cfg["eps"], bump_radius=cfg["bump_radius"])
    except (MetricInvalidError, DomainError) as exc:
        raise UsageError(str(exc)) from exc


def _point(cfg, default=(0.0, 0.0)):
    p = cfg["point"] if cfg["point"] is not None else default
    return complex(p[0], p[1])


def _grid(t_max, step=0.5):
    n = int(math.floor(t_max / step + 1e-9))
    t = step * np.arange(1, n + 1)
    if t.size == 0 or t[-1] < t_max - 1e-12:
        t = np.append(t, t_max)
    return t


# --- experiments ------------------------------------------------------------------


def exp_volume(cfg, metric, group):
    x = _point(cfg)
    t = _grid(cfg["tmax"])
    s, b = growth_series(metric, x, t, cfg["ndirs"], cfg["dt"])
    h = 1.0 if metric.kind == "hyperbolic" else entropy_fit(s).h
    est = margulis_c(metric, x, h, cfg["tmax"], cfg["ndirs"], cfg["dt"])
    estimates = {"h": h, **{k: v for k, v in est.to_dict().items() if k != "x"}}
    if metric.kind == "hyperbolic":
        closed = math.pi * (1 + math.exp(-2 * cfg["tmax"]) - 2 * math.exp(-cfg["tmax"]))
        estimates["cClosedForm"] = closed
    return b.samples(), estimates, {"massAgrees": est.mass_agrees, "seriesLabel": b.label}


def exp_orbit_count(cfg, metric, group):
    t = _grid(cfg["tmax"])
    series = count_series(group, 0j, 0j, t, budget=cfg["budget"])
    fit = entropy_fit(series)
    ratio = series.value * np.exp(-series.t)
    return series.samples(), {
        "h": fit.h,
        "fitResidual": fit.fit_residual,
        "countAtTmax": int(series.value[-1]),
        "ratioAtTmax": float(ratio[-1]),
        "target": 0.25,
    }, {"seriesLabel": series.label, "window": list(fit.window)}


def exp_busemann(cfg, metric, group):
    rng = np.random.default_rng(cfg["seed"])
    hyper = metric.kind == "hyperbolic"
    tol = 1e-8 if hyper else 1e-5
    worst, bound_ok, rows = 0.0, True, []
    for i in range(cfg["samples"]):
        rad = 0.5 if hyper else 0.3
        p = complex(*rng.uniform(-rad, rad, 2))
        q = complex(*rng.uniform(-rad, rad, 2))
        v = UnitTangent(p, rng.uniform(0, 2 * math.pi))
        val = busemann_numeric(metric, v, q, tol=tol, dt=cfg["dt"])
        d = float(hyperbolic_distance(p, q))
        bound_ok &= abs(val.value) <= d + 1e-9
        row = {"t": float(i), "value": val.value}
        if hyper:
            worst = max(worst, abs(val.value - busemann_closed(hyperbolic_endpoint(v), q, p).value))
        rows.append(row)
    est = {"samples": cfg["samples"], "tolerance": tol}
    if hyper:
        est["maxClosedFormGap"] = worst
    return rows, est, {"boundHolds": bool(bound_ok), "seriesLabel": "busemannSample"}


def exp_ps_measure(cfg, metric, group):
    q = _point(cfg)
    R, n = cfg["radius"], cfg["ndirs"]
    nu_p = sphere_measure(metric, 0j, R, n, 1.0, cfg["dt"])
    nu_q = sphere_measure(metric, q, R, n, 1.0, cfg["dt"])
    est = {"massP": nu_p.mass, "massQ": nu_q.mass}
    diag = {"seriesLabel": "atoms(angle,weight)"}
    if metric.kind == "hyperbolic":
        est["cocycleDeviation"] = ps_cocycle_check(nu_p, nu_q, 1.0)
    else:
        diag["note"] = "cocycle check uses the hyperbolic Busemann closed form; skipped"
    rows = [{"t": float(a), "value": float(w)} for a, w in zip(nu_q.angles, nu_q.weights)]
    return rows, est, diag


def exp_margulis_map(cfg, metric, group):
    n, t_max = cfg["grid"], cfg["tmax"]
    # square inscribed in the circle through the octagon's vertices
    half = float(abs(group.octagon[0])) / math.sqrt(2)
    axis = np.linspace(-half, half, n) if n > 1 else np.zeros(1)
    h = 1.0
    if metric.kind != "hyperbolic":
        s, _ = growth_series(metric, 0j, _grid(t_max), cfg["ndirs"], cfg["dt"])
        h = entropy_fit(s).h
    rows, gaps = [], []
    for yv in axis:
        for xv in axis:
            z = complex(xv, yv)
            zr, _ = reduce_to_domain(group, z)
            est = margulis_c(metric, zr, h, t_max, cfg["ndirs"], cfg["dt"])
            rows.append({"x": float(xv), "y": float(yv), "c": est.c})
            gaps.append(est.cauchy_gap)
    return rows, {"h": h, "cMin": min(r["c"] for r in rows), "cMax": max(r["c"] for r in rows)}, {
        "maxCauchyGap": max(gaps),
        "seriesLabel": "margulisMap",
    }


def exp_entropy(cfg, metric, group):
    t_max = cfg["tmax"]
    s, b = growth_series(metric, 0j, _grid(t_max, 0.25), cfg["ndirs"], cfg["dt"])
    w1, w2 = (0.6 * t_max, 0.8 * t_max), (0.8 * t_max, t_max)
    f1, f2, fb = entropy_fit(s, w1), entropy_fit(s, w2), entropy_fit(b)
    return s.samples(), {
        "h": entropy_fit(s).h,
        "hWindow1": f1.h,
        "hWindow2": f2.h,
        "hBallVolume": fb.h,
        "windowAgreement": abs(f1.h - f2.h) / f2.h,
    }, {"fits": [f1.to_dict(), f2.to_dict(), fb.to_dict()], "seriesLabel": s.label}


def exp_rigidity(cfg, metric, group):
    t_max = cfg["tmax"]
    s, _ = growth_series(metric, 0j, _grid(t_max, 0.25), 64, cfg["dt"])
    h = entropy_fit(s).h
    tru = tr_u_average(metric, cfg["samples"], 20.0, cfg["seed"], group, cfg["dt"], details=True)
    gb = gauss_bonnet_check(metric, group)
    katok = katok_identity(metric, group, h)
    rd = rigidity_defect(metric, _point(cfg), h, cfg["radius"], cfg["ndirs"], 20.0, cfg["dt"], details=True)
    est = {
        "h": h,
        "trU": tru["trU"],
        "secondIdentity": tru["second"],
        "gaussBonnet": gb,
        "gaussBonnetTarget": 4 * math.pi,
        "katok": katok,
        "rigidityDefect": rd["defect"],
    }
    diag = {
        "wsIntegrals": "exact" if metric.kind == "hyperbolic" else "diagnostic",
        "riccatiHorizon": tru["horizon"],
        "sqrtMinusK": [tru["sqrt_minus_k_min"], tru["sqrt_minus_k_max"]],
        "seriesLabel": s.label,
    }
    return s.samples(), est, diag


RUNNERS = {
    "volume": exp_volume,
    "orbit-count": exp_orbit_count,
    "busemann": exp_busemann,
    "ps-measure": exp_ps_measure,
    "margulis-map": exp_margulis_map,
    "entropy": exp_entropy,
    "rigidity": exp_rigidity,
}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def run(cfg):
    """Execute the experiment named in ``cfg``; returns (report, wall-clock seconds)."""
    start = time.perf_counter()
    group = build_genus2_group()
    metric = make_metric(cfg, group)
    series, estimates, diagnostics = RUNNERS[cfg["experiment"]](cfg, metric, group)
    if metric.kind == "perturbed":
        diagnostics["curvatureRange"] = [metric.k_min, metric.k_max]
    elapsed = time.perf_counter() - start
    config = {k: v for k, v in cfg.items() if k not in ("format", "out", "timings")}
    report = {"config": config, "series": series, "estimates": estimates, "diagnostics": diagnostics}
    if cfg.get("timings"):
        report["diagnostics"]["wallClockSeconds"] = elapsed
    return _clean(report), elapsed


def emit(report, fmt="json", path=None):
    """Serialize a report; JSON floats use repr (shortest round-trip form)."""
    if fmt == "json":
        text = json.dumps(report, indent=2, sort_keys=False, allow_nan=False) + "\n"
    else:
        buf = io.StringIO()
        rows = report["series"]
        keys = ["x", "y", "c"] if rows and "c" in rows[0] else ["t", "value"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([repr(float(r[k])) for k in keys])
        text = buf.getvalue()
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _error(code, kind, message, **payload):
    err = {"error": {"kind": kind, "message": message, "exitCode": code, **_clean(payload)}}
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve(args)
        report, elapsed = run(cfg)
    except UsageError as exc:
        return _error(EXIT_USAGE, "usage", str(exc))
    except BudgetExceeded as exc:
        partial = exc.partial
        return _error(EXIT_BUDGET, "budget", str(exc), partialCount=len(partial) if partial is not None else 0)
    except NumericFailure as exc:
        return _error(EXIT_NUMERIC, "numeric", str(exc), diagnostics=exc.diagnostics)
    except (DomainError, DegenerateInputError) as exc:
        return _error(EXIT_USAGE, "usage", str(exc))
    except HorolabError as exc:
        return _error(EXIT_NUMERIC, "numeric", str(exc))
    try:
        emit(report, cfg["format"], cfg["out"])
    except OSError as exc:
        return _error(EXIT_USAGE, "output", str(exc))
    sys.stderr.write(f"{cfg['experiment']}: {elapsed:.2f} s\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
