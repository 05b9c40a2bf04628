"""Command-line front end (``python3 -m deltacorners <subcommand> ...``).

Every subcommand writes a CSV table (stdout unless ``--out``) and, when an
output path is given, a JSON sidecar next to it holding the resolved
configuration, provenance and per-value error estimates.  Feeding the
sidecar back through ``--config`` reproduces the CSV byte for byte.

Configuration precedence: built-in defaults < ``--config`` file < flags.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 failed checks
(``verify`` only).
"""
import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import asymptotics, bs_solver, fem_solver, geometry, model1d, sector
from .errors import (BranchNotBound, FactorizationFailure, GeometryError, MeshFailure,
                     NoConvergence, NoRoot)

THREADS_ENV = "DELTACORNERS_THREADS"
SOLVER_ERRORS = (NoRoot, NoConvergence, FactorizationFailure, MeshFailure, BranchNotBound)
EXPONENT_SLACK = 4.0 / 3.0 + 0.5
CROSS_TOL = 0.02

DEFAULTS = {
    "model1d": {"L": 1.0, "alpha": 0.0, "bc": "N", "beta": 0.0, "count": 5},
    "sector": {"theta": None, "tol": 1e-3, "backend": "bs", "h": None},
    "kite": {"theta": None, "R": None, "alpha": 1.0, "bc": "D", "count": 3, "h": None,
             "split": False},
    "nonres": {"theta": None, "R": [8.0, 16.0, 32.0], "h": None},
    "spectrum": {"curve": None, "alpha": None, "backend": "bs", "count": 8, "h": None,
                 "margin": None},
    "circle-oracle": {"radius": 1.0, "alpha": None, "mmax": 8},
    "verify": {"curve": None, "alphas": None, "backend": "bs", "max_index": 8},
}
COMMON = {"out": None, "json": None, "seed": None, "threads": None}


class ValidationError(ValueError):
    pass


def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def build_parser():
    p = argparse.ArgumentParser(prog="deltacorners", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config or sidecar file")
        sp.add_argument("--out", help="CSV output path (default: stdout)")
        sp.add_argument("--json", help="sidecar path (default: <out>.json)")
        sp.add_argument("--seed", type=int, help="accepted for compatibility; unused")
        sp.add_argument("--threads", type=int, help=f"worker count (env {THREADS_ENV})")
        return sp

    s = common(sub.add_parser("model1d", help="1D point-interaction spectra"))
    s.add_argument("--L", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--bc", choices=model1d.BCS)
    s.add_argument("--beta", type=float)
    s.add_argument("--count", type=int)

    s = common(sub.add_parser("sector", help="corner levels kappa(theta), E_n(theta)"))
    s.add_argument("--theta", type=_floats, help="comma-separated half-angles")
    s.add_argument("--tol", type=float)
    s.add_argument("--backend", choices=("bs", "kite"))
    s.add_argument("--h", type=float)

    s = common(sub.add_parser("kite", help="kite eigenvalues"))
    s.add_argument("--theta", type=float)
    s.add_argument("--R", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--bc", choices=("N", "D", "Robin"))
    s.add_argument("--count", type=int)
    s.add_argument("--h", type=float)
    s.add_argument("--split", action="store_true", default=None)

    s = common(sub.add_parser("nonres", help="Neumann-kite gap diagnostic"))
    s.add_argument("--theta", type=float)
    s.add_argument("--R", type=_floats)
    s.add_argument("--h", type=float)

    s = common(sub.add_parser("spectrum", help="bound states of a curve"))
    s.add_argument("--curve", help="curve JSON file or inline JSON")
    s.add_argument("--alpha", type=float)
    s.add_argument("--backend", choices=("bs", "fem"))
    s.add_argument("--count", type=int)
    s.add_argument("--h", type=float)
    s.add_argument("--margin", type=float)

    s = common(sub.add_parser("circle-oracle", help="exact circle bound states"))
    s.add_argument("--radius", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--mmax", type=int)

    s = common(sub.add_parser("verify", help="asymptotic predictions vs computed spectra"))
    s.add_argument("--curve")
    s.add_argument("--alphas", type=_floats)
    s.add_argument("--backend", choices=("bs", "fem", "both"))
    s.add_argument("--max-index", dest="max_index", type=int)
    return p


# ---------------------------------------------------------------------------
# configuration

def _load_json(text_or_path):
    if isinstance(text_or_path, dict):
        return text_or_path
    s = str(text_or_path).strip()
    if s.startswith("{"):
        return json.loads(s)
    with open(s) as f:
        return json.load(f)


def resolve_config(args):
    cmd = args.subcommand
    cfg = dict(DEFAULTS[cmd])
    cfg.update(COMMON)
    if args.config:
        try:
            filecfg = _load_json(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config: {exc}") from exc
        filecfg = filecfg.get("config", filecfg)
        if filecfg.get("subcommand", cmd) != cmd:
            raise ValidationError("config is for a different subcommand")
        unknown = set(filecfg) - set(cfg) - {"subcommand"}
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        cfg.update({k: v for k, v in filecfg.items() if k != "subcommand"})
    for k in cfg:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if cfg["threads"] is None and os.environ.get(THREADS_ENV):
        cfg["threads"] = int(os.environ[THREADS_ENV])
    cfg["subcommand"] = cmd
    if "curve" in cfg and cfg["curve"] is not None:
        try:
            cfg["curve"] = _load_json(cfg["curve"])
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read curve: {exc}") from exc
    validate(cfg)
    return cfg


def _require(cfg, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise ValidationError(f"missing required parameter {k!r}")


def _positive(cfg, *keys):
    for k in keys:
        v = cfg.get(k)
        if v is not None and not (isinstance(v, (int, float)) and v > 0):
            raise ValidationError(f"{k} must be positive")


def validate(cfg):
    cmd = cfg["subcommand"]
    _positive(cfg, "tol", "count", "h", "margin", "radius", "threads", "max_index")
    if cmd == "model1d":
        _positive(cfg, "L")
        if cfg["alpha"] < 0 or cfg["beta"] < 0:
            raise ValidationError("alpha and beta must be nonnegative")
        if cfg["bc"] not in model1d.BCS:
            raise ValidationError("bad bc")
    elif cmd == "sector":
        _require(cfg, "theta")
        if isinstance(cfg["theta"], (int, float)):
            cfg["theta"] = [float(cfg["theta"])]
        for t in cfg["theta"]:
            if not 0 < t < math.pi:
                raise ValidationError("theta must lie in (0, pi)")
    elif cmd == "kite":
        _require(cfg, "theta", "R")
        _positive(cfg, "R", "alpha")
        if not 0 < cfg["theta"] < math.pi / 2:
            raise ValidationError("kite theta must lie in (0, pi/2)")
    elif cmd == "nonres":
        _require(cfg, "theta")
        if len(cfg["R"]) < 3 or any(b <= a for a, b in zip(cfg["R"], cfg["R"][1:])):
            raise ValidationError("R list must be ascending with at least three entries")
    elif cmd == "spectrum":
        _require(cfg, "curve", "alpha")
        _positive(cfg, "alpha")
    elif cmd == "circle-oracle":
        _require(cfg, "alpha")
        _positive(cfg, "alpha")
        if cfg["mmax"] < 0:
            raise ValidationError("mmax must be nonnegative")
    elif cmd == "verify":
        _require(cfg, "curve", "alphas")
        a = cfg["alphas"]
        if len(a) < 3 or any(x <= 0 for x in a) or any(y <= x for x, y in zip(a, a[1:])):
            raise ValidationError("alphas must be positive, ascending, at least three")


def curve_from_json(doc):
    """Curve from ``{"kind": "polygon" | "arcs" | "circle", ...}``.

    * polygon: ``{"kind": "polygon", "vertices": [[x, y], ...]}``
    * arcs: ``{"kind": "arcs", "arcs": [arc, ...]}`` with each arc one of
      ``{"kind": "segment", "start", "end"}``,
      ``{"kind": "circular-arc", "start", "end", "center", "ccw"}``,
      ``{"kind": "circular-arc", "start", "tangent", "radius", "sweep"}``,
      ``{"kind": "cubic-parametric", "control": [4 points]}``
    * circle: ``{"kind": "circle", "radius", "center"}`` (no corners)
    """
    kind = doc.get("kind")
    if kind == "polygon":
        return geometry.build_polygon(doc["vertices"])
    if kind == "arcs":
        return geometry.build_curvilinear(doc["arcs"])
    if kind == "circle":
        return geometry.circle(doc.get("radius", 1.0), doc.get("center", (0.0, 0.0)))
    raise ValidationError(f"unknown curve kind {kind!r}")


# ---------------------------------------------------------------------------
# commands; each returns (header, rows, provenance, errors, ok)

def _cmd_model1d(cfg):
    spec = model1d.PointInteractionSpec(cfg["L"], cfg["alpha"], cfg["bc"], cfg["beta"])
    ev = model1d.secular_eigs(spec, cfg["count"])
    rows = [[i + 1, v] for i, v in enumerate(ev)]
    return ["index", "value"], rows, {"method": "secular"}, [0.0] * len(ev), True


def _pool(cfg):
    return ThreadPoolExecutor(max_workers=max(1, int(cfg["threads"] or 1)))


def _cmd_sector(cfg):
    kw = {"tol": cfg["tol"], "backend": cfg["backend"]}
    if cfg["h"] is not None:
        kw["h"] = cfg["h"]
    with _pool(cfg) as ex:
        data = list(ex.map(lambda t: sector.cached_sector_data(t, **kw), cfg["theta"]))
    rows = [d.as_row() for d in data]
    prov = [{"theta": d.theta, "theta_reduced": d.theta_reduced, "R_used": d.R_used,
             "h_used": d.h_used, "backend": d.backend, "tol_gap": d.cross_check["tol_gap"]}
            for d in data]
    errs = [d.errors.tolist() for d in data]
    return ["theta", "kappa", "e1", "e2", "e3", "e4", "R_used", "err_est"], rows, prov, errs, True


def _cmd_kite(cfg):
    res = fem_solver.kite_eigs(cfg["theta"], cfg["R"], cfg["alpha"], cfg["bc"], cfg["count"],
                               h=cfg["h"], split=bool(cfg["split"]))
    rows = [[i + 1, v] for i, v in enumerate(res.eigenvalues)]
    return ["index", "value"], rows, res.discretization, res.errors.tolist(), True


def _cmd_nonres(cfg):
    rep = sector.nonresonance_diagnostic(cfg["theta"], cfg["R"], h=cfg["h"])
    rows = [[cfg["theta"], R, g, rep.classification] for R, g in zip(rep.R, rep.gaps)]
    prov = {"kappa": rep.kappa, "eigenvalues": rep.eigenvalues}
    return ["theta", "R", "gap", "classification"], rows, prov, [0.0] * len(rows), True


def _cmd_spectrum(cfg):
    curve = curve_from_json(cfg["curve"])
    a = cfg["alpha"]
    if cfg["backend"] == "bs":
        h = cfg["h"] or 0.25 / a
        th = curve.half_angles
        thmin = float(np.min(np.minimum(th, np.pi - th))) if len(th) else None
        res = bs_solver.bound_states_with_error(geometry.sample(curve, h), a, cfg["count"],
                                                min_half_angle=thmin, strict=False)
    else:
        h = cfg["h"] or 0.125 / a
        margin = cfg["margin"] or 8.0 / a
        res = fem_solver.box_truncated_spectrum(curve, a, margin, h, cfg["count"])
    rows = [[i + 1, v, e] for i, (v, e) in enumerate(zip(res.eigenvalues, res.errors))]
    prov = {k: v for k, v in res.discretization.items() if k != "coarse_eigenvalues"}
    prov["backend"] = res.backend
    prov["complete"] = res.complete
    return ["index", "value", "err_est"], rows, prov, res.errors.tolist(), True


def _cmd_circle(cfg):
    ev = bs_solver.circle_oracle(cfg["radius"], cfg["alpha"], cfg["mmax"])
    rows = [[i + 1, v] for i, v in enumerate(ev)]
    return ["index", "value"], rows, {"method": "separation of variables"}, [0.0] * len(ev), True


def verify_checks(report, curve):
    """Residual-decay checks used by ``verify``; returns a list of (name, passed).

    With both backends the decay checks run on the boundary-element rows and
    the finite-element rows are checked as a cross-backend comparison: their
    discretization error at ``h ~ 1/alpha`` is a fixed fraction of ``alpha^2``
    and hides the corner residual at large coupling.
    """
    K = report.metadata["K"]
    backends = sorted({r["backend"] for r in report.rows})
    checks = []
    if len(backends) > 1:
        disc = [abs(r["discrepancy"]) / abs(r["computed"]) for r in report.rows
                if r["backend"] == "fem" and "discrepancy" in r]
        checks.append((f"fem vs bs: relative discrepancy <= {CROSS_TOL:g}",
                       bool(disc) and max(disc) <= CROSS_TOL))
        backends = ["bs"]
    for b in backends:
        for j in range(1, K + 1):
            checks.append((f"{b} corner {j}: relative residual decreasing",
                           report.decreasing(j, b, relative=True)))
            p = report.exponents.get((j, b), (np.inf, 0))[0]
            checks.append((f"{b} corner {j}: exponent <= 4/3 + 0.5", bool(p <= EXPONENT_SLACK)))
        checks.append((f"{b} edge {K + 1}: residual decreasing",
                       report.decreasing(K + 1, b, relative=False)))
    return checks


def _cmd_verify(cfg):
    curve = curve_from_json(cfg["curve"])
    agg = sector.corner_aggregate(curve) if curve.n_corners else sector.aggregate_from_levels([])
    rep = asymptotics.compare(curve, cfg["alphas"], cfg["backend"], cfg["max_index"], agg)
    if rep.metadata["failures"]:
        raise NoConvergence(f"solver failures: {rep.metadata['failures']}")
    checks = verify_checks(rep, curve)
    prov = {"K": rep.metadata["K"], "levels": rep.metadata["levels"],
            "exponents": {f"{j}:{b}": list(v) for (j, b), v in sorted(rep.exponents.items())},
            "checks": [[n, ok] for n, ok in checks]}
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}", file=sys.stderr)
    errs = [d.errors.tolist() for d in agg.corners if d is not None]
    return list(asymptotics.COLUMNS), rep.table(), prov, errs, all(ok for _, ok in checks)


COMMANDS = {"model1d": _cmd_model1d, "sector": _cmd_sector, "kite": _cmd_kite,
            "nonres": _cmd_nonres, "spectrum": _cmd_spectrum, "circle-oracle": _cmd_circle,
            "verify": _cmd_verify}


# ---------------------------------------------------------------------------
# output

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run(argv=None):
    """Parse ``argv``, execute, write outputs; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = resolve_config(args)
    except (ValidationError, GeometryError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        header, rows, prov, errs, ok = COMMANDS[cfg["subcommand"]](cfg)
    except (ValidationError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SOLVER_ERRORS as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    text = render_csv(header, rows)
    if cfg["out"]:
        with open(cfg["out"], "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    side = cfg["json"] or (cfg["out"] + ".json" if cfg["out"] else None)
    if side:
        doc = {"config": _jsonable(cfg), "version": __version__, "provenance": _jsonable(prov),
               "errors": _jsonable(errs), "columns": header}
        with open(side, "w") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
    if cfg["subcommand"] == "verify" and not ok:
        return 4
    return 0


def main(argv=None):
    return run(argv)
