"""Command-line front end.

Subcommands: ``tensors`` (pointwise tensor dump), ``balanced``, ``classify``
(field residuals), ``verify`` (identity suite) and ``scan`` (definiteness).
Exit status: 2 for configuration errors, 1 when any case record is FAIL,
0 otherwise. Theorem consistency is reported in the output but does not
change the exit status.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Sequence

import numpy as np

from .expr import ExprDomainError, ExprSyntaxError, UnboundParameterError
from .fields import field_from_config
from .geometry import Geometry
from .identities import (CASES, FAIL, TENSORS, Tolerances, Verifier, active_dims,
                         definiteness_scan, theorem_report)
from .manifold import (BUILTINS, ManifoldConfigError, MetricError, build_manifold,
                       complex_to_real, quadrature_grid, random_points, real_to_complex)
from .report import Report, emit_report, now_iso

DEFAULT_RESOLUTION = 12
DEFAULT_SEED = 0
SUMMARY_TENSORS = ("k", "kstar", "s", "t", "H")
SCAN_TENSORS = ("H", "k", "kstar", "k_minus_half_t", "kappa")


class ConfigError(ValueError):
    """Invalid run configuration."""


# ---------------------------------------------------------------------------
# configuration


def _parse_assignments(items, what) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"{what} must look like name=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"{what} {k!r} needs a number, got {v!r}") from None
    return out


def _parse_points(text: str, n: int, seed: int):
    """``"x1,y1,...;x1,y1,..."`` real coordinates, or a count of seeded random points."""
    text = text.strip()
    if text.isdigit():
        return {"random": int(text), "seed": seed}
    pts = []
    for chunk in text.split(";"):
        vals = [float(v) for v in chunk.replace(" ", "").split(",") if v]
        if len(vals) != 2 * n:
            raise ConfigError(f"a point needs {2 * n} real coordinates, got {len(vals)}")
        pts.append(vals)
    return pts


def _field_descriptor(text: str, seed: int) -> dict:
    """``kind:name`` with name a built-in such as ``phi3``/``E3`` or ``random[:degree]``."""
    kind, _, name = text.partition(":")
    if kind not in ("form", "vector") or not name:
        raise ConfigError(f"field must look like form:NAME or vector:NAME, got {text!r}")
    if name.startswith("random"):
        parts = name.split(":")
        degree = int(parts[1]) if len(parts) > 1 else 1
        return {kind: {"builtin": {"random_trig": {"degree": degree, "seed": seed}}}}
    return {kind: {"builtin": name}}


def default_field_descriptors(n: int, seed: int) -> list:
    out = [{"vector": {"builtin": {"random_trig": {"degree": 1, "seed": seed}}}},
           {"form": {"builtin": {"random_trig": {"degree": 1, "seed": seed + 1}}}}]
    out += [{"form": {"builtin": f"phi{i + 1}"}} for i in range(n)]
    out += [{"vector": {"builtin": f"E{i + 1}"}} for i in range(n)]
    return out


def resolve_config(args) -> dict:
    """Merge a JSON config file with command-line flags into a run config."""
    cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config: {err}") from None
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    if args.manifold:
        params = _parse_assignments(args.param, "parameter")
        if args.manifold not in BUILTINS:
            raise ConfigError(f"unknown built-in manifold {args.manifold!r}; "
                              f"choose from {sorted(BUILTINS)}")
        if args.manifold == "flat_torus" and "n" in params:
            params["n"] = int(params["n"])
        cfg["manifold"] = {"builtin": args.manifold, "params": params}
    if "manifold" not in cfg:
        raise ConfigError("no manifold given (use --manifold or a config with 'manifold')")
    if isinstance(cfg["manifold"], str):
        cfg["manifold"] = {"builtin": cfg["manifold"], "params": {}}
    seed = args.seed if args.seed is not None else int(cfg.get("seed", DEFAULT_SEED))
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    out = {
        "manifold": cfg["manifold"],
        "derivative_mode": args.mode or cfg.get("derivative_mode", "symbolic"),
        "resolution": int(args.resolution or cfg.get("resolution", DEFAULT_RESOLUTION)),
        "seed": seed,
    }
    if out["derivative_mode"] not in ("symbolic", "fd"):
        raise ConfigError(f"derivative mode must be 'symbolic' or 'fd', not {out['derivative_mode']!r}")
    if out["resolution"] < 2:
        raise ConfigError("resolution must be at least 2")
    tol = dict(cfg.get("tolerances", {}))
    tol.update(_parse_assignments(args.tol, "tolerance"))
    try:
        out["tolerances"] = Tolerances().override(**tol).__dict__
    except KeyError as err:
        raise ConfigError(str(err.args[0])) from None
    if getattr(args, "field", None):
        out["fields"] = [_field_descriptor(f, seed) for f in args.field]
    elif "fields" in cfg:
        out["fields"] = list(cfg["fields"])
    cases = list(cfg.get("cases", ["all"]))
    if getattr(args, "case", None):
        cases = [c for item in args.case for c in item.split(",")]
    if getattr(args, "all", False):
        cases = ["all"]
    if cases != ["all"]:
        unknown = [c for c in cases if c not in CASES and c != "all"]
        if unknown:
            raise ConfigError(f"unknown case(s) {unknown}; known: {sorted(CASES)}")
        if "all" in cases:
            cases = ["all"]
    out["cases"] = cases
    if getattr(args, "tensor", None):
        bad = [t for t in args.tensor if t not in TENSORS]
        if bad:
            raise ConfigError(f"unknown tensor(s) {bad}; known: {list(TENSORS)}")
        out["tensors"] = list(args.tensor)
    points = getattr(args, "points", None) or cfg.get("points")
    if points is not None:
        out["points"] = points
    return out


def build_run(cfg: dict):
    """Model, tolerances and fields for a resolved config."""
    M = build_manifold({"manifold": cfg["manifold"], "derivative_mode": cfg["derivative_mode"]})
    tol = Tolerances(**cfg["tolerances"])
    descs = cfg.get("fields")
    if descs is None:
        descs = default_field_descriptors(M.n, cfg["seed"])
        cfg["fields"] = descs
    fields = []
    for d in descs:
        try:
            fields.append(field_from_config(M, d))
        except (ValueError, TypeError, KeyError) as err:
            raise ConfigError(f"bad field {d!r}: {err}") from None
    return M, tol, fields


def resolve_points(cfg, M):
    pts = cfg.get("points", "4")
    if isinstance(pts, str):
        pts = _parse_points(pts, M.n, cfg["seed"])
        cfg["points"] = pts
    if isinstance(pts, dict):
        return random_points(M, int(pts["random"]), seed=int(pts.get("seed", cfg["seed"])))
    arr = np.asarray(pts, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 * M.n:
        raise ConfigError(f"points must be a list of {2 * M.n}-vectors")
    return real_to_complex(arr)


# ---------------------------------------------------------------------------
# commands


def _envelopes(M, pts, chunk=2048) -> dict:
    lo = {k: np.inf for k in SUMMARY_TENSORS}
    hi = {k: -np.inf for k in SUMMARY_TENSORS}
    theta = 0.0
    for s in range(0, len(pts), chunk):
        g = Geometry(M, pts[s:s + chunk], order=2)
        for k in SUMMARY_TENSORS:
            ev = g.eigen(getattr(g, k))
            lo[k] = min(lo[k], float(ev.min()))
            hi[k] = max(hi[k], float(ev.max()))
        theta = max(theta, float(np.max(np.abs(g.theta))))
    out = {k: {"min": lo[k], "max": hi[k]} for k in SUMMARY_TENSORS}
    out["theta_abs_max"] = theta
    return out


def _metric_grid(M, cfg):
    return quadrature_grid(M, cfg["resolution"], active=active_dims(M))


def cmd_tensors(cfg, out):
    M, _, _ = build_run(cfg)
    cfg.pop("fields", None)
    pts = resolve_points(cfg, M)
    g = Geometry(M, pts, order=2)
    rows, recs = [], []
    names = SUMMARY_TENSORS
    eig = {k: g.eigen(getattr(g, k)) for k in names}
    for i, p in enumerate(pts):
        rec = {"coords": complex_to_real(p).tolist(),
               "tensors": {k: getattr(g, k)[i] for k in names},
               "eigenvalues": {k: eig[k][i] for k in names},
               "theta": g.theta[i],
               "torsion_norm2": float(np.sum(np.abs(g.T_low[i]) ** 2)),
               "dOmega_abs_max": float(np.max(np.abs(g.dOmega[i])))}
        recs.append(rec)
        rows.append([i] + rec["coords"] + [v for k in names for v in eig[k][i]])
    header = (["point"] + [f"x{j}" for j in range(2 * M.n)]
              + [f"{k}_{j + 1}" for k in names for j in range(M.n)])
    lines = [f"{'point':>5} " + " ".join(f"{k + ' eig':>22}" for k in names)]
    for i in range(len(pts)):
        lines.append(f"{i:>5} " + " ".join(
            f"[{eig[k][i].min():+.3e},{eig[k][i].max():+.3e}]" for k in names))
    return {"points": recs}, [], {"tensors": (header, rows)}, lines


def cmd_balanced(cfg, out):
    M, tol, _ = build_run(cfg)
    cfg.pop("fields", None)
    grid = _metric_grid(M, cfg)
    from .geometry import is_balanced

    rep = is_balanced(M, grid, tol.balanced)
    verdict = "PASS" if rep.balanced else "FAIL"
    lines = [f"balanced: {'yes' if rep.balanced else 'no'} ({verdict})",
             f"  max|theta|          {rep.theta_max:.3e}",
             f"  max|Lambda dOmega|  {rep.dOmega_trace_max:.3e}",
             f"  max|delta Omega|    {rep.delta_Omega_max:.3e}",
             f"  Laplacian deviation {rep.laplacian_max:.3e}"]
    return {"balanced": dict(rep.as_dict(), verdict=verdict), "grid_points": len(grid)}, [], {}, lines


def cmd_classify(cfg, out):
    M, tol, fields = build_run(cfg)
    from .identities import FieldEvaluation

    grid = quadrature_grid(M, cfg["resolution"], active=active_dims(M, fields))
    keys = ("res_analytic_vector", "res_analytic_form", "res_d11", "res_d20", "delta", "deltaJ",
            "res_killing", "res_13", "res_lie_mixed", "res_lie_pure")
    recs, lines = [], []
    for f in fields:
        ev = FieldEvaluation(M, f, grid, keys)
        r = {k: ev.residual(k) for k in ("res_d11", "res_d20", "res_killing", "res_13",
                                         "res_lie_mixed", "res_lie_pure")}
        r["delta"] = {"sup": ev.sup("delta")}
        r["deltaJ"] = {"sup": ev.sup("deltaJ")}
        r["analytic"] = {"sup": ev.analytic_sup}
        flags = {"analytic": ev.analytic_sup <= tol.analytic,
                 "harmonic": ev.harmonic_sup() <= tol.harmonic,
                 "killing": ev.sup("res_killing") <= tol.killing,
                 "killing_holomorphic_block": ev.sup("res_13") <= tol.killing,
                 "complex_hermitian": max(ev.sup("res_lie_mixed"), ev.sup("res_lie_pure")) <= tol.lie}
        recs.append({"field": f.label, "kind": f.kind, "residuals": r, "declared": flags})
        lines.append(f"{f.label:32s} {f.kind:6s} " + " ".join(
            f"{k}={'yes' if v else 'no'}" for k, v in flags.items()))
    return {"grid_points": len(grid), "fields": recs}, [], {}, lines


def cmd_verify(cfg, out):
    M, tol, fields = build_run(cfg)
    grid = quadrature_grid(M, cfg["resolution"], active=active_dims(M, fields))
    mgrid = _metric_grid(M, cfg)
    v = Verifier(M, grid, fields, tol, balanced_grid=mgrid)
    ids = None if cfg["cases"] == ["all"] else cfg["cases"]
    results = v.run(ids)
    bal = v.balanced
    cases = [r.as_dict() for r in results]
    timings = {f"{r.case}/{r.field}": r.runtime for r in results}
    theorems = []
    if ids is None:
        theorems = [t.as_dict() for t in theorem_report(M, grid, fields, tol, verifier=v)]
    env = _envelopes(M, mgrid.points)
    lines = [f"manifold: {M.name}   balanced: {'yes' if bal.balanced else 'no'} "
             f"(max|theta| = {bal.theta_max:.3e})"]
    for r in results:
        res = "-" if r.residual is None else f"{r.residual:.3e}"
        lines.append(f"  {r.case:11s} {str(r.field or ''):32s} {r.verdict:18s} {res}")
    for t in theorems:
        tag = "consistent" if t["consistent"] else "INCONSISTENT"
        app = "applicable" if t["applicable"] else "not applicable"
        name = f"Th {t['theorem']} {t['part']}".strip()
        lines.append(f"  {name:11s} {app:15s} {tag}")
    body = {"balanced": bal.as_dict(), "tensors": env, "grid_points": len(grid),
            "theorems": theorems}
    return body, cases, {}, lines, timings


def cmd_scan(cfg, out):
    M, tol, _ = build_run(cfg)
    cfg.pop("fields", None)
    names = cfg.get("tensors", list(SCAN_TENSORS))
    grid = _metric_grid(M, cfg)
    from .identities import tensor_eigenvalues

    verdicts, lines, cols = {}, [], {}
    for name in names:
        d = definiteness_scan(M, name, grid, tol.zero)
        verdicts[name] = d.as_dict()
        cols[name] = tensor_eigenvalues(M, name, grid.points)
        lines.append(f"  {name:16s} {d.classification:10s} [{d.min_eig:+.3e}, {d.max_eig:+.3e}]"
                     f"  ({d.note}, {d.points} points)")
    header = (["point"] + [f"x{j}" for j in range(2 * M.n)]
              + [f"{k}_{j + 1}" for k in names for j in range(M.n)])
    coords = complex_to_real(grid.points)
    rows = [[i] + coords[i].tolist() + [v for k in names for v in cols[k][i]]
            for i in range(len(grid))]
    return {"scan": verdicts, "grid_points": len(grid)}, [], {"eigenvalues": (header, rows)}, lines


COMMANDS = {"tensors": cmd_tensors, "balanced": cmd_balanced, "classify": cmd_classify,
            "verify": cmd_verify, "scan": cmd_scan}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chernkit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--manifold", choices=sorted(BUILTINS))
        s.add_argument("--param", action="append", metavar="NAME=VALUE",
                       help="built-in parameter, e.g. n=3 or amplitude=0.1")
        s.add_argument("--config", help="JSON run configuration")
        s.add_argument("--resolution", type=int, help="grid points per active real direction")
        s.add_argument("--mode", choices=("symbolic", "fd"))
        s.add_argument("--tol", action="append", metavar="NAME=VALUE")
        s.add_argument("--out", help="directory for report.json and CSV tables")
        s.add_argument("--seed", type=int)
        s.add_argument("--points", "--point", dest="points",
                       help="'x1,y1,...;...' real coordinates or a count of random points")
        s.add_argument("--field", action="append", metavar="KIND:NAME",
                       help="form:phi3, vector:E3, form:random[:degree] ...")
        if name == "verify":
            s.add_argument("--case", action="append", help="case id(s) or 'all'")
            s.add_argument("--all", action="store_true", help="run every case")
        if name == "scan":
            s.add_argument("--tensor", action="append", help=f"one of {', '.join(TENSORS)}")
    return p


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = resolve_config(args)
        out = COMMANDS[args.command](cfg, args.out)
    except (ConfigError, ManifoldConfigError, MetricError, ExprSyntaxError, ExprDomainError,
            UnboundParameterError) as err:
        print(f"chernkit: configuration error: {err}", file=stderr)
        return 2
    body, cases, tables, lines = out[:4]
    timings = out[4] if len(out) > 4 else {}
    code = 1 if any(c["verdict"] == FAIL for c in cases) else 0
    timings["total"] = time.perf_counter() - t0
    report = Report(args.command, cfg, body, cases, code, timings, now_iso())
    for line in lines:
        print(line, file=stdout)
    if args.out:
        try:
            for p in emit_report(report, args.out, tables):
                print(f"wrote {p}", file=stdout)
        except OSError as err:
            print(f"chernkit: cannot write report: {err}", file=stderr)
            return 2
    return code


def main() -> None:  # pragma: no cover - console entry point
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
