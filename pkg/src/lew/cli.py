"""Command-line entry point: ``lew verify``, ``lew density`` and ``lew kernel``.

Every run writes one JSON report (stdout or ``--out``) carrying the schema
tag, the resolved configuration and the results; exit status is 0 when all
checks pass, 1 when a check fails and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import LewError, WrongGraphKind

SCHEMA = "lew/1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    command: str
    args: dict
    seed: int | None = None
    out: str | None = None
    csv: str | None = None
    tolerances: dict = field(default_factory=dict)


# -- parsing helpers --------------------------------------------------------------------


def _vertices(text: str) -> list:
    """``"3,0;0,0"`` -> ``[(3, 0), (0, 0)]``."""
    try:
        pts = [tuple(int(v) for v in part.split(",")) for part in text.split(";") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"bad vertex list {text!r}: {exc}") from None
    if not pts or any(len(p) != 2 for p in pts):
        raise UsageError(f"bad vertex list {text!r}; expected 'col,row;col,row'")
    return pts


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _params(text: str | None) -> dict:
    out = {}
    if not text:
        return out
    for part in text.split(","):
        if "=" not in part:
            raise UsageError(f"bad parameter {part!r}; expected key=value")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise UsageError(f"parameter {k!r} needs a number, got {v!r}") from None
    return out


def _threads(value):
    if value is not None:
        return value
    env = os.environ.get("LEW_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"LEW_THREADS must be an integer, got {env!r}") from None
    return None


def _clean(obj):
    """Make report content JSON-safe (numpy scalars, tuples, non-finite floats)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _write_csv(path: str, header: list, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([("%.17g" % v) if isinstance(v, (float, np.floating)) else v for v in row])
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


# -- graph selection --------------------------------------------------------------------


def _graph(args):
    from .lattice import graph_from_spec, preset
    if args.graph:
        return graph_from_spec(args.graph)
    return preset(args.preset, args.M, args.N)


def _default_endpoints(g, n: int):
    width = g.M if g.M else max(v.col for v in g.base.vertices) + 1
    step = max(width // n, 1)
    a = [((n - 1 - i) * step, 0) for i in range(n)]
    b = [((n - 1 - i) * step, g.N) for i in range(n)]
    return a, b


def _endpoints(args, g):
    if (args.sources is None) != (args.targets is None):
        raise UsageError("give both --sources and --targets, or neither")
    if args.sources is None:
        return _default_endpoints(g, args.n)
    a, b = _vertices(args.sources), _vertices(args.targets)
    if len(a) != len(b):
        raise UsageError("--sources and --targets need the same length")
    return a, b


# -- commands ---------------------------------------------------------------------------


def _cmd_verify_lattice(args, cfg: RunConfig):
    from .hitting import affine_determinant, cyclic_route_sum, fomin_determinant
    from .montecarlo import McConfig, estimate_affine_and_cylinder, estimate_fomin_lhs, z_report

    g = _graph(args)
    a, b = _endpoints(args, g)
    mc = McConfig(samples=args.samples, seed=args.seed, max_steps=args.max_steps,
                  stream_count=args.stream_count, threads=_threads(args.threads))
    cfg.args.update({"sources": a, "targets": b, "mc": mc.to_json(g), "graph": g.describe()})
    cfg.tolerances = {"z_threshold": args.threshold}
    if args.check == "fomin":
        det = fomin_determinant(g, a, b)
        est = estimate_fomin_lhs(g, a, b, mc)
        zr = z_report(est, det.value, args.threshold)
        result = {"determinant": det.to_json(), "estimate": asdict(est), "z_report": zr.to_json()}
        return result, zr.passed
    det = affine_determinant(g, a, b)
    both = estimate_affine_and_cylinder(g, a, b, mc)
    zr = z_report(both.affine, det.value, args.threshold)
    result = {"determinant": det.to_json(), "estimate": asdict(both.affine),
              "z_report": zr.to_json(),
              "cylinder_estimate": asdict(both.cylinder),
              "noncyclic_counts": {"positive": both.noncyclic_pos, "negative": both.noncyclic_neg}}
    passed = zr.passed
    route = cyclic_route_sum(g, a, b)
    diff = abs(route - det.value)
    cfg.tolerances["route_abs"] = 1e-10
    result["cyclic_route"] = {"value": route, "abs_diff": diff, "passed": diff <= 1e-10}
    passed = passed and diff <= 1e-10
    return result, passed


def _cmd_verify_identities(args, cfg: RunConfig):
    from .identities import run_suite
    try:
        cases = run_suite(args.suite, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return {"cases": [c.to_dict() for c in cases]}, all(c.passed for c in cases)


DENSITIES = ("goe", "quadrant", "strip", "halfdisk", "excursion", "coe-circle", "coe-annulus")


def _cmd_density(args, cfg: RunConfig):
    from . import rmt
    p = _params(args.params)
    name = args.name
    if name in ("coe-circle", "coe-annulus"):
        mode, key, default, tol = (("circle_t_to_infty", "t", 30.0, 1e-6) if name == "coe-circle"
                                   else ("annulus_r_to_0", "r", 1e-3, 1e-3))
        val = p.get(key, default)
        tol = p.get("tol", tol)
        cfg.args.update({key: val})
        cfg.tolerances = {"sup_rel_error": tol}
        rep = rmt.coe_limit_check(mode, args.n, val, grid_size=args.grid_size, seed=args.seed)
        if args.csv:
            _write_csv(args.csv, ["param"] + [f"nu{i + 1}" for i in range(args.n)]
                       + ["raw", "normalized", "target"],
                       [[val, *g, r, nv, tv] for g, r, nv, tv in
                        zip(rep.grid, rep.raw, rep.normalized, rep.target)])
        return rep.to_dict(), rep.sup_rel_error < tol
    t = p.get("t", 1.0)
    spreads = tuple(_floats(args.spreads)) if args.spreads else rmt.SPREADS
    tol = p.get("tol", 5e-2)
    cfg.args.update({"t": t, "spreads": list(spreads)})
    cfg.tolerances = {"final_sup_rel_error": tol, "monotone": True}
    rep = rmt.limit_convergence(name, args.n, spreads, args.grid_size, args.seed, t)
    if args.csv:
        rows = []
        for r, eps in zip(rep.reports, spreads):
            for g, raw, nv, tv in zip(r.grid, r.raw, r.normalized, r.target):
                rows.append([eps, *g, raw, nv, tv])
        _write_csv(args.csv, ["spread"] + [f"y{i + 1}" for i in range(args.n)]
                   + ["raw", "normalized", "target"], rows)
    return rep.to_dict(), rep.monotone and rep.errors[-1] < tol


KERNELS = ("quadrant", "strip", "halfdisk", "excursion", "circle", "annulus")


def _kernel_fn(name: str, p: dict):
    from . import kernels as K
    if name == "quadrant":
        return lambda x, y: (float(K.quadrant_kernel(x, y)), None)
    if name == "strip":
        return lambda x, y: (float(K.strip_kernel(p.get("t", 1.0), x, y)), None)
    if name == "halfdisk":
        return lambda x, y: (float(K.halfdisk_kernel(x, y)), None)
    if name == "excursion":
        return lambda x, y: (float(K.excursion_kernel_halfdisk(x, y)), None)
    if name == "circle":
        def f(x, y):
            r = K.circle_heat_sum(p.get("t", 1.0), p.get("x", 0.0), x, y)
            return r.value, r.terms
        return f
    if name == "annulus":
        def g(x, y):
            r = K.annulus_kernel_sum(p.get("r", 0.5), p.get("x", 0.0), x, y)
            return r.value, r.terms
        return g
    raise UsageError(f"unknown kernel {name!r}; choose from {KERNELS}")


def _grid_axis(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"bad grid axis {text!r}; expected lo:hi:count")
    lo, hi, cnt = float(parts[0]), float(parts[1]), int(parts[2])
    if cnt < 1:
        raise UsageError("grid counts must be positive")
    return np.linspace(lo, hi, cnt)


def _cmd_kernel(args, cfg: RunConfig):
    p = _params(args.params)
    cfg.args["params"] = p
    f = _kernel_fn(args.name, p)
    if args.at:
        xy = _floats(args.at)
        if len(xy) != 2:
            raise UsageError("--at needs two numbers 'x,y'")
        val, terms = f(*xy)
        return {"at": xy, "value": val, "terms": terms}, True
    if not args.grid:
        raise UsageError("give --at x,y or --grid lo:hi:n,lo:hi:n")
    ax = args.grid.split(",")
    if len(ax) != 2:
        raise UsageError("--grid needs two axes")
    xs, ys = _grid_axis(ax[0]), _grid_axis(ax[1])
    rows = [[float(x), float(y), f(float(x), float(y))[0]] for x in xs for y in ys]
    if args.csv:
        _write_csv(args.csv, ["x", "y", "value"], rows)
    return {"grid": {"x": xs.tolist(), "y": ys.tolist()}, "points": len(rows),
            "values": [r[2] for r in rows]}, True


# -- parser -----------------------------------------------------------------------------------


def _common(p):
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--no-timestamp", action="store_true", help="omit the run timestamp")


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="lew", description="Loop-erased walk determinant identities and limits.")
    sub = root.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    verify = sub.add_parser("verify", help="run a verification")
    vsub = verify.add_subparsers(dest="check", required=True, parser_class=_Parser)
    for check in ("fomin", "affine"):
        v = vsub.add_parser(check)
        src = v.add_mutually_exclusive_group()
        src.add_argument("--graph", help="graph spec: JSON text or path")
        src.add_argument("--preset", default="uniform-grid" if check == "fomin" else "uniform-strip")
        v.add_argument("--M", type=int, default=6, help="period (strip/cylinder) or width (grid)")
        v.add_argument("--N", type=int, default=3 if check == "affine" else 4)
        v.add_argument("--n", type=int, default=2, help="walkers, when endpoints are not given")
        v.add_argument("--sources", help="'col,row;col,row;...'")
        v.add_argument("--targets", help="'col,row;col,row;...'")
        v.add_argument("--samples", type=int, default=1_000_000)
        v.add_argument("--seed", type=int, default=0)
        v.add_argument("--threads", type=int, default=None)
        v.add_argument("--stream-count", type=int, default=1)
        v.add_argument("--max-steps", type=int, default=None)
        v.add_argument("--threshold", type=float, default=4.0, help="|z| bound")
        _common(v)
    ident = vsub.add_parser("identities")
    ident.add_argument("--suite", default="all")
    ident.add_argument("--seed", type=int, default=0)
    _common(ident)

    dens = sub.add_parser("density", help="normalised determinant vs limit density")
    dens.add_argument("name", choices=DENSITIES)
    dens.add_argument("--n", type=int, default=2)
    dens.add_argument("--params", help="key=value list, e.g. t=1 or r=1e-3")
    dens.add_argument("--spreads", help="comma-separated spreads, default 0.2,0.1,0.05")
    dens.add_argument("--grid-size", type=int, default=20)
    dens.add_argument("--seed", type=int, default=0)
    dens.add_argument("--csv")
    _common(dens)

    kern = sub.add_parser("kernel", help="evaluate a boundary kernel")
    kern.add_argument("name", choices=KERNELS)
    kern.add_argument("--params", help="key=value list, e.g. t=1,x=0.5")
    kern.add_argument("--at", help="'x,y'")
    kern.add_argument("--grid", help="'lo:hi:n,lo:hi:n' (use --grid=... when lo is negative)")
    kern.add_argument("--csv")
    _common(kern)
    return root


def _dispatch(args, cfg):
    if args.cmd == "verify":
        if args.check == "identities":
            return _cmd_verify_identities(args, cfg)
        return _cmd_verify_lattice(args, cfg)
    if args.cmd == "density":
        return _cmd_density(args, cfg)
    return _cmd_kernel(args, cfg)


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=stderr)
        return EXIT_USAGE
    except SystemExit as exc:        # --help
        return int(exc.code or 0)
    command = " ".join(x for x in (args.cmd, getattr(args, "check", None), getattr(args, "name", None)) if x)
    raw = {k: v for k, v in vars(args).items() if k not in ("out", "csv", "no_timestamp", "threads")}
    cfg = RunConfig(command, raw, getattr(args, "seed", None), args.out, getattr(args, "csv", None))
    try:
        result, passed = _dispatch(args, cfg)
    except UsageError as exc:
        print(f"lew: {exc}", file=stderr)
        return EXIT_USAGE
    except (ValueError, WrongGraphKind) as exc:   # bad input, including DomainError
        print(f"lew: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_USAGE
    except LewError as exc:
        print(f"lew: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_FAIL
    report = {"schema": SCHEMA, "command": command, "config": asdict(cfg), "passed": bool(passed),
              "result": result}
    if not args.no_timestamp:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    text = json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if not passed:
        print(f"lew: {command}: check failed", file=stderr)
    return EXIT_OK if passed else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
