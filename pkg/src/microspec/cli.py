"""Command-line entry point.

``microspec hypo|strength|wf|weights`` runs one analysis, writes a JSON
report (schema ``v1``) to stdout or ``--out`` and optional CSV curves to
``--csv-dir``.

Exit codes: 0 success, 1 a requested check failed, 2 validation error,
3 numerically inconclusive verdict, 4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import MagnitudeOverflowError, MicrospecError, ParseError
from .hypo import (
    INCONCLUSIVE,
    SamplingPlan,
    analyze,
    compare_strength,
    constant_strength_check,
    equal_strength_invariants,
    estimate_d,
)
from .spectral import GridField, GridSpec
from .symbols import parse_symbol, variable_fixture
from .wavefront import (
    PrescribedSet,
    WindowGrid,
    construct_prescribed,
    crosscheck_field,
    estimate_wavefront,
    roundtrip_check,
)
from .weights import check_strong_weight, check_weight_axioms, parse_weight, young_conjugate

SCHEMA = "v1"
EXIT_OK, EXIT_FAILED, EXIT_VALIDATION, EXIT_INCONCLUSIVE, EXIT_RESOURCE = 0, 1, 2, 3, 4
FIXTURES = ("gaussian", "heaviside")


class ResourceCapError(MicrospecError):
    """A run would exceed a configured size limit."""


@dataclass
class RunConfig:
    """Everything needed to re-run a command; echoed into every report."""

    command: str
    symbols: list = field(default_factory=list)
    weight: str | None = None
    grid: dict | None = None
    plan: dict = field(default_factory=dict)
    mode: str = "roumieu"
    seed: int | None = None
    options: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def validate(self):
        """Parse every textual input once so errors surface before any work."""
        for s in self.symbols:
            parse_symbol(s)
        if self.weight is not None:
            parse_weight(self.weight)
        if self.mode not in ("beurling", "roumieu"):
            raise ParseError(f"mode must be beurling or roumieu, got {self.mode!r}", self.mode, 1, 1)
        if self.grid is not None:
            n = int(self.grid["n"])
            if n < 8:
                raise ParseError("grid size must be at least 8", str(n), 1, 1)
            if int(self.grid["n"]) ** 2 > int(self.options.get("max_points", 2**22)):
                raise ResourceCapError(f"grid {n}x{n} exceeds --max-points")
        return self

    def to_dict(self):
        return asdict(self)


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def make_report(cfg, result, elapsed=None, stable=False):
    rep = {
        "schema": SCHEMA,
        "command": cfg.command,
        "config": cfg.to_dict(),
        "result": result,
        "versions": {"microspec": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
    }
    if not stable:
        rep["timing"] = {"elapsed_s": elapsed, "finished_unix": time.time()}
    return _clean(rep)


def _plan(args, n):
    kw = {}
    for key in ("r_min", "r_max", "n_radii", "n_random"):
        v = getattr(args, key, None)
        if v is not None:
            kw[key] = v
    return SamplingPlan.default(n, seed=args.seed, **kw), kw


def _write_csv(cfg, name, text):
    d = cfg.outputs.get("csv_dir")
    if not d:
        return None
    path = Path(d) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_hypo(cfg, args):
    P = parse_symbol(cfg.symbols[0])
    w = parse_weight(cfg.weight) if cfg.weight else None
    plan, _ = _plan(args, P.n)
    rep = analyze(P, w, plan, tol=args.tol, snap=args.snap)
    out = rep.to_dict(curves=False)
    out["roumieu_hypoelliptic"] = rep.roumieu.verdict if rep.roumieu else None
    out["beurling_hypoelliptic"] = rep.beurling.verdict if rep.beurling else None
    files = {}
    for key in ("check", "beurling", "roumieu"):
        rc = getattr(rep, key)
        if rc is not None:
            files[key] = _write_csv(cfg, f"hypo_{key}.csv", rc.to_csv())
    out["csv"] = files
    verdicts = [rep.hypoelliptic] + [rc.verdict for rc in (rep.beurling, rep.roumieu) if rc is not None]
    code = EXIT_INCONCLUSIVE if INCONCLUSIVE in verdicts else EXIT_OK
    return out, code


def cmd_strength(cfg, args):
    if args.variable:
        Q = variable_fixture(args.variable)
        pts = []
        for p in args.at.split(";"):
            if not p.strip():
                continue
            x = [float(v) for v in p.replace(",", " ").split()]
            # a single coordinate moves along the first axis
            pts.append(x + [0.0] * (Q.n - 1) if len(x) == 1 else x)
        plan, _ = _plan(args, Q.n)
        rep = constant_strength_check(Q, pts, plan, tol=args.tol)
        return {"variable": args.variable, "samples": pts, **rep.to_dict()}, EXIT_OK
    P, Q = parse_symbol(cfg.symbols[0]), parse_symbol(cfg.symbols[1])
    plan, _ = _plan(args, P.n)
    v = compare_strength(P, Q, plan, tol=args.tol)
    out = {"relation": v.relation, "verdict": v.to_dict()}
    if args.invariants:
        ws = [parse_weight(cfg.weight)] if cfg.weight else []
        inv = equal_strength_invariants(P, Q, plan, ws, tol=args.tol)
        out["invariants"] = inv.to_dict()
        if not inv.all_pass:
            return out, EXIT_FAILED
    return out, EXIT_OK


def _field(cfg, args, P, w):
    n = int(cfg.grid["n"])
    lo, hi = cfg.grid["lo"], cfg.grid["hi"]
    g = GridSpec.box([lo, lo], [hi, hi], (n, n))
    x = g.mesh()
    src = cfg.options["source"]
    info = {}
    if src == "gaussian":
        vals = np.exp(-np.sum(x**2, axis=-1) / (2 * args.width**2))
        return GridField(vals, g), None, info
    if src == "heaviside":
        vals = (x[..., 0] >= args.interface).astype(float)
        info["interface"] = args.interface
        return GridField(vals, g), None, info
    if src.startswith("prescribed:"):
        S = PrescribedSet.parse(Path(src.split(":", 1)[1]).read_text())
        d = round(estimate_d(P).value, 2)
        u, ci = construct_prescribed(S, d, P.degree, w, cfg.mode, args.K, g, return_info=True)
        info = {"set": S.to_text(), "d": d, "m": P.degree, "construction": asdict(ci)}
        return u, S, info
    if src.startswith("field:"):
        u = GridField.load(src.split(":", 1)[1])
        if u.n != 2:
            raise ParseError("wf expects a 2-D field", src, 1, 1)
        return u, None, info
    raise ParseError(f"unknown fixture {src!r}", src, 1, 1)


def cmd_wf(cfg, args):
    P = parse_symbol(cfg.symbols[0])
    w = parse_weight(cfg.weight)
    u, S, info = _field(cfg, args, P, w)
    if args.roundtrip and S is None:
        raise ParseError("--roundtrip needs a prescribed set", cfg.options["source"], 1, 1)
    wg = WindowGrid.regular(u.grid, per_axis=args.windows)
    est = estimate_wavefront(u, P, w, mode=cfg.mode, windows=wg)
    out = {
        "field": info,
        "counts": est.counts(),
        "singular_cells": [list(c) for c in est.singular_cells()],
        "estimate": est.to_dict(curves=False),
        "csv": {
            "cells": _write_csv(cfg, "wf_cells.csv", est.table_csv()),
            "curves": _write_csv(cfg, "wf_curves.csv", est.curves_csv()),
        },
    }
    code = EXIT_OK
    if args.crosscheck:
        cc = crosscheck_field(u, P, w, cfg.mode, windows=wg)
        out["crosscheck"] = {k: v for k, v in cc.to_dict().items() if k != "cells"}
        if cc.disagreements:
            code = EXIT_FAILED
    if args.roundtrip:
        rt = roundtrip_check(S, est)
        out["roundtrip"] = rt.to_dict()
        if not rt.passed:
            code = EXIT_FAILED
    return out, code


def cmd_weights(cfg, args):
    w = parse_weight(cfg.weight)
    out = {"weight": w.to_dict()}
    code = EXIT_OK
    if args.check:
        rep = check_weight_axioms(w, horizon=args.horizon)
        out["axioms"] = rep.to_dict()
        if not rep.all_pass:
            code = EXIT_FAILED
    if args.conjugate:
        yc = young_conjugate(w, args.smax, n_grid=args.n_grid)
        text = "s,phi_star\n" + "".join(f"{s!r},{v!r}\n" for s, v in yc.to_rows())
        out["conjugate"] = {
            "s_max": args.smax,
            "n_grid": args.n_grid,
            "convex": bool(yc.is_convex()),
            "biconjugacy_error": float(yc.biconjugacy_error()),
            "csv": _write_csv(cfg, "conjugate.csv", text),
        }
        if not args.csv_dir:
            out["conjugate"]["table"] = [list(r) for r in yc.to_rows()]
    if args.strong:
        sw = check_strong_weight(w, horizon=max(args.horizon, 1e3))
        out["strong"] = sw.to_dict()
        if not sw.passed:
            code = EXIT_FAILED
    return out, code


COMMANDS = {"hypo": cmd_hypo, "strength": cmd_strength, "wf": cmd_wf, "weights": cmd_weights}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _common(p):
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--csv-dir", help="directory for CSV curve files")
    p.add_argument("--stable", action="store_true", help="omit timing so identical runs give identical bytes")
    p.add_argument("--threads", type=int, help="FFT worker threads (sets MICROSPEC_THREADS)")
    p.add_argument("--seed", type=int, default=None, help="seed for random sampling directions")
    p.add_argument("--max-points", type=int, default=2**22, help="resource cap on grid points")


def _plan_args(p):
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--n-radii", type=int)
    p.add_argument("--n-random", type=int)
    p.add_argument("--tol", type=float, default=1e-2)


def build_parser():
    ap = argparse.ArgumentParser(prog="microspec", description="Microlocal regularity analysis with respect to iterates of P(D).")
    ap.add_argument("--version", action="version", version=f"microspec {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hypo", help="hypoellipticity verdicts and exponents")
    p.add_argument("--symbol", required=True)
    p.add_argument("--weight")
    p.add_argument("--snap", action="store_true", help="snap exponents to nearby simple rationals")
    _plan_args(p)
    _common(p)

    p = sub.add_parser("strength", help="compare two symbols or test constant strength")
    p.add_argument("symbols", nargs="*", help="P and Q")
    p.add_argument("--variable", help="variable-coefficient fixture for a constant-strength test")
    p.add_argument("--at", default="0;0.5;1", help="freeze points, ';'-separated; a lone number is a point on the first axis")
    p.add_argument("--invariants", action="store_true")
    p.add_argument("--weight")
    _plan_args(p)
    _common(p)

    p = sub.add_parser("wf", help="wave-front set estimation")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fixture", help="gaussian, heaviside, prescribed:<file> or field:<file>")
    src.add_argument("--prescribed", help="prescribed-set text file (implies --construct)")
    p.add_argument("--construct", action="store_true", help="synthesise the series for --prescribed")
    p.add_argument("--roundtrip", action="store_true")
    p.add_argument("--crosscheck", action="store_true")
    p.add_argument("--symbol")
    p.add_argument("--weight", default="gevrey:0.5")
    p.add_argument("--mode", default="roumieu", choices=("beurling", "roumieu"))
    p.add_argument("--grid", type=int, help="points per axis")
    p.add_argument("--box", default="-1,1", help="lo,hi of the square box")
    p.add_argument("--windows", type=int, default=8, help="windows per axis")
    p.add_argument("--interface", type=float, default=0.125, help="Heaviside jump position")
    p.add_argument("--width", type=float, default=0.25, help="Gaussian width")
    p.add_argument("--K", type=int, default=32, help="requested series terms")
    _common(p)

    p = sub.add_parser("weights", help="weight-function checks and conjugate tables")
    p.add_argument("--family", required=True)
    p.add_argument("--check", action="store_true")
    p.add_argument("--conjugate", action="store_true")
    p.add_argument("--strong", action="store_true")
    p.add_argument("--smax", type=float, default=100.0)
    p.add_argument("--n-grid", type=int, default=1024)
    p.add_argument("--horizon", type=float, default=1e4)
    _common(p)
    return ap


def config_from_args(args):
    cfg = RunConfig(command=args.command, seed=args.seed)
    cfg.outputs = {"out": args.out, "csv_dir": args.csv_dir}
    cfg.options["max_points"] = args.max_points
    if args.command == "hypo":
        cfg.symbols, cfg.weight = [args.symbol], args.weight
        cfg.plan = {k: getattr(args, k) for k in ("r_min", "r_max", "n_radii", "n_random") if getattr(args, k) is not None}
        cfg.options.update(tol=args.tol, snap=args.snap)
    elif args.command == "strength":
        if not args.variable and len(args.symbols) != 2:
            raise ParseError("strength needs two symbols or --variable", " ".join(args.symbols), 1, 1)
        cfg.symbols, cfg.weight = list(args.symbols), args.weight
        cfg.plan = {k: getattr(args, k) for k in ("r_min", "r_max", "n_radii", "n_random") if getattr(args, k) is not None}
        cfg.options.update(tol=args.tol, variable=args.variable, at=args.at, invariants=args.invariants)
    elif args.command == "wf":
        source = f"prescribed:{args.prescribed}" if args.prescribed else args.fixture
        kind = source.split(":", 1)[0]
        if kind not in FIXTURES + ("prescribed", "field"):
            raise ParseError(f"unknown fixture {source!r}", source, 1, 1)
        default_sym = "heat1" if kind == "prescribed" else "laplace2"
        default_n = 1024 if kind == "prescribed" else 512
        try:
            lo, hi = (float(v) for v in args.box.split(","))
        except ValueError:
            raise ParseError("--box expects lo,hi", args.box, 1, 1)
        cfg.symbols = [args.symbol or default_sym]
        cfg.weight, cfg.mode = args.weight, args.mode
        cfg.grid = {"n": args.grid or default_n, "lo": lo, "hi": hi}
        cfg.options.update(
            source=source,
            windows=args.windows,
            crosscheck=args.crosscheck,
            roundtrip=args.roundtrip,
            K=args.K,
            interface=args.interface,
            width=args.width,
        )
    else:
        cfg.weight = args.family
        cfg.options.update(
            check=args.check, conjugate=args.conjugate, strong=args.strong, smax=args.smax, n_grid=args.n_grid, horizon=args.horizon
        )
    return cfg


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.threads:
        os.environ["MICROSPEC_THREADS"] = str(args.threads)
    t0 = time.perf_counter()
    try:
        cfg = config_from_args(args).validate()
        result, code = COMMANDS[args.command](cfg, args)
    except ResourceCapError as exc:
        print(f"microspec: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (MemoryError, MagnitudeOverflowError) as exc:
        print(f"microspec: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (MicrospecError, OSError, ValueError) as exc:
        print(f"microspec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    rep = make_report(cfg, result, time.perf_counter() - t0, args.stable)
    text = json.dumps(rep, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
