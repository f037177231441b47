"""Batch experiment runner: ``ballcorona <subcommand> [flags]``.

Every subcommand writes ``results.csv`` and ``report.json`` into ``--out``
and exits with status 1 when any check fails (2 on usage or config errors).
"""

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from . import experiments as E
from .holo import HoloPoly, VecHoloPoly
from .tabc import INCONCLUSIVE, TabcParams, parse_range
from .validation import check_dimension

SCHEMA_VERSION = "1.0"
COLUMNS = ("check_id", "params", "value", "bound", "pass", "seconds")
COMMANDS = ("check-identities", "dbar", "corona", "tabc-sweep", "norms", "multilinear")
DEFAULT_GRID = "a=0.5:1.5:0.5,b=-1.5:0:0.75,c=-2:0:1"

_POLY = {
    "type": "object",
    "required": ["n", "terms"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["alpha"],
                "properties": {
                    "alpha": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "re": {"type": "number"},
                    "im": {"type": "number"},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "N": {"type": "integer", "minimum": 1},
        "g": {"oneOf": [
            {"type": "array", "items": _POLY, "minItems": 1},
            {"type": "object", "required": ["components"],
             "properties": {"n": {"type": "integer"},
                            "components": {"type": "array", "items": _POLY, "minItems": 1}}},
        ]},
        "h": _POLY,
        "resolution": {"type": "integer", "minimum": 1},
        "tolerances": {
            "type": "object",
            "properties": {"residual": {"type": "number", "exclusiveMinimum": 0},
                           "dbar": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
        "grid": {"type": "object",
                 "properties": {"count": {"type": "integer", "minimum": 1},
                                "radius": {"type": "number", "exclusiveMinimum": 0,
                                           "exclusiveMaximum": 1}},
                 "additionalProperties": False},
        "experiments": {"type": "array", "items": {"enum": list(COMMANDS)}},
        "out": {"type": "string"},
        "seed": {"type": "integer"},
        "jobs": {"type": "integer", "minimum": 1},
        "tabc_grid": {"type": "string"},
    },
    "additionalProperties": False,
}


class UsageError(ValueError):
    """Bad configuration or unsupported (n, experiment) combination."""


def load_config(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise UsageError(f"config {path}: {exc.message}") from exc
    return data


def _settings(args):
    """Flags overlaid by the config file (config wins)."""
    cfg = load_config(args.config) if args.config else {}
    s = {
        "n": args.n or 1, "n_given": args.n, "seed": args.seed,
        "resolution": args.resolution, "out": args.out, "jobs": args.jobs, "tabc_grid": getattr(args, "grid", None) or DEFAULT_GRID,
        "tolerances": {"residual": 5e-3, "dbar": 5e-3}, "grid": {"count": 100, "radius": 0.9},
        "g": None, "h": None, "N": None,
    }
    for key, val in cfg.items():
        if key in ("tolerances", "grid"):
            s[key] = {**s[key], **val}
        else:
            s[key] = val
    if "n" in cfg:
        s["n_given"] = cfg["n"]
    try:
        check_dimension(s["n"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return s


# -- subcommand bodies ----------------------------------------------------------

def _need_disc(name, n):
    if n != 1:
        raise UsageError(f"{name} is implemented for n = 1 only (got n = {n})")


def run_identities(s):
    return E.identity_checks(s["n"], s["seed"])


def run_dbar(s):
    _need_disc("dbar", s["n"])
    return E.dbar_checks(s["resolution"] or 256)


def _corona_data(s):
    g, h = s["g"], s["h"]
    g = E.disk_two_gen() if g is None else VecHoloPoly.from_dict(g)
    h = HoloPoly.constant(g.n, 1.0) if h is None else HoloPoly.from_dict(h)
    if g.n != h.n or s["n_given"] not in (None, g.n):
        raise UsageError("g, h and n disagree on the dimension")
    if s["N"] is not None and s["N"] != g.N:
        raise UsageError(f"config N = {s['N']} but g has {g.N} components")
    if g.n > 2:
        raise UsageError("corona runs are supported for n in {1, 2}")
    if g.N < 2:
        raise UsageError("corona runs need N >= 2")
    return g, h


def run_corona(s):
    g, h = _corona_data(s)
    tol = s["tolerances"]
    res = s["resolution"] or (256 if g.n == 1 else 64)
    grid = s["grid"]
    return E.corona_checks(g, h, resolution=res, grid_count=grid["count"], radius=grid["radius"],
                           tol=tol["residual"], dbar_tol=tol["dbar"])


def parse_grid(text):
    """``a=lo:hi:step,b=...,c=...`` into three value arrays."""
    axes = {}
    for part in text.split(","):
        key, _, rng = part.partition("=")
        key = key.strip()
        if key not in ("a", "b", "c") or not rng:
            raise UsageError(f"bad grid component {part!r}")
        try:
            axes[key] = parse_range(rng)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if set(axes) != {"a", "b", "c"}:
        raise UsageError("grid needs a, b and c ranges")
    return axes["a"], axes["b"], axes["c"]


def _sweep_cell(cell):
    a, b, c, n = cell
    chk = E.tabc_cell(a, b, c, n)
    # in a sweep only decided cells are asserted
    if chk.extra["verdict"] == INCONCLUSIVE:
        chk.passed = True
    return chk


def run_tabc(s):
    A, B, C = parse_grid(s["tabc_grid"])
    n = s["n"]
    cells = sorted((round(float(a), 10), round(float(b), 10), round(float(c), 10), n)
                   for a in A for b in B for c in C)
    for a, b, c, _ in cells:
        TabcParams(a, b, c)  # validates early
    if s["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=s["jobs"]) as pool:
            return list(pool.map(_sweep_cell, cells))
    return [_sweep_cell(cell) for cell in cells]


def run_norms(s):
    _need_disc("norms", s["n"])
    return E.norm_checks(s["resolution"] or 64)


def run_multilinear(s):
    _need_disc("multilinear", s["n"])
    return E.multilinear_checks(s["resolution"] or 64, s["seed"])


RUNNERS = {
    "check-identities": run_identities,
    "dbar": run_dbar,
    "corona": run_corona,
    "tabc-sweep": run_tabc,
    "norms": run_norms,
    "multilinear": run_multilinear,
}


# -- output -----------------------------------------------------------------------

def render_csv(checks, timing=True, stamp=None):
    buf = io.StringIO()
    buf.write(f"# generated {stamp or _now()}\n")
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for c in checks:
        w.writerow(c.row(timing))
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, (np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def render_report(command, settings, checks, stamp=None):
    return {
        "schema_version": SCHEMA_VERSION,
        "generated": stamp or _now(),
        "command": command,
        "settings": _jsonable(settings),
        "passed": all(c.passed for c in checks),
        "failures": [c.check_id for c in checks if not c.passed],
        "checks": [
            {"check_id": c.check_id, "params": _jsonable(c.params), "value": _jsonable(c.value),
             "bound": _jsonable(c.bound), "pass": c.passed, "seconds": c.seconds,
             "extra": _jsonable(c.extra)}
            for c in checks
        ],
    }


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_outputs(out, command, settings, checks, timing=True):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    stamp = _now()
    (out / "results.csv").write_text(render_csv(checks, timing, stamp))
    (out / "report.json").write_text(json.dumps(render_report(command, settings, checks, stamp),
                                                indent=2))
    return out


# -- entry point ---------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config; its values override flags")
    common.add_argument("--out", metavar="DIR", default="results", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--resolution", type=int, default=None,
                        help="quadrature resolution (per-experiment default when omitted)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--n", type=int, default=None, help="complex dimension (default 1)")
    common.add_argument("--no-timing", action="store_true",
                        help="leave the seconds column empty (byte-stable CSV)")
    common.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="ballcorona", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "tabc-sweep":
            p.add_argument("--grid", default=None,
                           help=f"a=lo:hi:step,b=...,c=... (default {DEFAULT_GRID})")
    run = sub.add_parser("run", parents=[common], help="run every experiment listed in --config")
    run.set_defaults(batch=True)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        s = _settings(args)
        if args.command == "run":
            if not args.config:
                raise UsageError("run needs --config")
            commands = s.get("experiments") or []
            if not commands:
                raise UsageError("config lists no experiments")
        else:
            commands = [args.command]
        if s["jobs"] < 1:
            raise UsageError("--jobs must be positive")
        checks = []
        for name in commands:
            checks.extend(RUNNERS[name](s))
    except UsageError as exc:
        print(f"ballcorona: error: {exc}", file=sys.stderr)
        return 2
    write_outputs(s["out"], args.command, s, checks, timing=not args.no_timing)
    if not args.quiet:
        for c in checks:
            print(f"{'PASS' if c.passed else 'FAIL'}  {c.check_id:<28} value={c.row()['value']:<14} "
                  f"bound={c.row()['bound']}")
    return 0 if all(c.passed for c in checks) else 1


if __name__ == "__main__":
    sys.exit(main())
