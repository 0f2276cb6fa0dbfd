"""Command-line front end: ``zlab free|product|verify <action>``.

Exit codes: 0 when every property holds, 1 when a property fails, 2 on
usage errors.  Reports are JSON with ``"schema": 1``; the wall-clock
fields live under ``"timestamp"`` so two runs with the same config and
seed differ only there.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import os
import sys
import time

from . import verify
from .direct_product import JoinCompactification, ProductPoint, parse_join
from .free_product import Approx, End, FreeProductSpace
from .models import get_model

SCHEMA = 1
DEPTH_CAP = 32


class UsageError(Exception):
    pass


def _default_seed() -> int:
    text = os.environ.get("ZLAB_SEED")
    if text is None:
        return verify.DEFAULT_SEED
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"ZLAB_SEED must be an integer, got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of option defaults; flags given on the command line win")
    p.add_argument("--model", default=None, help="model for both factors (default int-line)")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default $ZLAB_SEED or 42)")
    p.add_argument("--depth", type=int, default=None, help=f"word depth, at most {DEPTH_CAP}")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None, help="worker processes for sampling sweeps")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--csv", help="write a per-item CSV table here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zlab", description="Z-structures on free and direct products.")
    top = parser.add_subparsers(dest="group", required=True)

    free = top.add_parser("free", help="the free-product space W").add_subparsers(dest="action", required=True)
    p = free.add_parser("dist", help="distance between two points of the completion")
    _common(p)
    p.add_argument("--a", required=True, help='e.g. "word=1|side=X|local=0.5" or "end=g:1,h:1|depth=2"')
    p.add_argument("--b", required=True)
    p = free.add_parser("net", help="build an eps-net and check coverage by sampling")
    _common(p)
    p.add_argument("--eps", type=float, default=None)
    p = free.add_parser("null", help="exceptional translates of the base compactum")
    _common(p)
    p.add_argument("--eps", type=float, default=None)
    p = free.add_parser("homotopy", help="track bounds for the homotopies K and P")
    _common(p)
    p.add_argument("--which", choices=["K", "P"], default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)

    prod = top.add_parser("product", help="the join compactification").add_subparsers(dest="action", required=True)
    p = prod.add_parser("slope", help="slope q(y)/p(x) of an interior pair")
    _common(p)
    p.add_argument("--x", type=float, required=True, help="carrier coordinate in (0, 1)")
    p.add_argument("--y", type=float, required=True)
    p = prod.add_parser("nbhd", help="membership in a join neighborhood U(z, eps)")
    _common(p)
    p.add_argument("--center", required=True, help='e.g. "xbar=0|ybar=1|mu=0.5"')
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--z", required=True, help='"x=0.3|y=0.8" or a join point')
    p = prod.add_parser("null", help="null condition for translates of C x D")
    _common(p)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--grid", type=int, default=None)
    p = prod.add_parser("counterexample", help="product topology versus join topology")
    _common(p)
    p.add_argument("--range", type=int, default=None, dest="range_")
    p.add_argument("--eps", type=float, default=None)

    ver = top.add_parser("verify", help="property suites").add_subparsers(dest="action", required=True)
    p = ver.add_parser("metric", help="metric axioms on random triples")
    _common(p)
    p = ver.add_parser("all", help="the full acceptance suite")
    _common(p)
    p.add_argument("--scale", type=float, default=None, help="multiply every sample budget (smoke runs)")
    return parser


DEFAULTS = {
    "model": "int-line", "depth": 8, "samples": None, "jobs": 1, "eps": None, "which": "K", "steps": 50,
    "delta": 0.1, "grid": 300, "range_": 100, "scale": 1.0,
}


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the config file and the flags (flags win)."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        if "range" in loaded:
            loaded["range_"] = loaded.pop("range")
        unknown = set(loaded) - set(DEFAULTS) - {"seed"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "group", "action"):
            cfg[k] = v
    if cfg.get("seed") is None:
        cfg["seed"] = _default_seed()
    if not 1 <= cfg["depth"] <= DEPTH_CAP:
        raise UsageError(f"depth must lie in [1, {DEPTH_CAP}]")
    for key in ("samples", "jobs", "steps", "grid", "range_"):
        if cfg.get(key) is not None and cfg[key] < 1:
            raise UsageError(f"--{key.rstrip('_')} must be positive")
    get_model(cfg["model"])
    return cfg


def _space(cfg) -> FreeProductSpace:
    return FreeProductSpace(get_model(cfg["model"]), get_model(cfg["model"]))


def _fmt(p) -> str:
    if isinstance(p, Approx):
        return f"{p.center} (+/- {p.tolerance})"
    return str(p)


def run_command(args, cfg) -> tuple:
    """(report body, csv rows or None)."""
    g, a = args.group, args.action
    if g == "free":
        S = _space(cfg)
        if a == "dist":
            pa, pb = S.parse_point(args.a), S.parse_point(args.b)
            for p in (pa, pb):
                if isinstance(p, End) and p.depth > DEPTH_CAP:
                    raise UsageError(f"end depth above {DEPTH_CAP}")
            d, tol = S.dist_bounds(pa, pb)
            seq = [] if isinstance(pa, End) or isinstance(pb, End) else [str(x) for x in S.connecting_sequence(pa, pb)]
            return {"a": str(pa), "b": str(pb), "distance": d, "tolerance": tol, "connecting_sequence": seq,
                    "pass": True}, None
        if a == "net":
            eps = cfg["eps"] or 0.25
            rep = verify.check_total_boundedness(eps, cfg["samples"] or 20_000, depth=cfg["depth"], seed=cfg["seed"],
                                                 jobs=cfg["jobs"])
            net = S.epsilon_net(eps)
            rows = [{"index": i, "center": str(c), "radius": eps} for i, c in enumerate(net.centers)]
            return rep, rows
        if a == "null":
            eps = cfg["eps"] or 0.25
            rep = verify.check_null_free(eps, min(cfg["depth"], 8), cfg["samples"] or 2000, seed=cfg["seed"])
            rep["stability"] = verify.check_null_free_stability(eps, (min(cfg["depth"], 6), min(cfg["depth"], 6) + 2))
            rep["pass"] = rep["pass"] and rep["stability"]["pass"]
            return rep, [{"word": w} for w in rep["gamma"]]
        if a == "homotopy":
            if cfg["which"] == "K":
                eps = cfg["eps"] or 0.5
                rep = verify.check_homotopy_K(eps, cfg["samples"] or 2000, cfg["steps"], min(cfg["depth"], 8),
                                              seed=cfg["seed"], jobs=cfg["jobs"])
            else:
                rep = verify.check_homotopy_P(cfg["samples"] or 1000, steps=cfg["steps"], seed=cfg["seed"])
            return rep, None
    if g == "product":
        if cfg["model"] != "int-line":
            raise UsageError("the product construction ships for int-line only")
        if a == "slope":
            J = JoinCompactification()
            z = ProductPoint(args.x, args.y)
            J.check_point(z)
            return {"x": args.x, "y": args.y, "p": J.proper_x(args.x), "q": J.proper_y(args.y), "slope": J.slope(args.x, args.y),
                    "pass": True}, None
        if a == "nbhd":
            J = JoinCompactification()
            center = parse_join(args.center)
            if args.z.startswith("x="):
                f = dict(part.split("=", 1) for part in args.z.split("|"))
                z = ProductPoint(float(f["x"]), float(f["y"]))
            else:
                z = parse_join(args.z)
            J.check_point(center)
            J.check_point(z)
            inside = J.nbhd_contains(center, args.eps, z)
            return {"center": str(center), "eps": args.eps, "z": str(z), "inside": inside, "pass": True}, None
        if a == "null":
            rep = verify.check_null_product(cfg["delta"], cfg["grid"], cfg["samples"] or 200_000, cfg["seed"])
            rows = [{"g": g_, "h": h_, "cover_index": i} for g_, h_, i in rep.pop("fit_index_sample")]
            return rep, rows
        if a == "counterexample":
            rep = verify.check_counterexample(cfg["range_"], cfg["eps"] or 0.1)
            fits = {r["n"]: r["join_fits"] for r in rep["join"]}
            rows = [{"n": r["n"], "product_fits": ";".join(map(str, r["fits"])), "join_fits": fits[r["n"]]}
                    for r in rep["product_topology"]]
            return rep, rows
    if g == "verify":
        if a == "metric":
            rep = verify.check_metric_axioms(cfg["samples"] or 10_000, cfg["depth"], cfg["seed"], jobs=cfg["jobs"])
            return rep, None
        if a == "all":
            rep = verify.run_all(cfg["seed"], min(cfg["depth"], 8), cfg["jobs"], cfg["scale"])
            rows = [{"criterion": k, "pass": v} for k, v in rep["passed"].items()]
            return rep, rows
    raise UsageError(f"unknown command {g} {a}")


def _clean(obj):
    """JSON-safe copy: infinities become strings, tuples become lists."""
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.time()
    try:
        cfg = resolve(args)
        body, rows = run_command(args, cfg)
    except (UsageError, ValueError) as exc:
        print(f"zlab: error: {exc}", file=sys.stderr)
        return 2
    config = {k: v for k, v in sorted(cfg.items()) if k != "seed"}
    report = {
        "schema": SCHEMA,
        "command": f"{args.group} {args.action}",
        "config": config,
        "seed": cfg["seed"],
        "pass": bool(body.get("pass", False)),
        "result": body,
        "timestamp": {
            "started": datetime.datetime.fromtimestamp(started, datetime.timezone.utc).isoformat(),
            "elapsed_s": round(time.time() - started, 3),
        },
    }
    report = _clean(report)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    if args.csv and rows:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(_clean(rows))
    _summarize(args, body)
    return 0 if report["pass"] else 1


def _summarize(args, body) -> None:
    g, a = args.group, args.action
    if g == "free" and a == "dist":
        tol = body["tolerance"]
        print(f"{body['distance']!r}" + (f" +/- {tol!r}" if tol else ""))
    elif g == "product" and a == "slope":
        print(f"{body['slope']!r}")
    elif g == "product" and a == "nbhd":
        print("inside" if body["inside"] else "outside")
    elif g == "verify" and a == "all":
        for k, v in body["passed"].items():
            print(f"{k}: {'PASS' if v else 'FAIL'}")
    else:
        keys = [k for k in body if not isinstance(body[k], (list, dict))]
        print(" ".join(f"{k}={body[k]}" for k in keys))


if __name__ == "__main__":
    sys.exit(main())
