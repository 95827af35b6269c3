"""Command-line front end.

Every subcommand that writes a CSV with ``--out`` also writes
``<out>.manifest.json`` recording the parameters, seed, version, timestamps
and output digests; ``replay`` re-runs a manifest and checks the digests.

Exit codes: 0 success, 2 usage error, 3 refused scale.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .analytics import (ScaleWarning, border_bound, double_gap_bound, envelope, lambda_integral,
                        scale_constants)
from .experiments import (ScaleRefused, bp_transition_scan, fit_correction, fit_weight, sweep,
                          GrowthEstimate)
from .model import Field, Rect, get_variant
from .oracle import WindowTooLarge, exact_growth_probability, exact_spanning_probability
from .rectangles import check_D, check_G, run, success_threshold

EXIT_OK, EXIT_USAGE, EXIT_REFUSED = 0, 2, 3

GROWTH_COLUMNS = ["model", "p", "trials", "successes", "p_hat", "ci_low", "ci_high", "alpha_hat",
                  "kappa", "seed"]
SCAN_COLUMNS = ["L", "p", "trials", "spanned_fraction", "p_log_L_minus_lambda"]
BOUNDS_COLUMNS = ["model", "p", "q", "A", "B", "in_range", "envelope_lower", "envelope_upper",
                  "double_gap_bound", "border_bound"]
ORACLE_COLUMNS = ["k", "count"]
FIT_COLUMNS = ["c", "gamma", "residual", "lambda", "rows_used", "gamma_in_range"]




class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def render_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def write_outputs(header: Sequence[str], rows: Sequence[Sequence[Any]], out: Path, subcommand: str,
                  params: Dict[str, Any], started: float) -> Dict[str, Any]:
    """Write the CSV and its manifest; returns the manifest."""
    finished = time.time()
    data = render_csv(header, rows).encode("utf-8")
    out = Path(out)
    try:
        out.write_bytes(data)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc.strerror or exc}") from exc
    manifest = {
        "subcommand": subcommand,
        "parameters": params,
        "seed": params.get("seed"),
        "version": __version__,
        "started": _iso(started),
        "finished": _iso(finished),
        "wall_seconds": round(finished - started, 3),
        "outputs": {out.name: sha256(data)},
    }
    mpath = manifest_path(out)
    try:
        mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {mpath}: {exc.strerror or exc}") from exc
    return manifest


def _iso(t: float) -> str:
    return datetime.fromtimestamp(t, timezone.utc).isoformat(timespec="milliseconds")


# ---------------------------------------------------------------------------
# argument helpers


def parse_p_grid(spec: str) -> List[float]:
    """``lo:hi:steps`` -> ``steps`` log-spaced values from lo to hi."""
    try:
        lo, hi, steps = spec.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError:
        raise UsageError(f"bad --p-grid {spec!r}; expected lo:hi:steps") from None
    if not (0 < lo <= hi < 1) or steps < 1:
        raise UsageError(f"bad --p-grid {spec!r}")
    if steps == 1:
        return [lo]
    return [float(v) for v in np.geomspace(lo, hi, steps)]


def _p_values(args) -> List[float]:
    ps = list(args.p or [])
    if args.p_grid:
        ps += parse_p_grid(args.p_grid)
    if not ps:
        raise UsageError("give --p or --p-grid")
    return ps


def parse_sites(spec: str) -> List[Tuple[int, int]]:
    """``"1,0;2,0"`` -> [(1, 0), (2, 0)]."""
    try:
        return [tuple(int(v) for v in part.split(",")) for part in spec.split(";") if part.strip()]
    except ValueError:
        raise UsageError(f"bad site list {spec!r}; expected x,y;x,y") from None


def parse_rect(spec: str) -> Rect:
    """``"0:2,0:0"`` -> {0..2} x {0..0}."""
    try:
        xs, ys = spec.split(",")
        x0, x1 = (int(v) for v in xs.split(":"))
        y0, y1 = (int(v) for v in ys.split(":"))
        return Rect(x0, x1, y0, y1)
    except ValueError:
        raise UsageError(f"bad rectangle {spec!r}; expected x0:x1,y0:y1") from None


def _require_seed(params):
    if params.get("seed") is None:
        raise UsageError("--seed is required: all randomness flows from it")


# ---------------------------------------------------------------------------
# subcommands: each takes a plain parameter dict so manifests can replay them


def cmd_growth(params) -> Tuple[List[str], list, int]:
    _require_seed(params)
    variant = get_variant(params["model"])
    est = sweep(variant, params["p"], params["trials"], params["kappa"], params["seed"],
                params.get("workers", 1), params["step_cap"])
    rows = [[e.variant, e.p, e.trials, e.successes, e.p_hat, e.ci_low, e.ci_high, e.alpha_hat,
             e.kappa, e.seed] for e in est]
    refused = [e for e in est if e.error]
    return GROWTH_COLUMNS, rows, EXIT_REFUSED if refused else EXIT_OK


def cmd_bp_scan(params):
    _require_seed(params)
    scan = bp_transition_scan(params["L"], params["p"], params["trials"], params["seed"],
                              params.get("workers", 1))
    rows = [[r.L, r.p, r.trials, r.spanned_fraction, r.p_log_L_minus_lambda] for r in scan]
    return SCAN_COLUMNS, rows, EXIT_OK


def cmd_bounds(params):
    variant = get_variant(params["model"])
    rows = []
    for p in params["p"]:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ScaleWarning)
            sc = scale_constants(p)
        lo, hi = envelope(p, params["c_lower"], params["c_upper"], variant)
        dg = double_gap_bound(params["a"], params["b"], sc.q, variant)
        bb = border_bound(params["a"], params["b"], params["s"], params["t"], sc.q, variant)
        rows.append([variant.name, p, sc.q, sc.A, sc.B, sc.in_range, lo, hi, dg, bb])
    return BOUNDS_COLUMNS, rows, EXIT_OK


def cmd_oracle(params):
    p = params["p"]
    if params.get("spanning"):
        res = exact_spanning_probability(params["spanning"], p)
    else:
        res = exact_growth_probability([tuple(s) for s in params["window"]], params["model"],
                                       Rect(*params["target"]), p)
    print(f"probability {fmt(res.value)}", file=sys.stderr)
    return ORACLE_COLUMNS, [[k, c] for k, c in enumerate(res.counts)], EXIT_OK


def _read_growth_csv(path: Path) -> List[Dict[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    if rows and not {"p", "p_hat", "model"} <= set(rows[0]):
        raise UsageError(f"{path} does not have the growth CSV columns")
    return rows


def cmd_fit(params):
    rows = _read_growth_csv(Path(params["input"]))
    table = []
    lam = None
    for r in rows:
        variant = get_variant(params.get("lambda_model") or r["model"])
        lam = variant.lam
        p, p_hat = float(r["p"]), float(r["p_hat"])
        alpha = 2 * lam + p * math.log(p_hat) if p_hat > 0 else math.nan
        est = GrowthEstimate(variant.name, p, int(r["trials"]), int(r["successes"]), p_hat,
                             float(r["ci_low"]), float(r["ci_high"]), alpha, float(r["kappa"]),
                             int(r["seed"]))
        table.append((p, alpha, fit_weight(est)))
    if lam is None:
        raise UsageError("input has no rows")
    res = fit_correction(table, lam)
    print(f"c = {fmt(res.c)}\ngamma = {fmt(res.gamma)}\nresidual = {fmt(res.residual)}", file=sys.stderr)
    return FIT_COLUMNS, [[res.c, res.gamma, res.residual, res.lam, res.rows_used, res.gamma_in_range]], EXIT_OK


def cmd_trace(params):
    _require_seed(params)
    variant = get_variant(params["model"])
    p = params["p"]
    threshold = params.get("threshold") or success_threshold(p, params["kappa"])
    field = Field(params["seed"], p)
    traj = run(field, variant, threshold, params["step_cap"])
    g_ok = sum(check_G(field, r, variant) for r in traj.rects)
    pairs = [(r, s) for i, r in enumerate(traj.rects) for s in traj.rects[i + 1:]]
    d_ok = sum(check_D(field, r, s, variant) for r, s in pairs)
    print(f"G holds on {g_ok}/{len(traj.rects)} rectangles; D holds on {d_ok}/{len(pairs)} nested pairs",
          file=sys.stderr)
    return traj.dumps()


def cmd_lambda(params):
    res = lambda_integral(params["model"], params["tol"])
    return res


COMMANDS: Dict[str, Callable] = {
    "growth": cmd_growth,
    "bp-scan": cmd_bp_scan,
    "bounds": cmd_bounds,
    "oracle": cmd_oracle,
    "fit": cmd_fit,
}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="localboot", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, model=True, ps=True, seed=False, out=True, workers=False):
        if model:
            sp.add_argument("--model", default="standard", choices=["standard", "modified", "frobose"])
        if ps:
            sp.add_argument("--p", type=float, nargs="+", help="one or more values of p")
            sp.add_argument("--p-grid", help="lo:hi:steps, log-spaced")
        if seed:
            sp.add_argument("--seed", type=int, help="master seed (required)")
        if out:
            sp.add_argument("--out", type=Path, help="CSV destination (manifest written beside it)")
        if workers:
            sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("growth", help="Monte Carlo growth probability (one row per p)")
    common(sp, seed=True, workers=True)
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--kappa", type=float, default=2.0)
    sp.add_argument("--step-cap", type=int, default=10 ** 6)

    sp = sub.add_parser("bp-scan", help="standard bootstrap percolation I(L, p) grid")
    common(sp, model=False, seed=True, workers=True)
    sp.add_argument("--L", type=int, nargs="+", required=True)
    sp.add_argument("--trials", type=int, required=True)

    sp = sub.add_parser("bounds", help="envelope, double-gap and border bounds over p")
    common(sp)
    sp.add_argument("--a", type=int, default=10)
    sp.add_argument("--b", type=int, default=10)
    sp.add_argument("--s", type=int, default=0)
    sp.add_argument("--t", type=int, default=0)
    sp.add_argument("--c-lower", type=float, default=1.0)
    sp.add_argument("--c-upper", type=float, default=1.0)

    sp = sub.add_parser("lambda", help="threshold integral of the rate function")
    common(sp, ps=False, out=False)
    sp.add_argument("--tol", type=float, default=1e-10)

    sp = sub.add_parser("oracle", help="exact enumeration on a tiny window")
    common(sp, ps=False)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--window", help="sites x,y;x,y (origin excluded)")
    sp.add_argument("--target", help="target rectangle x0:x1,y0:y1")
    sp.add_argument("--spanning", type=int, metavar="L", help="exact I(L, p) instead")

    sp = sub.add_parser("fit", help="fit alpha = c p^gamma to a growth CSV")
    sp.add_argument("--input", type=Path, required=True)
    sp.add_argument("--lambda-model", choices=["standard", "modified", "frobose"])
    sp.add_argument("--out", type=Path)

    sp = sub.add_parser("trace", help="dump one rectangle-process trajectory")
    common(sp, ps=False, seed=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--kappa", type=float, default=2.0)
    sp.add_argument("--threshold", type=int, help="success semiperimeter (default kappa*B)")
    sp.add_argument("--step-cap", type=int, default=10 ** 6)

    sp = sub.add_parser("replay", help="re-run a manifest and compare output digests")
    sp.add_argument("--manifest", type=Path, required=True)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out", type=Path, help="where to write the regenerated CSV")
    return ap


def _params(args) -> Dict[str, Any]:
    c = args.command
    if c == "growth":
        return {"model": args.model, "p": _p_values(args), "trials": args.trials, "kappa": args.kappa,
                "step_cap": args.step_cap, "seed": args.seed, "workers": args.workers}
    if c == "bp-scan":
        return {"L": args.L, "p": _p_values(args), "trials": args.trials, "seed": args.seed,
                "workers": args.workers}
    if c == "bounds":
        return {"model": args.model, "p": _p_values(args), "a": args.a, "b": args.b, "s": args.s,
                "t": args.t, "c_lower": args.c_lower, "c_upper": args.c_upper}
    if c == "oracle":
        if args.spanning:
            return {"p": args.p, "spanning": args.spanning}
        if not (args.window and args.target):
            raise UsageError("oracle needs --window and --target, or --spanning L")
        t = parse_rect(args.target)
        return {"model": args.model, "p": args.p, "window": [list(s) for s in parse_sites(args.window)],
                "target": [t.xmin, t.xmax, t.ymin, t.ymax]}
    if c == "fit":
        return {"input": str(args.input), "lambda_model": args.lambda_model}
    raise AssertionError(c)


def _emit(command, params, out: Optional[Path]) -> int:
    started = time.time()
    header, rows, code = COMMANDS[command](params)
    if out is None:
        sys.stdout.write(render_csv(header, rows))
    else:
        write_outputs(header, rows, out, command, params, started)
    return code


def _replay(args) -> int:
    try:
        manifest = json.loads(args.manifest.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from None
    command = manifest["subcommand"]
    if command not in COMMANDS:
        raise UsageError(f"manifest subcommand {command!r} cannot be replayed")
    params = dict(manifest["parameters"])
    if args.workers is not None and "workers" in params:
        params["workers"] = args.workers
    header, rows, _ = COMMANDS[command](params)
    data = render_csv(header, rows).encode("utf-8")
    if args.out is not None:
        args.out.write_bytes(data)
    (name, digest), = manifest["outputs"].items()
    same = sha256(data) == digest
    print(f"{name}: {'identical' if same else 'DIFFERENT'} ({sha256(data)[:16]})")
    return EXIT_OK if same else 1


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "lambda":
            res = cmd_lambda({"model": args.model, "tol": args.tol})
            print(f"{res.value:.12f}")
            print(f"error bound {res.error:.3e}")
            return EXIT_OK
        if args.command == "trace":
            text = cmd_trace({"model": args.model, "p": args.p, "seed": args.seed, "kappa": args.kappa,
                              "threshold": args.threshold, "step_cap": args.step_cap})
            if args.out:
                args.out.write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
            return EXIT_OK
        if args.command == "replay":
            return _replay(args)
        return _emit(args.command, _params(args), args.out)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScaleRefused, WindowTooLarge) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
