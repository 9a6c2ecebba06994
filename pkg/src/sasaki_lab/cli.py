"""Command line front end: ``sasaki-lab {verify-lemmas,curvatures,sweep,crosscheck}``.

Exit codes: 0 all checks pass, 1 some check failed, 2 bad configuration.
"""

import argparse
import csv
import io
import json
import sys
import time

from .algebra import Kind, SpaceFormSpec
from .geodesics import BundleKind, load_initial, random_initial, save_initial
from .report import atomic_write, dumps, resolve_output
from .suites import (
    ConfigError,
    SweepConfig,
    crosscheck,
    csv_header,
    csv_row,
    geodesic_trial,
    run_sweep,
    tolerances,
    verify_lemmas,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _spec(args):
    if args.kind is None or args.dim is None or args.curvature is None:
        raise UsageError("--kind, --dim and --curvature are required")
    try:
        return SpaceFormSpec(Kind(args.kind), args.dim, args.curvature)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_rho(rho):
    if rho is None or not 0.0 <= rho <= 1.0:
        raise UsageError(f"--rho must lie in [0, 1], got {rho}")


def _max_residuals(reports):
    out = {}
    for r in reports:
        for c in r.checks:
            out[c.name] = max(out.get(c.name, 0.0), c.residual)
    return out


def cmd_verify_lemmas(args):
    spec = _spec(args)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    overrides = {}
    if args.tol is not None:
        overrides = {name: args.tol for name in tolerances()}
    start = time.perf_counter()
    reports, summary = verify_lemmas(spec, args.trials, args.seed, overrides)
    doc = {
        "command": "verify-lemmas",
        "config": {
            "kind": spec.kind.value,
            "dim": spec.dim,
            "curvature": spec.curvature,
            "trials": args.trials,
            "seed": args.seed,
            "tol": args.tol,
        },
        "prop31_resolution": summary["prop31_resolution"],
        "max_residual": _max_residuals(reports),
        "all_pass": summary["all_pass"],
        "trials": [r.to_json() for r in reports],
        "timing": {"elapsed_seconds": time.perf_counter() - start},
    }
    path = resolve_output(args.out, f"verify-lemmas-{spec.kind.value}-{spec.dim}.json")
    atomic_write(path, dumps(doc))
    print(f"verify-lemmas {spec.kind.value} N={spec.dim}: {'PASS' if doc['all_pass'] else 'FAIL'} -> {path}")
    return EXIT_OK if doc["all_pass"] else EXIT_FAIL


def cmd_curvatures(args):
    if args.init:
        try:
            spec, bundle, init = load_initial(args.init)
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"cannot load initial data: {exc}") from None
    else:
        spec = _spec(args)
        _check_rho(args.rho)
        bundle = BundleKind(args.bundle)
        init = random_initial(spec, bundle, args.rho, args.seed)
    if args.max_derivative is not None and args.max_derivative < 11:
        raise UsageError("--max-derivative must be at least 11")
    if args.save_init:
        save_initial(args.save_init, spec, bundle, init)
    report = geodesic_trial(
        spec, bundle, init.rho, args.seed, init=init, max_derivative=args.max_derivative
    )
    doc = {"command": "curvatures", "report": report.to_json(), "all_pass": report.passed}
    path = resolve_output(args.out, f"curvatures-{spec.kind.value}-{spec.dim}.json")
    atomic_write(path, dumps(doc))
    if args.svg and report.profile is not None:
        atomic_write(args.svg, profile_svg(report.profile))
    ks = ", ".join(f"{k:.6g}" for k in (report.profile or {}).get("curvatures", []))
    print(f"curvatures [{report.status}] k = [{ks}]: {'PASS' if report.passed else 'FAIL'} -> {path}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_sweep(args):
    try:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    try:
        cfg = SweepConfig.from_json(doc)
    except ConfigError as exc:
        raise UsageError(f"invalid sweep config: {exc}") from None
    if args.jobs:
        cfg.jobs = args.jobs
    base = args.out or cfg.output or resolve_output(None, "sweep")
    base = base[:-5] if base.endswith(".json") else base
    rows, agg = run_sweep(cfg)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header())
    for _, r in rows:
        writer.writerow(csv_row(r))
    out = {
        "command": "sweep",
        "config": doc,
        "aggregate": agg,
        "trials": [dict(r.to_json(), cell=ci) for ci, r in rows],
    }
    atomic_write(base + ".csv", buf.getvalue())
    atomic_write(base + ".json", dumps(out))
    print(f"sweep: {agg['trials']} trials, {'PASS' if agg['all_pass'] else 'FAIL'} -> {base}.json, {base}.csv")
    return EXIT_OK if agg["all_pass"] else EXIT_FAIL


def cmd_crosscheck(args):
    spec = _spec(args)
    _check_rho(args.rho)
    if any(h <= 0 for h in args.steps) or args.sigma_max <= 0:
        raise UsageError("steps and --sigma-max must be positive")
    for h in args.steps:
        n = round(args.sigma_max / h)
        if abs(n * h - args.sigma_max) > 1e-9 * args.sigma_max:
            raise UsageError(f"--sigma-max must be a multiple of every step (step {h})")
    tol = tolerances()
    doc = crosscheck(spec, args.bundle, args.rho, args.seed, args.sigma_max, tuple(args.steps))
    finest = min(doc["steps"], key=lambda r: r["step"])
    checks = [
        {
            "name": "ode_vs_closed_form",
            "residual": finest["max_state_error"],
            "tol": tol["ode_vs_closed_form"],
        },
        {
            "name": "conservation",
            "residual": max(finest["conservation"].values()),
            "tol": tol["conservation"],
        },
    ]
    for c in checks:
        c["pass"] = c["residual"] <= c["tol"]
    doc["checks"] = checks
    doc["all_pass"] = all(c["pass"] for c in checks) and doc["order_ok"]
    doc["command"] = "crosscheck"
    path = resolve_output(args.out, f"crosscheck-{spec.kind.value}-{spec.dim}.json")
    atomic_write(path, dumps(doc))
    order = "unresolved" if doc["order"] is None else f"{doc['order']:.3f}"
    print(f"crosscheck: order {order}, finest error {finest['max_state_error']:.2e}: "
          f"{'PASS' if doc['all_pass'] else 'FAIL'} -> {path}")
    return EXIT_OK if doc["all_pass"] else EXIT_FAIL


def profile_svg(profile, width=480, height=240):
    """Bar chart of k1, k2, ... as a standalone SVG document."""
    ks = profile["curvatures"] or [0.0]
    top = max(ks) or 1.0
    bar = width / max(len(ks), 1)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + 20}">']
    for i, k in enumerate(ks):
        h = height * k / top
        parts.append(
            f'<rect x="{i * bar + 2:.1f}" y="{height - h:.1f}" width="{bar - 4:.1f}" height="{h:.1f}" fill="steelblue"/>'
        )
        parts.append(f'<text x="{i * bar + bar / 2:.1f}" y="{height + 15}" text-anchor="middle" font-size="11">k{i + 1}</text>')
    parts.append("</svg>\n")
    return "\n".join(parts)


def build_parser():
    p = argparse.ArgumentParser(prog="sasaki-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def space_form(sp, required=True):
        sp.add_argument("--kind", choices=[k.value for k in Kind], required=required)
        sp.add_argument("--dim", type=int, required=required)
        sp.add_argument("--curvature", type=float, required=required)

    v = sub.add_parser("verify-lemmas", help="operator tables, recurrences and power reductions")
    space_form(v)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=float, default=None, help="override every tolerance")
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify_lemmas)

    c = sub.add_parser("curvatures", help="Frenet analysis of one projected geodesic")
    space_form(c, required=False)
    c.add_argument("--bundle", choices=[b.value for b in BundleKind], default="tm")
    c.add_argument("--rho", type=float, default=0.5)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--init", default=None, help="initial data JSON (overrides kind/dim/curvature/bundle/rho)")
    c.add_argument("--save-init", default=None, help="write the initial data used to this JSON file")
    c.add_argument("--max-derivative", type=int, default=None)
    c.add_argument("--svg", default=None, help="optional bar chart of the profile")
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_curvatures)

    s = sub.add_parser("sweep", help="run a JSON-configured verification matrix")
    s.add_argument("config")
    s.add_argument("--out", default=None, help="output base path (.json and .csv are written)")
    s.add_argument("--jobs", type=int, default=None)
    s.set_defaults(func=cmd_sweep)

    x = sub.add_parser("crosscheck", help="RK4 against the exact flow")
    space_form(x)
    x.add_argument("--bundle", choices=[b.value for b in BundleKind], default="t1m")
    x.add_argument("--rho", type=float, default=0.7)
    x.add_argument("--sigma-max", type=float, default=1.0)
    x.add_argument("--steps", type=float, nargs="+", default=[1e-2, 5e-3, 2.5e-3])
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--out", default=None)
    x.set_defaults(func=cmd_crosscheck)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sasaki-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
