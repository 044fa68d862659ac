"""Command-line front door: sample fixtures, iterate dynamics, run experiments.

Exit codes: 0 pass, 1 statistical failure, 2 usage error, 3 resource cap or
censoring bound hit.  Every command requires --seed; there is no hidden
entropy anywhere in the package.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .dynamics import DEFAULT_KAPPA_CAP, OrbitState
from .errors import Censored, PoissonLabError, UnknownExperiment, WindowBudgetExceeded
from .experiments import experiment_names, run_experiment
from .point_process import Window, config_to_json, sample
from .streams import StreamKey
from .transforms import Side, Transform, boole_signed, boole_unsigned, random_walk, translation

EXIT_OK = 0
EXIT_STAT_FAIL = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _parse_transform(spec: str) -> Transform:
    if spec == "boole-unsigned":
        return boole_unsigned()
    if spec == "boole-signed":
        return boole_signed()
    if spec == "random-walk":
        return random_walk()
    if spec.startswith("translation:"):
        return translation(float(spec.split(":", 1)[1]))
    raise ValueError(
        f"unknown transform {spec!r} (expected boole-unsigned, boole-signed, "
        "random-walk, or translation:<c>)")


def _parse_window(spec: str, side: Side) -> Window:
    lo_s, _, hi_s = spec.partition(":")
    lo, hi = float(lo_s), float(hi_s if hi_s else "nan")
    return Window(lo, hi, side)


def _out_stream(path: str | None):
    return open(path, "w") if path else sys.stdout


def cmd_sample(args) -> int:
    side = Side.FULL_LINE if args.side == "full" else Side.HALF_LINE
    try:
        w = _parse_window(args.window, side)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    c = sample(args.lam, w, StreamKey(args.seed))
    payload = json.dumps(config_to_json(c), sort_keys=True, indent=2) + "\n"
    with _out_stream(args.out) as fh:
        fh.write(payload)
    return EXIT_OK


def cmd_iterate(args) -> int:
    try:
        t = _parse_transform(args.transform)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if t.domain is not Side.HALF_LINE:
        print(f"error: {args.map} trajectories need a half-line transform; "
              f"{args.transform} acts on the full line", file=sys.stderr)
        return EXIT_USAGE
    key = StreamKey(args.seed)
    c = sample(args.lam, Window(0.0, args.window_hi, Side.HALF_LINE), key)
    attempt = 1
    while not c.points:
        c = sample(args.lam, Window(0.0, args.window_hi, Side.HALF_LINE), key.child(attempt))
        attempt += 1
    state = OrbitState.from_config(t, c)
    rows = []
    try:
        for step_idx in range(1, args.steps + 1):
            if args.map == "leftmost":
                k = state.next_return(args.cap)
                t1 = float(state.images[0])
                rows.append((step_idx, k, t1, state.window_hi, state.images.size))
            else:
                state.advance(1)
                t1 = state.certify_min()
                rows.append((step_idx, "", t1, state.window_hi, state.images.size))
    except (Censored, WindowBudgetExceeded) as e:
        print(f"error: aborted at row {len(rows) + 1}: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    with _out_stream(args.out) as fh:
        wr = csv.writer(fh)
        wr.writerow(["step", "kappa", "t1", "window_hi", "points_tracked"])
        for r in rows:
            wr.writerow(r)
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.name == "list":
        for name in experiment_names():
            print(name)
        return EXIT_OK
    overrides = {}
    for kv in args.param or []:
        k, _, v = kv.partition("=")
        try:
            overrides[k] = json.loads(v)
        except json.JSONDecodeError:
            overrides[k] = v
    try:
        report = run_experiment(args.name, args.seed, n=args.n,
                                workers=args.workers, **overrides)
    except UnknownExperiment as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (Censored, WindowBudgetExceeded) as e:
        print(f"error: resource cap: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(report.json_bytes())
    if args.format == "json":
        sys.stdout.write(report.json_bytes().decode())
    else:
        sys.stdout.write(report.text())
    if report.inconclusive:
        return EXIT_RESOURCE
    return EXIT_OK if report.passed else EXIT_STAT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="poissonlab",
        description="Poisson point processes driven by measure-preserving maps: "
                    "samplers, leftmost-return dynamics, and verification experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="write a configuration as JSON")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--window", required=True, metavar="LO:HI")
    sp.add_argument("--side", choices=["half", "full"], default="half")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_sample)

    it = sub.add_parser("iterate", help="emit a trajectory summary as CSV")
    it.add_argument("--transform", required=True)
    it.add_argument("--map", choices=["suspend", "leftmost"], default="leftmost")
    it.add_argument("--steps", type=int, default=100)
    it.add_argument("--lambda", dest="lam", type=float, default=1.0)
    it.add_argument("--window-hi", type=float, default=8.0)
    it.add_argument("--cap", type=int, default=DEFAULT_KAPPA_CAP)
    it.add_argument("--seed", type=int, required=True)
    it.add_argument("--out")
    it.set_defaults(fn=cmd_iterate)

    ex = sub.add_parser("experiment", help="run a named experiment ('list' to enumerate)")
    ex.add_argument("name")
    ex.add_argument("--seed", type=int)
    ex.add_argument("--n", type=int)
    ex.add_argument("--workers", type=int, default=1)
    ex.add_argument("--format", choices=["json", "text"], default="text")
    ex.add_argument("--out")
    ex.add_argument("--param", action="append", metavar="KEY=VALUE")
    ex.set_defaults(fn=cmd_experiment)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "experiment" and args.name != "list" and args.seed is None:
        print("error: --seed is required (no hidden entropy)", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except PoissonLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
