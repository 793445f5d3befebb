"""Command-line entry point: ``ergofix run | metrics | verify | plot-data``."""

import argparse
import json
import sys

from .scenario import ScenarioError, builtin_scenario, load_scenario
from .sim import SimulationError, run_scenario
from .trace import compute_metrics, emit_plot_data, read_trace, write_trace


def _load(arg):
    if arg.endswith((".yaml", ".yml")) or "/" in arg:
        return load_scenario(arg)
    return builtin_scenario(arg)


def cmd_run(args):
    sc = _load(args.scenario)
    try:
        trace = run_scenario(sc, baseline=True if args.baseline else None, seed=args.seed)
    except SimulationError as exc:
        write_trace(exc.trace, args.out)
        print(f"error: {exc}; partial trace written to {args.out}", file=sys.stderr)
        return 3
    write_trace(trace, args.out)
    print(f"wrote {len(trace)} records to {args.out}")
    return 0


def cmd_metrics(args):
    m = compute_metrics(read_trace(args.trace), args.d0)
    if args.json:
        print(json.dumps(m.as_dict()))
    else:
        print(f"a_bar   {m.a_bar:.6f}")
        print(f"zeta_ne {m.zeta_ne:.3f} %")
        print(f"beta    {m.beta}")
        print(f"zeta_d  {m.zeta_d:.3f} %")
    return 0


def cmd_verify(args):
    from .verify import run_all

    results = run_all(quick=args.quick)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        print("failed: " + ", ".join(failed))
        return 1
    return 0


def cmd_plot_data(args):
    emit_plot_data(read_trace(args.trace), args.quantity, args.out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ergofix", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario and write its trace")
    r.add_argument("--scenario", required=True, help="YAML file or name of a built-in scenario")
    r.add_argument("--out", required=True, help="trace CSV to write")
    r.add_argument("--baseline", action="store_true", help="hold the posture score at 1")
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("metrics", help="summary metrics of a trace")
    m.add_argument("--trace", required=True)
    m.add_argument("--d0", type=float, default=0.10, help="proximity threshold in metres")
    m.add_argument("--json", action="store_true")
    m.set_defaults(func=cmd_metrics)

    v = sub.add_parser("verify", help="run the property and audit battery")
    v.add_argument("--quick", action="store_true", help="5 battery profiles instead of the full set")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("plot-data", help="write (t, value) columns for one quantity")
    d.add_argument("--trace", required=True)
    d.add_argument("--quantity", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_plot_data)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
