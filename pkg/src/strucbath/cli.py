"""Command-line front end.

Subcommands: run <config>, figure <1..5>, scan <config> --axis <name>,
kernel <config>.  Exit code 0 only when every requested comparison passes.
"""

import argparse
import sys

from .errors import ConfigError, NumericsError, ResourceLimitError
from .harness import (compare_engines, emit, kernel_decay_times, load_config,
                      preset, run, scan_convergence, tabulate_kernel)
from .quapi import DEFAULT_TENSOR_CAP


def _add_common(p):
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--tolerance", type=float, default=None,
                   help="override the comparison tolerance")
    p.add_argument("--max-tensor-entries", type=int,
                   default=DEFAULT_TENSOR_CAP,
                   help="memory guard for the augmented tensor")
    p.add_argument("--threads", type=int, default=1,
                   help="concurrent scenario-sweep workers")
    p.add_argument("--plot", action="store_true",
                   help="also render curve images (needs matplotlib)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="strucbath",
        description="Qubit dynamics in a structured bath: analytic TRWA "
                    "solver and exact QUAPI tensor propagation.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run scenarios from a config file")
    p_run.add_argument("config")
    _add_common(p_run)
    p_fig = sub.add_parser("figure", help="run a named figure preset")
    p_fig.add_argument("number", choices=["1", "2", "3", "4", "5"])
    _add_common(p_fig)
    p_scan = sub.add_parser("scan", help="convergence scan along one axis")
    p_scan.add_argument("config")
    p_scan.add_argument("--axis", required=True,
                        choices=["dk_max", "dt", "m_keep"])
    _add_common(p_scan)
    p_ker = sub.add_parser("kernel", help="tabulate the bath response kernel")
    p_ker.add_argument("config")
    _add_common(p_ker)
    return parser


def _out_dir(args, scenario):
    return args.out if args.out is not None else scenario.out_dir


def _execute_dynamics(scenario, args):
    records = run(scenario, threads=args.threads,
                  max_entries=args.max_tensor_entries)
    paths = emit(records, "csv", _out_dir(args, scenario))
    if args.plot:
        paths += emit(records, "plot", _out_dir(args, scenario))
    for p in paths:
        print(f"wrote {p}")
    ok = True
    if len(scenario.engines) > 1:
        report = compare_engines(records, tolerance=args.tolerance)
        for row in report.rows:
            verdict = "pass" if row.passed else "FAIL"
            print(f"compare {row.reference} vs {row.other}: "
                  f"sup={row.sup_norm:.4g} rms={row.rms:.4g} [{verdict}]")
        ok = report.all_passed
    return ok


def _execute_kernel(scenario, args):
    paths = tabulate_kernel(scenario, _out_dir(args, scenario))
    for p in paths:
        print(f"wrote {p}")
    decay = kernel_decay_times(scenario)
    for gamma, t in sorted(decay.items()):
        print(f"gamma={gamma:g}: |alpha| below 5% of |alpha(0)| from "
              f"t={t:.3f} (1/omega0)")
    return True


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "figure":
            scenario = preset(f"fig{args.number}")
            if scenario.kind == "kernel":
                ok = _execute_kernel(scenario, args)
            else:
                ok = _execute_dynamics(scenario, args)
            return 0 if ok else 1
        scenarios = load_config(args.config)
        ok = True
        for scenario in scenarios:
            print(f"== scenario [{scenario.name}]")
            if args.command == "run":
                if scenario.kind == "kernel":
                    ok &= _execute_kernel(scenario, args)
                else:
                    ok &= _execute_dynamics(scenario, args)
            elif args.command == "kernel":
                kernel_scn = scenario
                ok &= _execute_kernel(kernel_scn, args)
            elif args.command == "scan":
                report = scan_convergence(scenario, axis=args.axis,
                                          threads=args.threads,
                                          max_entries=args.max_tensor_entries)
                for gamma, rep in sorted(report.by_gamma.items()):
                    gaps = ", ".join(f"{a}->{b}: {g:.4f}"
                                     for (a, b, g, _) in rep.rows())
                    print(f"gamma={gamma:g}: {gaps} | converged at "
                          f"{rep.converged_at} (tol {rep.tolerance:g})")
                for gamma, value, msg in report.refusals:
                    print(f"gamma={gamma:g} {args.axis}={value}: "
                          f"refused ({msg})")
                ok &= report.all_converged
        return 0 if ok else 1
    except (ConfigError, FileNotFoundError, ValueError, NumericsError,
            ResourceLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
