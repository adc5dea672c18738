"""Command line: ``sim run | preset | check-graph | verify``.

Exit codes: 0 ok, 1 an asserted verdict or oracle failed, 2 invalid
input, 3 numerical blow-up.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from heatnet import oracles
from heatnet.errors import HeatNetError, NumericalBlowup, ParseError, ValidationError
from heatnet.experiments.runner import run
from heatnet.experiments.scenario import PRESETS, load_preset, load_scenario, preset_text
from heatnet.graph import laplacian, read_graph_file, spectrum

EXIT_OK, EXIT_VERDICT, EXIT_INVALID, EXIT_BLOWUP = 0, 1, 2, 3

log = logging.getLogger("heatnet")


def _load(target, args):
    overrides = {"seed": args.seed}
    if args.allow_unstable:
        overrides["allow_unstable"] = True
    if target in PRESETS and not Path(target).exists():
        return load_preset(target, **overrides)
    return load_scenario(target, **overrides)


def _out_dir(args, name, many):
    if args.out:
        return Path(args.out) / name if many else Path(args.out)
    return Path(os.environ.get("SIM_OUT", "sim_out")) / name


def _run_one(target, args, many):
    """Returns (exit code, printed lines) so concurrent runs never interleave output."""
    lines = []
    try:
        scenario = _load(target, args)
        out = _out_dir(args, scenario.name, many)
        record, verdicts = run(scenario, out)
    except NumericalBlowup as exc:
        return EXIT_BLOWUP, [f"{target}: numerical blow-up: {exc}; partial outputs written"]
    except (ValidationError, ParseError) as exc:
        return EXIT_INVALID, [f"{target}: invalid scenario: {exc}"]
    except HeatNetError as exc:
        return EXIT_INVALID, [f"{target}: {type(exc).__name__}: {exc}"]
    lines.append(f"{scenario.name}: {len(record)} samples -> {out}")
    failed = False
    for v in verdicts:
        tag = "PASS" if v.passed else "FAIL"
        failed |= not v.passed
        value = v.value if isinstance(v.value, str) else f"{v.value:.4g}"
        lines.append(f"  {tag} {v.name} = {value}  ({v.detail})")
    for v in record.report.verdicts.values():
        if v.passed is None:
            value = v.value if isinstance(v.value, str) else f"{v.value:.4g}"
            lines.append(f"  info {v.name} = {value}")
    return (EXIT_VERDICT if failed and args.assert_ else EXIT_OK), lines


def cmd_run(args):
    many = len(args.scenario) > 1
    with ThreadPoolExecutor(max_workers=max(1, min(len(args.scenario), args.jobs))) as pool:
        results = list(pool.map(lambda t: _run_one(t, args, many), args.scenario))
    for _, lines in results:
        print("\n".join(lines))
    return max(code for code, _ in results)


def cmd_preset(args):
    sys.stdout.write(preset_text(args.name))
    return EXIT_OK


def cmd_check_graph(args):
    try:
        topo = read_graph_file(args.file)
        spec = spectrum(laplacian(topo))
    except (ValidationError, ParseError) as exc:
        print(f"invalid graph: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"agents: {topo.agent_count}  edges: {len(topo.edges)}")
    print("degrees: " + " ".join(str(d) for d in topo.degrees()))
    print("spectrum: " + " ".join(f"{x:.6f}" for x in spec.eigenvalues))
    print(f"lambda2: {spec.lambda2:.6f}")
    print(f"lambdaN: {spec.lambdaN:.6f}")
    print(f"jacobi sweeps: {spec.sweeps}")
    return EXIT_OK


def cmd_verify(args):
    results = oracles.run_all(seed=args.seed, trials=args.trials)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERDICT


def build_parser():
    parser = argparse.ArgumentParser(prog="sim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run scenario files or preset names")
    p.add_argument("scenario", nargs="+", help="scenario YAML path or preset name")
    p.add_argument("--out", help="output directory (default $SIM_OUT/<name> or sim_out/<name>)")
    p.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit 1 if an expected verdict fails")
    p.add_argument("--allow-unstable", action="store_true", help="skip the explicit-step guard")
    p.add_argument("--seed", type=int, help="override the disturbance seed")
    p.add_argument("--jobs", type=int, default=4, help="concurrent runs")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("preset", help="print a shipped preset")
    p.add_argument("name", choices=PRESETS)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("check-graph", help="print degrees and Laplacian spectrum of a graph file")
    p.add_argument("file")
    p.set_defaults(func=cmd_check_graph)

    p = sub.add_parser("verify", help="run the randomized property oracles")
    p.add_argument("--trials", type=int, help="trial budget (default 1000)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
