"""Command-line front end.

Examples::

    walkosc --scenario appendix-b
    walkosc --scenario qw-to-ho --generate path:8:0 --t-final 1 --probe-times 0.5,3
    walkosc --scenario ho-to-qw --instance springs.json --format csv --out report.csv
    walkosc --emit-golden tests/golden
    walkosc --write-instance walk.json --generate cycle:6:2 --scenario qw

Exit status: 0 when the report passes, 1 when a check fails, 2 on bad
input (unreadable files, malformed flags).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__, instances
from .scenarios import SCENARIOS, ScenarioSpec, SpecError, emit_golden, flatten, run_scenario


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="walkosc", description="Quantum walks, spring networks and the reductions between them.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--scenario", choices=SCENARIOS, help="pipeline to run")
    p.add_argument("--instance", action="append", default=[], metavar="PATH", help="problem file (repeatable)")
    p.add_argument("--generate", action="append", default=[], metavar="KIND:SIZE:SEED",
                   help=f"builtin instance (repeatable); kinds: {', '.join(instances.KINDS)}")
    p.add_argument("--t-final", type=float, help="override the final time")
    p.add_argument("--probe-times", type=_floats, default=[], help="extra comparison times, comma separated")
    p.add_argument("--tol", type=float, default=1e-9, help="distribution tolerance (default 1e-9)")
    p.add_argument("--rk4-tol", type=float, default=1e-8, help="RK4 refinement tolerance (default 1e-8)")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--parallel", action="store_true", help="run instances concurrently")
    p.add_argument("--emit-golden", metavar="DIR", help="write appendix golden files and exit")
    p.add_argument("--write-instance", metavar="PATH",
                   help="write the single generated instance as a problem file and exit (uses --scenario for its type)")
    return p


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=1, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance", "key", "value"])
    writer.writerows(flatten(report))
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.emit_golden:
            for path in emit_golden(args.emit_golden):
                print(path)
            return 0
        if args.write_instance:
            if len(args.generate) != 1 or args.scenario not in ("qw", "ho", "qw-to-ho", "ho-to-qw"):
                parser.error("--write-instance needs one --generate and a qw/ho/qw-to-ho/ho-to-qw --scenario")
            kind, size, seed = instances.parse_generate(args.generate[0])
            make = instances.generate_qw if args.scenario in ("qw", "qw-to-ho") else instances.generate_ho
            t = 1.0 if args.t_final is None else args.t_final
            instances.save_problem(make(kind, size, seed, t), args.write_instance)
            return 0
        if args.scenario is None:
            parser.error("--scenario is required")
        spec = ScenarioSpec(
            scenario=args.scenario, instance_files=args.instance, generators=args.generate, t_final=args.t_final,
            probe_times=args.probe_times, tol=args.tol, rk4_tol=args.rk4_tol, seed=args.seed, parallel=args.parallel,
        )
        report = run_scenario(spec)
    except (SpecError, instances.InstanceError, OSError) as exc:
        print(f"walkosc: error: {exc}", file=sys.stderr)
        return 2
    text = render(report, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
