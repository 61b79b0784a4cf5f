"""Command-line entry point: ``thermalcat {run,sweep,validate,version}``."""

import argparse
import json
import sys

from . import __version__
from .errors import ProgramError, ThermalcatError
from .program import load_program, load_yaml, serialize_program
from .runner import run_program
from .sweep import sweep


def _parser():
    p = argparse.ArgumentParser(prog="thermalcat", description="Run atom-field pulse programs.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--program", required=True, help="pulse-program YAML file")
        sp.add_argument("--strict", dest="strict", action="store_true", default=True,
                        help="reject unknown keys (default)")
        sp.add_argument("--no-strict", dest="strict", action="store_false", help="warn on unknown keys")

    run = sub.add_parser("run", help="execute a program")
    common(run)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--threads", type=int, default=1, help="accepted for symmetry with sweep")

    sw = sub.add_parser("sweep", help="run a program once per parameter value")
    common(sw)
    sw.add_argument("--out", required=True)
    sw.add_argument("--param", required=True, help="dotted path, e.g. system.alpha or steps.1.evolve.duration")
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--threads", type=int, default=1)

    val = sub.add_parser("validate", help="parse a program and print its canonical form")
    common(val)

    sub.add_parser("version", help="print the version")
    return p


def _values(text):
    vals = [load_yaml(tok) for tok in text.split(",") if tok.strip()]
    if not vals:
        raise ProgramError("--values is empty")
    return vals


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "version":
            print(__version__)
            return 0
        if args.command == "validate":
            prog = load_program(args.program, strict=args.strict)
            for w in prog.warnings:
                print(f"warning: {w}", file=sys.stderr)
            sys.stdout.write(serialize_program(prog))
            return 0
        if args.command == "run":
            prog = load_program(args.program, strict=args.strict)
            res = run_program(prog, args.out)
            keys = ("final", "revivals", "snapshots", "envelope_fit")
            print(json.dumps({k: res.summary[k] for k in keys if k in res.summary}, indent=2, sort_keys=True))
            return 0
        if args.command == "sweep":
            with open(args.program) as fh:
                text = fh.read()
            rows = sweep(text, args.param, _values(args.values), args.out, args.threads, args.strict)
            failed = sum(r["status"] != "ok" for r in rows)
            print(f"{len(rows) - failed}/{len(rows)} points ok; aggregate written to {args.out}/aggregate.csv")
            return 0
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ThermalcatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 1
