"""Command-line entry point: ``halldecomp <command> ...``.

Exit codes: 0 SAT / fixpoint, 20 UNSAT / conflict, 30 timeout, 64 usage or
input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .bench import BenchError, Limits, disagreements, load_dir, run_bench, write_csv
from .encoder import DecodeError, EncodeError, VarMap, decode_model, encode_opb
from .engine import Branching, Fixpoint, SolveStatus, format_domain
from .generators import gen_double_wheel, gen_php
from .instance import InstanceError, Method, build, check_solution, dumps, load

EXIT_OK = 0
EXIT_UNSAT = 20
EXIT_TIMEOUT = 30
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _method(tokens: List[str], k: Optional[int] = None) -> Method:
    text = "-".join(tokens)
    if text in ("hi-k", "hi_k"):
        if k is None:
            raise UsageError("hi-k needs a width, e.g. --method hi-k 3")
        text = f"hi-{k}"
    elif text.startswith("hi-k-"):
        text = "hi-" + text[5:]
    try:
        m = Method.parse(text)
    except InstanceError as exc:
        raise UsageError(str(exc)) from None
    if k is not None and m.name == "hi":
        m = Method("hi", k)
    return m


def _load(path: str):
    try:
        return load(path)
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except (InstanceError, KeyError, TypeError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _write(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_gen(args) -> int:
    try:
        inst = gen_php(args.n) if args.family == "php" else gen_double_wheel(args.n, args.hall_cap)
    except InstanceError as exc:
        raise UsageError(str(exc)) from None
    _write(dumps(inst), args.output)
    return EXIT_OK


def cmd_propagate(args) -> int:
    inst = _load(args.file)
    model = build(inst, Method("hi"), args.consistency, args.hall_cap, trace=args.trace)
    eng = model.engine
    status = eng.propagate()
    if args.trace:
        for name, old, new in eng.trace:
            print(f"trace {name} [{old[0]},{old[1]}] -> [{new[0]},{new[1]}]")
    if status is Fixpoint.CONFLICT:
        print("CONFLICT")
        return EXIT_UNSAT
    for v in inst.variables:
        print(f"{v.name} {format_domain(eng.domain_values(model.ids[v.name]))}")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load(args.file)
    method = _method(args.method, args.k)
    model = build(inst, method)
    branching = Branching.LEX if args.branch == "lex" else Branching.MIN_DOMAIN
    res = model.engine.solve(model.decision_vars, branching, args.nodes, args.timeout)
    s = res.stats
    stats = f"backtracks={s.backtracks} nodes={s.nodes} time_ms={s.wall_time * 1000:.1f}"
    if res.status is SolveStatus.SAT:
        asg = model.assignment_by_name(res.assignment)
        problems = check_solution(inst, asg)
        if problems:
            print(f"internal error: witness rejected: {problems}", file=sys.stderr)
            return 1
        print(f"SAT {stats}")
        for v in inst.variables:
            print(f"{v.name} = {asg[v.name]}")
        return EXIT_OK
    if res.status is SolveStatus.UNSAT:
        print(f"UNSAT {stats}")
        return EXIT_UNSAT
    print(f"TIMEOUT {stats}")
    return EXIT_TIMEOUT


def cmd_encode(args) -> int:
    inst = _load(args.file)
    if args.mode == "bi":
        if args.k is not None:
            raise UsageError("--k only applies to --mode hi")
        method = Method("bi")
    else:
        if args.k is not None and args.k < 1:
            raise UsageError("--k must be >= 1")
        method = Method("hi", args.k)
    try:
        text, vm = encode_opb(inst, method)
    except EncodeError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.output)
    out.write_text(text)
    out.with_suffix(".varmap").write_text(vm.dumps())
    return EXIT_OK


def cmd_decode(args) -> int:
    try:
        vm = VarMap.loads(Path(args.varmap).read_text())
        asg = decode_model(vm, Path(args.model).read_text())
    except FileNotFoundError as exc:
        raise UsageError(f"no such file: {exc.filename}") from None
    except DecodeError as exc:
        print(f"decode error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.instance:
        problems = check_solution(_load(args.instance), asg)
        if problems:
            for p in problems:
                print(f"violation: {p}")
            return EXIT_UNSAT
    for name, v in asg.items():
        print(f"{name} = {v}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if not Path(args.dir).is_dir():
        raise UsageError(f"not a directory: {args.dir}")
    try:
        insts = load_dir(args.dir)
    except (InstanceError, KeyError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    if not insts:
        raise UsageError(f"no *.json instances in {args.dir}")
    methods = []
    for tok in args.methods:
        for part in tok.split(","):
            if part:
                methods.append(_method([part]))
    branching = Branching.LEX if args.branch == "lex" else Branching.MIN_DOMAIN
    limits = Limits(args.timeout, args.nodes, branching)
    try:
        rows = run_bench(insts, methods, limits, args.jobs)
    except BenchError as exc:
        print(f"checker failure: {exc}", file=sys.stderr)
        return 1
    write_csv(rows, args.csv)
    for line in disagreements(rows):
        print(f"warning: {line}", file=sys.stderr)
    if not args.no_plot:
        from .plotting import plot_backtracks

        for p in plot_backtracks(rows, args.csv):
            print(f"wrote {p}")
    print(f"wrote {args.csv} ({len(rows)} rows)")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="halldecomp", description="Hall-interval decompositions: propagate, solve, encode, bench.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a benchmark instance")
    g.add_argument("family", choices=["php", "dw"])
    g.add_argument("n", type=int)
    g.add_argument("--hall-cap", type=int, default=None)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    pr = sub.add_parser("propagate", help="run propagation to a fixpoint and print domains")
    pr.add_argument("file")
    pr.add_argument("--consistency", choices=["rc", "bc"])
    pr.add_argument("--hall-cap", type=int)
    pr.add_argument("--trace", action="store_true", help="print every bound change")
    pr.set_defaults(func=cmd_propagate)

    s = sub.add_parser("solve", help="depth-first search for a solution")
    s.add_argument("file")
    s.add_argument("--method", nargs="+", default=["hi"], metavar="M", help="bi | hi | hi-k K")
    s.add_argument("--k", type=int)
    s.add_argument("--branch", choices=["lex", "mindom"], default="lex")
    s.add_argument("--timeout", type=float)
    s.add_argument("--nodes", type=int)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("encode", help="write an OPB encoding and its .varmap")
    e.add_argument("file")
    e.add_argument("--mode", choices=["hi", "bi"], required=True)
    e.add_argument("--k", type=int)
    e.add_argument("-o", "--output", required=True)
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="turn a PB model back into an assignment")
    d.add_argument("varmap")
    d.add_argument("model")
    d.add_argument("--instance", help="also check the assignment against this instance")
    d.set_defaults(func=cmd_decode)

    b = sub.add_parser("bench", help="solve every instance in a directory under several methods")
    b.add_argument("dir")
    b.add_argument("--methods", nargs="+", default=["bi", "hi"])
    b.add_argument("--csv", required=True)
    b.add_argument("--timeout", type=float, default=600.0)
    b.add_argument("--nodes", type=int)
    b.add_argument("--branch", choices=["lex", "mindom"], default="lex")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--no-plot", action="store_true")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"halldecomp: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
