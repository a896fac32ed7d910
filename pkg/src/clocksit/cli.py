"""Command-line front end: ``clocksit <command> ...``.

Exit status is 0 for a positive verdict (valid, reachable, realizable,
true), 1 for a negative one and 2 for any error.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import dsl, encoders, golog, reach, regions, regression
from .model import BAT, max_constant, validate_bat

OK, NEGATIVE, ERROR = 0, 1, 2

_GENERAL_FLAG = re.compile(r"\bgeneral\s*:\s*true\b")


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    phi: Optional[str] = None
    program: Optional[str] = None
    K: Optional[int] = None
    max_states: int = reach.DEFAULT_MAX_STATES
    fmt: str = "text"
    output: Optional[str] = None
    jobs: int = 1


class CliError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}") from None


def _emit(text: str, output: Optional[str]):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _is_general(text: str) -> bool:
    # strip comments so a commented-out flag does not count
    body = re.sub(r"(//|#)[^\n]*", "", text)
    return bool(_GENERAL_FLAG.search(body))


def load_bat(path: str, validate: bool = True) -> BAT:
    return dsl.parse_bat(_read(path), path, validate=validate)


def _formula_arg(text: str, bat):
    # a readable file path is accepted in place of inline text
    p = Path(text)
    if len(text) < 4096 and "\n" not in text and p.is_file():
        return dsl.parse_formula(p.read_text(), bat, str(p))
    return dsl.parse_formula(text, bat)


# ---------------------------------------------------------------- commands

def cmd_check(args) -> int:
    text = _read(args.file)
    if _is_general(text):
        g = dsl.parse_general_bat(text, args.file)
        print(f"{args.file}: general theory '{g.name or '-'}' parsed "
              f"({len(g.actions)} actions, {len(g.fluents)} fluents, "
              f"{len(g.functions)} functions)")
        return OK
    bat = dsl.parse_bat(text, args.file, validate=False)
    problems = validate_bat(bat)
    if problems:
        for v in problems:
            print(f"{args.file}: {v.clause}: {v.symbol}: {v.message}")
        return NEGATIVE
    print(f"{args.file}: ok ({len(bat.objects)} objects, {len(bat.actions)} actions, "
          f"{len(bat.fluents)} fluents, {len(bat.clocks)} clocks, "
          f"max constant {max_constant(bat)})")
    return OK


def _query_comment(path: str) -> Optional[str]:
    m = re.search(r"^//\s*query:\s*(.+)$", _read(path), re.MULTILINE)
    return m.group(1).strip() if m else None


def cmd_reach(args) -> int:
    bat = load_bat(args.file)
    text = args.phi if args.phi is not None else _query_comment(args.file)
    if text is None:
        raise CliError("no --phi given and no '// query:' line in the theory")
    phi = _formula_arg(text, bat)
    if args.format in ("json", "dot"):
        # full export alongside the verdict
        res = reach.reachable(bat, phi, K=args.K, max_states=args.max_states, jobs=args.jobs)
        ts = reach.build_absts(bat, K=res.K, max_states=args.max_states, jobs=args.jobs)
        if args.format == "json":
            doc = json.loads(ts.to_json())
            doc["query"] = dsl.format_formula(phi)
            doc["reachable"] = res.reachable
            doc["witness"] = ([str(a) for a in res.witness] if res.witness is not None
                              else None)
            _emit(json.dumps(doc, separators=(",", ":")), args.output)
        else:
            _emit(ts.to_dot(), args.output)
        return OK if res.reachable else NEGATIVE
    res = reach.reachable(bat, phi, K=args.K, max_states=args.max_states, jobs=args.jobs)
    lines = [f"{'reachable' if res.reachable else 'not reachable'} "
             f"(K={res.K}, {res.states_explored} states explored)"]
    if res.reachable and args.witness:
        w = reach.format_witness(res.witness, decimal=args.decimal)
        lines.append(f"witness ({len(res.witness)} actions):")
        lines.extend("  " + ln for ln in w.splitlines())
    _emit("\n".join(lines), args.output)
    return OK if res.reachable else NEGATIVE


def cmd_realize(args) -> int:
    bat = load_bat(args.file)
    prog = dsl.parse_program(_read(args.program), bat, args.program)
    if args.format == "json":
        ts = golog.build_program_ts(bat, prog, K=args.K, max_states=args.max_states)
        _emit(ts.to_json(), args.output)
        return OK if ts.realization_state is not None else NEGATIVE
    sigma = golog.find_realization(bat, prog, K=args.K, max_states=args.max_states)
    if sigma is None:
        _emit("no realization", args.output)
        return NEGATIVE
    out = [f"realization ({len(sigma)} actions):"]
    out += ["  " + ln for ln in reach.format_witness(sigma, args.decimal).splitlines()]
    _emit("\n".join(out), args.output)
    return OK


def cmd_regress(args) -> int:
    bat = load_bat(args.file)
    phi = _formula_arg(args.phi, bat)
    sigma = dsl.parse_situation(args.sigma, bat)
    psi = regression.regress(bat, phi, sigma)
    value = regression.entails_initial(bat, psi)
    if not args.quiet:
        print(dsl.format_formula(psi))
    print("true" if value else "false")
    return OK if value else NEGATIVE


def cmd_absts(args) -> int:
    bat = load_bat(args.file)
    ts = reach.build_absts(bat, K=args.K, max_states=args.max_states, jobs=args.jobs)
    _emit(ts.to_json() if args.format == "json" else ts.to_dot(), args.output)
    return OK


def cmd_tsuccs(args) -> int:
    bat = load_bat(args.file)
    sigma = dsl.parse_situation(args.sigma, bat)
    K = reach._check_K(bat, args.K)
    nu = regions.eval_clocks(bat, sigma)
    for d in regions.tsuccs(nu, K):
        print(d)
    return OK


def cmd_encode(args) -> int:
    text = _read(args.input)
    if args.kind == "2cm":
        m = dsl.parse_2cm(text, args.input)
        g = encoders.encode_2cm_bounded(m) if args.bounded else encoders.encode_2cm(m)
        _emit(dsl.serialize_general_bat(g), args.output)
        return OK
    if args.bounded:
        raise CliError("--bounded only applies to 2cm")
    ta = dsl.parse_ta(text, args.input)
    try:
        bat, query = encoders.encode_ta(ta)
    except ValueError as e:
        raise CliError(str(e)) from None
    out = f"// query: {dsl.format_formula(query)}\n" + dsl.serialize_bat(bat)
    _emit(out, args.output)
    return OK


def cmd_simulate(args) -> int:
    if (args.depth is None) == (args.actions is None):
        raise CliError("give exactly one of --depth or --actions")
    text = _read(args.file)
    if _is_general(text):
        g = dsl.parse_general_bat(text, args.file)
        acts = None
        if args.actions is not None:
            acts = list(dsl.parse_situation(args.actions, g))
        try:
            trace = encoders.simulate_general(g, depth=args.depth, actions=acts)
        except ValueError as e:
            raise CliError(str(e)) from None
        for i, st in enumerate(trace):
            print(_trace_line(i, st.action, st.fluents, st.values))
        blocked = acts is not None and len(trace) - 1 < len(acts)
        return NEGATIVE if blocked else OK
    bat = dsl.parse_bat(text, args.file)
    eng = reach.Engine(bat)
    F, C, D = eng.initial()
    if args.actions is not None:
        plan = list(dsl.parse_situation(args.actions, bat))
    else:
        plan = None
    print(_trace_line(0, None, eng.true_atoms(F), eng.clocks(C, D)))
    steps = len(plan) if plan is not None else args.depth
    for i in range(steps):
        if plan is not None:
            a = plan[i]
            if not eng.possible(a, F, C, D):
                print(f"blocked: {a} is not possible")
                return NEGATIVE
        else:
            cands = [a for a in (ca.action for ca in eng.actions) if eng.possible(a, F, C, D)]
            if not cands:
                print("blocked: no action possible")
                return OK
            a = cands[0]
        F, C, D = eng.apply(a, F, C, D)
        print(_trace_line(i + 1, a, eng.true_atoms(F), eng.clocks(C, D)))
    return OK


def _trace_line(i, action, atoms, values) -> str:
    def term(t):
        name, args = t
        return f"{name}({','.join(args)})"
    vals = " ".join(f"{term(k)}={v}" for k, v in sorted(values.items()))
    fl = ",".join(term(a) for a in sorted(atoms))
    head = "S0" if action is None else str(action)
    return f"{i:4d} {head:<24} {{{fl}}} {vals}".rstrip()


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="clocksit",
                                 description="Reachability and realization for clocked action theories.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, K=True, states=True, out=True):
        if K:
            p.add_argument("--K", type=int, default=None,
                           help="region bound (default: maximal constant)")
        if states:
            p.add_argument("--max-states", type=int, default=reach.DEFAULT_MAX_STATES)
        if out:
            p.add_argument("-o", "--output", default=None)

    p = sub.add_parser("check", help="parse and validate a theory")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reach", help="decide reachability of a clocked formula")
    p.add_argument("file")
    p.add_argument("--phi", default=None,
                   help="formula text or file (default: the file's '// query:' line)")
    p.add_argument("--witness", action="store_true")
    p.add_argument("--format", choices=("text", "json", "dot"), default="text")
    p.add_argument("--decimal", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_reach)

    p = sub.add_parser("realize", help="find a realization of a program")
    p.add_argument("file")
    p.add_argument("program")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--decimal", action="store_true")
    common(p)
    p.set_defaults(func=cmd_realize)

    p = sub.add_parser("regress", help="regress a formula through a situation")
    p.add_argument("file")
    p.add_argument("--phi", required=True)
    p.add_argument("--sigma", required=True)
    p.add_argument("-q", "--quiet", action="store_true", help="print only the truth value")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("absts", help="export the full transition system")
    p.add_argument("file")
    p.add_argument("--format", choices=("dot", "json"), default="dot")
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_absts)

    p = sub.add_parser("tsuccs", help="canonical wait durations after a situation")
    p.add_argument("file")
    p.add_argument("--sigma", required=True)
    p.add_argument("--K", type=int, default=None)
    p.set_defaults(func=cmd_tsuccs)

    p = sub.add_parser("encode", help="emit a theory from a 2CM or timed automaton")
    p.add_argument("kind", choices=("2cm", "ta"))
    p.add_argument("input")
    p.add_argument("--bounded", action="store_true",
                   help="2cm only: counters as 2^-n in [0, 1]")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("simulate", help="run a theory forwards")
    p.add_argument("file")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--actions", default=None)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except reach.StateLimitExceeded as e:
        print(f"error: state limit of {e.limit} reached; raise --max-states", file=sys.stderr)
    except dsl.DslError as e:
        print(f"error: {e}", file=sys.stderr)
    except (CliError, ValueError, regression.RegressionError) as e:
        print(f"error: {e}", file=sys.stderr)
    return ERROR


if __name__ == "__main__":
    sys.exit(main())
