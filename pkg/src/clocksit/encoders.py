"""Reductions into action theories.

* two-counter machines to a real-valued theory (counters as numeric
  fluents) and to a time-bounded one (counter ``u`` stored as ``2**(1-u)``);
* diagonal-free timed automata to clocked theories.

The numeric theories are :class:`GeneralBAT` instances: the clocked engine
refuses them, :func:`simulate_general` runs them to a bounded depth.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Union

from .model import (BAT, COMPARATORS, FALSE, WAIT, ActionEq, ActionSchema,
                    And, Atom, Axiom, ClockCmp, Equal, Formula, GroundAction,
                    Not, Obj, Or, Symbol, Var, conj, disj, evaluate)


# ------------------------------------------------------ two-counter machines

@dataclass(frozen=True)
class Inc:
    counter: int
    next: str


@dataclass(frozen=True)
class Dec:
    counter: int
    if_pos: str
    if_zero: str


@dataclass(frozen=True)
class Halt:
    pass


Instruction = Union[Inc, Dec, Halt]


@dataclass(frozen=True)
class TwoCounterMachine:
    instructions: Mapping[str, Instruction]
    start: str

    __hash__ = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.start not in self.instructions:
            raise ValueError(f"start label {self.start} has no instruction")
        for label, ins in self.instructions.items():
            targets = ()
            if isinstance(ins, Inc):
                targets = (ins.next,)
            elif isinstance(ins, Dec):
                targets = (ins.if_pos, ins.if_zero)
            if not isinstance(ins, Halt) and ins.counter not in (1, 2):
                raise ValueError(f"{label}: counter must be c1 or c2")
            for t in targets:
                if t not in self.instructions:
                    raise ValueError(f"{label}: goto undefined label {t}")

    @property
    def labels(self) -> tuple:
        return tuple(self.instructions)

    @property
    def halt_labels(self) -> tuple:
        return tuple(l for l, i in self.instructions.items() if isinstance(i, Halt))


@dataclass
class MachineRun:
    halted: bool
    steps: int
    counters: tuple
    trace: list  # (label, c1, c2) for every visited configuration


def interp_2cm(m: TwoCounterMachine, max_steps: int) -> MachineRun:
    label, c = m.start, [0, 0]
    trace = [(label, 0, 0)]
    steps = 0
    while True:
        ins = m.instructions[label]
        if isinstance(ins, Halt):
            return MachineRun(True, steps, tuple(c), trace)
        if steps >= max_steps:
            return MachineRun(False, steps, tuple(c), trace)
        if isinstance(ins, Inc):
            c[ins.counter - 1] += 1
            label = ins.next
        elif c[ins.counter - 1] > 0:
            c[ins.counter - 1] -= 1
            label = ins.if_pos
        else:
            label = ins.if_zero
        steps += 1
        trace.append((label, c[0], c[1]))


# ------------------------------------------------------------- general BATs

UPDATE_KINDS = ("same", "add", "sub", "half", "double", "const")


@dataclass(frozen=True)
class Update:
    """New value of a numeric fluent: ``f``, ``f + k``, ``f - k``, ``f / 2``,
    ``2 * f`` or a constant."""
    kind: str
    value: Fraction = Fraction(0)

    def __post_init__(self):
        if self.kind not in UPDATE_KINDS:
            raise ValueError(self.kind)

    def apply(self, old: Fraction) -> Fraction:
        return {
            "same": lambda: old,
            "add": lambda: old + self.value,
            "sub": lambda: old - self.value,
            "half": lambda: old / 2,
            "double": lambda: old * 2,
            "const": lambda: Fraction(self.value),
        }[self.kind]()


@dataclass(frozen=True)
class FunctionalSSA:
    """First matching case wins; ``default`` otherwise."""
    params: tuple
    cases: tuple  # of (Formula, Update)
    default: Update = Update("same")


@dataclass(frozen=True)
class GeneralBAT:
    objects: tuple
    actions: tuple
    fluents: tuple
    functions: tuple
    function_init: Mapping  # name -> Fraction (all ground terms alike)
    init: frozenset
    poss: Mapping[str, Axiom]
    ssa: Mapping[str, Axiom]
    fssa: Mapping[str, FunctionalSSA]
    goal: Formula = FALSE
    name: str = ""

    __hash__ = None  # type: ignore[assignment]


@dataclass
class TraceStep:
    action: Optional[GroundAction]
    fluents: frozenset
    values: dict


def _gen_actions(g: GeneralBAT) -> list:
    out = []
    for s in g.actions:
        if s.is_wait:
            continue
        for args in itertools.product(g.objects, repeat=s.arity):
            out.append(GroundAction(s.name, args))
    return out


def _gen_step(g: GeneralBAT, atoms: frozenset, values: dict, a: GroundAction):
    new_atoms = set()
    for s in g.fluents:
        ax = g.ssa[s.name]
        for args in itertools.product(g.objects, repeat=s.arity):
            env = dict(zip(ax.params, args))
            if evaluate(ax.body, g.objects, atoms, values, env, action=a):
                new_atoms.add((s.name, args))
    new_values = {}
    for s in g.functions:
        fs = g.fssa.get(s.name)
        for args in itertools.product(g.objects, repeat=s.arity):
            old = values[(s.name, args)]
            upd = Update("same")
            if fs is not None:
                env = dict(zip(fs.params, args))
                upd = fs.default
                for cond, u in fs.cases:
                    if evaluate(cond, g.objects, atoms, values, env, action=a):
                        upd = u
                        break
            new_values[(s.name, args)] = upd.apply(old)
    return frozenset(new_atoms), new_values


def simulate_general(g: GeneralBAT, depth: Optional[int] = None,
                     actions: Optional[list] = None) -> list:
    """Deterministic forward run of a numeric theory.

    With ``actions`` the given sequence is replayed (stopping early if an
    action is impossible); otherwise at each step the unique possible
    ground action is taken.  Stops once ``g.goal`` holds, at ``depth``, or
    when blocked.
    """
    if depth is None and actions is None:
        raise ValueError("need a depth or an action sequence")
    atoms = frozenset(g.init)
    values = {}
    for s in g.functions:
        for args in itertools.product(g.objects, repeat=s.arity):
            values[(s.name, args)] = Fraction(g.function_init.get(s.name, 0))
    trace = [TraceStep(None, atoms, dict(values))]
    ground = _gen_actions(g)

    def possible(a):
        ax = g.poss[a.name]
        return evaluate(ax.body, g.objects, atoms, values, dict(zip(ax.params, a.args)))

    steps = 0
    limit = len(actions) if actions is not None else depth
    while steps < limit:
        if evaluate(g.goal, g.objects, atoms, values):
            break
        if actions is not None:
            a = actions[steps]
            if not possible(a):
                break
        else:
            cands = [a for a in ground if possible(a)]
            if not cands:
                break
            if len(cands) > 1:
                raise ValueError(f"nondeterministic step: {', '.join(map(str, cands))}")
            a = cands[0]
        atoms, values = _gen_step(g, atoms, values, a)
        trace.append(TraceStep(a, atoms, dict(values)))
        steps += 1
    return trace


# ------------------------------------------------------------- 2CM encoders

INSTR = "instr"
NEXT = "next"


def _counter_test(counter: int, positive: bool, bounded: bool) -> Formula:
    f = f"f{counter}"
    if bounded:
        return ClockCmp(f, (), "<" if positive else "=", Fraction(2))
    return ClockCmp(f, (), ">" if positive else "=", Fraction(0))


def _encode(m: TwoCounterMachine, bounded: bool) -> GeneralBAT:
    labels = m.labels
    is_a = lambda p: ActionEq(INSTR, (Obj(p),))
    i = Var("i")
    next_cases = []
    for p, ins in m.instructions.items():
        if isinstance(ins, Inc):
            next_cases.append(And((is_a(p), Equal(i, Obj(ins.next)))))
        elif isinstance(ins, Dec):
            branch = Or((
                And((_counter_test(ins.counter, True, bounded), Equal(i, Obj(ins.if_pos)))),
                And((_counter_test(ins.counter, False, bounded), Equal(i, Obj(ins.if_zero)))),
            ))
            next_cases.append(And((is_a(p), branch)))
    fssa = {}
    for c in (1, 2):
        cases = []
        for p, ins in m.instructions.items():
            if isinstance(ins, Halt) or ins.counter != c:
                continue
            if isinstance(ins, Inc):
                cases.append((is_a(p), Update("half") if bounded else Update("add", Fraction(1))))
            else:
                pos = _counter_test(c, True, bounded)
                zero = _counter_test(c, False, bounded)
                if bounded:
                    cases.append((And((is_a(p), pos)), Update("double")))
                    cases.append((And((is_a(p), zero)), Update("const", Fraction(2))))
                else:
                    cases.append((And((is_a(p), pos)), Update("sub", Fraction(1))))
                    cases.append((And((is_a(p), zero)), Update("const", Fraction(0))))
        fssa[f"f{c}"] = FunctionalSSA((), tuple(cases), Update("same"))
    init_value = Fraction(2) if bounded else Fraction(0)
    return GeneralBAT(
        objects=labels,
        actions=(ActionSchema(INSTR, 1), ActionSchema(WAIT, 0, True)),
        fluents=(Symbol(NEXT, 1),),
        functions=(Symbol("f1", 0), Symbol("f2", 0)),
        function_init={"f1": init_value, "f2": init_value},
        init=frozenset({(NEXT, (m.start,))}),
        poss={INSTR: Axiom(("i",), Atom(NEXT, (Var("i"),)))},
        ssa={NEXT: Axiom(("i",), disj(next_cases))},
        fssa=fssa,
        goal=disj(Atom(NEXT, (Obj(h),)) for h in m.halt_labels),
        name="twocm_bounded" if bounded else "twocm",
    )


def encode_2cm(m: TwoCounterMachine) -> GeneralBAT:
    """Counters as unbounded numeric fluents ``f1``, ``f2`` (start 0)."""
    return _encode(m, bounded=False)


def encode_2cm_bounded(m: TwoCounterMachine) -> GeneralBAT:
    """Counter value ``u`` stored as ``2**(1-u)``: increment halves,
    decrement doubles, zero test compares with 2.  Values stay in (0, 2]."""
    return _encode(m, bounded=True)


def _log2_exact(q: Fraction) -> int:
    n, d = q.numerator, q.denominator
    if n <= 0 or n & (n - 1) or d & (d - 1):
        raise ValueError(f"{q} is not a power of two")
    return n.bit_length() - d.bit_length()


def decode_counter(f: Fraction) -> int:
    """Inverse of ``u -> 2**(1-u)``."""
    return 1 - _log2_exact(Fraction(f))


def decode_trace(trace: list, bounded: bool = False) -> list:
    """(label, c1, c2) per trace step of an encoded machine."""
    out = []
    for step in trace:
        labels = [args[0] for name, args in step.fluents if name == NEXT]
        if len(labels) != 1:
            break
        f1, f2 = step.values[("f1", ())], step.values[("f2", ())]
        if bounded:
            f1, f2 = decode_counter(f1), decode_counter(f2)
        out.append((labels[0], int(f1), int(f2)))
    return out


# ----------------------------------------------------------- timed automata

@dataclass(frozen=True)
class Constraint:
    """``clock op bound``, or ``clock - minus op bound`` when ``minus`` is
    set (diagonal)."""
    clock: str
    op: str
    bound: int
    minus: Optional[str] = None

    def holds(self, values: Mapping) -> bool:
        v = values[self.clock] - (values[self.minus] if self.minus else 0)
        return COMPARATORS[self.op](v, self.bound)


@dataclass(frozen=True)
class Switch:
    source: str
    label: str
    guard: tuple
    resets: tuple
    target: str


@dataclass(frozen=True)
class TimedAutomaton:
    locations: tuple
    initial: str
    finals: tuple
    clocks: tuple
    switches: tuple

    def __post_init__(self):
        locs = set(self.locations)
        if self.initial not in locs:
            raise ValueError(f"initial location {self.initial} undeclared")
        for l in self.finals:
            if l not in locs:
                raise ValueError(f"final location {l} undeclared")
        for sw in self.switches:
            for l in (sw.source, sw.target):
                if l not in locs:
                    raise ValueError(f"switch mentions undeclared location {l}")
            for c in sw.guard:
                for x in filter(None, (c.clock, c.minus)):
                    if x not in self.clocks:
                        raise ValueError(f"guard mentions undeclared clock {x}")
            for x in sw.resets:
                if x not in self.clocks:
                    raise ValueError(f"reset of undeclared clock {x}")

    @property
    def labels(self) -> tuple:
        return tuple(dict.fromkeys(sw.label for sw in self.switches))

    @property
    def max_constant(self) -> int:
        return max((c.bound for sw in self.switches for c in sw.guard), default=0)


LOC = "loc"


def switch_action(i: int) -> str:
    return f"sw{i}"


def encode_ta(ta: TimedAutomaton):
    """Clocked theory simulating ``ta`` plus the final-location query."""
    for sw in ta.switches:
        for c in sw.guard:
            if c.minus is not None:
                raise ValueError(
                    f"diagonal guard {c.clock} - {c.minus} {c.op} {c.bound} "
                    "cannot be expressed by clock comparisons")
    names = [switch_action(i) for i in range(len(ta.switches))]
    clash = (set(names) | {LOC}) & (set(ta.locations) | set(ta.clocks))
    if clash:
        raise ValueError(f"reserved name used in automaton: {', '.join(sorted(clash))}")
    lname = "l"
    while lname in ta.locations:
        lname += "_"
    l = Var(lname)
    poss, moved, into = {}, [], []
    for name, sw in zip(names, ta.switches):
        guard = [ClockCmp(c.clock, (), c.op, Fraction(c.bound)) for c in sw.guard]
        poss[name] = Axiom((), conj([Atom(LOC, (Obj(sw.source),))] + guard))
        into.append(And((ActionEq(name, ()), Equal(l, Obj(sw.target)))))
        moved.append(ActionEq(name, ()))
    stay = Atom(LOC, (l,)) if not moved else And((Atom(LOC, (l,)), Not(disj(moved))))
    resets = {}
    for x in ta.clocks:
        hits = [ActionEq(n, ()) for n, sw in zip(names, ta.switches) if x in sw.resets]
        if hits:
            resets[x] = Axiom((), disj(hits))
    bat = BAT(
        objects=tuple(ta.locations),
        actions=tuple(ActionSchema(n, 0) for n in names) + (ActionSchema(WAIT, 0, True),),
        fluents=(Symbol(LOC, 1),),
        rigids=(),
        clocks=tuple(Symbol(x, 0) for x in ta.clocks),
        init=frozenset({(LOC, (ta.initial,))}),
        poss=poss,
        ssa={LOC: Axiom((lname,), disj(into + [stay]))},
        reset=resets,
        name="ta",
    )
    query = disj(Atom(LOC, (Obj(f),)) for f in ta.finals)
    return bat, query
