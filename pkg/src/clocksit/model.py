"""Core types: terms, clocked formulas, action theories, situations.

Formulas are situation-suppressed trees; the situation they are evaluated in
is always passed separately.  All time values are ``fractions.Fraction``.
"""
from __future__ import annotations

import itertools
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union

WAIT = "wait"

COMPARATORS: dict[str, Callable] = {
    "<": operator.lt,
    "<=": operator.le,
    "=": operator.eq,
    ">=": operator.ge,
    ">": operator.gt,
}


@dataclass(frozen=True, slots=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


# ---------------------------------------------------------------- terms

@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Obj:
    name: str

    def __str__(self):
        return self.name


Term = Union[Var, Obj]


# ------------------------------------------------------------- formulas

class Formula:
    """Base class for formula nodes."""

    __slots__ = ()

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)

    def __str__(self):
        from .dsl import format_formula
        return format_formula(self)


@dataclass(frozen=True, slots=True)
class Const(Formula):
    value: bool
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    """Relational fluent or rigid predicate applied to object terms."""
    pred: str
    args: tuple = ()
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Equal(Formula):
    left: Term
    right: Term
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class ClockCmp(Formula):
    """``clock(args) op bound``.  User bounds are naturals; regression may
    produce negative or fractional bounds."""
    clock: str
    args: tuple
    op: str
    bound: Fraction
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class NumCmp(Formula):
    """Comparison between two time constants, e.g. ``0 >= 1`` produced by
    regressing a clock comparison through a reset."""
    left: Fraction
    op: str
    right: Fraction
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class ClockRelation(Formula):
    """Comparison between two clock terms.  Not clocked; only exists so
    that such input can be reported instead of silently rejected."""
    left: str
    left_args: tuple
    op: str
    right: str
    right_args: tuple
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class ActionEq(Formula):
    """``a == A(args)`` for the action variable of an SSA or reset body."""
    schema: str
    args: tuple = ()
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Poss(Formula):
    schema: str
    args: tuple = ()
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Not(Formula):
    body: Formula
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class And(Formula):
    parts: tuple
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Or(Formula):
    parts: tuple
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Implies(Formula):
    left: Formula
    right: Formula
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Iff(Formula):
    left: Formula
    right: Formula
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Exists(Formula):
    var: str
    body: Formula
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Forall(Formula):
    var: str
    body: Formula
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class TimeQuantifier(Formula):
    """Quantifier over a time variable.  Never produced by the parser."""
    var: str
    body: Formula
    universal: bool = False
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class SituationRelation(Formula):
    """Situation ordering (``prec``) or equality (``eq``) atom; also
    ``quant`` for a quantifier over situations.  Never produced by the
    parser."""
    kind: str
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


QUANTIFIERS = (Exists, Forall)


def children(f: Formula) -> tuple:
    if isinstance(f, (Not,)):
        return (f.body,)
    if isinstance(f, (And, Or)):
        return f.parts
    if isinstance(f, (Implies, Iff)):
        return (f.left, f.right)
    if isinstance(f, (Exists, Forall, TimeQuantifier)):
        return (f.body,)
    return ()


def walk(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def free_vars(f: Formula) -> frozenset:
    if isinstance(f, (Atom, ClockCmp, ActionEq, Poss)):
        return frozenset(t.name for t in f.args if isinstance(t, Var))
    if isinstance(f, Equal):
        return frozenset(t.name for t in (f.left, f.right) if isinstance(t, Var))
    if isinstance(f, ClockRelation):
        return frozenset(t.name for t in f.left_args + f.right_args
                         if isinstance(t, Var))
    if isinstance(f, (Exists, Forall, TimeQuantifier)):
        return free_vars(f.body) - {f.var}
    out = frozenset()
    for c in children(f):
        out |= free_vars(c)
    return out


def _term_sub(t: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    return t


def _fresh(base: str, avoid: set) -> str:
    for i in itertools.count(1):
        cand = f"{base}_{i}"
        if cand not in avoid:
            return cand
    raise AssertionError  # pragma: no cover


def substitute(f: Formula, mapping: Mapping[str, Term]) -> Formula:
    """Capture-avoiding substitution of variables by terms."""
    if not mapping:
        return f
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(_term_sub(t, mapping) for t in f.args))
    if isinstance(f, ClockCmp):
        return ClockCmp(f.clock, tuple(_term_sub(t, mapping) for t in f.args),
                        f.op, f.bound)
    if isinstance(f, ActionEq):
        return ActionEq(f.schema, tuple(_term_sub(t, mapping) for t in f.args))
    if isinstance(f, Poss):
        return Poss(f.schema, tuple(_term_sub(t, mapping) for t in f.args))
    if isinstance(f, Equal):
        return Equal(_term_sub(f.left, mapping), _term_sub(f.right, mapping))
    if isinstance(f, ClockRelation):
        return ClockRelation(f.left, tuple(_term_sub(t, mapping) for t in f.left_args),
                             f.op, f.right,
                             tuple(_term_sub(t, mapping) for t in f.right_args))
    if isinstance(f, Not):
        return Not(substitute(f.body, mapping))
    if isinstance(f, And):
        return And(tuple(substitute(p, mapping) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(substitute(p, mapping) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(substitute(f.left, mapping), substitute(f.right, mapping))
    if isinstance(f, Iff):
        return Iff(substitute(f.left, mapping), substitute(f.right, mapping))
    if isinstance(f, (Exists, Forall, TimeQuantifier)):
        inner = {k: v for k, v in mapping.items() if k != f.var}
        if not inner:
            return f
        incoming = {t.name for t in inner.values() if isinstance(t, Var)}
        var, body = f.var, f.body
        if var in incoming:
            avoid = incoming | free_vars(body) | set(inner)
            new = _fresh(var, avoid)
            body = substitute(body, {var: Var(new)})
            var = new
        body = substitute(body, inner)
        if isinstance(f, TimeQuantifier):
            return TimeQuantifier(var, body, f.universal)
        return type(f)(var, body)
    return f


def conj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(parts)


def disj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return FALSE
    return parts[0] if len(parts) == 1 else Or(parts)


# ------------------------------------------------------ actions, situations

@dataclass(frozen=True, slots=True)
class ActionSchema:
    name: str
    arity: int = 0
    is_wait: bool = False


@dataclass(frozen=True, slots=True)
class GroundAction:
    name: str
    args: tuple = ()
    duration: Optional[Fraction] = None

    def __post_init__(self):
        if self.name == WAIT:
            if self.duration is None or self.args:
                raise ValueError("wait takes exactly one duration")
            if self.duration < 0:
                raise ValueError("wait duration must be nonnegative")
            if not isinstance(self.duration, Fraction):
                object.__setattr__(self, "duration", Fraction(self.duration))
        elif self.duration is not None:
            raise ValueError(f"{self.name} takes no duration")

    @property
    def is_wait(self) -> bool:
        return self.duration is not None

    def __str__(self):
        if self.is_wait:
            return f"wait({format_rational(self.duration)})"
        return f"{self.name}({', '.join(self.args)})"


def wait(duration) -> GroundAction:
    return GroundAction(WAIT, (), Fraction(duration))


def act(name: str, *args: str) -> GroundAction:
    return GroundAction(name, tuple(args))


@dataclass(frozen=True, slots=True)
class Situation:
    """Ground action history from S0."""
    actions: tuple = ()

    def do(self, a: GroundAction) -> "Situation":
        return Situation(self.actions + (a,))

    def prefix(self, n: int) -> "Situation":
        return Situation(self.actions[:n])

    def __len__(self):
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def __str__(self):
        if not self.actions:
            return "S0"
        return f"do([{'; '.join(map(str, self.actions))}], S0)"


S0 = Situation()


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ------------------------------------------------------------------ BAT

@dataclass(frozen=True, slots=True)
class Symbol:
    name: str
    arity: int = 0


@dataclass(frozen=True, slots=True)
class Axiom:
    """Parameterised body of a precondition, SSA or reset condition."""
    params: tuple
    body: Formula

    def instantiate(self, args: Iterable[Term]) -> Formula:
        args = tuple(args)
        if len(args) != len(self.params):
            raise ValueError("arity mismatch")
        return substitute(self.body, dict(zip(self.params, args)))


@dataclass(frozen=True, eq=True)
class BAT:
    objects: tuple
    actions: tuple
    fluents: tuple
    rigids: tuple
    clocks: tuple
    init: frozenset
    poss: Mapping[str, Axiom] = field(default_factory=dict)
    ssa: Mapping[str, Axiom] = field(default_factory=dict)
    reset: Mapping[str, Axiom] = field(default_factory=dict)
    name: str = ""

    __hash__ = None  # type: ignore[assignment]

    def schema(self, name: str) -> ActionSchema:
        for s in self.actions:
            if s.name == name:
                return s
        raise KeyError(name)

    def reset_axiom(self, clock: str) -> Axiom:
        if clock in self.reset:
            return self.reset[clock]
        arity = next(c.arity for c in self.clocks if c.name == clock)
        return Axiom(tuple(f"x{i}" for i in range(arity)), FALSE)

    def ground_atoms(self, symbols: Iterable[Symbol]) -> list:
        out = []
        for s in symbols:
            for args in itertools.product(self.objects, repeat=s.arity):
                out.append((s.name, args))
        return out

    @property
    def fluent_atoms(self) -> list:
        return self.ground_atoms(self.fluents)

    @property
    def rigid_atoms(self) -> list:
        return self.ground_atoms(self.rigids)

    @property
    def clock_terms(self) -> list:
        return self.ground_atoms(self.clocks)


@dataclass(frozen=True)
class Violation:
    """A failed clocked-theory condition.

    ``clause`` numbers: 0 structure (names, arities, closure), 1 clocks are
    the only functional fluents, 2 clocks start at zero, 3 reset conditions
    are time-independent, 4 fluent SSAs are clocked, 5 preconditions are
    clocked, 6 waiting is always possible.
    """
    clause: int
    symbol: str
    message: str

    def __str__(self):
        return f"[{self.clause}] {self.symbol}: {self.message}"


def _check_formula(bat: BAT, f: Formula, bound: set, clause: int, owner: str,
                   *, allow_action_eq: bool, time_independent: bool,
                   out: list) -> None:
    preds = {s.name: s.arity for s in bat.fluents + bat.rigids}
    clocks = {s.name: s.arity for s in bat.clocks}
    schemas = {s.name: s for s in bat.actions}
    objects = set(bat.objects)

    def visit(g, scope):
        if isinstance(g, Atom):
            if g.pred in clocks:
                out.append(Violation(clause, owner,
                                     f"non-clock-comparison atom on clock {g.pred}"))
            elif g.pred not in preds:
                out.append(Violation(0, owner, f"unknown predicate {g.pred}"))
            elif preds[g.pred] != len(g.args):
                out.append(Violation(0, owner, f"arity mismatch for {g.pred}"))
            for t in g.args:
                term_ok_scoped(t, scope)
        elif isinstance(g, Equal):
            term_ok_scoped(g.left, scope)
            term_ok_scoped(g.right, scope)
        elif isinstance(g, ClockCmp):
            if time_independent:
                out.append(Violation(clause, owner,
                                     "reset not time-independent"))
            if g.clock not in clocks:
                out.append(Violation(0, owner, f"unknown clock {g.clock}"))
            elif clocks[g.clock] != len(g.args):
                out.append(Violation(0, owner, f"arity mismatch for {g.clock}"))
            b = Fraction(g.bound)
            if b < 0 or b.denominator != 1:
                out.append(Violation(clause, owner,
                                     f"clock bound {b} is not a natural number"))
            for t in g.args:
                term_ok_scoped(t, scope)
        elif isinstance(g, NumCmp):
            if time_independent:
                out.append(Violation(clause, owner, "reset not time-independent"))
            for b in (Fraction(g.left), Fraction(g.right)):
                if b < 0 or b.denominator != 1:
                    out.append(Violation(clause, owner,
                                         f"time constant {b} is not a natural number"))
        elif isinstance(g, ClockRelation):
            out.append(Violation(clause, owner,
                                 f"non-clock-comparison atom {g.left} {g.op} {g.right}"))
        elif isinstance(g, ActionEq):
            if not allow_action_eq:
                out.append(Violation(clause, owner, "action equality outside SSA"))
            s = schemas.get(g.schema)
            if s is None:
                out.append(Violation(0, owner, f"unknown action {g.schema}"))
            elif s.is_wait:
                out.append(Violation(clause, owner, "action equality on wait mentions time"))
            elif s.arity != len(g.args):
                out.append(Violation(0, owner, f"arity mismatch for {g.schema}"))
            for t in g.args:
                term_ok_scoped(t, scope)
        elif isinstance(g, Poss):
            out.append(Violation(clause, owner, "Poss inside an axiom body"))
        elif isinstance(g, TimeQuantifier):
            out.append(Violation(clause, owner, "quantifies over time"))
        elif isinstance(g, SituationRelation):
            out.append(Violation(clause, owner, "mentions situations"))
        elif isinstance(g, (Exists, Forall)):
            visit(g.body, scope | {g.var})
        else:
            for c in children(g):
                visit(c, scope)

    def term_ok_scoped(t, scope):
        if isinstance(t, Var):
            if t.name not in scope:
                out.append(Violation(0, owner, f"free variable {t.name}"))
        elif t.name not in objects:
            out.append(Violation(0, owner, f"unknown object {t.name}"))

    visit(f, set(bound))


def validate_bat(bat: BAT) -> list:
    """Check that ``bat`` is a well-formed clocked action theory."""
    out: list = []
    seen: dict = {}
    kinds = [("object", [Symbol(o) for o in bat.objects]),
             ("action", list(bat.actions)), ("fluent", list(bat.fluents)),
             ("rigid", list(bat.rigids)), ("clock", list(bat.clocks))]
    for kind, syms in kinds:
        for s in syms:
            if s.name in seen:
                out.append(Violation(0, s.name,
                                     f"duplicate declaration ({seen[s.name]} and {kind})"))
            else:
                seen[s.name] = kind
            if getattr(s, "arity", 0) < 0:
                out.append(Violation(0, s.name, "negative arity"))

    waits = [s for s in bat.actions if s.is_wait]
    if len(waits) != 1:
        out.append(Violation(6, WAIT, f"expected exactly one wait action, found {len(waits)}"))
    for w in waits:
        if w.arity != 0:
            out.append(Violation(6, w.name, "wait takes a duration, not objects"))
        ax = bat.poss.get(w.name)
        if ax is not None and ax.body != TRUE:
            out.append(Violation(6, w.name, "wait precondition must be true"))

    clock_names = {c.name for c in bat.clocks}
    pred_arity = {s.name: s.arity for s in bat.fluents + bat.rigids}
    objects = set(bat.objects)
    for name, args in sorted(bat.init):
        if name in clock_names:
            out.append(Violation(2, name, "clocks are initialised to zero, not listed in init"))
        elif name not in pred_arity:
            out.append(Violation(0, name, "init mentions an undeclared predicate"))
        elif pred_arity[name] != len(args):
            out.append(Violation(0, name, "arity mismatch in init"))
        for o in args:
            if o not in objects:
                out.append(Violation(0, name, f"init mentions unknown object {o}"))

    for s in bat.actions:
        if s.is_wait:
            continue
        ax = bat.poss.get(s.name)
        if ax is None:
            out.append(Violation(5, s.name, "missing precondition axiom"))
            continue
        if len(ax.params) != s.arity:
            out.append(Violation(0, s.name, "precondition parameter count"))
        _check_formula(bat, ax.body, set(ax.params), 5, s.name,
                       allow_action_eq=False, time_independent=False, out=out)
    for name in bat.poss:
        if name not in {s.name for s in bat.actions}:
            out.append(Violation(0, name, "precondition for undeclared action"))

    for s in bat.fluents:
        ax = bat.ssa.get(s.name)
        if ax is None:
            out.append(Violation(4, s.name, "missing successor state axiom"))
            continue
        if len(ax.params) != s.arity:
            out.append(Violation(0, s.name, "SSA parameter count"))
        _check_formula(bat, ax.body, set(ax.params), 4, s.name,
                       allow_action_eq=True, time_independent=False, out=out)
    for name in bat.ssa:
        if name not in {s.name for s in bat.fluents}:
            out.append(Violation(0, name, "SSA for undeclared fluent"))

    for s in bat.clocks:
        ax = bat.reset.get(s.name)
        if ax is None:
            continue
        if len(ax.params) != s.arity:
            out.append(Violation(0, s.name, "reset parameter count"))
        _check_formula(bat, ax.body, set(ax.params), 3, s.name,
                       allow_action_eq=True, time_independent=True, out=out)
    for name in bat.reset:
        if name not in clock_names:
            out.append(Violation(1, name, "reset condition for a non-clock symbol"))
    return out


def ground_actions(bat: BAT) -> list:
    """All non-wait ground actions, schema declaration order then argument
    tuples in lexicographic object order."""
    out = []
    for s in bat.actions:
        if s.is_wait:
            continue
        for args in itertools.product(bat.objects, repeat=s.arity):
            out.append(GroundAction(s.name, args))
    return out


def _constants(f: Formula) -> Iterator[Fraction]:
    for node in walk(f):
        if isinstance(node, ClockCmp):
            yield Fraction(node.bound)
        elif isinstance(node, NumCmp):
            yield Fraction(node.left)
            yield Fraction(node.right)


def max_constant(bat: BAT, extra: Iterable[Formula] = ()) -> int:
    """Largest time constant in the theory and ``extra`` (0 if none)."""
    best = Fraction(0)
    bodies = [ax.body for ax in bat.poss.values()]
    bodies += [ax.body for ax in bat.ssa.values()]
    bodies += [ax.body for ax in bat.reset.values()]
    for f in itertools.chain(bodies, extra):
        for c in _constants(f):
            best = max(best, c)
    # ceil keeps the abstraction sound for any internal rational bound
    return -((-best.numerator) // best.denominator)


# ------------------------------------------------------------ evaluation

def evaluate(f: Formula, objects: tuple, true_atoms, clocks: Mapping,
             env: Optional[dict] = None, action: Optional[GroundAction] = None) -> bool:
    """Truth of ``f`` in a concrete state.

    ``true_atoms`` holds ``(pred, args)`` pairs, ``clocks`` maps
    ``(clock, args)`` to a value.  ``action`` binds the action variable of
    SSA bodies; without it, action equalities are an error.
    """
    env = {} if env is None else env

    def term(t):
        if isinstance(t, Var):
            try:
                return env[t.name]
            except KeyError:
                raise ValueError(f"unbound variable {t.name}") from None
        return t.name

    def ev(g) -> bool:
        if isinstance(g, Const):
            return g.value
        if isinstance(g, Atom):
            return (g.pred, tuple(term(t) for t in g.args)) in true_atoms
        if isinstance(g, ClockCmp):
            v = clocks[(g.clock, tuple(term(t) for t in g.args))]
            return COMPARATORS[g.op](v, g.bound)
        if isinstance(g, NumCmp):
            return COMPARATORS[g.op](g.left, g.right)
        if isinstance(g, Equal):
            return term(g.left) == term(g.right)
        if isinstance(g, Not):
            return not ev(g.body)
        if isinstance(g, And):
            return all(ev(p) for p in g.parts)
        if isinstance(g, Or):
            return any(ev(p) for p in g.parts)
        if isinstance(g, Implies):
            return (not ev(g.left)) or ev(g.right)
        if isinstance(g, Iff):
            return ev(g.left) == ev(g.right)
        if isinstance(g, (Exists, Forall)):
            saved = env.get(g.var, _MISSING)
            try:
                for o in objects:
                    env[g.var] = o
                    r = ev(g.body)
                    if isinstance(g, Exists) and r:
                        return True
                    if isinstance(g, Forall) and not r:
                        return False
                return isinstance(g, Forall)
            finally:
                if saved is _MISSING:
                    env.pop(g.var, None)
                else:
                    env[g.var] = saved
        if isinstance(g, ActionEq):
            if action is None:
                raise ValueError("action equality outside an SSA context")
            if action.is_wait or action.name != g.schema:
                return False
            return tuple(term(t) for t in g.args) == action.args
        if isinstance(g, ClockRelation):
            lhs = clocks[(g.left, tuple(term(t) for t in g.left_args))]
            rhs = clocks[(g.right, tuple(term(t) for t in g.right_args))]
            return COMPARATORS[g.op](lhs, rhs)
        raise ValueError(f"cannot evaluate {type(g).__name__}")

    return ev(f)


_MISSING = object()
