"""Golog programs over clocked theories: single-step semantics and
realization search on the time-abstract program transition system."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .model import BAT, TRUE, WAIT, Formula, GroundAction, Obj
from .model import Poss as PossAtom
from .model import Situation, SourceSpan, Term, Var, substitute


class Program:
    __slots__ = ()

    def __str__(self):
        from .dsl import serialize_program
        return serialize_program(self)


@dataclass(frozen=True, slots=True)
class Act(Program):
    """Primitive action; ``wait`` carries no duration."""
    name: str
    args: tuple = ()
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Test(Program):
    cond: Formula
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Seq(Program):
    first: Program
    second: Program
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Choice(Program):
    left: Program
    right: Program
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Pick(Program):
    var: str
    body: Program
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Star(Program):
    body: Program
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Conc(Program):
    left: Program
    right: Program
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


NIL = Test(TRUE)


def if_then_else(cond: Formula, then: Program, other: Program) -> Program:
    from .model import Not
    return Choice(Seq(Test(cond), then), Seq(Test(Not(cond)), other))


def while_do(cond: Formula, body: Program) -> Program:
    from .model import Not
    return Seq(Star(Seq(Test(cond), body)), Test(Not(cond)))


def subst_program(p: Program, var: str, value: Term) -> Program:
    """Replace free occurrences of ``var`` in actions and tests."""
    if isinstance(p, Act):
        return Act(p.name, tuple(value if isinstance(t, Var) and t.name == var else t
                                 for t in p.args))
    if isinstance(p, Test):
        return Test(substitute(p.cond, {var: value}))
    if isinstance(p, Seq):
        return Seq(subst_program(p.first, var, value), subst_program(p.second, var, value))
    if isinstance(p, Choice):
        return Choice(subst_program(p.left, var, value), subst_program(p.right, var, value))
    if isinstance(p, Conc):
        return Conc(subst_program(p.left, var, value), subst_program(p.right, var, value))
    if isinstance(p, Star):
        return Star(subst_program(p.body, var, value))
    if isinstance(p, Pick):
        if p.var == var:
            return p
        return Pick(p.var, subst_program(p.body, var, value))
    raise TypeError(p)


# ------------------------------------------------------------- semantics

class _Context:
    """What the single-step rules need to know about the current situation."""

    objects: tuple

    def poss(self, a: GroundAction) -> bool:
        raise NotImplementedError

    def test(self, f: Formula) -> bool:
        raise NotImplementedError

    def waits(self) -> list:
        raise NotImplementedError


class _RegressionContext(_Context):
    """Reference semantics: every query is answered by regression."""

    def __init__(self, bat: BAT, sigma: Situation, K: Optional[int], durations=None):
        self.bat, self.sigma, self.K = bat, sigma, K
        self.objects = bat.objects
        self._durations = durations

    def poss(self, a):
        from .regression import holds
        return holds(self.bat, PossAtom(a.name, tuple(Obj(o) for o in a.args)), self.sigma)

    def test(self, f):
        from .regression import holds
        return holds(self.bat, f, self.sigma)

    def waits(self):
        if self._durations is not None:
            return list(self._durations)
        from .regions import eval_clocks, tsuccs
        return tsuccs(eval_clocks(self.bat, self.sigma), self.K)


class _EngineContext(_Context):
    def __init__(self, engine, state, K: int):
        self.engine, self.state, self.K = engine, state, K
        self.objects = engine.bat.objects

    def poss(self, a):
        return self.engine.possible(a, *self.state)

    def test(self, f):
        return self.engine.holds(f, *self.state)

    def waits(self):
        from .reach import tsuccs_int
        nums, d = tsuccs_int(self.state[1], self.state[2], self.K)
        return [Fraction(n, d) for n in nums]


def _ground_act(p: Act) -> GroundAction:
    names = []
    for t in p.args:
        if isinstance(t, Var):
            raise ValueError(f"unbound variable {t.name} in {p}")
        names.append(t.name)
    return GroundAction(p.name, tuple(names))


def _final(p: Program, ctx: _Context) -> bool:
    if isinstance(p, Act):
        return False
    if isinstance(p, Test):
        return ctx.test(p.cond)
    if isinstance(p, Seq):
        return _final(p.first, ctx) and _final(p.second, ctx)
    if isinstance(p, Choice):
        return _final(p.left, ctx) or _final(p.right, ctx)
    if isinstance(p, Pick):
        return any(_final(subst_program(p.body, p.var, Obj(o)), ctx) for o in ctx.objects)
    if isinstance(p, Star):
        return True
    if isinstance(p, Conc):
        return _final(p.left, ctx) and _final(p.right, ctx)
    raise TypeError(p)


def _trans(p: Program, ctx: _Context) -> list:
    """``(action, remaining program)`` pairs, without duplicates, in rule order."""
    if isinstance(p, Act):
        if p.name == WAIT:
            return [(GroundAction(WAIT, (), t), NIL) for t in ctx.waits()]
        a = _ground_act(p)
        return [(a, NIL)] if ctx.poss(a) else []
    if isinstance(p, Test):
        return []
    if isinstance(p, Seq):
        out = [(a, Seq(g, p.second)) for a, g in _trans(p.first, ctx)]
        if _final(p.first, ctx):
            out += _trans(p.second, ctx)
    elif isinstance(p, Choice):
        out = _trans(p.left, ctx) + _trans(p.right, ctx)
    elif isinstance(p, Pick):
        out = []
        for o in ctx.objects:
            out += _trans(subst_program(p.body, p.var, Obj(o)), ctx)
    elif isinstance(p, Star):
        out = [(a, Seq(g, p)) for a, g in _trans(p.body, ctx)]
    elif isinstance(p, Conc):
        out = [(a, Conc(g, p.right)) for a, g in _trans(p.left, ctx)]
        out += [(a, Conc(p.left, g)) for a, g in _trans(p.right, ctx)]
    else:
        raise TypeError(p)
    seen, uniq = set(), []
    for step in out:
        if step not in seen:
            seen.add(step)
            uniq.append(step)
    return uniq


def final(bat: BAT, program: Program, sigma: Situation) -> bool:
    """Whether ``program`` may terminate in ``sigma``."""
    return _final(program, _RegressionContext(bat, sigma, None))


def trans_steps(bat: BAT, program: Program, sigma: Situation, K: Optional[int] = None) -> list:
    """All single steps ``(action, remaining program, successor situation)``.

    ``wait()`` is instantiated with the canonical time successors of
    ``sigma``; ``K`` defaults to the maximal constant of the theory and the
    program's tests.
    """
    if K is None:
        K = program_max_constant(bat, program)
    ctx = _RegressionContext(bat, sigma, K)
    return [(a, rest, sigma.do(a)) for a, rest in _trans(program, ctx)]


def tests_of(p: Program) -> list:
    if isinstance(p, Test):
        return [p.cond]
    out = []
    for attr in ("first", "second", "left", "right", "body"):
        child = getattr(p, attr, None)
        if isinstance(child, Program):
            out += tests_of(child)
    return out


def program_max_constant(bat: BAT, program: Program) -> int:
    from .model import max_constant
    return max_constant(bat, tests_of(program))


def derivative_bound(p: Program, n_objects: int) -> int:
    """Upper bound on the number of distinct remaining programs reachable
    from ``p`` (``p`` itself included)."""
    if isinstance(p, Act):
        return 2
    if isinstance(p, Test):
        return 1
    if isinstance(p, Seq):
        return derivative_bound(p.first, n_objects) + derivative_bound(p.second, n_objects)
    if isinstance(p, Choice):
        return 1 + derivative_bound(p.left, n_objects) + derivative_bound(p.right, n_objects)
    if isinstance(p, Pick):
        return 1 + n_objects * derivative_bound(p.body, n_objects)
    if isinstance(p, Star):
        return 1 + derivative_bound(p.body, n_objects)
    if isinstance(p, Conc):
        return derivative_bound(p.left, n_objects) * derivative_bound(p.right, n_objects)
    raise TypeError(p)


# ---------------------------------------------------- program transition system

@dataclass(frozen=True)
class ProgState:
    abstract: object  # regions.AbstractState
    remaining: Program


@dataclass
class ProgramTS:
    """Quotient of program configurations; ids are BFS discovery order."""
    bat_name: str
    K: int
    states: list
    raw_edges: list
    parent: list
    finals: list
    realization_state: Optional[int] = None

    def path(self, i: int) -> Situation:
        from .reach import as_action
        acts = []
        while self.parent[i] is not None:
            i, lab = self.parent[i]
            acts.append(as_action(lab))
        return Situation(tuple(reversed(acts)))

    def __len__(self):
        return len(self.states)

    def to_json(self) -> str:
        import json
        from .reach import label_str
        doc = {
            "schema": "absts/1",
            "kind": "program",
            "bat": self.bat_name,
            "K": self.K,
            "initial": 0,
            "states": [{"id": i,
                        "fluents": [f"{n}({','.join(a)})" for n, a in sorted(s.abstract.fluents)],
                        "region": s.abstract.region.render(),
                        "program": str(s.remaining),
                        "final": self.finals[i]}
                       for i, s in enumerate(self.states)],
            "edges": [{"from": a, "action": label_str(lab), "to": b}
                      for a, lab, b in self.raw_edges],
            "witnesses": {str(i): "; ".join(map(str, self.path(i)))
                          for i in range(len(self.states))},
        }
        if self.realization_state is not None:
            doc["realization"] = [str(a) for a in self.path(self.realization_state)]
        return json.dumps(doc, separators=(",", ":")) + "\n"


def build_program_ts(bat: BAT, program: Program, K: Optional[int] = None,
                     max_states: Optional[int] = None, stop_at_final: bool = False,
                     engine=None) -> ProgramTS:
    """Breadth-first construction over pairs (situation class, remaining
    program).  With ``stop_at_final`` the search ends at the first final
    configuration."""
    from .reach import (DEFAULT_MAX_STATES, Engine, StateLimitExceeded,
                        _normalize, region_signature_int, tsuccs_int)
    from .model import max_constant
    needed = max_constant(bat, tests_of(program))
    if K is None:
        K = needed
    elif K < needed:
        raise ValueError(f"K = {K} is below the maximal constant {needed}")
    limit = DEFAULT_MAX_STATES if max_states is None else max_states
    eng = engine or Engine(bat)
    F, C, D = eng.initial()
    sig = region_signature_int(C, D, K)
    reps = [(F, C, D, program)]
    index = {(F, sig, program): 0}
    parent: list = [None]
    edges: list = []
    finals = [_final(program, _EngineContext(eng, (F, C, D), K))]
    hit = 0 if finals[0] else None
    queue = deque([0]) if not (stop_at_final and hit is not None) else deque()
    while queue:
        sid = queue.popleft()
        F, C, D, prog = reps[sid]
        ctx = _EngineContext(eng, (F, C, D), K)
        nums, dd = tsuccs_int(C, D, K)
        ctx.waits = lambda nums=nums, dd=dd: [Fraction(n, dd) for n in nums]
        for a, rest in _trans(prog, ctx):
            if a.is_wait:
                q = a.duration
                m = (dd // q.denominator)
                C2, D2 = _normalize(tuple(c * (dd // D) + q.numerator * m for c in C), dd)
                F2 = F
            else:
                F2, C2, D2 = eng.apply(a, F, C, D)
            key = (F2, region_signature_int(C2, D2, K), rest)
            nid = index.get(key)
            if nid is None:
                nid = len(reps)
                if nid >= limit:
                    raise StateLimitExceeded(limit)
                index[key] = nid
                reps.append((F2, C2, D2, rest))
                parent.append((sid, a))
                is_final = _final(rest, _EngineContext(eng, (F2, C2, D2), K))
                finals.append(is_final)
                if is_final and hit is None:
                    hit = nid
                queue.append(nid)
            edges.append((sid, a, nid))
            if stop_at_final and hit is not None:
                queue.clear()
                break
    states = [ProgState(eng.abstract(F, C, D, K), prog) for F, C, D, prog in reps]
    return ProgramTS(bat.name, K, states, edges, parent, finals, hit)


def find_realization(bat: BAT, program: Program, K: Optional[int] = None,
                     max_states: Optional[int] = None) -> Optional[Situation]:
    """Shortest (in steps) action sequence driving ``program`` from S0 to a
    final configuration, or ``None`` if none exists."""
    ts = build_program_ts(bat, program, K, max_states, stop_at_final=True)
    if ts.realization_state is None:
        return None
    return ts.path(ts.realization_state)


def replay(bat: BAT, program: Program, actions) -> bool:
    """Independent check that ``actions`` is a realization of ``program``:
    step through the single-step rules with regression-based queries,
    allowing any duration for ``wait()``, and require a final configuration
    at the end."""
    frontier = [program]
    sigma = Situation()
    for a in actions:
        durations = [a.duration] if a.is_wait else []
        ctx = _RegressionContext(bat, sigma, None, durations)
        nxt = []
        for p in frontier:
            for b, rest in _trans(p, ctx):
                if b == a and rest not in nxt:
                    nxt.append(rest)
        if not nxt:
            return False
        frontier = nxt
        sigma = sigma.do(a)
    ctx = _RegressionContext(bat, sigma, None)
    return any(_final(p, ctx) for p in frontier)
