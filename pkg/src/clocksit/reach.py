"""Executability, the time-abstract transition system and reachability.

Exploration runs on a compiled form of the theory: every ground
precondition, successor-state axiom and reset condition is flattened
(quantifiers expanded over the finite domain, rigid atoms and action
equalities folded) into a Python expression over a fluent tuple ``F`` and a
clock tuple ``C``.  The regression-based :func:`regression.holds` remains
the reference semantics; tests cross-check the two.
"""
from __future__ import annotations

import json
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Callable, Optional

from .model import (BAT, ActionEq, And, Atom, ClockCmp, Const, Equal, Exists,
                    Forall, Formula, GroundAction, Iff, Implies, Not, NumCmp,
                    Obj, Or, Poss, Situation, Var, COMPARATORS, WAIT,
                    ground_actions, max_constant)
from .regions import AbstractState, key_from_signature
from .regression import holds

DEFAULT_MAX_STATES = 1_000_000


class StateLimitExceeded(RuntimeError):
    def __init__(self, limit: int):
        super().__init__(f"state limit of {limit} exceeded")
        self.limit = limit


# ------------------------------------------------------------ compilation

_OPS = {"<": "<", "<=": "<=", "=": "==", ">=": ">=", ">": ">"}


class Compiler:
    """Turns ground formulas into ``lambda F, C, D: ...`` closures.

    Clock values are kept as integers ``C`` over a common denominator ``D``,
    so ``c >= 2`` compiles to ``C[j] >= 2 * D``.
    """

    def __init__(self, bat: BAT):
        self.bat = bat
        self.fluent_atoms = bat.fluent_atoms
        self.fluent_index = {a: i for i, a in enumerate(self.fluent_atoms)}
        self.clock_terms = bat.clock_terms
        self.clock_index = {t: i for i, t in enumerate(self.clock_terms)}
        self.rigids = {s.name for s in bat.rigids}
        self._cache: dict = {}

    def expr(self, f: Formula, env: dict, action: Optional[GroundAction] = None):
        """Python source for ``f`` or a bool when it folds to a constant."""
        def term(t):
            if isinstance(t, Var):
                try:
                    return env[t.name]
                except KeyError:
                    raise ValueError(f"unbound variable {t.name}") from None
            return t.name

        if isinstance(f, Const):
            return f.value
        if isinstance(f, Atom):
            key = (f.pred, tuple(term(t) for t in f.args))
            if f.pred in self.rigids:
                return key in self.bat.init
            return f"F[{self.fluent_index[key]}]"
        if isinstance(f, Equal):
            return term(f.left) == term(f.right)
        if isinstance(f, ClockCmp):
            j = self.clock_index[(f.clock, tuple(term(t) for t in f.args))]
            b = Fraction(f.bound)
            lhs = f"C[{j}]" if b.denominator == 1 else f"C[{j}] * {b.denominator}"
            return f"({lhs} {_OPS[f.op]} {b.numerator} * D)"
        if isinstance(f, NumCmp):
            return COMPARATORS[f.op](f.left, f.right)
        if isinstance(f, ActionEq):
            if action is None:
                raise ValueError("action equality outside an SSA context")
            if action.is_wait or action.name != f.schema:
                return False
            return tuple(term(t) for t in f.args) == action.args
        if isinstance(f, Poss):
            if self.bat.schema(f.schema).is_wait:
                return True
            ax = self.bat.poss[f.schema]
            inner = dict(zip(ax.params, (term(t) for t in f.args)))
            return self.expr(ax.body, inner, action)
        if isinstance(f, Not):
            b = self.expr(f.body, env, action)
            return (not b) if isinstance(b, bool) else f"(not {b})"
        if isinstance(f, (And, Or)):
            return self._junction(isinstance(f, And),
                                  [self.expr(p, env, action) for p in f.parts])
        if isinstance(f, Implies):
            return self.expr(Or((Not(f.left), f.right)), env, action)
        if isinstance(f, Iff):
            lhs = self.expr(f.left, env, action)
            rhs = self.expr(f.right, env, action)
            if isinstance(lhs, bool) and isinstance(rhs, bool):
                return lhs == rhs
            if isinstance(lhs, bool):
                lhs, rhs = rhs, lhs
            if isinstance(rhs, bool):
                return lhs if rhs else f"(not {lhs})"
            return f"(bool({lhs}) == bool({rhs}))"
        if isinstance(f, (Exists, Forall)):
            parts = []
            for o in self.bat.objects:
                inner = dict(env)
                inner[f.var] = o
                parts.append(self.expr(f.body, inner, action))
            return self._junction(isinstance(f, Forall), parts)
        raise ValueError(f"cannot compile {type(f).__name__}")

    @staticmethod
    def _junction(is_and: bool, parts: list):
        unit, zero = (True, False) if is_and else (False, True)
        keep = []
        for p in parts:
            if p is zero:
                return zero
            if p is unit:
                continue
            if p not in keep:
                keep.append(p)
        if not keep:
            return unit
        if len(keep) == 1:
            return keep[0]
        return "(" + (" and " if is_and else " or ").join(keep) + ")"

    @staticmethod
    def function(source) -> Callable:
        if isinstance(source, bool):
            return (lambda F, C, D: True) if source else (lambda F, C, D: False)
        return eval(f"lambda F, C, D: bool({source})", {})

    def condition(self, f: Formula) -> Callable:
        """Closed formula (no action variable) as a predicate on (F, C, D)."""
        fn = self._cache.get(f)
        if fn is None:
            fn = self.function(self.expr(f, {}))
            self._cache[f] = fn
        return fn

    def effect(self, action: GroundAction) -> Callable:
        """``(F, C, D) -> (F', C')`` for a non-wait ground action."""
        fparts = []
        for i, (name, args) in enumerate(self.fluent_atoms):
            ax = self.bat.ssa[name]
            src = self.expr(ax.body, dict(zip(ax.params, args)), action)
            if isinstance(src, bool):
                fparts.append(repr(src))
            elif src == f"F[{i}]":
                fparts.append(src)
            else:
                fparts.append(f"bool({src})")
        cparts = []
        for j, (name, args) in enumerate(self.clock_terms):
            ax = self.bat.reset_axiom(name)
            src = self.expr(ax.body, dict(zip(ax.params, args)), action)
            if src is True:
                cparts.append("0")
            elif src is False:
                cparts.append(f"C[{j}]")
            else:
                cparts.append(f"(0 if {src} else C[{j}])")
        if all(p == f"C[{j}]" for j, p in enumerate(cparts)):
            ctuple = "C"
        else:
            ctuple = f"({''.join(p + ', ' for p in cparts)})"
        body = f"(({''.join(p + ', ' for p in fparts)}), {ctuple})"
        return eval(f"lambda F, C, D: {body}", {})


def region_signature_int(C: tuple, D: int, K: int) -> tuple:
    """:func:`regions.region_signature` for integer clocks over ``D``."""
    ints, zero, fracs = [], [], {}
    top = K * D
    for i, v in enumerate(C):
        if v > top:
            ints.append(None)
            zero.append(False)
            continue
        fl, fr = divmod(v, D)
        ints.append(fl)
        zero.append(fr == 0)
        if fr in fracs:
            fracs[fr].append(i)
        else:
            fracs[fr] = [i]
    return tuple(ints), tuple(zero), tuple(tuple(fracs[f]) for f in sorted(fracs))


def tsuccs_int(C: tuple, D: int, K: int) -> tuple:
    """Time successors of integer clocks; returns (numerators, denominator)
    with durations ``n / denominator``, the first being 0."""
    vals = list(C)
    out = [0]
    last = 0
    while True:
        top = K * D
        live = [v for v in vals if v <= top]
        if not live:
            return out, D
        fr = [v % D for v in live]
        mu = max(fr)
        if 0 in fr:
            if (D - mu) % 2:
                vals = [v * 2 for v in vals]
                out = [x * 2 for x in out]
                last *= 2
                D *= 2
                mu *= 2
            incr = (D - mu) // 2
        else:
            incr = D - mu
        last += incr
        out.append(last)
        vals = [v + incr for v in vals]


def label_str(label) -> str:
    if isinstance(label, GroundAction):
        return str(label)
    n, d = label
    g = gcd(n, d)
    n, d = n // g, d // g
    return f"wait({n})" if d == 1 else f"wait({n}/{d})"


def as_action(label) -> GroundAction:
    if isinstance(label, GroundAction):
        return label
    return GroundAction(WAIT, (), Fraction(label[0], label[1]))


@dataclass
class CompiledAction:
    action: GroundAction
    poss: Callable
    effect: Callable


def _normalize(C: tuple, D: int) -> tuple:
    g = D
    for v in C:
        if g == 1:
            break
        g = gcd(g, v)
    if g == 1:
        return C, D
    return tuple(v // g for v in C), D // g


class Engine:
    """Compiled successor function of a clocked theory.

    A concrete state is ``(F, C, D)``: fluent truth values in
    ``bat.fluent_atoms`` order, integer clock numerators in
    ``bat.clock_terms`` order, and their common denominator.
    """

    def __init__(self, bat: BAT):
        self.bat = bat
        self.compiler = Compiler(bat)
        self.actions = []
        for a in ground_actions(bat):
            ax = bat.poss[a.name]
            pre = self.compiler.expr(ax.body, dict(zip(ax.params, a.args)))
            self.actions.append(CompiledAction(a, self.compiler.function(pre),
                                               self.compiler.effect(a)))
        self.by_action = {ca.action: ca for ca in self.actions}
        self.fluent_atoms = self.compiler.fluent_atoms
        self.clock_terms = self.compiler.clock_terms
        self._wait_sigs: dict = {}
        self._true_cache: dict = {}
        self._key_cache: dict = {}

    def initial(self) -> tuple:
        F = tuple(a in self.bat.init for a in self.fluent_atoms)
        return F, tuple(0 for _ in self.clock_terms), 1

    def possible(self, a: GroundAction, F, C, D) -> bool:
        if a.is_wait:
            return True
        return self.by_action[a].poss(F, C, D)

    def apply(self, a: GroundAction, F, C, D) -> tuple:
        if a.is_wait:
            q = a.duration
            lcm = D * q.denominator // gcd(D, q.denominator)
            m = lcm // D
            t = q.numerator * (lcm // q.denominator)
            C, D = _normalize(tuple(c * m + t for c in C), lcm)
            return F, C, D
        F2, C2 = self.by_action[a].effect(F, C, D)
        return (F2,) + _normalize(C2, D)

    def replay(self, sigma: Situation) -> tuple:
        state = self.initial()
        for a in sigma:
            state = self.apply(a, *state)
        return state

    def clocks(self, C, D) -> dict:
        return {t: Fraction(v, D) for t, v in zip(self.clock_terms, C)}

    def true_atoms(self, F) -> frozenset:
        return frozenset(a for a, v in zip(self.fluent_atoms, F) if v)

    def key(self, F, C, D, K: int) -> tuple:
        return F, region_signature_int(C, D, K)

    def abstract(self, F, C, D, K: int, sig=None) -> AbstractState:
        true = self._true_cache.get(F)
        if true is None:
            true = frozenset(a for a, v in zip(self.fluent_atoms, F) if v)
            self._true_cache[F] = true
        if sig is None:
            sig = region_signature_int(C, D, K)
        key = self._key_cache.get(sig)
        if key is None:
            key = key_from_signature(self.clock_terms, sig)
            self._key_cache[sig] = key
        return AbstractState(true, key)

    def expand(self, F, C, D, sig, K: int) -> list:
        """Raw successors ``(label, F', C', D', sig')``.  ``label`` is a
        :class:`GroundAction`, or ``(n, d)`` for ``wait(n/d)``; ``sig`` is the
        region signature, reused whenever the clocks are untouched."""
        out = []
        for ca in self.actions:
            if ca.poss(F, C, D):
                F2, C2 = ca.effect(F, C, D)
                if C2 is C:
                    out.append((ca.action, F2, C, D, sig))
                else:
                    C2, D2 = _normalize(C2, D)
                    out.append((ca.action, F2, C2, D2, region_signature_int(C2, D2, K)))
        nums, D2 = tsuccs_int(C, D, K)
        m = D2 // D
        base = [c * m for c in C] if m != 1 else C
        out.append(((0, 1), F, C, D, sig))
        for n in nums[1:]:
            C3, D3 = _normalize(tuple(c + n for c in base), D2)
            out.append(((n, D2), F, C3, D3, region_signature_int(C3, D3, K)))
        return out

    def action_successors(self, F, C, D, sig, K: int) -> list:
        out = []
        for ca in self.actions:
            if ca.poss(F, C, D):
                F2, C2 = ca.effect(F, C, D)
                if C2 is C:
                    out.append((ca.action, F2, C, D, sig))
                else:
                    C2, D2 = _normalize(C2, D)
                    out.append((ca.action, F2, C2, D2, region_signature_int(C2, D2, K)))
        return out

    def wait_signatures(self, C, D, sig, K: int) -> tuple:
        """Regions reached by each canonical wait.  They depend on the
        current region only, so they are cached per signature."""
        hit = self._wait_sigs.get((sig, K))
        if hit is None:
            nums, D2 = tsuccs_int(C, D, K)
            m = D2 // D
            hit = tuple(region_signature_int(*_normalize(tuple(c * m + n for c in C), D2), K)
                        for n in nums)
            self._wait_sigs[(sig, K)] = hit
        return hit

    def successors(self, F, C, D, K: int) -> list:
        """Algorithm-1 candidate actions that are possible, with results."""
        sig = region_signature_int(C, D, K)
        return [(as_action(lab), (F2, C2, D2))
                for lab, F2, C2, D2, _ in self.expand(F, C, D, sig, K)]

    def holds(self, phi: Formula, F, C, D) -> bool:
        return self.compiler.condition(phi)(F, C, D)


# ---------------------------------------------------------- executability

def exec_check(bat: BAT, sigma: Situation) -> bool:
    """Every action of ``sigma`` is possible where it occurs (by regression)."""
    for n, a in enumerate(sigma.actions):
        if a.is_wait:
            continue
        if not holds(bat, Poss(a.name, tuple(Obj(o) for o in a.args)), sigma.prefix(n)):
            return False
    return True


# ------------------------------------------------------- transition system

@dataclass
class TransitionSystem:
    """Quotient of the situation tree.  State ids are BFS discovery order;
    ``parent[i]`` is ``(predecessor id, action)`` of the first discovery."""
    bat_name: str
    K: int
    states: list
    raw_edges: list
    parent: list
    initial: int = 0
    fluent_atoms: tuple = ()
    initial_fluents: frozenset = frozenset()
    _witness_cache: dict = field(default_factory=dict, repr=False)

    @property
    def edges(self) -> list:
        """``(from, GroundAction, to)`` triples in discovery order."""
        if "_edges" not in self._witness_cache:
            self._witness_cache["_edges"] = [(a, as_action(lab), b)
                                             for a, lab, b in self.raw_edges]
        return self._witness_cache["_edges"]

    def witness(self, i: int) -> Situation:
        hit = self._witness_cache.get(i)
        if hit is not None:
            return hit
        acts = []
        j = i
        while self.parent[j] is not None:
            j, lab = self.parent[j]
            acts.append(as_action(lab))
        s = Situation(tuple(reversed(acts)))
        self._witness_cache[i] = s
        return s

    @property
    def witnesses(self) -> dict:
        return {i: self.witness(i) for i in range(len(self.states))}

    def __len__(self):
        return len(self.states)

    def depth(self, i: int) -> int:
        return len(self.witness(i))

    def state_label(self, i: int) -> str:
        return _state_label(self.states[i])

    def to_json(self) -> str:
        doc = {
            "schema": "absts/1",
            "bat": self.bat_name,
            "K": self.K,
            "initial": self.initial,
            "states": [{"id": i, **_state_doc(s)} for i, s in enumerate(self.states)],
            "edges": [{"from": a, "action": label_str(lab), "to": b}
                      for a, lab, b in self.raw_edges],
            "witnesses": {str(i): "; ".join(map(str, self.witness(i)))
                          for i in range(len(self.states))},
        }
        return json.dumps(doc, separators=(",", ":")) + "\n"

    def to_dot(self) -> str:
        lines = ["digraph absts {", "  rankdir=LR;", '  node [shape=box, fontsize=10];']
        for i, s in enumerate(self.states):
            added = sorted(s.fluents - self.initial_fluents)
            removed = sorted(self.initial_fluents - s.fluents)
            diff = [f"+{_atom(a)}" for a in added] + [f"-{_atom(a)}" for a in removed]
            label = f"{i}\\n{' '.join(diff) or '(as S0)'}\\n{s.region.render()}"
            style = ", style=bold" if i == self.initial else ""
            lines.append(f'  s{i} [label="{_escape(label)}"{style}];')
        for a, lab, b in self.raw_edges:
            lines.append(f'  s{a} -> s{b} [label="{_escape(label_str(lab))}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _atom(a) -> str:
    name, args = a
    return f"{name}({','.join(args)})"


def _escape(s: str) -> str:
    return s.replace('"', '\\"')


def _state_doc(s) -> dict:
    if isinstance(s, AbstractState):
        return {"fluents": [_atom(a) for a in sorted(s.fluents)],
                "region": s.region.render()}
    abstract, program = s
    return {"fluents": [_atom(a) for a in sorted(abstract.fluents)],
            "region": abstract.region.render(), "program": str(program)}


def _state_label(s) -> str:
    if isinstance(s, AbstractState):
        return s.render()
    return f"{s[0].render()} :: {s[1]}"


@dataclass
class ReachResult:
    reachable: bool
    witness: Optional[Situation]
    states_explored: int
    K: int = 0


def _check_K(bat: BAT, K: Optional[int], extra=()) -> int:
    needed = max_constant(bat, extra)
    if K is None:
        return needed
    if K < needed:
        raise ValueError(f"K = {K} is below the maximal constant {needed}")
    return K


def _explore(bat: BAT, K: int, max_states: int, jobs: int,
             goal: Optional[Callable] = None, engine: Optional[Engine] = None,
             record_edges: bool = True):
    eng = engine or Engine(bat)
    F0, C0, D0 = eng.initial()
    sig0 = region_signature_int(C0, D0, K)
    reps = [(F0, C0, D0, sig0)]
    index = {(F0, sig0): 0}
    parent: list = [None]
    edges: list = []
    if goal is not None and goal(F0, C0, D0):
        return eng, reps, parent, edges, 0

    def merge(sid, succs):
        for lab, F, C, D, sig in succs:
            k = (F, sig)
            nid = index.get(k)
            if nid is None:
                nid = len(reps)
                if nid >= max_states:
                    raise StateLimitExceeded(max_states)
                index[k] = nid
                reps.append((F, C, D, sig))
                parent.append((sid, lab))
                if goal is not None and goal(F, C, D):
                    return nid
            if record_edges:
                edges.append((sid, lab, nid))
        return None

    def expand_waits(sid, F, C, D, sig):
        wsigs = eng.wait_signatures(C, D, sig, K)
        nums = None
        for i, wsig in enumerate(wsigs):
            k = (F, wsig)
            nid = index.get(k)
            if nid is None or record_edges:
                if nums is None:
                    nums, D2 = tsuccs_int(C, D, K)
                    m = D2 // D
                lab = (nums[i], D2)
            if nid is None:
                nid = len(reps)
                if nid >= max_states:
                    raise StateLimitExceeded(max_states)
                C3, D3 = _normalize(tuple(c * m + nums[i] for c in C), D2)
                index[k] = nid
                reps.append((F, C3, D3, wsig))
                parent.append((sid, lab))
                if goal is not None and goal(F, C3, D3):
                    return nid
            if record_edges:
                edges.append((sid, lab, nid))
        return None

    def expand(sid):
        F, C, D, sig = reps[sid]
        hit = merge(sid, eng.action_successors(F, C, D, sig, K))
        if hit is None:
            hit = expand_waits(sid, F, C, D, sig)
        return hit

    if jobs <= 1:
        queue = deque([0])
        while queue:
            sid = queue.popleft()
            before = len(reps)
            hit = expand(sid)
            if hit is not None:
                return eng, reps, parent, edges, hit
            queue.extend(range(before, len(reps)))
    else:
        # Level-synchronous: evaluate the non-wait successors of a whole BFS
        # layer concurrently, then merge in id order, which reproduces the
        # sequential ids exactly.
        layer = [0]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            while layer:
                expanded = list(pool.map(lambda i: eng.action_successors(*reps[i], K), layer))
                before = len(reps)
                for sid, succs in zip(layer, expanded):
                    hit = merge(sid, succs)
                    if hit is None:
                        hit = expand_waits(sid, *reps[sid])
                    if hit is not None:
                        return eng, reps, parent, edges, hit
                layer = list(range(before, len(reps)))
    return eng, reps, parent, edges, None


def build_absts(bat: BAT, K: Optional[int] = None,
                max_states: int = DEFAULT_MAX_STATES, jobs: int = 1) -> TransitionSystem:
    """Breadth-first construction of the time-abstract transition system."""
    K = _check_K(bat, K)
    eng, reps, parent, edges, _ = _explore(bat, K, max_states, jobs)
    states = [eng.abstract(F, C, D, K, sig) for F, C, D, sig in reps]
    fl = {s.name for s in bat.fluents}
    init_fluents = frozenset(a for a in bat.init if a[0] in fl)
    return TransitionSystem(bat.name, K, states, edges, parent,
                            fluent_atoms=tuple(eng.fluent_atoms),
                            initial_fluents=init_fluents)


def reachable(bat: BAT, phi: Formula, K: Optional[int] = None,
              max_states: int = DEFAULT_MAX_STATES, jobs: int = 1,
              verify: bool = True) -> ReachResult:
    """Decide whether some executable situation satisfies ``phi``; the
    witness is the shortest (in actions) representative found."""
    K = _check_K(bat, K, [phi])
    eng = Engine(bat)
    goal = eng.compiler.condition(phi)
    eng, reps, parent, edges, hit = _explore(bat, K, max_states, jobs, goal, eng,
                                            record_edges=False)
    if hit is None:
        return ReachResult(False, None, len(reps), K)
    acts = []
    j = hit
    while parent[j] is not None:
        j, lab = parent[j]
        acts.append(as_action(lab))
    witness = Situation(tuple(reversed(acts)))
    if verify and not (exec_check(bat, witness) and holds(bat, phi, witness)):
        raise AssertionError(f"witness {witness} failed independent verification")
    return ReachResult(True, witness, len(reps), K)


def format_witness(sigma: Situation, decimal: bool = False) -> str:
    lines = []
    for a in sigma:
        s = str(a)
        if decimal and a.is_wait and a.duration.denominator != 1:
            s += f"  # ~{float(a.duration):.4g}"
        lines.append(s)
    return "\n".join(lines)


__all__ = [
    "Engine", "Compiler", "TransitionSystem", "ReachResult", "StateLimitExceeded",
    "exec_check", "build_absts", "reachable", "format_witness",
    "DEFAULT_MAX_STATES",
]
