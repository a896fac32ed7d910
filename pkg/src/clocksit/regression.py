"""Clock-aware regression and entailment against the initial theory."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .model import (BAT, FALSE, TRUE, ActionEq, And, Atom, ClockCmp,
                    ClockRelation, Const, Equal, Exists, Forall, Formula,
                    GroundAction, Iff, Implies, Not, NumCmp, Obj, Or, Poss,
                    Situation, SituationRelation, TimeQuantifier, children, conj,
                    evaluate, walk)


class RegressionError(ValueError):
    pass


@dataclass(frozen=True)
class RegressabilityViolation:
    """Which regressability condition failed (1 to 6) and why."""
    item: int
    message: str

    def __str__(self):
        return f"not regressable (item {self.item}): {self.message}"


def check_regressable(phi: Formula, sigma: Situation,
                      bat: Optional[BAT] = None) -> Optional[RegressabilityViolation]:
    """Return ``None`` if ``phi`` at ``sigma`` can be regressed."""
    if bat is not None:
        schemas = {s.name: s for s in bat.actions}
        objects = set(bat.objects)
        for a in sigma:
            s = schemas.get(a.name)
            if s is None:
                return RegressabilityViolation(2, f"unknown action {a.name}")
            if not s.is_wait and (len(a.args) != s.arity
                                  or any(o not in objects for o in a.args)):
                return RegressabilityViolation(2, f"action {a} is not a ground term")
    for node in walk(phi):
        if isinstance(node, TimeQuantifier):
            return RegressabilityViolation(3, "quantifies over time")
        if isinstance(node, ClockRelation):
            return RegressabilityViolation(3, "clock compared with a clock")
        if isinstance(node, SituationRelation):
            if node.kind == "quant":
                return RegressabilityViolation(5, "quantifies over situations")
            return RegressabilityViolation(6, "mentions situation ordering or equality")
        if isinstance(node, ActionEq):
            return RegressabilityViolation(2, "mentions the action variable")
    return None


def resolve_action(f: Formula, alpha: GroundAction) -> Formula:
    """Replace every ``a == A(t)`` in an SSA body by its value for ``alpha``."""
    if isinstance(f, ActionEq):
        if alpha.is_wait or f.schema != alpha.name:
            return FALSE
        return conj(Equal(t, Obj(o)) for t, o in zip(f.args, alpha.args))
    if isinstance(f, Not):
        return Not(resolve_action(f.body, alpha))
    if isinstance(f, And):
        return And(tuple(resolve_action(p, alpha) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(resolve_action(p, alpha) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(resolve_action(f.left, alpha), resolve_action(f.right, alpha))
    if isinstance(f, Iff):
        return Iff(resolve_action(f.left, alpha), resolve_action(f.right, alpha))
    if isinstance(f, (Exists, Forall)):
        return type(f)(f.var, resolve_action(f.body, alpha))
    return f


def regress(bat: BAT, phi: Formula, sigma: Situation) -> Formula:
    """Regress ``phi`` (situation-suppressed, evaluated at ``sigma``) to a
    formula uniform in S0.  Clock bounds may become negative or fractional."""
    problem = check_regressable(phi, sigma, bat)
    if problem is not None:
        raise RegressionError(str(problem))
    fluents = {s.name for s in bat.fluents}
    rigids = {s.name for s in bat.rigids}
    actions = sigma.actions
    memo: dict = {}

    def reg(f: Formula, n: int) -> Formula:
        # only leaves expand, so sharing them keeps the result a small DAG
        if not isinstance(f, (Atom, ClockCmp, Poss)):
            return step(f, n)
        key = (f, n)
        hit = memo.get(key)
        if hit is not None:
            return hit
        out = step(f, n)
        memo[key] = out
        return out

    def step(f: Formula, n: int) -> Formula:
        if isinstance(f, Poss):
            if bat.schema(f.schema).is_wait:
                return TRUE
            return reg(bat.poss[f.schema].instantiate(f.args), n)
        if isinstance(f, (Const, Equal, NumCmp)):
            return f
        if isinstance(f, Atom):
            if f.pred in rigids or n == 0:
                return f
            if f.pred not in fluents:
                raise RegressionError(f"unknown fluent {f.pred}")
            alpha = actions[n - 1]
            body = resolve_action(bat.ssa[f.pred].instantiate(f.args), alpha)
            return reg(body, n - 1)
        if isinstance(f, ClockCmp):
            if n == 0:
                return f
            alpha = actions[n - 1]
            if alpha.is_wait:
                return reg(ClockCmp(f.clock, f.args, f.op,
                                    Fraction(f.bound) - alpha.duration), n - 1)
            cond = resolve_action(bat.reset_axiom(f.clock).instantiate(f.args), alpha)
            return reg(Or((And((cond, NumCmp(Fraction(0), f.op, Fraction(f.bound)))),
                           And((Not(cond), ClockCmp(f.clock, f.args, f.op, f.bound))))),
                       n - 1)
        if isinstance(f, Not):
            return Not(reg(f.body, n))
        if isinstance(f, And):
            return And(tuple(reg(p, n) for p in f.parts))
        if isinstance(f, Or):
            return Or(tuple(reg(p, n) for p in f.parts))
        if isinstance(f, Implies):
            return Implies(reg(f.left, n), reg(f.right, n))
        if isinstance(f, Iff):
            return Iff(reg(f.left, n), reg(f.right, n))
        if isinstance(f, (Exists, Forall)):
            return type(f)(f.var, reg(f.body, n))
        raise RegressionError(f"cannot regress {type(f).__name__}")

    return reg(phi, len(actions))


def initial_clocks(bat: BAT) -> dict:
    return {term: Fraction(0) for term in bat.clock_terms}


def entails_initial(bat: BAT, psi: Formula) -> bool:
    """Decide whether the complete initial theory entails ``psi``: object
    quantifiers range over the finite domain, every clock is zero."""
    for node in _walk_dag(psi):
        if isinstance(node, (ActionEq, Poss)):
            raise RegressionError("formula is not uniform in S0")
        if isinstance(node, (TimeQuantifier, SituationRelation, ClockRelation)):
            raise RegressionError(f"unsupported construct {type(node).__name__}")
    return _eval_dag(psi, bat.objects, bat.init, initial_clocks(bat))


def _walk_dag(f: Formula):
    seen = set()
    stack = [f]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(children(node))


def _eval_dag(f: Formula, objects, atoms, clocks) -> bool:
    # Regressed formulas are DAGs; cache by node identity and binding.
    cache: dict = {}

    def ev(g: Formula, env: dict) -> bool:
        key = (id(g), tuple(env.items()))
        hit = cache.get(key)
        if hit is not None:
            return hit
        if isinstance(g, (Exists, Forall)):
            want = isinstance(g, Exists)
            r = not want
            for o in objects:
                inner = dict(env)
                inner[g.var] = o
                if ev(g.body, inner) == want:
                    r = want
                    break
        elif isinstance(g, Not):
            r = not ev(g.body, env)
        elif isinstance(g, And):
            r = all(ev(p, env) for p in g.parts)
        elif isinstance(g, Or):
            r = any(ev(p, env) for p in g.parts)
        elif isinstance(g, Implies):
            r = (not ev(g.left, env)) or ev(g.right, env)
        elif isinstance(g, Iff):
            r = ev(g.left, env) == ev(g.right, env)
        else:
            r = evaluate(g, objects, atoms, clocks, dict(env))
        cache[key] = r
        return r

    return ev(f, {})


def holds(bat: BAT, phi: Formula, sigma: Situation) -> bool:
    """Truth of ``phi`` at ``sigma`` via regression to S0."""
    return entails_initial(bat, regress(bat, phi, sigma))
