"""Clock valuations, region equivalence and time successors."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

from .model import BAT, GroundAction, Situation, evaluate


class _Top:
    """Any clock value beyond the maximal constant."""
    __slots__ = ()

    def __repr__(self):
        return "TOP"

    __str__ = __repr__

    def __reduce__(self):
        return "TOP"


TOP = _Top()
Value = Union[Fraction, _Top]
ClockTerm = tuple  # (clock name, object args)


# ------------------------------------------------------ forward evaluation

def successor(bat: BAT, atoms: frozenset, clocks: Mapping, action: GroundAction):
    """State after ``action``: fluents via their SSAs, clocks via wait or reset."""
    if action.is_wait:
        d = action.duration
        return atoms, {k: v + d for k, v in clocks.items()}
    rigid = {s.name for s in bat.rigids}
    new_atoms = {a for a in atoms if a[0] in rigid}
    for s in bat.fluents:
        ax = bat.ssa[s.name]
        for args in _tuples(bat.objects, s.arity):
            env = dict(zip(ax.params, args))
            if evaluate(ax.body, bat.objects, atoms, clocks, env, action):
                new_atoms.add((s.name, args))
    new_clocks = {}
    for (name, args), v in clocks.items():
        ax = bat.reset_axiom(name)
        env = dict(zip(ax.params, args))
        fired = evaluate(ax.body, bat.objects, atoms, clocks, env, action)
        new_clocks[(name, args)] = Fraction(0) if fired else v
    return frozenset(new_atoms), new_clocks


def _tuples(objects, arity):
    return itertools.product(objects, repeat=arity)


def replay(bat: BAT, sigma: Situation):
    """Fluent atoms and clock valuation at ``sigma``, computed forwards."""
    atoms = frozenset(bat.init)
    clocks = {t: Fraction(0) for t in bat.clock_terms}
    for a in sigma:
        atoms, clocks = successor(bat, atoms, clocks, a)
    return atoms, clocks


def eval_clocks(bat: BAT, sigma: Situation) -> dict:
    return replay(bat, sigma)[1]


# ----------------------------------------------------------------- regions

def clip(v: Value, K: int) -> Value:
    return TOP if v is TOP or v > K else Fraction(v)


def fract(v: Value, K: int) -> Fraction:
    v = clip(v, K)
    if v is TOP:
        return Fraction(0)
    return v - math.floor(v)


def values_equiv(u: Value, v: Value, K: int) -> bool:
    u, v = clip(u, K), clip(v, K)
    if u is TOP or v is TOP:
        return u is v
    return math.floor(u) == math.floor(v) and math.ceil(u) == math.ceil(v)


def valuations_equiv(nu1: Mapping, nu2: Mapping, K: int) -> bool:
    if nu1.keys() != nu2.keys():
        return False
    terms = list(nu1)
    if not all(values_equiv(nu1[c], nu2[c], K) for c in terms):
        return False
    f1 = {c: fract(nu1[c], K) for c in terms}
    f2 = {c: fract(nu2[c], K) for c in terms}
    return all((f1[c] <= f1[d]) == (f2[c] <= f2[d]) for c in terms for d in terms)


def _render_term(term: ClockTerm) -> str:
    name, args = term
    return f"{name}({','.join(args)})" if args else name


@dataclass(frozen=True)
class RegionKey:
    """Canonical region of a valuation.

    ``ints`` gives each clock's integer part (``None`` for TOP), ``zero``
    the clocks with zero fractional part, and ``blocks`` the non-TOP clocks
    grouped by equal fractional part, ascending.
    """
    terms: tuple
    ints: tuple
    zero: tuple
    blocks: tuple

    def render(self) -> str:
        ints = ",".join(f"{_render_term(t)}:{'TOP' if i is None else i}"
                        for t, i in zip(self.terms, self.ints))
        zero = ",".join(_render_term(t) for t, z in zip(self.terms, self.zero) if z)
        blocks = ",".join("{" + ",".join(_render_term(self.terms[i]) for i in b) + "}"
                          for b in self.blocks)
        return f"int:{{{ints}}};zero:{{{zero}}};frac:[{blocks}]"

    def __str__(self):
        return self.render()


def region_signature(values, K: int) -> tuple:
    """Hashable region of a value sequence in a fixed clock order."""
    ints, zero, fracs = [], [], {}
    for i, v in enumerate(values):
        if v > K:
            ints.append(None)
            zero.append(False)
            continue
        fl = v.numerator // v.denominator
        fr = v - fl
        ints.append(fl)
        zero.append(fr == 0)
        fracs.setdefault(fr, []).append(i)
    blocks = tuple(tuple(fracs[f]) for f in sorted(fracs))
    return tuple(ints), tuple(zero), blocks


def key_from_signature(terms, signature: tuple) -> RegionKey:
    """Build the canonical key from a signature computed in ``terms`` order."""
    ints, zero, blocks = signature
    order = sorted(range(len(terms)), key=lambda i: terms[i])
    pos = {old: new for new, old in enumerate(order)}
    return RegionKey(tuple(terms[i] for i in order),
                     tuple(ints[i] for i in order),
                     tuple(zero[i] for i in order),
                     tuple(tuple(sorted(pos[i] for i in b)) for b in blocks))


def region_key(nu: Mapping, K: int) -> RegionKey:
    terms = tuple(sorted(nu))
    ints, zero, blocks = region_signature([Fraction(nu[t]) for t in terms], K)
    return RegionKey(terms, ints, zero, blocks)


@dataclass(frozen=True)
class AbstractState:
    """Truth of every ground fluent atom (the true ones) plus the region."""
    fluents: frozenset
    region: RegionKey

    def render(self) -> str:
        atoms = ",".join(_render_term(a) for a in sorted(self.fluents))
        return f"{{{atoms}}}|{self.region.render()}"


def abstract_state(bat: BAT, sigma: Situation, K: int,
                   method: str = "regression") -> AbstractState:
    """Equivalence class of ``sigma``.  ``method='regression'`` decides each
    fluent atom with :func:`regression.holds`; ``'progression'`` replays
    the history forwards (same answer, much cheaper)."""
    atoms, clocks = replay(bat, sigma)
    if method == "regression":
        from .model import Atom, Obj
        from .regression import holds
        true = frozenset(a for a in bat.fluent_atoms
                         if holds(bat, Atom(a[0], tuple(Obj(o) for o in a[1])), sigma))
    elif method == "progression":
        fl = {s.name for s in bat.fluents}
        true = frozenset(a for a in atoms if a[0] in fl)
    else:
        raise ValueError(f"unknown method {method!r}")
    return AbstractState(true, region_key(clocks, K))


def situations_equiv(bat: BAT, s1: Situation, s2: Situation, K: int,
                     method: str = "regression") -> bool:
    return abstract_state(bat, s1, K, method) == abstract_state(bat, s2, K, method)


# --------------------------------------------------------- time successors

def tsuccs_values(values, K: int) -> list:
    """Canonical wait durations for a valuation given as a value sequence.

    Clocks beyond ``K`` are ignored when looking for a zero fractional
    part; counting them would halve the step forever once one clock has
    passed ``K`` while another sits on an integer.
    """
    vals = [Fraction(v) for v in values]
    out = [Fraction(0)]
    last = Fraction(0)
    while True:
        live = [v for v in vals if v <= K]
        if not live:
            return out
        fr = [v - (v.numerator // v.denominator) for v in live]
        mu = max(fr)
        incr = (1 - mu) / 2 if any(f == 0 for f in fr) else 1 - mu
        last += incr
        out.append(last)
        vals = [v + incr for v in vals]


def tsuccs(nu: Mapping, K: int) -> list:
    return tsuccs_values(list(nu.values()), K)


def shift(nu: Mapping, tau) -> dict:
    return {k: v + tau for k, v in nu.items()}
