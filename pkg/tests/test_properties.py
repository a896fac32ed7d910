import math
import random
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from clocksit.dsl import format_formula, parse_bat, parse_formula
from clocksit.model import COMPARATORS, Situation
from clocksit.regions import (region_key, tsuccs_values, valuations_equiv,
                              values_equiv)
from clocksit.regression import holds
from conftest import CORPUS
from oracles import Progression, random_formula, random_situation

_LAMPS = []


def _lamps():
    if not _LAMPS:
        _LAMPS.append(parse_bat((CORPUS / "lamps.bat").read_text()))
    return _LAMPS[0]

rationals = st.builds(Fraction, st.integers(0, 40), st.sampled_from([1, 2, 3, 4, 6, 8]))
Ks = st.integers(0, 3)


def valuation(n):
    return st.lists(rationals, min_size=n, max_size=n).map(
        lambda vs: {(f"c{i}", ()): v for i, v in enumerate(vs)})


@given(rationals, rationals, rationals, Ks)
def test_values_equiv_is_equivalence(u, v, w, K):
    assert values_equiv(u, u, K)
    assert values_equiv(u, v, K) == values_equiv(v, u, K)
    if values_equiv(u, v, K) and values_equiv(v, w, K):
        assert values_equiv(u, w, K)


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(valuation(n), valuation(n), valuation(n))), Ks)
def test_valuations_equiv_is_equivalence(vals, K):
    a, b, c = vals
    assert valuations_equiv(a, a, K)
    assert valuations_equiv(a, b, K) == valuations_equiv(b, a, K)
    if valuations_equiv(a, b, K) and valuations_equiv(b, c, K):
        assert valuations_equiv(a, c, K)


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(valuation(n), valuation(n))), Ks)
def test_region_key_is_canonical(pair, K):
    a, b = pair
    assert (region_key(a, K) == region_key(b, K)) == valuations_equiv(a, b, K)


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(valuation(n), valuation(n))), Ks,
       st.sampled_from(sorted(COMPARATORS)), st.data())
def test_equivalent_valuations_agree_on_comparisons(pair, K, op, data):
    a, b = pair
    if not valuations_equiv(a, b, K):
        return
    n = data.draw(st.integers(0, K))
    for c in a:
        assert COMPARATORS[op](a[c], n) == COMPARATORS[op](b[c], n)


@given(st.integers(1, 4).flatmap(valuation), Ks,
       st.builds(Fraction, st.integers(0, 200), st.sampled_from([1, 3, 7, 16, 40])))
def test_tsuccs_completeness(nu, K, tau):
    if tau > K + 2:
        tau = Fraction(K + 2)
    shifted = {c: v + tau for c, v in nu.items()}
    assert any(valuations_equiv(shifted, {c: v + t for c, v in nu.items()}, K)
               for t in tsuccs_values(list(nu.values()), K))


@given(st.integers(1, 4).flatmap(valuation), Ks)
def test_tsuccs_sorted_and_starting_at_zero(nu, K):
    out = tsuccs_values(list(nu.values()), K)
    assert out[0] == 0 and out == sorted(set(out))


def test_region_count_bound():
    rng = random.Random(5)
    for n in (1, 2, 3):
        for K in (0, 1, 2):
            bound = math.factorial(n) * 2 ** n * (2 * K + 2) ** n
            keys = {region_key({(f"c{i}", ()): Fraction(rng.randint(0, 8 * (K + 2)), 8)
                                for i in range(n)}, K) for _ in range(3000)}
            assert len(keys) <= bound


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_formula_roundtrip(seed):
    bat = _lamps()
    phi = random_formula(bat, random.Random(seed), 4, 2)
    text = format_formula(phi)
    assert parse_formula(text, bat) == phi


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_regression_matches_progression(seed):
    bat = _lamps()
    rng = random.Random(seed)
    prog = Progression(bat)
    sigma = random_situation(prog, rng, rng.randint(0, 5))
    phi = random_formula(bat, rng, 3, 2)
    assert holds(bat, phi, Situation(tuple(sigma))) == prog.ev(phi, prog.run(sigma))

