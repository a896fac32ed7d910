from fractions import Fraction

import pytest

from clocksit.dsl import parse_bat, parse_formula
from clocksit.model import (GroundAction, S0, Situation, act, ground_actions,
                            max_constant, validate_bat, wait)


def test_coffee_is_valid(coffee):
    assert validate_bat(coffee) == []


def test_clock_against_clock_precondition_rejected():
    src = """bat b { objects P; actions s/1; fluents f/1; clocks c/1, g/0;
      poss s(p) := c(p) = g();
      ssa f(p) := f(p); }"""
    bat = parse_bat(src, validate=False)
    msgs = [v.message for v in validate_bat(bat)]
    assert any("non-clock-comparison atom" in m for m in msgs)


def test_timed_reset_rejected():
    src = """bat b { objects P; actions s/1; fluents f/1; clocks c/1;
      poss s(p) := true;
      ssa f(p) := f(p);
      reset c(p) := a == s(p) & c(p) >= 1; }"""
    bat = parse_bat(src, validate=False)
    msgs = [v.message for v in validate_bat(bat)]
    assert any("reset not time-independent" in m for m in msgs)


def test_ground_action_count(coffee):
    assert len(ground_actions(coffee)) == 3 + 3 + 9 + 9


def test_ground_actions_edge_cases():
    only_wait = parse_bat("bat b { objects A; actions; fluents f/0; ssa f() := f(); }")
    assert ground_actions(only_wait) == []
    one = parse_bat("bat b { objects A; actions go/1; fluents f/0; "
                    "poss go(x) := true; ssa f() := f(); }")
    assert ground_actions(one) == [GroundAction("go", ("A",))]


def test_max_constant(coffee):
    phi3 = parse_formula("c_glob() <= 1 & strong(Mug1)", coffee)
    assert max_constant(coffee, [phi3]) == 2
    assert max_constant(coffee, [parse_formula("c_glob() <= 7", coffee)]) == 7
    plain = parse_bat("bat b { objects A; actions go/0; fluents f/0; "
                      "poss go() := !f(); ssa f() := a == go() | f(); }")
    assert max_constant(plain) == 0


def test_situations_and_actions():
    s = S0.do(act("sBrew", "Pot")).do(wait(Fraction(3, 2)))
    assert len(s) == 2
    assert str(s.actions[1]) == "wait(3/2)"
    assert s.prefix(1) == Situation((act("sBrew", "Pot"),))
    with pytest.raises(ValueError):
        wait(-1)
    with pytest.raises(ValueError):
        GroundAction("sBrew", ("Pot",), Fraction(1))
