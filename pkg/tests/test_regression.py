from fractions import Fraction

import pytest

from clocksit.dsl import parse_formula, parse_situation
from clocksit.model import (FALSE, TRUE, Atom, ClockCmp, Obj, S0,
                            SituationRelation, TimeQuantifier)
from clocksit.regression import (RegressionError, check_regressable,
                                 entails_initial, holds, regress)

SIGMA1 = "sBrew(Pot); sBrew(Mug1); sBrew(Mug2); wait(1); eBrew(Pot); eBrew(Mug1); eBrew(Mug2)"
SIGMA2 = "sBrew(Mug1); wait(2); eBrew(Mug1)"


def sit(bat, text):
    return parse_situation(text, bat)


def test_regressable(coffee):
    phi1 = parse_formula("forall o. isFull(o)", coffee)
    assert check_regressable(phi1, sit(coffee, SIGMA1), coffee) is None


def test_time_quantifier_and_ordering_rejected(coffee):
    tq = TimeQuantifier("t", TRUE)
    assert check_regressable(tq, S0).item == 3
    assert check_regressable(SituationRelation("prec"), S0).item == 6
    assert check_regressable(SituationRelation("quant"), S0).item == 5
    with pytest.raises(RegressionError):
        regress(coffee, tq, S0)


def test_regress_fluent_through_ebrew(coffee):
    sigma = sit(coffee, "sBrew(Pot); wait(1); eBrew(Pot)")
    psi = regress(coffee, parse_formula("isFull(Pot)", coffee), sigma)
    assert entails_initial(coffee, psi)


def test_regress_clock_through_wait(coffee):
    psi = regress(coffee, parse_formula("c_brew(Pot) >= 1", coffee), sit(coffee, "wait(3/2)"))
    assert psi == ClockCmp("c_brew", (Obj("Pot"),), ">=", Fraction(-1, 2))
    assert entails_initial(coffee, psi)


def test_uniform_formula_unchanged_at_s0(coffee):
    phi = parse_formula("exists o. wantStrong(o) & !isFull(o)", coffee)
    assert regress(coffee, phi, S0) == phi


def test_entails_initial(coffee):
    assert entails_initial(coffee, parse_formula("exists o. wantStrong(o)", coffee))
    assert not entails_initial(coffee, FALSE)


def test_holds_examples(coffee):
    assert holds(coffee, parse_formula("forall o. isFull(o)", coffee), sit(coffee, SIGMA1))
    assert holds(coffee, Atom("strong", (Obj("Mug1"),)), sit(coffee, SIGMA2))
    assert holds(coffee, TRUE, sit(coffee, SIGMA2))
    assert not holds(coffee, Atom("isFull", (Obj("Mug2"),)), S0)
    # strong needs two units of brewing
    short = sit(coffee, "sBrew(Mug1); wait(3/2); eBrew(Mug1)")
    assert not holds(coffee, Atom("strong", (Obj("Mug1"),)), short)


def test_reset_regression(coffee):
    # c_brew(Pot) restarts at sBrew(Pot) but c_glob does not
    sigma = sit(coffee, "wait(2); sBrew(Pot); wait(1/2)")
    assert holds(coffee, parse_formula("c_brew(Pot) < 1 & c_glob() > 2", coffee), sigma)


def test_poss_regression(coffee):
    assert not holds(coffee, parse_formula("poss(eBrew(Pot))", coffee), S0)
    assert holds(coffee, parse_formula("poss(eBrew(Pot))", coffee),
                 sit(coffee, "sBrew(Pot); wait(1)"))
