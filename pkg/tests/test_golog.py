from clocksit.dsl import parse_program, parse_situation
from clocksit.golog import (NIL, Seq, build_program_ts, final, find_realization,
                            replay, trans_steps)
from clocksit.model import S0, Situation, act
from clocksit.regions import eval_clocks


def prog(bat, text):
    return parse_program(text, bat)


def test_final(coffee):
    assert final(coffee, NIL, S0)
    assert not final(coffee, prog(coffee, "sBrew(Pot)"), S0)
    assert final(coffee, prog(coffee, "wait()*"), parse_situation("wait(3)", coffee))


def test_trans_steps(coffee):
    steps = trans_steps(coffee, prog(coffee, "sBrew(Pot); eBrew(Pot)"), S0)
    assert len(steps) == 1
    a, rest, s = steps[0]
    # the action step leaves nil in front of the rest of the sequence
    assert a == act("sBrew", "Pot") and rest == Seq(NIL, prog(coffee, "eBrew(Pot)"))
    assert s == S0.do(a)
    assert trans_steps(coffee, prog(coffee, "?(true)"), S0) == []
    late = parse_situation("wait(5)", coffee)
    waits = trans_steps(coffee, prog(coffee, "wait()"), late)
    assert [w[0].duration for w in waits] == [0]


def test_program_ts(coffee, example4):
    ts = build_program_ts(coffee, example4)
    assert any(ts.finals)
    nil_ts = build_program_ts(coffee, NIL)
    assert len(nil_ts) == 1 and nil_ts.finals == [True]
    blocked = build_program_ts(coffee, prog(coffee, "eBrew(Pot)"))
    assert len(blocked) == 1 and blocked.raw_edges == []


def test_realization_shape(coffee, example4):
    sigma = find_realization(coffee, example4)
    names = [a.name for a in sigma]
    assert names[0] == "sBrew" and "eBrew" in names
    i = names.index("eBrew")
    assert eval_clocks(coffee, sigma.prefix(i))[("c_brew", ("Pot",))] >= 2
    assert sorted(str(a) for a in sigma if a.name == "ePour") == \
        ["ePour(Pot, Mug1)", "ePour(Pot, Mug2)"]
    assert replay(coffee, example4, list(sigma))


def test_no_realization_for_strongfill(coffee, strongfill):
    assert find_realization(coffee, strongfill) is None


def test_nil_realization(coffee):
    assert find_realization(coffee, NIL) == Situation()


def test_replay_rejects_short_brew(coffee, example4):
    bad = parse_situation("sBrew(Pot); wait(1); eBrew(Pot); sPour(Pot, Mug1); ePour(Pot, Mug1); "
                          "sPour(Pot, Mug2); ePour(Pot, Mug2)", coffee)
    assert not replay(coffee, example4, list(bad))
    ok = parse_situation("sBrew(Pot); wait(9/4); eBrew(Pot); sPour(Pot, Mug1); ePour(Pot, Mug1); "
                         "wait(1/3); sPour(Pot, Mug2); ePour(Pot, Mug2)", coffee)
    assert replay(coffee, example4, list(ok))
