from fractions import Fraction as Fr
from pathlib import Path

import pytest

from clocksit.dsl import (parse_2cm, parse_bat, parse_general_bat, parse_ta,
                          serialize_2cm, serialize_bat, serialize_general_bat,
                          serialize_ta)
from clocksit.encoders import (decode_trace, encode_2cm, encode_2cm_bounded,
                               encode_ta, interp_2cm, simulate_general)
from clocksit.reach import reachable

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def machine(text):
    return parse_2cm(text)


def test_interp_examples():
    r = interp_2cm(machine("s0: inc c1 goto s1\ns1: HALT"), 10)
    assert r.halted and r.steps == 1 and r.counters == (1, 0)
    r = interp_2cm(machine("s0: dec c1 goto s0 else s1\ns1: HALT"), 10)
    assert r.halted and r.steps == 1
    assert not interp_2cm(machine("s0: inc c1 goto s0"), 100).halted


def test_encoding_halts_like_machine():
    one = encode_2cm(machine("s0: inc c1 goto s1\ns1: HALT"))
    tr = simulate_general(one, depth=10)
    assert len(tr) == 2 and ("next", ("s1",)) in tr[-1].fluents
    loop = encode_2cm(machine("s0: inc c1 goto s0"))
    assert len(simulate_general(loop, depth=25)) == 26
    empty = encode_2cm(machine("s0: HALT"))
    assert len(simulate_general(empty, depth=5)) == 1


def test_bounded_values():
    m = machine("s0: inc c1 goto s1\ns1: inc c1 goto s2\ns2: HALT")
    tr = simulate_general(encode_2cm_bounded(m), depth=10)
    assert [st.values[("f1", ())] for st in tr] == [Fr(2), Fr(1), Fr(1, 2)]
    assert decode_trace(tr, bounded=True) == interp_2cm(m, 10).trace


def test_countdown_corpus():
    m = parse_2cm((CORPUS / "countdown.2cm").read_text())
    run = interp_2cm(m, 100)
    assert run.halted and run.counters == (0, 2)
    for enc, bounded in ((encode_2cm, False), (encode_2cm_bounded, True)):
        assert decode_trace(simulate_general(enc(m), depth=100), bounded) == run.trace


def test_general_roundtrip():
    m = parse_2cm((CORPUS / "countdown.2cm").read_text())
    assert parse_2cm(serialize_2cm(m)).instructions == m.instructions
    for g in (encode_2cm(m), encode_2cm_bounded(m)):
        again = parse_general_bat(serialize_general_bat(g))
        assert decode_trace(simulate_general(again, depth=50), g.name.endswith("bounded")) \
            == interp_2cm(m, 50).trace


def ta(text):
    return parse_ta(text)


def test_ta_single_switch():
    a = ta("location l0 init;\nlocation lf final;\nclock x;\nswitch l0 -> lf on go when x >= 1;")
    bat, q = encode_ta(a)
    r = reachable(bat, q)
    assert r.reachable
    waits = [w for w in r.witness if w.is_wait]
    assert sum(w.duration for w in waits) >= 1 and not r.witness.actions[-1].is_wait


def test_ta_unsatisfiable_guard():
    a = ta("location l0 init;\nlocation lf final;\nclock x;\n"
           "switch l0 -> lf on go when x >= 1 & x < 1;")
    assert not reachable(*encode_ta(a)).reachable


def test_ta_initial_is_final():
    a = ta("location l0 init final;\nclock x;")
    r = reachable(*encode_ta(a))
    assert r.reachable and len(r.witness) == 0


def test_ta_roundtrip_and_bat_text():
    a = parse_ta((CORPUS / "simple.ta").read_text())
    assert parse_ta(serialize_ta(a)) == a
    bat, q = encode_ta(a)
    assert parse_bat(serialize_bat(bat)) == bat


def test_diagonal_guard_rejected():
    a = ta("location l0 init;\nlocation lf final;\nclock x;\nclock y;\n"
           "switch l0 -> lf on go when x - y >= 1;")
    with pytest.raises(ValueError, match="diagonal"):
        encode_ta(a)
