import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmrmod.compiler import compile_o1
from nmrmod.dynamics import simulate_unitary
from nmrmod.algebra import phase_invariant_fidelity
from nmrmod.schedule import (
    Ghost, HardPulse, Schedule, ScheduleError, ScheduleParseError, SoftPi, dumps, loads,
    mlev4_phases, validate,
)

LABELS = ("I", "S", "R")


def rules(schedule, n=3):
    return [v.rule for v in validate(schedule, n)]


def test_compiled_o1_is_valid(isr):
    assert validate(compile_o1(isr, "I", math.pi / 2).schedule, 3) == []


def test_tsetse_violation():
    s = Schedule(0.01, 8, [SoftPi(2, 2), SoftPi(2, 1), SoftPi(6, 2), SoftPi(6, 1)])
    v = validate(s, 3)
    assert [x.rule for x in v] == ["tsetse", "tsetse"]
    assert v[0].times == (Fraction(2),)


def test_odd_echo_warning_and_flag():
    events = [SoftPi(1, 2), SoftPi(3, 2), SoftPi(5, 2)]
    assert rules(Schedule(0.01, 8, events)) == ["odd_echo"]
    assert rules(Schedule(0.01, 8, events, refocusing=False)) == []


def test_order_duration_and_range_rules():
    assert "order" in rules(Schedule(0.01, 8, [SoftPi(3, 0), SoftPi(1, 0)]))
    assert "duration" in rules(Schedule(0.01, 4, [SoftPi(3, 0), SoftPi(5, 0)]))
    assert "spin_range" in rules(Schedule(0.01, 8, [SoftPi(1, 7), SoftPi(3, 7)]))


def test_schedule_rejects_bad_tau_and_times():
    with pytest.raises(ScheduleError):
        Schedule(0.0, 8)
    with pytest.raises(ScheduleError):
        SoftPi(-1, 0)


def test_mlev4_phases():
    y, my = math.pi / 2, 3 * math.pi / 2
    assert mlev4_phases(4) == [y, y, my, my]
    assert mlev4_phases(2) == [y, y]
    assert mlev4_phases(8) == [y, y, my, my] * 2
    with pytest.raises(ValueError):
        mlev4_phases(3)


def test_mlev8_unitary_matches_all_plus_y(isr):
    # eight echo pulses on R: the MLEV phases and uniform +y give the same ideal unitary
    times = [Fraction(2 * i + 1) for i in range(8)]
    mlev = [SoftPi(t, 2, math.degrees(p)) for t, p in zip(times, mlev4_phases(8))]
    same = [SoftPi(t, 2, 90.0) for t in times]
    U1 = simulate_unitary(Schedule(0.003, 16, mlev), isr)
    U2 = simulate_unitary(Schedule(0.003, 16, same), isr)
    assert phase_invariant_fidelity(U1, U2) == pytest.approx(1.0, abs=1e-12)


def test_time_reversal_and_sorted():
    s = Schedule(0.01, 8, [SoftPi(3, 1), SoftPi(1, 0), HardPulse(4)])
    assert [e.time for e in s.sorted().events] == [1, 3, 4]
    r = s.time_reversed()
    assert sorted(e.time for e in r.events) == [4, 5, 7]
    assert r.time_reversed().sorted() == s.sorted()


# ---- text format

def test_roundtrip_compiled(isr):
    mod = compile_o1(isr, "I", math.pi / 2)
    text = mod.text(isr)
    back = loads(text, LABELS)
    assert back.target == mod.target
    assert back.segments == mod.segments
    assert dumps(back.segments, LABELS, back.target) == text


def test_fractional_times_and_ghosts():
    s = Schedule(0.0125, 4, [SoftPi(Fraction(1, 2), 0, 270.0), Ghost(Fraction(1, 2), 0, -207.0),
                             HardPulse(Fraction(7, 2), 90.0, 45.0), SoftPi(Fraction(7, 2), 0)],
                 refocusing=True)
    text = dumps(s, LABELS)
    assert "t=1/2tau" in text and "ghost mirror=I at=-207.0" in text
    assert loads(text, LABELS).segments == [s]


def test_parse_errors_report_line_numbers():
    with pytest.raises(ScheduleParseError, match="line 3"):
        loads("# c\ntau=0.01 duration=8tau\nt=1tau soft_pi spin=X phase=90\n", LABELS)
    with pytest.raises(ScheduleParseError, match="line 1"):
        loads("t=1tau hard angle=180 phase=0\n", LABELS)
    with pytest.raises(ScheduleParseError, match="line 2"):
        loads("tau=0.01 duration=8tau\nt=1.5tau hard angle=180 phase=0\n", LABELS)
    with pytest.raises(ScheduleParseError, match="line 2"):
        loads("tau=0.01 duration=8tau\nt=1tau wobble spin=I\n", LABELS)
    with pytest.raises(ScheduleParseError, match="missing"):
        loads("tau=0.01 duration=8tau\nt=1tau soft_pi phase=90\n", LABELS)


event_st = st.one_of(
    st.builds(SoftPi, st.integers(0, 16), st.integers(0, 2),
              st.sampled_from([90.0, 270.0, 0.0, 12.345678901234567])),
    st.builds(HardPulse, st.fractions(0, 16, max_denominator=8),
              st.floats(-360, 360, allow_nan=False), st.floats(-360, 360, allow_nan=False)),
    st.builds(Ghost, st.integers(0, 16), st.integers(0, 2), st.floats(-500, 500, allow_nan=False)),
)


@settings(max_examples=80, deadline=None)
@given(tau=st.floats(1e-6, 10, allow_nan=False), events=st.lists(event_st, max_size=12),
       refoc=st.booleans(), n_seg=st.integers(1, 3))
def test_text_roundtrip_property(tau, events, refoc, n_seg):
    segs = [Schedule(tau, 16, events, refoc) for _ in range(n_seg)]
    back = loads(dumps(segs, LABELS, "nothing"), LABELS)
    assert back.segments == segs
    assert back.target == "nothing"
