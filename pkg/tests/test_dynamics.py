import random

import pytest
from hypothesis import given, settings, strategies as st

from multiauto import dynamics
from multiauto.model import Automaton

from conftest import load_fixture, unique_automata


def test_walker_basic_sequence():
    aut = load_fixture("walker").automata[0]
    prof = dynamics.basic_sequence(aut, "w")
    assert prof.sequence == ("w", "w")
    assert prof.lambdas == (0, 1)
    assert prof.net_cycle_displacement == 1
    assert prof.amplitude == 1
    assert prof.direction == "Right"


def test_pingpong_basic_sequence():
    aut = load_fixture("pingpong").automata[0]
    prof = dynamics.basic_sequence(aut, "r")
    assert prof.direction == "Motionless"
    assert prof.amplitude == 1
    assert prof.net_cycle_displacement == 0


def test_drift3_basic_sequence():
    aut = load_fixture("drift3").automata[0]
    prof = dynamics.basic_sequence(aut, "d0")
    assert prof.net_cycle_displacement == 1
    assert prof.amplitude == 2
    assert prof.direction == "Right"


def test_walker_takeoff():
    aut = load_fixture("walker").automata[0]
    n = dynamics.min_sufficient_length(aut)
    assert isinstance(dynamics.takeoff(aut, "w", "L", n), dynamics.Traverse)
    out = dynamics.takeoff(aut, "w", "R", n)
    assert isinstance(out, dynamics.Return) and out.T == 1


def test_pingpong_takeoff_oscillates():
    aut = load_fixture("pingpong").automata[0]
    n = dynamics.min_sufficient_length(aut)
    out = dynamics.takeoff(aut, "r", "L", n)
    assert isinstance(out, dynamics.Oscillate)


def test_takeoff_rejects_short_input():
    aut = load_fixture("walker").automata[0]
    with pytest.raises(dynamics.InputTooShort):
        dynamics.takeoff(aut, "w", "L", 0)


def test_takeoff_classification_is_length_independent():
    for aut in unique_automata({"x": load_fixture("rebounder"), "y": load_fixture("drift3")}):
        n = dynamics.min_sufficient_length(aut)
        for s in sorted(aut.states):
            for side in ("L", "R"):
                a = dynamics.takeoff(aut, s, side, n)
                b = dynamics.takeoff(aut, s, side, n + 7)
                assert type(a) is type(b), (aut.name, s, side)


def _random_automaton(seed, k):
    rng = random.Random(seed)
    states = [f"q{i}" for i in range(k)]

    def tbl(moves):
        return {s: (rng.choice(states), rng.choice(moves)) for s in states}

    return Automaton(
        name="A",
        states=frozenset(states),
        initial=states[0],
        finals=frozenset(),
        broadcasting=frozenset(),
        delta_inner=tbl((-1, 0, 1)),
        delta_left=tbl((0, 1)),
        delta_right=tbl((-1, 0)),
    )


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.integers(1, 5))
def test_basic_sequence_shape(seed, k):
    aut = _random_automaton(seed, k)
    for s in sorted(aut.states):
        prof = dynamics.basic_sequence(aut, s)
        # s_0..s_k with s_k the first repeat of s_loop_entry.
        assert prof.sequence[0] == s
        assert prof.sequence[-1] == prof.sequence[prof.loop_entry]
        assert len(set(prof.sequence[:-1])) == len(prof.sequence) - 1
        assert len(prof.sequence) <= k + 1
        assert prof.lambdas[0] == 0
        assert all(abs(a - b) == abs(a - b) <= 1 for a, b in zip(prof.lambdas, prof.lambdas[1:]))
        assert prof.amplitude == max(prof.lambdas) - min(prof.lambdas)
        assert prof.net_cycle_displacement == prof.lambdas[-1] - prof.lambdas[prof.loop_entry]


def test_traversal_slope_zero_without_drift():
    aut = load_fixture("pingpong").automata[0]
    assert dynamics.traversal_slope(aut) == 0


def test_traversal_slope_positive_for_drifters():
    assert dynamics.traversal_slope(load_fixture("walker").automata[0]) >= 1
    assert dynamics.traversal_slope(load_fixture("drift3").automata[0]) >= 1
