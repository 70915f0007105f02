import pytest

from multiauto.model import (
    Automaton,
    BadMove,
    MissingTransition,
    MultiSystem,
    ValidationError,
    bounds_profile,
    validate_system,
)

from conftest import FIXTURE_NAMES, load_fixture, unique_automata


def walker_raw():
    return {
        "version": 1,
        "automata": [
            {
                "name": "A1",
                "states": ["w"],
                "initial": "w",
                "finals": ["w"],
                "broadcasting": ["w"],
                "delta": [
                    {"state": "w", "symbol": "L", "next": "w", "move": 1},
                    {"state": "w", "symbol": "a", "next": "w", "move": 1},
                    {"state": "w", "symbol": "R", "next": "w", "move": 0},
                ],
            }
        ],
        "message_bound": 1,
    }


def test_walker_validates():
    system = validate_system(walker_raw())
    assert system.n == 1
    assert system.message_bound == 1
    assert system.automata[0].initial == "w"


def test_validate_is_idempotent_on_systems():
    system = validate_system(walker_raw())
    assert validate_system(system) is system or validate_system(system) == system


def test_unknown_top_level_field_rejected():
    raw = walker_raw()
    raw["speed"] = 9
    with pytest.raises(ValidationError):
        validate_system(raw)


def test_unknown_automaton_field_rejected():
    raw = walker_raw()
    raw["automata"][0]["color"] = "red"
    with pytest.raises(ValidationError):
        validate_system(raw)


def test_missing_transition_rejected():
    raw = walker_raw()
    raw["automata"][0]["delta"] = raw["automata"][0]["delta"][:2]
    with pytest.raises(MissingTransition):
        validate_system(raw)


def test_bad_move_rejected():
    raw = walker_raw()
    raw["automata"][0]["delta"][1]["move"] = 2
    with pytest.raises(BadMove):
        validate_system(raw)


def test_outward_endmarker_move_fails_at_runtime():
    from multiauto import sim

    raw = walker_raw()
    raw["automata"][0]["delta"][0]["move"] = -1  # left marker moving left
    system = validate_system(raw)
    with pytest.raises(sim.HeadFellOff):
        sim.run(system, 3)


def test_message_bound_at_least_one():
    raw = walker_raw()
    raw["message_bound"] = 0
    with pytest.raises(ValidationError):
        validate_system(raw)


def test_automata_are_hashable():
    a = validate_system(walker_raw()).automata[0]
    b = validate_system(walker_raw()).automata[0]
    assert a == b and hash(a) == hash(b)


def test_pingpong_bounds_profile():
    system = load_fixture("pingpong")
    bounds = bounds_profile(system)
    assert bounds.K == 4
    assert bounds.N_min >= 1


def test_nmin_at_most_max_state_count():
    # Any state's amplitude is at most its basic-sequence length.
    for name in FIXTURE_NAMES:
        system = load_fixture(name)
        bounds = bounds_profile(system)
        assert bounds.N_min <= max(len(a.states) for a in system.automata), name


def test_fixtures_all_validate(systems):
    for name, system in systems.items():
        assert isinstance(system, MultiSystem), name
        assert 1 <= system.n <= 3, name
        assert system.message_bound >= 1, name
