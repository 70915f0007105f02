"""Data model of individual two-way unary automata and multiautomaton systems.

State identifiers are strings namespaced per automaton (``"A1.q0"``), so
disjointness across the system is a purely syntactic check.  The transition
function is split into three total maps: one for the unary inner letter and
one per endmarker.  All types are immutable after validation.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "Automaton",
    "MultiSystem",
    "BoundsProfile",
    "ValidationError",
    "MissingTransition",
    "DuplicateStateId",
    "BadMove",
    "BadBound",
    "validate_system",
    "bounds_profile",
]

MOVES = (-1, 0, 1)


class ValidationError(Exception):
    """A system description violates the model invariants."""


class MissingTransition(ValidationError):
    """A (state, symbol) pair has no transition."""


class DuplicateStateId(ValidationError):
    """A state identifier is reused across automata."""


class BadMove(ValidationError):
    """A head move outside {-1, 0, +1}."""


class BadBound(ValidationError):
    """Message bound below 1."""


@dataclass(frozen=True)
class Automaton:
    """One complete deterministic two-way unary automaton.

    ``delta_inner`` drives the head on the unary letter, ``delta_left`` and
    ``delta_right`` on the left and right endmarkers.  Each maps every state
    to a single ``(next_state, move)`` pair.
    """

    name: str
    states: frozenset
    initial: str
    finals: frozenset
    broadcasting: frozenset
    delta_inner: dict
    delta_left: dict
    delta_right: dict

    def __hash__(self):
        # The generated dataclass hash chokes on the dict fields; hash a
        # canonical tuple instead so automata can key caches.
        return hash(
            (
                self.name,
                self.states,
                self.initial,
                self.finals,
                self.broadcasting,
                tuple(sorted(self.delta_inner.items())),
                tuple(sorted(self.delta_left.items())),
                tuple(sorted(self.delta_right.items())),
            )
        )

    def validate(self) -> "Automaton":
        if self.initial not in self.states:
            raise ValidationError(f"{self.name}: initial state {self.initial!r} unknown")
        if not self.finals <= self.states:
            raise ValidationError(f"{self.name}: final states not a subset of states")
        if not self.broadcasting <= self.states:
            raise ValidationError(f"{self.name}: broadcasting states not a subset")
        for label, table in (
            ("a", self.delta_inner),
            ("L", self.delta_left),
            ("R", self.delta_right),
        ):
            for s in self.states:
                if s not in table:
                    raise MissingTransition(f"{self.name}: no transition for ({s}, {label})")
                nxt, mv = table[s]
                if nxt not in self.states:
                    raise ValidationError(
                        f"{self.name}: transition ({s}, {label}) targets unknown state {nxt!r}"
                    )
                if mv not in MOVES:
                    raise BadMove(f"{self.name}: move {mv!r} for ({s}, {label})")
            for s in table:
                if s not in self.states:
                    raise ValidationError(f"{self.name}: transition from unknown state {s!r}")
        return self


@dataclass(frozen=True)
class MultiSystem:
    """An ordered tuple of automata plus the message bound M; acceptor is index 1."""

    automata: tuple
    message_bound: int
    acceptor_index: int = 1

    def __hash__(self):
        return hash((self.automata, self.message_bound, self.acceptor_index))

    @property
    def n(self) -> int:
        return len(self.automata)

    def validate(self) -> "MultiSystem":
        if self.n < 1:
            raise ValidationError("a system needs at least one automaton")
        if self.message_bound < 1:
            raise BadBound(f"message bound must be >= 1, got {self.message_bound}")
        if self.acceptor_index != 1:
            raise ValidationError("the acceptor is fixed to automaton 1")
        seen: dict = {}
        for aut in self.automata:
            aut.validate()
            for s in aut.states:
                if s in seen:
                    raise DuplicateStateId(
                        f"state id {s!r} appears in both {seen[s]} and {aut.name}"
                    )
                seen[s] = aut.name
        return self


@dataclass(frozen=True)
class BoundsProfile:
    """Constants of the silent-phase analysis.

    K caps the traversal count of any phase, N_min is the largest state
    amplitude (inputs must be strictly longer to be "sufficiently large"),
    and G bounds the per-length slope of a traversal's duration.  The phase
    horizon is always derived as G*K*N, never stored.
    """

    K: int
    G: int
    N_min: int


def _automaton_from_raw(raw: dict) -> Automaton:
    known = {"name", "states", "initial", "finals", "broadcasting", "delta"}
    extra = set(raw) - known
    if extra:
        raise ValidationError(f"unknown automaton fields: {sorted(extra)}")
    name = raw.get("name", "A")
    states = frozenset(raw.get("states", ()))
    tables: dict = {"a": {}, "L": {}, "R": {}}
    for entry in raw.get("delta", ()):
        extra = set(entry) - {"state", "symbol", "next", "move"}
        if extra:
            raise ValidationError(f"{name}: unknown delta fields: {sorted(extra)}")
        sym = entry.get("symbol")
        if sym not in tables:
            raise ValidationError(f"{name}: unknown symbol {sym!r} (expected a, L or R)")
        mv = entry.get("move")
        if mv not in MOVES:
            raise BadMove(f"{name}: move {mv!r} for ({entry.get('state')}, {sym})")
        tables[sym][entry["state"]] = (entry["next"], mv)
    return Automaton(
        name=name,
        states=states,
        initial=raw.get("initial"),
        finals=frozenset(raw.get("finals", ())),
        broadcasting=frozenset(raw.get("broadcasting", ())),
        delta_inner=tables["a"],
        delta_left=tables["L"],
        delta_right=tables["R"],
    )


def validate_system(raw) -> MultiSystem:
    """Validate a raw description (or re-validate a MultiSystem) into a MultiSystem.

    Accepts either an already-built :class:`MultiSystem` (idempotent) or a
    dict with keys ``version``, ``automata`` and ``message_bound`` as produced
    by the CLI spec-file parser.
    """
    if isinstance(raw, MultiSystem):
        return raw.validate()
    if not isinstance(raw, dict):
        raise ValidationError(f"cannot validate {type(raw).__name__}")
    extra = set(raw) - {"version", "automata", "message_bound"}
    if extra:
        raise ValidationError(f"unknown top-level fields: {sorted(extra)}")
    automata = tuple(_automaton_from_raw(a) for a in raw.get("automata", ()))
    bound = raw.get("message_bound", 0)
    if not isinstance(bound, int) or bound < 1:
        raise BadBound(f"message bound must be an integer >= 1, got {bound!r}")
    return MultiSystem(automata=automata, message_bound=bound).validate()


def bounds_profile(system: MultiSystem) -> BoundsProfile:
    """Phase constants: K = 2 * max state count, N_min = max amplitude, G = max slope."""
    from . import dynamics

    system = validate_system(system)
    k = 2 * max(len(a.states) for a in system.automata)
    amp = 0
    slope = 0
    for aut in system.automata:
        for s in sorted(aut.states):
            amp = max(amp, dynamics.basic_sequence(aut, s).amplitude)
        slope = max(slope, dynamics.traversal_slope(aut))
    return BoundsProfile(K=k, G=slope, N_min=amp)
