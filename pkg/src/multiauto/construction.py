"""Executable construction of the Presburger acceptance formulas.

The pipeline mirrors the silent-phase analysis: ``reach_formula`` describes
endmarker-free runs exactly, traversals and bounce blocks compose reaches
through a fixed rebound chain, ``run_formula`` stitches reaches through the
endmarkers with the traversal count capped by K, races pick the earliest
broadcasting state, the phase formula advances every automaton to the next
broadcast, and ``recognized_set`` folds at most M phases into a single
one-variable formula that is lowered to an ultimately periodic set.

All formulas are exact descriptions of the simulator for sufficiently long
inputs; the recognized set patches the short inputs by direct simulation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import gcd

from . import dynamics, sim
from .model import BoundsProfile, MultiSystem, bounds_profile, validate_system
from .presburger import (
    FALSE,
    TRUE,
    Dvd,
    Eq,
    Formula,
    Le,
    Term,
    UltimatelyPeriodicSet,
    _fresh_var,
    eliminate,
    eq,
    evaluate,
    exists,
    free_vars,
    ge,
    land,
    le,
    lnot,
    lor,
    solution_set,
    substitute,
    var,
)

__all__ = [
    "ParamFormula",
    "BouncePattern",
    "PhaseFrontier",
    "NoTraversal",
    "reach_formula",
    "traversal_formula",
    "bounce_formula",
    "run_formula",
    "race_formula",
    "mute_formula",
    "phase_formula",
    "initial_frontier",
    "advance_frontier",
    "accept_formula",
    "recognized_set",
]


class NoTraversal(Exception):
    """The requested state pair admits no traversal; the formula is False."""


@dataclass(frozen=True)
class ParamFormula:
    """A formula with a named free-variable signature."""

    formula: Formula
    signature: tuple

    def __post_init__(self):
        extra = free_vars(self.formula) - set(self.signature)
        if extra:
            raise ValueError(f"free variables outside signature: {sorted(extra)}")


@dataclass(frozen=True)
class BouncePattern:
    """An alternating traversal block: kind RR/RL/LR/LL with r bounces.

    RR and LL chains hold 2r+2 states (2r+1 traversals), RL and LR chains
    hold 2r+3 states (2r+2 traversals).
    """

    kind: str
    state_chain: tuple
    r: int

    def __post_init__(self):
        if self.kind not in ("RR", "RL", "LR", "LL"):
            raise ValueError(f"bad kind {self.kind!r}")
        want = 2 * self.r + (2 if self.kind in ("RR", "LL") else 3)
        if len(self.state_chain) != want:
            raise ValueError(
                f"{self.kind} with r={self.r} needs {want} states, got {len(self.state_chain)}"
            )

    @property
    def directions(self) -> tuple:
        first = "Right" if self.kind[0] == "R" else "Left"
        other = "Left" if first == "Right" else "Right"
        n = len(self.state_chain) - 1
        return tuple(first if i % 2 == 0 else other for i in range(n))


@dataclass(frozen=True)
class PhaseFrontier:
    """The global state at a broadcast plus the position function as a formula.

    ``position_graph`` has signature (N, pi_1..pi_n) and is functional in N.
    The frontier with ``messages_spent == 0`` is the initial configuration
    (all heads at 0), every later frontier sits on a broadcasting step.
    """

    sigma: tuple
    position_graph: ParamFormula
    messages_spent: int


# ---------------------------------------------------------------------------
# Reach: endmarker-free runs, exact for every N


def _pi_names(n):
    return tuple(f"pi{i + 1}" for i in range(n))


def _pip_names(n):
    return tuple(f"pip{i + 1}" for i in range(n))


def _first_stop_index(prof, stop):
    """First index >= 1 of a stop state in the basic sequence, else None."""
    for i in range(1, prof.k + 1):
        if prof.sequence[i] in stop:
            return i
    return None


def _interior_expr(aut, stop, s, s2, P, PP, Tm, Nv):
    """Reach from (s, P) staying interior at all times 1..T-1.

    The start is assumed interior (or handled by the caller); the final
    position PP is unconstrained, so first contact with an endmarker may
    only happen at time T.  Stop states are forbidden at times 1..T-1.
    """
    prof = dynamics.basic_sequence(aut, s)
    seq, lam = prof.sequence, prof.lambdas
    ell, k, L, c = prof.loop_entry, prof.k, prof.cycle_length, prof.net_cycle_displacement
    i0 = _first_stop_index(prof, stop)
    jmax = i0 if i0 is not None else k - 1

    disjuncts = []
    for j in range(jmax + 1):
        if seq[j] == s2:
            body = [eq(Tm - j), eq(PP - P - lam[j])]
            for i in range(1, j):
                body.append(ge(P + lam[i], 1))
                body.append(le(P + lam[i], Nv))
            disjuncts.append(land(*body))

    if i0 is None:
        # Full cycles: T = ell + h*L + r with h >= 1.  En-route positions are
        # monotone in the cycle count, so each residue r' is guarded by its
        # first and last occurrence only.
        prefix_guards = []
        for i in range(1, k):
            prefix_guards.append(ge(P + lam[i], 1))
            prefix_guards.append(le(P + lam[i], Nv))
        for r in range(L):
            if seq[ell + r] != s2:
                continue
            h = var(_fresh_var("h"))
            body = [
                ge(h, 1),
                eq(Tm - (h * L) - (ell + r)),
                eq(PP - P - lam[ell + r] - h * c),
            ]
            body.extend(prefix_guards)
            for rp in range(L):
                m_last = h if rp < r else h - 1
                base = P + lam[ell + rp]
                inside = land(
                    ge(base + c, 1),
                    le(base + c, Nv),
                    ge(base + m_last * c, 1),
                    le(base + m_last * c, Nv),
                )
                if rp < r:
                    body.append(inside)
                else:
                    body.append(lor(le(m_last, 0), inside))
            disjuncts.append(exists(h.coeffs[0][0], land(*body)))
    return lor(*disjuncts)


def _endmarker_start_expr(aut, stop, s, s2, side, PP, Tm, Nv):
    """Reach from (s, 0) or (s, N+1); position at time 0 is the endmarker."""
    start_pos = Term(0) if side == "L" else Nv + 1
    t0 = land(eq(Tm), eq(PP - start_pos)) if s2 == s else FALSE
    table = aut.delta_left if side == "L" else aut.delta_right
    t, d = table[s]
    inward = 1 if side == "L" else -1
    if d == -inward:
        # Steps off the tape: no configuration is reachable beyond T=0.
        return t0
    if d == 0:
        step = land(eq(Tm - 1), eq(PP - start_pos)) if s2 == t else FALSE
        return lor(t0, step)
    # Inward move: lands on position 1 (resp. N); when N = 0 that cell is the
    # opposite endmarker and the run must end there.
    land_pos = Term(1) if side == "L" else Nv
    n0 = land(eq(Nv), eq(Tm - 1), eq(PP - land_pos)) if s2 == t else FALSE
    if t in stop:
        cont = land(ge(Nv, 1), eq(Tm - 1), eq(PP - land_pos)) if s2 == t else FALSE
    else:
        cont = land(
            ge(Nv, 1),
            _interior_expr(aut, stop, t, s2, land_pos, PP, Tm - 1, Nv),
        )
    return lor(t0, n0, cont)


def _reach_expr(aut, stop, s, s2, P, PP, Tm, Nv):
    """Reach from (s, P) to (s2, PP) in exactly T steps, interior en route."""
    branches = []
    # p = 0
    if P.coeffs == () and P.const != 0:
        pass
    else:
        g = eq(P)
        if g is not FALSE:
            branches.append(land(g, _endmarker_start_expr(aut, stop, s, s2, "L", PP, Tm, Nv)))
    # p = N + 1
    g = eq(P - Nv - 1)
    if g is not FALSE:
        branches.append(land(g, _endmarker_start_expr(aut, stop, s, s2, "R", PP, Tm, Nv)))
    # 1 <= p <= N
    g = land(ge(P, 1), le(P, Nv))
    if g is not FALSE:
        branches.append(land(g, _interior_expr(aut, stop, s, s2, P, PP, Tm, Nv)))
    return lor(*branches)


@lru_cache(maxsize=None)
def _reach_canonical(aut, stop, s, s2):
    return _reach_expr(aut, stop, s, s2, var("p"), var("pp"), var("T"), var("N"))


def _sub_many(f, mapping):
    """Substitute several variables; images must not mention other sources."""
    for v, t in mapping.items():
        for w, _ in t.coeffs:
            if w != v and w in mapping and mapping[w] != var(w):
                raise ValueError(f"substitution image of {v} mentions source {w}")
    for v, t in mapping.items():
        if t != var(v):
            f = substitute(f, v, t)
    return f


def _reach(aut, stop, s, s2, P, PP, Tm):
    f = _reach_canonical(aut, frozenset(stop), s, s2)
    return _sub_many(f, {"p": P, "pp": PP, "T": Tm})


def reach_formula(aut, stop, s, s2) -> ParamFormula:
    """Reach_S: (s,p) to (s2,p') in exactly T steps, never at 0 or N+1 and
    never in a stop state at times 1..T-1."""
    return ParamFormula(
        _reach_canonical(aut, frozenset(stop), s, s2), ("N", "p", "pp", "T")
    )


# ---------------------------------------------------------------------------
# Launch classification at a witness length (rebound chains are N-independent)


def _witness_length(aut):
    amp = max(dynamics.basic_sequence(aut, q).amplitude for q in aut.states)
    return max(1 + amp, 2 * amp + 2)


def _launch_at(aut, state, side, N):
    """Simulate leaving the given endmarker: ('rebound', v, tau) back to the
    same end, ('cross', v, tau) to the opposite end, ('trapped',) for an
    interior oscillation, or ('falloff',)."""
    start = 0 if side == "L" else N + 1
    far = N + 1 if side == "L" else 0
    table = aut.delta_left if side == "L" else aut.delta_right
    s, d = table[state]
    p = start + d
    if p < 0 or p > N + 1:
        return ("falloff",)
    t = 1
    seen = set()
    while True:
        if p == start:
            return ("rebound", s, t)
        if p == far:
            return ("cross", s, t)
        if (s, p) in seen:
            return ("trapped",)
        seen.add((s, p))
        s, p = sim._step_one(aut, s, p, N)
        t += 1


@lru_cache(maxsize=None)
def _launch(aut, state, side):
    """Length-independent launch classification, asserted at two witnesses."""
    nw = _witness_length(aut)
    out = _launch_at(aut, state, side, nw)
    out2 = _launch_at(aut, state, side, nw + 1)
    if out[0] in ("rebound", "falloff", "trapped"):
        assert out == out2, f"unstable launch for ({state}, {side}): {out} vs {out2}"
    else:
        assert out2[0] == "cross", f"unstable launch for ({state}, {side}): {out} vs {out2}"
    return out


# ---------------------------------------------------------------------------
# Traversals and bounce blocks


def _side_pos(side, Nv):
    return Term(0) if side == "L" else Nv + 1


def _traversal_expr(aut, stop, s, s2, direction, Tm, Nv):
    side = "L" if direction == "Right" else "R"
    chain = []
    cur = s
    seen = {cur}
    while True:
        out = _launch(aut, cur, side)
        if out[0] in ("trapped", "falloff"):
            return FALSE
        if out[0] == "rebound":
            v = out[1]
            if v in seen or v in stop:
                return FALSE
            chain.append((cur, v))
            seen.add(v)
            cur = v
            continue
        break
    here = _side_pos(side, Nv)
    there = _side_pos("R" if side == "L" else "L", Nv)
    tvars = [var(_fresh_var("t")) for _ in range(len(chain) + 1)]
    parts = [eq(Tm - sum(tvars, Term(0)))]
    for (u, v), tv in zip(chain, tvars):
        parts.append(_reach(aut, stop, u, v, here, here, tv))
    parts.append(_reach(aut, stop, cur, s2, here, there, tvars[-1]))
    return exists([t.coeffs[0][0] for t in tvars], land(*parts))


def traversal_formula(aut, stop, s, s2, direction) -> ParamFormula:
    """Right/Left traversal through the fixed rebound chain; False when the
    pair cannot traverse."""
    if direction not in ("Right", "Left"):
        raise ValueError(f"direction must be Right or Left, got {direction!r}")
    f = _traversal_expr(aut, frozenset(stop), s, s2, direction, var("T"), var("N"))
    return ParamFormula(f, ("N", "T"))


def bounce_formula(aut, stop, pattern: BouncePattern) -> ParamFormula:
    """Alternating traversal block with T = sum of the traversal times."""
    stop = frozenset(stop)
    Nv, Tm = var("N"), var("T")
    chain = pattern.state_chain
    dirs = pattern.directions
    tvars = [var(_fresh_var("t")) for _ in dirs]
    parts = [eq(Tm - sum(tvars, Term(0)))]
    for i, d in enumerate(dirs):
        parts.append(_traversal_expr(aut, stop, chain[i], chain[i + 1], d, tvars[i], Nv))
    return ParamFormula(
        exists([t.coeffs[0][0] for t in tvars], land(*parts)), ("N", "T")
    )


# ---------------------------------------------------------------------------
# Run: reach, through at most K traversals, then reach again


@lru_cache(maxsize=None)
def _edge_n_constraint(aut, stop, u, side, v, cross):
    """The N-projection of one endmarker-to-endmarker segment (for pruning)."""
    Nv = var("N")
    here = _side_pos(side, Nv)
    there = _side_pos("R" if side == "L" else "L", Nv) if cross else here
    t = _fresh_var("t")
    f = exists(t, _reach(aut, stop, u, v, here, there, var(t)))
    return eliminate(f)


def _n_sat(f) -> bool:
    """Satisfiability over naturals of a quantifier-free formula in N."""
    if f is TRUE:
        return True
    if f is FALSE:
        return False
    bound = 1
    period = 1
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Le, Eq)):
            c = max((abs(c) for _, c in g.t.coeffs), default=1)
            bound = max(bound, abs(g.t.const) // max(c, 1) + 1)
        elif isinstance(g, Dvd):
            period = period * g.d // gcd(period, g.d)
        for attr in ("f", "args"):
            sub = getattr(g, attr, None)
            if sub is None:
                continue
            stack.extend(sub if isinstance(sub, tuple) else [sub])
    return any(evaluate(f, {"N": n}) for n in range(bound + period + 1))


def _crossing_targets(aut, stop, u, side):
    out = []
    for v in sorted(aut.states):
        if _edge_n_constraint(aut, frozenset(stop), u, side, v, True) is not FALSE:
            out.append(v)
    return out


def _run_expr(aut, stop, s, s2, K, P, PP, Tm, Nv):
    """Disjunction over endmarker-hit chains with at most K traversals.

    Each chain is: a reach to the first endmarker hit, endmarker-to-endmarker
    segments (rebounds are deterministic with constant duration, crossings
    are enumerated over landing states), and a final endmarker-start reach.
    Deterministic rebound cycles are closed with a periodic disjunct instead
    of being unrolled; crossing cycles are unrolled up to the traversal cap.
    Run0 (no endmarker contact) is the plain reach.

    The chain machinery relies on length-independent launch behaviour, which
    only holds for sufficiently long inputs, so every chain disjunct carries
    an N >= N_min guard; below it only the exact Run0 branch remains (short
    inputs are handled by simulation downstream).
    """
    stop = frozenset(stop)
    nmin = 1 + max(dynamics.basic_sequence(aut, q).amplitude for q in aut.states)
    long_enough = ge(Nv, nmin)
    disjuncts = [_reach(aut, stop, s, s2, P, PP, Tm)]

    def emit_stop(path, tvars):
        # Stop anywhere after the last junction of the path; a junction in a
        # stop state can only be the final configuration itself.
        u, side = path[-1]
        if u in stop:
            if u != s2:
                return
            parts = [long_enough, eq(Tm - sum(tvars, Term(0))), eq(PP - _side_pos(side, Nv))]
            parts.extend(segment_formulas(path, tvars))
            names = [t.coeffs[0][0] for t in tvars]
            disjuncts.append(exists(names, land(*parts)))
            return
        tb = var(_fresh_var("t"))
        parts = [long_enough, eq(Tm - sum(tvars, Term(0)) - tb)]
        parts.extend(segment_formulas(path, tvars))
        parts.append(_reach(aut, stop, u, s2, _side_pos(side, Nv), PP, tb))
        names = [t.coeffs[0][0] for t in tvars] + [tb.coeffs[0][0]]
        disjuncts.append(exists(names, land(*parts)))

    def segment_formulas(path, tvars):
        parts = [_reach(aut, stop, s, path[0][0], P, _side_pos(path[0][1], Nv), tvars[0])]
        for i in range(1, len(path)):
            u, uside = path[i - 1]
            v, vside = path[i]
            parts.append(
                _reach(
                    aut, stop, u, v,
                    _side_pos(uside, Nv), _side_pos(vside, Nv), tvars[i],
                )
            )
        return parts

    def emit_loop(path, tvars, entry_index, period):
        # A deterministic all-rebound cycle: path[entry_index:] repeats with a
        # constant period; stops inside later laps reuse the lap offsets.  One
        # full lap is asserted segment-by-segment at its constant rebound
        # times, so a lap broken by a stop state cannot pretend to cycle.
        lap_parts = []
        for q, sd in path[entry_index:]:
            _, v, tau = _launch(aut, q, sd)
            lap_parts.append(
                _reach(aut, stop, q, v, _side_pos(sd, Nv), _side_pos(sd, Nv), Term(tau))
            )
        h = var(_fresh_var("h"))
        for t in range(entry_index, len(path)):
            u, side = path[t][:2]
            tb = var(_fresh_var("t"))
            used = tvars[: t + 1]
            parts = [long_enough, ge(h, 1), eq(Tm - sum(used, Term(0)) - h * period - tb)]
            parts.extend(lap_parts)
            parts.extend(segment_formulas(path[: t + 1], used))
            parts.append(_reach(aut, stop, u, s2, _side_pos(side, Nv), PP, tb))
            names = [x.coeffs[0][0] for x in used] + [tb.coeffs[0][0], h.coeffs[0][0]]
            disjuncts.append(exists(names, land(*parts)))

    def extend(path, tvars, nconstraints, crossings, laps):
        u, side = path[-1]
        emit_stop(path, tvars)
        if u in stop:
            return
        out = _launch(aut, u, side)
        if out[0] in ("trapped", "falloff"):
            return
        if out[0] == "rebound":
            v = out[1]
            nxt = (v, side)
            for idx in range(len(path)):
                if path[idx] == nxt:
                    lap = path[idx:]
                    if all(_launch(aut, q, sd)[0] == "rebound" for q, sd in lap):
                        period = sum(_launch(aut, q, sd)[2] for q, sd in lap)
                        emit_loop(path, tvars, idx, period)
                        return
            tv = var(_fresh_var("t"))
            extend(path + [nxt], tvars + [tv], nconstraints, crossings, laps)
            return
        # crossing
        if crossings >= K:
            return
        far = "R" if side == "L" else "L"
        for v in _crossing_targets(aut, stop, u, side):
            nxt = (v, far)
            cons = _edge_n_constraint(aut, stop, u, side, v, True)
            acc = land(*nconstraints, cons)
            if acc is FALSE or not _n_sat(acc):
                continue
            if nxt in path and laps >= K:
                continue
            tv = var(_fresh_var("t"))
            extend(
                path + [nxt],
                tvars + [tv],
                nconstraints + [cons],
                crossings + 1,
                laps + (1 if nxt in path else 0),
            )

    for v in sorted(aut.states):
        for side in ("L", "R"):
            first = _reach(aut, stop, s, v, P, _side_pos(side, Nv), var("__probe"))
            if first is FALSE:
                continue
            tv = var(_fresh_var("t"))
            extend([(v, side)], [tv], [], 0, 0)
    return lor(*disjuncts)


@lru_cache(maxsize=None)
def _run_canonical(aut, stop, s, s2, K):
    return _run_expr(aut, stop, s, s2, K, var("p"), var("pp"), var("T"), var("N"))


def _run(aut, stop, s, s2, K, P, PP, Tm):
    f = _run_canonical(aut, frozenset(stop), s, s2, K)
    return _sub_many(f, {"p": P, "pp": PP, "T": Tm})


def run_formula(aut, stop, s, s2, K) -> ParamFormula:
    """Run_S: like reach but the head may touch the endmarkers, making at
    most K traversals."""
    return ParamFormula(
        _run_canonical(aut, frozenset(stop), s, s2, K), ("N", "p", "pp", "T")
    )


# ---------------------------------------------------------------------------
# Race and Mute


def _race_expr(aut, s, K, P, Tm, Nv):
    B = sorted(aut.broadcasting)
    picks = []
    for b in B:
        pb = _fresh_var("q")
        picks.append(exists(pb, _run(aut, frozenset({b}), s, b, K, P, var(pb), Tm)))
    minimality = []
    for c in B:
        tc, pc = _fresh_var("t"), _fresh_var("q")
        minimality.append(
            lnot(
                exists(
                    [tc, pc],
                    land(
                        _run(aut, frozenset({c}), s, c, K, P, var(pc), var(tc)),
                        le(var(tc), Tm - 1),
                    ),
                )
            )
        )
    return land(lor(*picks), *minimality)


def race_formula(aut, s, K) -> ParamFormula:
    """T is the earliest time a broadcasting state is occupied from (s, p)."""
    return ParamFormula(_race_expr(aut, s, K, var("p"), var("T"), var("N")), ("N", "p", "T"))


def _mute_expr(aut, s, K, P, Nv):
    parts = []
    for b in sorted(aut.broadcasting):
        tb, pb = _fresh_var("t"), _fresh_var("q")
        parts.append(
            lnot(exists([tb, pb], _run(aut, frozenset({b}), s, b, K, P, var(pb), var(tb))))
        )
    return land(*parts)


def mute_formula(aut, s, K) -> ParamFormula:
    """No broadcasting state is ever reachable from (s, p)."""
    return ParamFormula(_mute_expr(aut, s, K, var("p"), var("N")), ("N", "p"))


def _broadcast_by_expr(aut, s, K, P, Bound, Nv):
    """Some broadcasting state is occupied at a time <= Bound from (s, P)."""
    parts = []
    for b in sorted(aut.broadcasting):
        tb, pb = _fresh_var("t"), _fresh_var("q")
        parts.append(
            exists(
                [tb, pb],
                land(
                    _run(aut, frozenset({b}), s, b, K, P, var(pb), var(tb)),
                    le(var(tb), Bound),
                ),
            )
        )
    return lor(*parts)


# ---------------------------------------------------------------------------
# The phase formula and frontier advancement


def _phase_expr(system, sigma, sigma2, I, bounds, pos_terms, pos2_vars, Nv, caps):
    T = _fresh_var("T")
    Tv = var(T)
    parts = []
    for i, aut in enumerate(system.automata):
        if i in I:
            parts.append(_race_expr(aut, sigma[i], bounds.K, pos_terms[i], Tv, Nv))
        else:
            # Slower racers are allowed: they must broadcast strictly later
            # than T (or never), matching the simulator's argmin winners.
            ti = _fresh_var("T")
            later = exists(
                ti,
                land(
                    _race_expr(aut, sigma[i], bounds.K, pos_terms[i], var(ti), Nv),
                    ge(var(ti), Tv + 1),
                ),
            )
            parts.append(lor(_mute_expr(aut, sigma[i], bounds.K, pos_terms[i], Nv), later))
    for i, aut in enumerate(system.automata):
        parts.append(
            _run(aut, frozenset(), sigma[i], sigma2[i], caps[i], pos_terms[i], pos2_vars[i], Tv)
        )
    return exists(T, land(*parts))


def _check_theta(system, sigma2, I):
    if not I or not set(I) <= set(range(system.n)):
        raise ValueError(f"I must be a nonempty subset of automaton indices, got {I}")
    for j, aut in enumerate(system.automata):
        if (sigma2[j] in aut.broadcasting) != (j in I):
            raise ValueError(
                f"theta side condition violated at automaton {j + 1}: "
                f"{sigma2[j]!r} broadcasting iff {j + 1} in I fails"
            )


def phase_formula(system, sigma, sigma2, I, bounds) -> ParamFormula:
    """The displayed phase formula: racers in I broadcast simultaneously at
    the minimum time T, everyone else is mute or strictly later, and every
    automaton is advanced by an unrestricted run over T."""
    system = validate_system(system)
    I = frozenset(I)
    _check_theta(system, sigma2, I)
    n = system.n
    Nv = var("N")
    pos = [var(x) for x in _pi_names(n)]
    pos2 = [var(x) for x in _pip_names(n)]
    caps = _run_caps(system, bounds)
    f = _phase_expr(system, sigma, tuple(sigma2), I, bounds, pos, pos2, Nv, caps)
    return ParamFormula(f, ("N",) + _pi_names(n) + _pip_names(n))


def _run_caps(system, bounds):
    """Per-automaton traversal caps for the phase runs.

    The analysis cap is G*K; the realized number of traversals inside one
    phase is measured on the sampled lengths and padded, keeping formulas
    small without touching the hard ceiling.
    """
    ceiling = max(bounds.G, 1) * bounds.K
    measured = _measured_crossings(system)
    return tuple(min(ceiling, max(measured, 1) + 2) for _ in system.automata)


@lru_cache(maxsize=None)
def _sample_lengths(system):
    nmin = dynamics.min_sufficient_length(system)
    period = 1
    for aut in system.automata:
        for q in aut.states:
            c = abs(dynamics.basic_sequence(aut, q).net_cycle_displacement)
            if c:
                period = period * c // gcd(period, c)
    return tuple(range(0, max(320, nmin + 30 * period + 60) + 1))


@lru_cache(maxsize=None)
def _phase_trace(system, N):
    """Broadcast events of the run on a^N: list of (time, indices, config),
    stopping once no further broadcast can occur."""
    config = sim.GlobalConfiguration(
        tuple(a.initial for a in system.automata),
        tuple(0 for _ in system.automata),
        0,
    )
    maxq = max(len(a.states) for a in system.automata)
    patience = (N + 2) * maxq + 2
    events = []
    quiet = 0
    t = 0
    while config.messages_used < system.message_bound and quiet <= patience:
        nxt, broadcasters = sim.global_step(system, config, N)
        if broadcasters:
            events.append((t, broadcasters, config))
            quiet = 0
        else:
            quiet += 1
        config = nxt
        t += 1
    return tuple(events)


@lru_cache(maxsize=None)
def _measured_crossings(system):
    """Max endmarker-to-endmarker traversals by any automaton inside one
    phase, over the sampled lengths."""
    best = 0
    for N in _sample_lengths(system)[:: max(1, len(_sample_lengths(system)) // 80)]:
        events = _phase_trace(system, N)
        times = [t for t, _, _ in events]
        # Re-simulate each automaton alone, counting crossings per phase.
        for aut in system.automata:
            s, p = aut.initial, 0
            crossings = 0
            ci = 0
            last_end = None
            horizon = (times[-1] if times else 0) + (N + 2) * (len(aut.states) + 1)
            for t in range(1, horizon + 1):
                s, p = sim._step_one(aut, s, p, N)
                while ci < len(times) and t > times[ci]:
                    ci += 1
                    crossings = 0
                    last_end = None
                if p == 0 or p == N + 1:
                    end = "L" if p == 0 else "R"
                    if last_end is not None and end != last_end:
                        crossings += 1
                        best = max(best, crossings)
                    last_end = end
    return best


def initial_frontier(system) -> PhaseFrontier:
    """All automata in their initial states with heads on the left endmarker."""
    n = system.n
    f = land(*[eq(var(x)) for x in _pi_names(n)])
    return PhaseFrontier(
        sigma=tuple(a.initial for a in system.automata),
        position_graph=ParamFormula(f, ("N",) + _pi_names(n)),
        messages_spent=0,
    )


def _patterns(n):
    return itertools.product("LMR", repeat=n)


def _pattern_guard(pattern, pos, Nv):
    parts = []
    for sym, pv in zip(pattern, pos):
        if sym == "L":
            parts.append(eq(pv))
        elif sym == "R":
            parts.append(eq(pv - Nv - 1))
        else:
            parts.append(land(ge(pv, 1), le(pv, Nv)))
    return land(*parts)


def _stepped(system, sigma, pattern, Nv, pos):
    """Apply one synchronous step under an endmarker pattern; returns
    (states, position terms) or None when a head would fall off."""
    states, terms = [], []
    for i, aut in enumerate(system.automata):
        sym = pattern[i]
        if sym == "L":
            t, d = aut.delta_left[sigma[i]]
            if d < 0:
                return None
            terms.append(Term(d))
        elif sym == "R":
            t, d = aut.delta_right[sigma[i]]
            if d > 0:
                return None
            terms.append(Nv + 1 + d)
        else:
            t, d = aut.delta_inner[sigma[i]]
            terms.append(pos[i] + d)
        states.append(t)
    return tuple(states), terms


def _frontier_matches(frontier, N, positions):
    asg = {"N": N}
    for name, p in zip(_pi_names(len(positions)), positions):
        asg[name] = p
    return evaluate(frontier.position_graph.formula, asg)


def _realized_branches(system, frontier):
    """(pattern, I, sigma') triples realized by the simulator on the sampled
    lengths, used to avoid eliminating obviously empty branches."""
    out = set()
    spent = frontier.messages_spent
    for N in _sample_lengths(system):
        events = _phase_trace(system, N)
        if len(events) <= spent:
            continue
        if spent == 0:
            t0 = 0
            cfg = sim.GlobalConfiguration(
                tuple(a.initial for a in system.automata),
                tuple(0 for _ in system.automata),
                0,
            )
        else:
            t0, _, cfg = events[spent - 1]
        if cfg.sigma != frontier.sigma:
            continue
        if not _frontier_matches(frontier, N, cfg.pi):
            continue
        _, idxs, bcfg = events[spent]
        pattern = tuple(
            "L" if p == 0 else "R" if p == N + 1 else "M" for p in cfg.pi
        )
        out.add((pattern, frozenset(idxs), bcfg.sigma))
    return sorted(out, key=lambda x: (x[0], sorted(x[1]), x[2]))


def advance_frontier(system, frontier: PhaseFrontier, bounds) -> list:
    """All satisfiable one-phase successors of a frontier.

    Returns [((I, sigma'), PhaseFrontier), ...].  A non-initial frontier sits
    on its broadcast step, so the phase starts after one synchronous step,
    case-split over the endmarker pattern of the frontier positions.
    """
    system = validate_system(system)
    if frontier.messages_spent >= system.message_bound:
        raise ValueError("frontier has no messages left to advance")
    n = system.n
    Nv = var("N")
    pos = [var(x) for x in _pi_names(n)]
    pos2 = [var(x) for x in _pip_names(n)]
    caps = _run_caps(system, bounds)
    initial = frontier.messages_spent == 0

    graphs: dict = {}
    for pattern, I, sigma2 in _realized_branches(system, frontier):
        if initial:
            start_states, start_terms = frontier.sigma, [Term(0)] * n
            guard = TRUE
        else:
            stepped = _stepped(system, frontier.sigma, pattern, Nv, pos)
            if stepped is None:
                continue
            start_states, start_terms = stepped
            guard = _pattern_guard(pattern, pos, Nv)
        body = land(
            frontier.position_graph.formula,
            guard,
            _phase_expr(
                system, start_states, sigma2, I, bounds, start_terms, pos2, Nv, caps
            ),
        )
        g = eliminate(exists(list(_pi_names(n)), body))
        key = (I, sigma2)
        graphs[key] = lor(graphs.get(key, FALSE), g)

    out = []
    for (I, sigma2), g in sorted(
        graphs.items(), key=lambda kv: (sorted(kv[0][0]), kv[0][1])
    ):
        proj = eliminate(exists(list(_pip_names(n)), g))
        if proj is FALSE or not _n_sat(proj):
            continue
        out.append(
            (
                (I, sigma2),
                PhaseFrontier(
                    sigma=sigma2,
                    position_graph=ParamFormula(g, ("N",) + _pip_names(n)),
                    messages_spent=frontier.messages_spent + 1,
                ),
            )
        )
    # Successor graphs are stated over pi' like the display; rename to pi so
    # frontiers compose.
    renamed = []
    for theta, fr in out:
        g = _sub_many(
            fr.position_graph.formula,
            {o: var(nn) for o, nn in zip(_pip_names(n), _pi_names(n))},
        )
        renamed.append(
            (
                theta,
                PhaseFrontier(fr.sigma, ParamFormula(g, ("N",) + _pi_names(n)), fr.messages_spent),
            )
        )
    return renamed


# ---------------------------------------------------------------------------
# Acceptance and the recognized set


def accept_formula(system, frontier: PhaseFrontier, final_phase: bool) -> Formula:
    """N is accepted during this phase: automaton 1 reaches a final state on
    the right endmarker strictly before the phase's next broadcast (the bound
    is dropped once messages are exhausted)."""
    system = validate_system(system)
    aut1 = system.automata[0]
    if not aut1.finals:
        return FALSE
    bounds = bounds_profile(system)
    caps = _run_caps(system, bounds)
    n = system.n
    Nv = var("N")
    pos = [var(x) for x in _pi_names(n)]
    initial = frontier.messages_spent == 0

    ta = _fresh_var("T")
    final_hit = lor(
        *[
            _run(aut1, frozenset(), frontier.sigma[0], fstate, caps[0], pos[0], Nv + 1, var(ta))
            for fstate in sorted(aut1.finals)
        ]
    )

    branches = []
    if final_phase:
        branches.append(exists(ta, final_hit))
    elif initial:
        guards = [
            lnot(
                _broadcast_by_expr(
                    aut, frontier.sigma[i], bounds.K, pos[i], var(ta), Nv
                )
            )
            for i, aut in enumerate(system.automata)
        ]
        branches.append(exists(ta, land(final_hit, *guards)))
    else:
        for pattern in _patterns(n):
            stepped = _stepped(system, frontier.sigma, pattern, Nv, pos)
            if stepped is None:
                continue
            start_states, start_terms = stepped
            guard = _pattern_guard(pattern, pos, Nv)
            if guard is FALSE:
                continue
            # A broadcast at stepped-relative time t happens at time 1 + t;
            # acceptance needs T_a < 1 + t for every possible broadcast.
            conds = [
                lnot(
                    _broadcast_by_expr(
                        aut, start_states[i], bounds.K, start_terms[i], var(ta) - 1, Nv
                    )
                )
                for i, aut in enumerate(system.automata)
            ]
            branches.append(land(guard, exists(ta, land(final_hit, *conds))))
    body = land(frontier.position_graph.formula, lor(*branches))
    return eliminate(exists(list(_pi_names(n)), body))


def recognized_set(system) -> UltimatelyPeriodicSet:
    """The full language of the system as an ultimately periodic set.

    Breadth-first phase expansion through at most M broadcasts, OR-ing the
    per-frontier acceptance formulas, then lowering to a set; lengths below
    the sufficient threshold are patched by direct simulation.
    """
    system = validate_system(system)
    bounds = bounds_profile(system)
    nmin = dynamics.min_sufficient_length(system)
    layer = [initial_frontier(system)]
    parts = []
    for depth in range(system.message_bound + 1):
        nxt = []
        for fr in layer:
            final = fr.messages_spent == system.message_bound
            parts.append(accept_formula(system, fr, final))
            if not final:
                nxt.extend(f for _, f in advance_frontier(system, fr, bounds))
        layer = nxt
        if not layer:
            break
    phi = land(lor(*parts), ge(var("N"), nmin))
    ups = solution_set(phi, "N")
    width = max(ups.threshold, nmin)
    bits = [
        sim.accepts(system, n) if n < nmin else ups.member(n)
        for n in range(width + max(ups.period, 1))
    ]
    return UltimatelyPeriodicSet.from_bits(
        bits, width, max(ups.period, 1)
    ).canonical()
