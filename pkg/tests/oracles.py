"""Simulation-backed ground truth used by the formula tests.

The reach/run oracles replay one automaton's trajectory step by step and
record exactly which (state, position, time) triples are realized under each
predicate's side conditions; the formulas are then required to agree.
"""

from multiauto import sim


def reach_trajectory(aut, stop, s, p, N, tmax):
    """Realized (state, pos, T) triples of the endmarker-free run from (s, p).

    Endmarkers and stop states may be occupied at the start and at the final
    step, but not strictly in between: the walk ends once the configuration
    at time t >= 1 sits on an endmarker or in a stop state.
    """
    realized = [(s, p, 0)]
    cs, cp = s, p
    for t in range(1, tmax + 1):
        if t > 1 and (cp == 0 or cp == N + 1):
            break
        if t > 1 and cs in stop:
            break
        try:
            cs, cp = sim._step_one(aut, cs, cp, N)
        except sim.HeadFellOff:
            break
        realized.append((cs, cp, t))
    return realized


def run_trajectory(aut, stop, s, p, N, tmax):
    """Realized (state, pos, T) triples of the full run from (s, p).

    Unlike reach, endmarkers may be visited en route; a stop state still
    ends the run (it may be occupied at time 0 and at the final time only).
    """
    realized = [(s, p, 0)]
    cs, cp = s, p
    for t in range(1, tmax + 1):
        if t > 1 and cs in stop:
            break
        try:
            cs, cp = sim._step_one(aut, cs, cp, N)
        except sim.HeadFellOff:
            break
        realized.append((cs, cp, t))
    return realized


def first_broadcast_time(aut, s, p, N, tmax):
    """Time of the first broadcasting-state occupancy from (s, p), or None."""
    cs, cp = s, p
    for t in range(tmax + 1):
        if cs in aut.broadcasting:
            return t
        try:
            cs, cp = sim._step_one(aut, cs, cp, N)
        except sim.HeadFellOff:
            return None
    return None
