"""Per-step clutch state logic and the fixed-step simulation loop.

Each step runs in two phases.  The first decides which clutches can stick at
step ``k``; the second computes the torque vector consistent with those
states:

1. A tentative step with sliding friction everywhere flags lock candidates:
   clutches locked at ``k-1``, clutches sitting at exactly zero slip, and
   clutches whose slip crosses (or lands within ``SLIP_EPS`` of) zero.
2. If both clutches are candidates, the full-lock torques are accepted when
   both fit their capacities.
3. Otherwise single locks are tried, the clutch locked at ``k-1`` first
   (clutch ``a`` on ties).  The other clutch is held at its sliding torque
   with the slip direction frozen at ``k-1``.  The first lock whose exact
   engagement torque fits the capacity wins.

   Every lock test also checks the torque needed to stay locked once the
   slip is gone.  Near a crossing the closing step alone can fit inside the
   capacity even when the clutch cannot hold, which would lock for one step
   and release again.
4. Clutches left unlocked transmit ``K * sign(slip)``.  A clutch with zero
   slip at ``k-1`` takes the direction of its tentative slip instead.

A clutch with zero capacity never locks.
"""

from __future__ import annotations

from typing import NamedTuple

from .model import (
    ClutchCapacities,
    ClutchTorques,
    GearIndex,
    InputTorques,
    PowershiftParams,
    ShaftState,
    SlipSpeeds,
    engagement_torque,
    full_lock_torques,
    kinetic_torques,
    slip_speeds,
    step_explicit,
)
from .scenario import Scenario, ScenarioDomainError

# slip below this (rad/s) counts as a zero crossing / stuck clutch
SLIP_EPS = 1e-9


class LockState(NamedTuple):
    lock_a: bool
    lock_b: bool


UNLOCKED = LockState(False, False)


class StepRecord(NamedTuple):
    """One row of a discrete trace; ``w`` is the state after step ``k``."""

    k: int
    t: float
    w: ShaftState
    d: SlipSpeeds
    mc: ClutchTorques
    caps: ClutchCapacities
    m: InputTorques
    locks: LockState


def _sign(x: float) -> float:
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def _fits(mc: ClutchTorques, caps: ClutchCapacities) -> bool:
    return abs(mc.Mca) <= caps.Kca and abs(mc.Mcb) <= caps.Kcb


def decide_and_actuate(
    params: PowershiftParams,
    w_prev: ShaftState,
    m: InputTorques,
    caps: ClutchCapacities,
    prev_locks: LockState,
) -> tuple[ClutchTorques, LockState]:
    """Choose the lock states and clutch torques for step ``k``.

    Returns torques satisfying ``|Mci| <= Kci``.  Stepping with them zeroes the
    slip of every clutch reported as locked (and both speeds on full lock).
    """
    Kca, Kcb = caps
    if Kca < 0.0 or Kcb < 0.0:
        raise ValueError(f"clutch capacities must be non-negative, got {tuple(caps)}")

    da, db = slip_speeds(params, w_prev)
    # a locked clutch carries only roundoff slip; treat it as exactly zero
    if prev_locks.lock_a and abs(da) <= SLIP_EPS:
        da = 0.0
    if prev_locks.lock_b and abs(db) <= SLIP_EPS:
        db = 0.0

    mc_kin = kinetic_torques(caps, SlipSpeeds(da, db))
    da_t, db_t = slip_speeds(params, step_explicit(params, w_prev, m, mc_kin))

    cand_a = Kca > 0.0 and (
        prev_locks.lock_a or da == 0.0 or da * da_t < 0.0 or abs(da_t) <= SLIP_EPS
    )
    cand_b = Kcb > 0.0 and (
        prev_locks.lock_b or db == 0.0 or db * db_t < 0.0 or abs(db_t) <= SLIP_EPS
    )

    rest = ShaftState(0.0, 0.0)
    if cand_a and cand_b:
        full = full_lock_torques(params, m, w_prev)
        hold = full_lock_torques(params, m, rest)
        if _fits(full, caps) and _fits(hold, caps):
            return full, LockState(True, True)

    slide_a = Kca * (_sign(da) or _sign(da_t))
    slide_b = Kcb * (_sign(db) or _sign(db_t))

    if prev_locks.lock_b and not prev_locks.lock_a:
        order = (GearIndex.SECOND, GearIndex.FIRST)
    else:
        order = (GearIndex.FIRST, GearIndex.SECOND)
    for gear in order:
        if gear == GearIndex.FIRST:
            if cand_a:
                hold = engagement_torque(params, m, w_prev, gear, slide_b)
                steady = engagement_torque(params, m, rest, gear, slide_b)
                if abs(hold) <= Kca and abs(steady) <= Kca:
                    return ClutchTorques(hold, slide_b), LockState(True, False)
        elif cand_b:
            hold = engagement_torque(params, m, w_prev, gear, slide_a)
            steady = engagement_torque(params, m, rest, gear, slide_a)
            if abs(hold) <= Kcb and abs(steady) <= Kcb:
                return ClutchTorques(slide_a, hold), LockState(False, True)

    return ClutchTorques(slide_a, slide_b), UNLOCKED


def sample_inputs(scenario: Scenario, t: float) -> tuple[InputTorques, ClutchCapacities]:
    return (
        InputTorques(scenario.m1.sample(t), scenario.m2.sample(t)),
        ClutchCapacities(scenario.kca.sample(t), scenario.kcb.sample(t)),
    )


def simulate_discrete(
    params: PowershiftParams, scenario: Scenario, w0: ShaftState, n_steps: int
) -> list[StepRecord]:
    """Run ``n_steps`` fixed steps from ``w0``; returns ``n_steps + 1`` records.

    Record 0 holds the initial state with zero clutch torque.  Record ``k``
    uses inputs sampled at ``t = k * Ts``.

    Raises:
        ScenarioDomainError: if ``n_steps * Ts`` runs past ``scenario.t_end``.
    """
    Ts = params.Ts
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if n_steps * Ts > scenario.t_end * (1.0 + 1e-9):
        raise ScenarioDomainError(
            f"{n_steps} steps of {Ts} s exceed the scenario horizon t_end={scenario.t_end}"
        )
    m, caps = sample_inputs(scenario, 0.0)
    w = ShaftState(float(w0[0]), float(w0[1]))
    locks = UNLOCKED
    trace = [StepRecord(0, 0.0, w, slip_speeds(params, w), ClutchTorques(0.0, 0.0), caps, m, locks)]
    for k in range(1, n_steps + 1):
        t = k * Ts
        m, caps = sample_inputs(scenario, t)
        mc, locks = decide_and_actuate(params, w, m, caps, locks)
        w = step_explicit(params, w, m, mc)
        trace.append(StepRecord(k, t, w, slip_speeds(params, w), mc, caps, m, locks))
    return trace


def simulate_scenario(scenario: Scenario, ts: float | None = None) -> list[StepRecord]:
    """Simulate a whole scenario, optionally overriding its step size."""
    scn = scenario if ts is None else scenario.with_ts(ts)
    return simulate_discrete(scn.params, scn, scn.w0, scn.n_steps())
