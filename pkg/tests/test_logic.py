import pytest
from hypothesis import given, settings, strategies as st

from conftest import RIG, make_scenario
from powershift.logic import (
    SLIP_EPS,
    UNLOCKED,
    LockState,
    decide_and_actuate,
    simulate_discrete,
    simulate_scenario,
)
from powershift.model import (
    ClutchCapacities,
    InputTorques,
    PowershiftParams,
    ShaftState,
    slip_speeds,
    step_explicit,
)
from powershift.reference import ct_coupling_matrix, ct_engagement_rhs
from powershift.model import GearIndex
from powershift.scenario import ScenarioDomainError, Schedule, Scenario

W_PREV = ShaftState(30.0, 10.0)
M5 = InputTorques(5.0, 0.0)

torque = st.floats(-200.0, 200.0)
speed = st.floats(-300.0, 300.0)
cap = st.one_of(st.just(0.0), st.floats(0.0, 300.0))
locks = st.builds(LockState, st.booleans(), st.booleans())
states = st.builds(ShaftState, speed, speed)
inputs = st.builds(InputTorques, torque, torque)
capacities = st.builds(ClutchCapacities, cap, cap)


def stuck(d, w) -> bool:
    return abs(d) <= 1e-9 * max(1.0, abs(w.w1), abs(w.w2))


# -- examples ---------------------------------------------------------------


@given(states, inputs, locks)
def test_zero_capacity_never_locks(w, m, prev):
    mc, lk = decide_and_actuate(RIG, w, m, ClutchCapacities(0.0, 0.0), prev)
    assert mc == (0.0, 0.0)
    assert lk == UNLOCKED


def test_locked_clutch_holds_within_capacity():
    mc, lk = decide_and_actuate(RIG, W_PREV, M5, ClutchCapacities(50, 0), LockState(True, False))
    assert lk == LockState(True, False)
    assert mc.Mca == pytest.approx(1 / 0.56, rel=1e-12)
    assert mc.Mcb == 0.0


def test_capacity_violation_forces_breakaway():
    mc, lk = decide_and_actuate(RIG, W_PREV, M5, ClutchCapacities(1, 0), LockState(True, False))
    assert lk == UNLOCKED
    # free step gives w = (31, 10), so the tentative slip is +1
    assert mc == (1.0, 0.0)


def test_negative_capacity_rejected():
    with pytest.raises(ValueError):
        decide_and_actuate(RIG, W_PREV, M5, ClutchCapacities(-1, 0), UNLOCKED)


def test_decoupled_ramp_is_exact():
    # increments Ts * c / J1 = 1 are exact in binary
    p = PowershiftParams(J1=0.5, J2=0.5, Ra=3.0, Rb=2.0, Ts=0.25)
    scn = make_scenario(m=(2.0, 0.0), w0=(1.0, 4.0), t_end=10.0, params=p)
    trace = simulate_scenario(scn)
    for r in trace:
        assert r.w == (1.0 + r.k, 4.0)


def test_decoupled_ramp_rig_params():
    scn = make_scenario(m=(7.0, -3.0), w0=(10.0, 2.0), t_end=2.0)
    for r in simulate_scenario(scn):
        assert r.w.w1 == pytest.approx(10.0 + r.k * 0.02 * 7.0 / 0.1, abs=1e-9)
        assert r.w.w2 == pytest.approx(2.0 + r.k * 0.02 * -3.0 / 0.5, abs=1e-9)
        assert r.locks == UNLOCKED


def test_clutch_a_closing_then_locked():
    w0 = ShaftState.from_rpm(1000, 100)
    scn = Scenario(
        RIG,
        w0,
        m1=Schedule.constant(5.0),
        m2=Schedule.constant(-10.0),
        kca=Schedule.from_points([(0.0, 0.0), (0.5, 100.0)]),
        kcb=Schedule.constant(0.0),
        t_end=3.0,
    )
    trace = simulate_scenario(scn)
    flags = [r.locks.lock_a for r in trace]
    first = flags.index(True)
    assert first > 1
    assert not any(flags[:first])
    assert all(flags[first:])
    assert all(stuck(r.d.da, r.w) for r in trace[first:])


def test_full_lock_scenario_halts():
    scn = make_scenario(m=(30.0, -20.0), caps=(400.0, 400.0), w0=(50.0, 5.0), t_end=2.0)
    trace = simulate_scenario(scn)
    assert trace[-1].locks == LockState(True, True)
    w_prev = trace[-2].w
    assert max(map(abs, trace[-1].w)) <= 1e-9 * max(1.0, *map(abs, w_prev))


def test_domain_error_past_horizon():
    scn = make_scenario(t_end=0.1)
    with pytest.raises(ScenarioDomainError):
        simulate_discrete(RIG, scn, scn.w0, 6)
    assert len(simulate_discrete(RIG, scn, scn.w0, 5)) == 6


def test_record_zero_is_initial_state():
    scn = make_scenario(m=(1.0, 1.0), caps=(5.0, 5.0), w0=(3.0, 1.0))
    r0 = simulate_scenario(scn)[0]
    assert (r0.k, r0.t, r0.w, r0.mc, r0.locks) == (0, 0.0, (3.0, 1.0), (0.0, 0.0), UNLOCKED)


# -- per-step properties ------------------------------------------------------


@given(states, inputs, capacities, locks)
def test_step_invariants(w_prev, m, caps, prev):
    mc, lk = decide_and_actuate(RIG, w_prev, m, caps, prev)
    assert abs(mc.Mca) <= caps.Kca
    assert abs(mc.Mcb) <= caps.Kcb
    w = step_explicit(RIG, w_prev, m, mc)
    d = slip_speeds(RIG, w)
    if lk.lock_a:
        assert stuck(d.da, w)
    if lk.lock_b:
        assert stuck(d.db, w)
    if lk.lock_a and lk.lock_b:
        assert max(abs(w.w1), abs(w.w2)) <= 1e-9 * max(1.0, abs(w_prev.w1), abs(w_prev.w2))
    if caps.Kca == 0.0:
        assert not lk.lock_a
    if caps.Kcb == 0.0:
        assert not lk.lock_b


@given(states, inputs, capacities)
def test_no_spontaneous_lock(w_prev, m, caps):
    mc, lk = decide_and_actuate(RIG, w_prev, m, caps, UNLOCKED)
    d_prev = slip_speeds(RIG, w_prev)
    from powershift.model import kinetic_torques

    d_tent = slip_speeds(RIG, step_explicit(RIG, w_prev, m, kinetic_torques(caps, d_prev)))
    for i in range(2):
        if d_prev[i] * d_tent[i] > 0.0 and abs(d_tent[i]) > SLIP_EPS:
            assert not lk[i]


@given(states, inputs, capacities, locks)
def test_deterministic(w_prev, m, caps, prev):
    assert decide_and_actuate(RIG, w_prev, m, caps, prev) == decide_and_actuate(
        RIG, w_prev, m, caps, prev
    )


# -- trace properties ---------------------------------------------------------


def hold_torque_a(m):
    """Torque keeping gear 1 engaged under constant input with clutch b open."""
    JR = ct_coupling_matrix(RIG)
    return ct_engagement_rhs(RIG, m, GearIndex.FIRST) / JR[0][0]


@pytest.mark.parametrize("margin, locked", [(1.01, True), (0.99, False)])
def test_persistence(margin, locked):
    m = InputTorques(8.0, -4.0)
    need = abs(hold_torque_a(m))
    w0 = (30.0, 10.0)  # zero slip on gear 1
    scn = make_scenario(m=m, caps=(margin * need, 0.0), w0=w0, t_end=2.0)
    trace = simulate_discrete(RIG, scn, ShaftState(*w0), scn.n_steps())
    # record 0 is unlocked by construction; the clutch engages at k = 1
    flags = [r.locks.lock_a for r in trace[1:]]
    assert all(flags) if locked else not any(flags)
    if locked:
        assert all(r.mc.Mca == pytest.approx(hold_torque_a(m), rel=1e-9) for r in trace[1:])


def toggles_after_first_lock(flags):
    if True not in flags:
        return 0
    first = flags.index(True)
    return sum(a != b for a, b in zip(flags[first:], flags[first + 1:]))


@settings(max_examples=60, deadline=None)
@given(
    st.tuples(torque, torque),
    st.tuples(cap, cap),
    st.tuples(speed, speed),
)
def test_chatter_bound(m, caps, w0):
    scn = make_scenario(m=m, caps=caps, w0=w0, t_end=4.0)
    trace = simulate_scenario(scn)
    for i in range(2):
        assert toggles_after_first_lock([r.locks[i] for r in trace]) <= 1


def test_trace_deterministic(paper_like):
    assert simulate_scenario(paper_like) == simulate_scenario(paper_like)


def test_paper_like_envelope(paper_like):
    for r in simulate_scenario(paper_like):
        assert abs(r.mc.Mca) <= r.caps.Kca and abs(r.mc.Mcb) <= r.caps.Kcb
        assert r.d == slip_speeds(RIG, r.w)
        if r.locks.lock_a:
            assert stuck(r.d.da, r.w)
        if r.locks.lock_b:
            assert stuck(r.d.db, r.w)
