import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from conftest import RIG
from powershift.model import (
    ClutchCapacities,
    ClutchTorques,
    GearIndex,
    InputTorques,
    InvalidParamsError,
    PowershiftParams,
    ShaftState,
    SlipSpeeds,
    engagement_rhs,
    engagement_torque,
    full_lock_torques,
    full_lock_torques_normal_form,
    kinetic_torques,
    rad_s_to_rpm,
    rpm_to_rad_s,
    slip_speeds,
    step_explicit,
)

W_PREV = ShaftState(30.0, 10.0)
M5 = InputTorques(5.0, 0.0)

inertia = st.floats(0.01, 10.0)
ratio = st.floats(0.2, 10.0)
torque = st.floats(-500.0, 500.0)
speed = st.floats(-1000.0, 1000.0)


@st.composite
def params(draw):
    ra, rb = draw(ratio), draw(ratio)
    assume(abs(ra - rb) >= 0.1)
    return PowershiftParams(draw(inertia), draw(inertia), ra, rb, draw(st.floats(1e-4, 0.1)))


states = st.builds(ShaftState, speed, speed)
torques = st.builds(InputTorques, torque, torque)


def slip_after(p, w_prev, m, mc, i):
    return slip_speeds(p, step_explicit(p, w_prev, m, mc))[i]


# -- examples ---------------------------------------------------------------


def test_slip_examples():
    assert slip_speeds(RIG, ShaftState.from_rpm(300, 100)).da == pytest.approx(0.0, abs=1e-12)
    assert slip_speeds(RIG, ShaftState(0.0, 0.0)) == (0.0, 0.0)
    assert slip_speeds(RIG, ShaftState(30.0, 10.0)) == (0.0, 10.0)


def test_kinetic_examples():
    caps = ClutchCapacities(50.0, 40.0)
    assert kinetic_torques(caps, SlipSpeeds(5.0, -3.0)) == (50.0, -40.0)
    assert kinetic_torques(caps, SlipSpeeds(0.0, 0.0)) == (0.0, 0.0)
    assert kinetic_torques(ClutchCapacities(0.0, 0.0), SlipSpeeds(7.0, -2.0)) == (0.0, 0.0)


def test_step_no_torque_keeps_state():
    assert step_explicit(RIG, W_PREV, InputTorques(0, 0), ClutchTorques(0, 0)) == W_PREV


def test_step_engagement_example_exact_rational():
    # oracle: the same update in exact rational arithmetic
    J1, J2, Ra, Rb, Ts = (Fraction(x) for x in ("0.1", "0.5", "3", "2", "0.02"))
    Mca = Fraction(1) / Fraction("0.56")
    w1 = 30 + Ts / J1 * (5 - Mca)
    w2 = 10 + Ts / J2 * (Ra * Mca)
    assert w1 - Ra * w2 == 0
    w = step_explicit(RIG, W_PREV, M5, ClutchTorques(1.7857142857, 0.0))
    assert w.w1 == pytest.approx(float(w1), abs=1e-9)
    assert w.w2 == pytest.approx(float(w2), abs=1e-9)
    assert w == pytest.approx((30.642857, 10.214286), abs=1e-6)
    w = step_explicit(RIG, W_PREV, M5, ClutchTorques(float(Mca), 0.0))
    assert slip_speeds(RIG, w).da == pytest.approx(0.0, abs=1e-12)


def test_jr_rig_values():
    # R^T diag(0.2, 0.04) R by hand
    np.testing.assert_allclose(RIG.JR, [[0.56, 0.44], [0.44, 0.36]], rtol=1e-14)


def test_equal_ratios_rejected():
    with pytest.raises(InvalidParamsError):
        PowershiftParams(0.1, 0.5, 2.0, 2.0, 0.02)


@pytest.mark.parametrize("field", ["J1", "J2", "Ra", "Rb", "Ts"])
@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_params_positive_finite(field, bad):
    kw = dict(J1=0.1, J2=0.5, Ra=3.0, Rb=2.0, Ts=0.02)
    kw[field] = bad
    with pytest.raises(InvalidParamsError):
        PowershiftParams(**kw)


def test_engagement_rhs_examples():
    assert engagement_rhs(RIG, M5, W_PREV, GearIndex.FIRST) == pytest.approx(1.0, rel=1e-12)
    assert engagement_rhs(RIG, M5, W_PREV, GearIndex.SECOND) == pytest.approx(11.0, rel=1e-12)
    assert engagement_rhs(RIG, InputTorques(0, 0), ShaftState(30, 10), GearIndex.FIRST) == 0.0
    assert engagement_rhs(RIG, InputTorques(0, 0), ShaftState(0, 0), GearIndex.SECOND) == 0.0


def test_engagement_torque_examples():
    mca = engagement_torque(RIG, M5, W_PREV, GearIndex.FIRST, 0.0)
    assert mca == pytest.approx(1.7857142857, rel=1e-10)
    mcb = engagement_torque(RIG, M5, W_PREV, GearIndex.SECOND, 0.0)
    assert mcb == pytest.approx(11 / 0.36, rel=1e-12)
    assert slip_after(RIG, W_PREV, M5, ClutchTorques(0.0, mcb), 1) == pytest.approx(0.0, abs=1e-12)
    assert engagement_torque(RIG, InputTorques(0, 0), ShaftState(30, 10), GearIndex.FIRST, 0.0) == 0.0


def test_full_lock_examples():
    mc = full_lock_torques(RIG, InputTorques(10.0, 0.0), ShaftState(0.0, 0.0))
    assert mc == pytest.approx((-20.0, 30.0), rel=1e-12)
    # oracle: -Mca - Mcb + 10 = 0 and 3 Mca + 2 Mcb = 0
    np.testing.assert_allclose(mc, np.linalg.solve([[-1, -1], [3, 2]], [-10, 0]), rtol=1e-12)
    assert full_lock_torques(RIG, InputTorques(0, 0), ShaftState(0, 0)) == (0.0, 0.0)


def test_rpm_conversion():
    assert rpm_to_rad_s(1000.0) == pytest.approx(104.71975511965977, rel=1e-15)
    assert rad_s_to_rpm(rpm_to_rad_s(123.0)) == pytest.approx(123.0, rel=1e-15)
    assert ShaftState.from_rpm(1000, 100) == pytest.approx((104.7198, 10.4720), abs=1e-4)


def test_gear_other():
    assert GearIndex.FIRST.other is GearIndex.SECOND
    assert GearIndex.SECOND.other is GearIndex.FIRST


def test_from_radii():
    p = PowershiftParams.from_radii(0.1, 0.5, r_a1=1.0, r_a2=3.0, r_b1=1.5, r_b2=3.0, Ts=0.02)
    assert (p.Ra, p.Rb) == (3.0, 2.0)


# -- properties ---------------------------------------------------------------


@given(params(), states)
def test_kinematic_consistency(p, w):
    (r11, r12), (r21, r22) = p.R
    expected = (-(r11 * w.w1 + r21 * w.w2), -(r12 * w.w1 + r22 * w.w2))
    got = slip_speeds(p, w)
    scale = max(1.0, abs(w.w1), p.Ra * abs(w.w2), p.Rb * abs(w.w2))
    assert abs(got.da - expected[0]) <= 1e-12 * scale
    assert abs(got.db - expected[1]) <= 1e-12 * scale


@given(params(), torques, states, torque, st.sampled_from(list(GearIndex)))
def test_engagement_exactness(p, m, w_prev, other, gear):
    hold = engagement_torque(p, m, w_prev, gear, other)
    mc = ClutchTorques(hold, other) if gear == GearIndex.FIRST else ClutchTorques(other, hold)
    w = step_explicit(p, w_prev, m, mc)
    assert abs(slip_speeds(p, w)[gear]) <= 1e-9 * max(1.0, abs(w.w1), abs(w.w2))


@given(params(), torques, states, torque, st.sampled_from(list(GearIndex)))
def test_engagement_matches_secant_oracle(p, m, w_prev, other, gear):
    # slip after one step is affine in the held torque: root from two probes
    def slip(x):
        mc = ClutchTorques(x, other) if gear == GearIndex.FIRST else ClutchTorques(other, x)
        return slip_after(p, w_prev, m, mc, gear)

    s0, s1 = slip(0.0), slip(1.0)
    root = -s0 / (s1 - s0)
    hold = engagement_torque(p, m, w_prev, gear, other)
    assert hold == pytest.approx(root, rel=1e-6, abs=1e-6 * max(1.0, abs(s0)))


@given(params(), torques, states)
def test_full_lock_exactness(p, m, w_prev):
    w = step_explicit(p, w_prev, m, full_lock_torques(p, m, w_prev))
    assert max(abs(w.w1), abs(w.w2)) <= 1e-9 * max(1.0, abs(w_prev.w1), abs(w_prev.w2))


@given(params(), torques, states)
def test_full_lock_forms_agree(p, m, w_prev):
    a = full_lock_torques(p, m, w_prev)
    b = full_lock_torques_normal_form(p, m, w_prev)
    scale = max(abs(b.Mca), abs(b.Mcb))
    assert max(abs(a.Mca - b.Mca), abs(a.Mcb - b.Mcb)) <= 1e-10 * scale


@given(params(), torques, states)
def test_decoupling(p, m, w_prev):
    w = step_explicit(p, w_prev, m, ClutchTorques(0.0, 0.0))
    assert w.w1 == w_prev.w1 + (p.Ts / p.J1) * m.M1
    assert w.w2 == w_prev.w2 + (p.Ts / p.J2) * m.M2


@given(params())
def test_jr_symmetric_positive_definite(p):
    (a, b), (c, d) = p.JR
    assert b == c
    assert np.all(np.linalg.eigvalsh(np.array(p.JR)) > 0.0)
    # oracle: numpy product
    R = np.array(p.R)
    ref = R.T @ np.diag([p.Ts / p.J1, p.Ts / p.J2]) @ R
    np.testing.assert_allclose(p.JR, ref, rtol=1e-12, atol=1e-15 * np.abs(ref).max())


@given(params(), st.floats(0.1, 10.0), states)
def test_ts_scaling(p, s, w_prev):
    q = p.with_ts(p.Ts * s)
    np.testing.assert_allclose(q.JR, np.array(p.JR) * s, rtol=1e-12)
    # with M = 0 the full-lock torque is purely w-dependent and scales as 1/s
    zero = InputTorques(0.0, 0.0)
    a = full_lock_torques(p, zero, w_prev)
    b = full_lock_torques(q, zero, w_prev)
    np.testing.assert_allclose(b, np.array(a) / s, rtol=1e-9, atol=1e-12)
