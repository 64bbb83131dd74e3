"""Continuous-time reference model, integrated with events.

Between events each clutch is either sliding, transmitting ``K(t) * s`` with a
fixed slip direction ``s``, or locked, transmitting the torque that keeps
its slip derivative at zero.  Mode changes happen at events:

* a sliding clutch's slip crosses zero;
* a locked clutch's holding torque leaves its capacity band.

Events are bracketed by accepted steps, halving towards the crossing until the
bracket is shorter than ``event_tol``.  The solver then re-decides the clutch
states using the same capacity rules and priority order as the discrete
logic.  A clutch that locks has its residual slip removed by an impulsive
clutch torque; full lock sets both speeds to zero.

In every mode the clutch torques are functions of time only, so with
piecewise-linear inputs each mode's speeds are exact quadratics in time.
Accuracy is then set by the event localization, not the truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .linalg2 import Mat2, diag, matmul, transpose
from .logic import LockState
from .model import (
    ClutchCapacities,
    ClutchTorques,
    GearIndex,
    InputTorques,
    PowershiftParams,
    ShaftState,
    slip_speeds,
)
from .rk45 import PIController, dopri5_step, error_norm, initial_step
from .scenario import Scenario, ScenarioDomainError


class SolverError(RuntimeError):
    """Step size underflow or a runaway cascade of events."""

    def __init__(self, t: float, msg: str):
        super().__init__(f"t={t!r}: {msg}")
        self.t = t


@dataclass(frozen=True)
class CtSolverConfig:
    rel_tol: float = 1e-6
    abs_tol: float = 1e-8
    max_step: float = 1e-2
    event_tol: float = 1e-9

    def __post_init__(self) -> None:
        for name in ("rel_tol", "abs_tol", "max_step", "event_tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if self.rel_tol > 1e-3:
            raise ValueError("rel_tol must be <= 1e-3")


class CtTraceSample(NamedTuple):
    """State after an accepted solver step.  ``event`` marks mode switches."""

    t: float
    w: ShaftState
    mc: ClutchTorques
    locks: LockState
    caps: ClutchCapacities
    event: bool = False


def ct_coupling_matrix(params: PowershiftParams) -> Mat2:
    """``R^T J^-1 R``, the continuous-time counterpart of ``JR`` (no ``Ts`` factor)."""
    R = params.R
    JR = matmul(transpose(R), matmul(diag(1.0 / params.J1, 1.0 / params.J2), R))
    return ((JR[0][0], JR[0][1]), (JR[0][1], JR[1][1]))


def ct_rhs(
    params: PowershiftParams, w: ShaftState, m: InputTorques, mc: ClutchTorques
) -> tuple[float, float]:
    """Shaft accelerations ``J^-1 (M + R Mc)``; independent of ``w``."""
    Mca, Mcb = mc
    return (
        (m.M1 - Mca - Mcb) / params.J1,
        (m.M2 + params.Ra * Mca + params.Rb * Mcb) / params.J2,
    )


def ct_engagement_rhs(params: PowershiftParams, m: InputTorques, i: GearIndex) -> float:
    """``N_i = -G_i R^T J^-1 M``, the slip acceleration with both clutches open."""
    ratio = params.Ra if i == GearIndex.FIRST else params.Rb
    return m.M1 / params.J1 - ratio * m.M2 / params.J2


def ct_engagement_torque(
    params: PowershiftParams,
    m: InputTorques,
    i: GearIndex,
    other_torque: float,
    JR: Mat2 | None = None,
) -> float:
    """Torque on clutch ``i`` holding its slip derivative at zero."""
    (jr11, jr12), (jr21, jr22) = JR if JR is not None else ct_coupling_matrix(params)
    N = ct_engagement_rhs(params, m, i)
    if i == GearIndex.FIRST:
        return (N - jr12 * other_torque) / jr11
    return (N - jr21 * other_torque) / jr22


def ct_full_lock_torques(params: PowershiftParams, m: InputTorques) -> ClutchTorques:
    """``-R^-1 M``: torques keeping both shafts at rest."""
    (r11, r12), (r21, r22) = params.R_inv
    return ClutchTorques(-(r11 * m.M1 + r12 * m.M2), -(r21 * m.M1 + r22 * m.M2))


def _sign(x: float) -> float:
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def _crosses(d0: float, d1: float) -> bool:
    # compare signs, not the product, which underflows for tiny slips
    return (d0 > 0.0 and d1 <= 0.0) or (d0 < 0.0 and d1 >= 0.0)


class _Mode(NamedTuple):
    lock_a: bool
    lock_b: bool
    s_a: float
    s_b: float

    @property
    def full(self) -> bool:
        return self.lock_a and self.lock_b


class _Hybrid:
    """Mode-switched dynamics of one scenario."""

    def __init__(self, params: PowershiftParams, scenario: Scenario, cfg: CtSolverConfig):
        self.p = params
        self.scn = scenario
        self.cfg = cfg
        self.JR = ct_coupling_matrix(params)
        self.pins = (0, 0, 0, 0)

    def pin(self, t: float) -> None:
        """Freeze the schedule pieces active from ``t`` until the next breakpoint."""
        self.pins = tuple(s.locate(t) for s in self.scn.schedules())

    def inputs(self, t: float) -> tuple[InputTorques, ClutchCapacities]:
        i1, i2, ia, ib = self.pins
        s = self.scn
        return (
            InputTorques(s.m1.eval_piece(i1, t), s.m2.eval_piece(i2, t)),
            ClutchCapacities(s.kca.eval_piece(ia, t), s.kcb.eval_piece(ib, t)),
        )

    def torques(self, t: float, mode: _Mode) -> tuple[ClutchTorques, InputTorques, ClutchCapacities]:
        m, caps = self.inputs(t)
        if mode.full:
            mc = ct_full_lock_torques(self.p, m)
        elif mode.lock_a:
            mcb = caps.Kcb * mode.s_b
            mc = ClutchTorques(ct_engagement_torque(self.p, m, GearIndex.FIRST, mcb, self.JR), mcb)
        elif mode.lock_b:
            mca = caps.Kca * mode.s_a
            mc = ClutchTorques(mca, ct_engagement_torque(self.p, m, GearIndex.SECOND, mca, self.JR))
        else:
            mc = ClutchTorques(caps.Kca * mode.s_a, caps.Kcb * mode.s_b)
        return mc, m, caps

    def rhs(self, mode: _Mode):
        if mode.full:
            return lambda t, y: (0.0, 0.0)

        def f(t, y):
            mc, m, _ = self.torques(t, mode)
            return ct_rhs(self.p, y, m, mc)

        return f

    def capacity_margin(self, t: float, mode: _Mode) -> tuple[float, float]:
        """``K - |Mc|`` for locked clutches (``inf`` for sliding ones)."""
        mc, _, caps = self.torques(t, mode)
        return (
            caps.Kca - abs(mc.Mca) if mode.lock_a else math.inf,
            caps.Kcb - abs(mc.Mcb) if mode.lock_b else math.inf,
        )

    def crossings(self, t0: float, w0, t1: float, w1, mode: _Mode) -> tuple[bool, bool] | None:
        """Which sliding clutches' slips cross zero over the step.

        Returns ``None`` when nothing happens, otherwise per-clutch crossing
        flags (both ``False`` when only a capacity bound is violated).
        """
        d0 = slip_speeds(self.p, ShaftState(*w0))
        d1 = slip_speeds(self.p, ShaftState(*w1))
        cross_a = not mode.lock_a and _crosses(d0.da, d1.da)
        cross_b = not mode.lock_b and _crosses(d0.db, d1.db)
        if cross_a or cross_b:
            return (cross_a, cross_b)
        if mode.lock_a or mode.lock_b:
            g0 = self.capacity_margin(t0, mode)
            g1 = self.capacity_margin(t1, mode)
            if (g0[0] >= 0.0 and g1[0] < 0.0) or (g0[1] >= 0.0 and g1[1] < 0.0):
                return (False, False)
        return None

    def _slip_direction(self, i: int, m: InputTorques, other_torque: float | None) -> float:
        """Sign of clutch ``i``'s slip acceleration with its own torque at zero.

        ``other_torque=None`` means the other clutch is locked and adapts.
        """
        (j11, j12), (_, j22) = self.JR
        gear = GearIndex(i)
        N_i = ct_engagement_rhs(self.p, m, gear)
        N_j = ct_engagement_rhs(self.p, m, gear.other)
        jr_jj = j22 if i == 0 else j11
        if other_torque is None:
            return _sign(N_i - j12 * N_j / jr_jj)
        return _sign(N_i - j12 * other_torque)

    def resolve(
        self, t: float, w, prev: LockState, crossed: tuple[bool, bool] = (False, False)
    ) -> tuple[_Mode, tuple[float, float]]:
        """Decide clutch states at an event; returns the mode and the (projected) state."""
        p = self.p
        m, caps = self.inputs(t)
        # a clutch locked until now carries only roundoff slip; remove it
        if prev.lock_a and prev.lock_b:
            w = (0.0, 0.0)
        elif prev.lock_a:
            w = self._project(w, 0)
        elif prev.lock_b:
            w = self._project(w, 1)
        da, db = slip_speeds(p, ShaftState(*w))
        zero_a = prev.lock_a or crossed[0] or da == 0.0
        zero_b = prev.lock_b or crossed[1] or db == 0.0
        cand_a = caps.Kca > 0.0 and zero_a
        cand_b = caps.Kcb > 0.0 and zero_b

        if cand_a and cand_b:
            full = ct_full_lock_torques(p, m)
            if abs(full.Mca) <= caps.Kca and abs(full.Mcb) <= caps.Kcb:
                return _Mode(True, True, 0.0, 0.0), (0.0, 0.0)

        # slip directions used while testing single locks; a clutch at zero slip
        # (or within event_tol of it) takes the direction it would slide freely
        s_a = _sign(da) if not zero_a else self._slip_direction(0, m, 0.0)
        s_b = _sign(db) if not zero_b else self._slip_direction(1, m, 0.0)

        if prev.lock_b and not prev.lock_a:
            order = (GearIndex.SECOND, GearIndex.FIRST)
        else:
            order = (GearIndex.FIRST, GearIndex.SECOND)
        for gear in order:
            if gear == GearIndex.FIRST and cand_a:
                hold = ct_engagement_torque(p, m, gear, caps.Kcb * s_b, self.JR)
                if abs(hold) <= caps.Kca:
                    if zero_b:
                        s_b = self._slip_direction(1, m, None)
                    return _Mode(True, False, 0.0, s_b), self._project(w, 0)
            elif gear == GearIndex.SECOND and cand_b:
                hold = ct_engagement_torque(p, m, gear, caps.Kca * s_a, self.JR)
                if abs(hold) <= caps.Kcb:
                    if zero_a:
                        s_a = self._slip_direction(0, m, None)
                    return _Mode(False, True, s_a, 0.0), self._project(w, 1)

        # both sliding; a clutch at zero slip takes the direction set by the other's torque
        if zero_a and not zero_b:
            s_a = self._slip_direction(0, m, caps.Kcb * s_b)
        elif zero_b and not zero_a:
            s_b = self._slip_direction(1, m, caps.Kca * s_a)
        return _Mode(False, False, s_a, s_b), tuple(w)

    def _project(self, w, i: int) -> tuple[float, float]:
        """Remove clutch ``i``'s residual slip with an impulsive clutch torque."""
        p = self.p
        d = slip_speeds(p, ShaftState(*w))[i]
        impulse = d / self.JR[i][i]
        ratio = p.Ra if i == 0 else p.Rb
        return (w[0] - impulse / p.J1, w[1] + ratio * impulse / p.J2)

    def sample(self, t: float, w, mode: _Mode, event: bool = False) -> CtTraceSample:
        mc, _, caps = self.torques(t, mode)
        return CtTraceSample(t, ShaftState(*w), mc, LockState(mode.lock_a, mode.lock_b), caps, event)


def simulate_ct(
    params: PowershiftParams,
    scenario: Scenario,
    w0: ShaftState,
    t_end: float,
    cfg: CtSolverConfig = CtSolverConfig(),
) -> list[CtTraceSample]:
    """Integrate the continuous-time model over ``[0, t_end]``.

    Returns one sample per accepted step (non-uniform in time), with event
    steps carrying the post-switch mode.

    Raises:
        ScenarioDomainError: ``t_end`` beyond the scenario horizon.
        SolverError: step-size underflow or an event cascade.
    """
    if t_end > scenario.t_end * (1.0 + 1e-12) or t_end <= 0.0:
        raise ScenarioDomainError(f"t_end={t_end} outside (0, {scenario.t_end}]")
    hy = _Hybrid(params, scenario, cfg)
    rtol, atol = cfg.rel_tol, cfg.abs_tol

    t = 0.0
    hy.pin(t)
    w = (float(w0[0]), float(w0[1]))
    mode, w = hy.resolve(t, w, LockState(False, False))
    out = [hy.sample(t, w, mode)]

    fun = hy.rhs(mode)
    f = fun(t, w)
    h = min(cfg.max_step, initial_step(fun, t, w, f, rtol, atol))
    ctrl = PIController()
    stops = [b for b in scenario.breakpoints() if b < t_end] + [t_end]

    for stop in stops:
        bracket_hi: float | None = None
        cascade = 0
        while t < stop:
            remaining = stop - t
            if bracket_hi is not None:
                width = bracket_hi - t
                step = width if width <= cfg.event_tol else 0.5 * width
            else:
                step = min(h, cfg.max_step, remaining)
                # avoid leaving a sliver before a breakpoint
                if remaining - step < 1e-3 * step:
                    step = remaining if remaining <= cfg.max_step else 0.5 * remaining
            if step <= 4.0 * math.ulp(max(1.0, t)):
                raise SolverError(t, f"step size underflow (h={step!r})")

            w_new, f_new, err_vec = dopri5_step(fun, t, w, step, f)
            err = error_norm(err_vec, w, w_new, rtol, atol)
            if err > 1.0:
                h = step * PIController.reject_factor(err)
                bracket_hi = None
                continue
            t_new = stop if step == remaining else t + step

            crossed = hy.crossings(t, w, t_new, w_new, mode)
            if crossed is not None:
                if step > cfg.event_tol:
                    bracket_hi = t_new
                    continue
                # localized: switch modes at the far side of the bracket
                prev_locks = LockState(mode.lock_a, mode.lock_b)
                t, w = t_new, w_new
                mode, w = hy.resolve(t, w, prev_locks, crossed)
                fun = hy.rhs(mode)
                f = fun(t, w)
                out.append(hy.sample(t, w, mode, event=True))
                bracket_hi = None
                cascade += 1
                if cascade > 50:
                    raise SolverError(t, "event cascade: clutch states do not settle")
                # restart from the bracket scale; the controller grows it back
                h = step
                continue

            cascade = 0
            if bracket_hi is not None and t_new >= bracket_hi:
                bracket_hi = None
            t, w, f = t_new, w_new, f_new
            out.append(hy.sample(t, w, mode))
            h = step * ctrl.accept_factor(err)

        if t >= t_end:
            break
        # new schedule pieces take over; re-check that locked clutches still hold
        hy.pin(t)
        margins = hy.capacity_margin(t, mode)
        if margins[0] < 0.0 or margins[1] < 0.0:
            mode, w = hy.resolve(t, w, LockState(mode.lock_a, mode.lock_b))
            out[-1] = hy.sample(t, w, mode, event=True)
        fun = hy.rhs(mode)
        f = fun(t, w)
    return out
