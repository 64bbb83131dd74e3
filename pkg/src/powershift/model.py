"""Discrete-time two-speed powershift model.

Two inertias ``J1`` (input shaft) and ``J2`` (output shaft) are coupled by two
friction clutches.  Clutch ``a`` engages the first gear (ratio ``Ra``), clutch
``b`` the second gear (ratio ``Rb``).  With

    R = [[-1, -1],
         [Ra, Rb]]

the slip speeds are ``delta = -R^T w`` and one backward-Euler step reads

    w(k) = w(k-1) + Ts J^-1 (M(k) + R Mc(k)).

Everything here is a pure function over small immutable values.  Speeds are
rad/s internally; use :func:`rpm_to_rad_s` at the boundary.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .linalg2 import Mat2, SingularMatrixError, det, diag, invert_2x2, matmul, matvec, transpose

RPM_TO_RAD_S = math.pi / 30.0


def rpm_to_rad_s(rpm: float) -> float:
    return rpm * RPM_TO_RAD_S


def rad_s_to_rpm(w: float) -> float:
    return w / RPM_TO_RAD_S


class InvalidParamsError(ValueError):
    """Physical parameters violate a model invariant."""


class ShaftState(NamedTuple):
    """Angular speeds (rad/s) of the input and output inertias."""

    w1: float
    w2: float

    @classmethod
    def from_rpm(cls, w1_rpm: float, w2_rpm: float) -> ShaftState:
        return cls(rpm_to_rad_s(w1_rpm), rpm_to_rad_s(w2_rpm))


class InputTorques(NamedTuple):
    """External torques (N m) on ``J1`` and ``J2``."""

    M1: float
    M2: float


class SlipSpeeds(NamedTuple):
    """Slip speeds (rad/s) across clutch ``a`` and clutch ``b``."""

    da: float
    db: float


class ClutchCapacities(NamedTuple):
    """Friction torque bounds (N m, non-negative)."""

    Kca: float
    Kcb: float


class ClutchTorques(NamedTuple):
    """Friction torques (N m) transmitted by clutch ``a`` and clutch ``b``."""

    Mca: float
    Mcb: float


class GearIndex(enum.IntEnum):
    """Row selector for the per-gear engagement condition."""

    FIRST = 0
    SECOND = 1

    @property
    def other(self) -> GearIndex:
        return GearIndex.SECOND if self is GearIndex.FIRST else GearIndex.FIRST


@dataclass(frozen=True)
class PowershiftParams:
    """Inertias (kg m^2), gear ratios and step size (s).

    The coupling matrices ``R`` and ``JR = R^T (Ts J^-1) R`` are derived once at
    construction.  ``Ra == Rb`` is rejected because it makes ``R`` singular.
    """

    J1: float
    J2: float
    Ra: float
    Rb: float
    Ts: float
    R: Mat2 = field(init=False, repr=False, compare=False)
    JR: Mat2 = field(init=False, repr=False, compare=False)
    R_inv: Mat2 = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for name in ("J1", "J2", "Ra", "Rb", "Ts"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise InvalidParamsError(f"{name} must be finite and > 0, got {value!r}")
        if self.Ra == self.Rb:
            raise InvalidParamsError("Ra == Rb makes the coupling matrix R singular")
        R = ((-1.0, -1.0), (self.Ra, self.Rb))
        try:
            R_inv = invert_2x2(R)
        except SingularMatrixError as exc:
            raise InvalidParamsError(f"coupling matrix R is singular: {exc}") from None
        Js = diag(self.Ts / self.J1, self.Ts / self.J2)
        JR = matmul(transpose(R), matmul(Js, R))
        # enforce exact symmetry; both off-diagonal products are equal in exact arithmetic
        JR = ((JR[0][0], JR[0][1]), (JR[0][1], JR[1][1]))
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "R_inv", R_inv)
        object.__setattr__(self, "JR", JR)

    @classmethod
    def from_radii(
        cls, J1: float, J2: float, r_a1: float, r_a2: float, r_b1: float, r_b2: float, Ts: float
    ) -> PowershiftParams:
        """Build from gear radii, ``Ra = r_a2 / r_a1`` and ``Rb = r_b2 / r_b1``."""
        return cls(J1=J1, J2=J2, Ra=r_a2 / r_a1, Rb=r_b2 / r_b1, Ts=Ts)

    def with_ts(self, Ts: float) -> PowershiftParams:
        return PowershiftParams(self.J1, self.J2, self.Ra, self.Rb, Ts)


def _sign(x: float) -> float:
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def coupling_matrices(params: PowershiftParams) -> tuple[Mat2, Mat2]:
    """Return ``(R, JR)``."""
    return params.R, params.JR


def slip_speeds(params: PowershiftParams, w: ShaftState) -> SlipSpeeds:
    w1, w2 = w
    return SlipSpeeds(w1 - params.Ra * w2, w1 - params.Rb * w2)


def kinetic_torques(caps: ClutchCapacities, d: SlipSpeeds) -> ClutchTorques:
    """Sliding friction ``K * sign(delta)`` with ``sign(0) = 0``."""
    return ClutchTorques(caps.Kca * _sign(d.da), caps.Kcb * _sign(d.db))


def step_explicit(
    params: PowershiftParams, w_prev: ShaftState, m: InputTorques, mc: ClutchTorques
) -> ShaftState:
    """Advance one step once the clutch torques of step ``k`` are known.

    The update is explicit in ``w`` because ``Mc(k)`` is supplied; the implicit
    part of the scheme lives in how the clutch logic chooses ``Mc(k)``.
    """
    Ts = params.Ts
    Mca, Mcb = mc
    w1 = w_prev.w1 + (Ts / params.J1) * (m.M1 - Mca - Mcb)
    w2 = w_prev.w2 + (Ts / params.J2) * (m.M2 + params.Ra * Mca + params.Rb * Mcb)
    return ShaftState(w1, w2)


def engagement_rhs(
    params: PowershiftParams, m: InputTorques, w_prev: ShaftState, i: GearIndex
) -> float:
    """``N_i = -G_i R^T (Ts J^-1 M + w_prev)``."""
    v1 = w_prev.w1 + params.Ts * m.M1 / params.J1
    v2 = w_prev.w2 + params.Ts * m.M2 / params.J2
    ratio = params.Ra if i == GearIndex.FIRST else params.Rb
    return v1 - ratio * v2


def engagement_torque(
    params: PowershiftParams,
    m: InputTorques,
    w_prev: ShaftState,
    i: GearIndex,
    other_torque: float,
) -> float:
    """Torque on clutch ``i`` that makes its slip exactly zero at step ``k``.

    ``other_torque`` is the already-fixed torque of the complementary clutch.
    """
    N = engagement_rhs(params, m, w_prev, i)
    (jr11, jr12), (jr21, jr22) = params.JR
    if i == GearIndex.FIRST:
        return (N - jr12 * other_torque) / jr11
    return (N - jr21 * other_torque) / jr22


def full_lock_torques(params: PowershiftParams, m: InputTorques, w_prev: ShaftState) -> ClutchTorques:
    """Clutch torques that bring both shafts to rest in one step.

    Uses ``Mc = -R^-1 (M + J w_prev / Ts)``.
    """
    Ts = params.Ts
    v = (m.M1 + params.J1 * w_prev.w1 / Ts, m.M2 + params.J2 * w_prev.w2 / Ts)
    x1, x2 = matvec(params.R_inv, v)
    return ClutchTorques(-x1, -x2)


def full_lock_torques_normal_form(
    params: PowershiftParams, m: InputTorques, w_prev: ShaftState
) -> ClutchTorques:
    """Same quantity as :func:`full_lock_torques`, via ``-(R^T Js R)^-1 R^T (Js M + w_prev)``.

    Kept as an independent route for cross-checking.  ``JR`` is badly
    conditioned when the inertias differ a lot and the ratios are close, so
    its determinant comes from ``det(R)^2 det(Js)`` instead of cancelling
    entries.
    """
    Ts = params.Ts
    v = (w_prev.w1 + Ts * m.M1 / params.J1, w_prev.w2 + Ts * m.M2 / params.J2)
    u1, u2 = matvec(transpose(params.R), v)
    (j11, j12), (_, j22) = params.JR
    d = det(params.R) ** 2 * (Ts / params.J1) * (Ts / params.J2)
    return ClutchTorques(-(j22 * u1 - j12 * u2) / d, -(j11 * u2 - j12 * u1) / d)
