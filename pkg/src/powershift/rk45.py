"""Dormand-Prince 5(4) embedded Runge-Kutta step with PI step-size control.

States are short tuples of floats; the systems integrated here have two
components, so plain Python arithmetic beats array overhead.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

State = tuple[float, ...]
RHS = Callable[[float, State], State]

C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# 5th-order weights equal the last row of A (FSAL)
B = A[6] + (0.0,)
# difference between 5th- and 4th-order weights
E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

ORDER = 5
SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
# PI gains (Hairer & Wanner, Solving ODEs II, IV.2)
ALPHA = 0.7 / ORDER
BETA = 0.4 / ORDER


def dopri5_step(fun: RHS, t: float, y: State, h: float, f0: State) -> tuple[State, State, State]:
    """One step of size ``h``.

    Returns ``(y_new, f_new, err)``: the 5th-order solution, the derivative at
    ``(t + h, y_new)`` (reusable as the next ``f0``), and the embedded error
    estimate.
    """
    n = len(y)
    ks = [f0]
    for stage in range(1, 7):
        a = A[stage]
        yi = tuple(y[j] + h * sum(a[s] * ks[s][j] for s in range(stage) if a[s]) for j in range(n))
        ks.append(fun(t + C[stage] * h, yi))
    # stage 6 was evaluated at the 5th-order solution
    y_new = tuple(
        y[j] + h * sum(A[6][s] * ks[s][j] for s in range(6) if A[6][s]) for j in range(n)
    )
    err = tuple(h * sum(E[s] * ks[s][j] for s in range(7) if E[s]) for j in range(n))
    return y_new, ks[6], err


def error_norm(err: State, y0: State, y1: State, rtol: float, atol: float) -> float:
    """RMS of the error scaled by ``atol + rtol * max(|y0|, |y1|)``."""
    total = 0.0
    for e, a, b in zip(err, y0, y1):
        sc = atol + rtol * max(abs(a), abs(b))
        total += (e / sc) ** 2
    return math.sqrt(total / len(err))


def initial_step(fun: RHS, t: float, y: State, f0: State, rtol: float, atol: float) -> float:
    """Starting step size estimate (Hairer, Norsett & Wanner, II.4)."""
    sc = [atol + rtol * abs(v) for v in y]
    d0 = math.sqrt(sum((v / s) ** 2 for v, s in zip(y, sc)) / len(y))
    d1 = math.sqrt(sum((v / s) ** 2 for v, s in zip(f0, sc)) / len(y))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = tuple(v + h0 * f for v, f in zip(y, f0))
    f1 = fun(t + h0, y1)
    d2 = math.sqrt(sum(((a - b) / s) ** 2 for a, b, s in zip(f1, f0, sc)) / len(y)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / ORDER)
    return min(100.0 * h0, h1)


class PIController:
    """Proportional-integral step-size controller."""

    def __init__(self) -> None:
        self.prev_err = 1e-4

    def accept_factor(self, err: float) -> float:
        err = max(err, 1e-10)
        factor = SAFETY * err ** (-ALPHA) * self.prev_err ** BETA
        self.prev_err = err
        return min(MAX_FACTOR, max(MIN_FACTOR, factor))

    @staticmethod
    def reject_factor(err: float) -> float:
        return max(MIN_FACTOR, SAFETY * err ** (-1.0 / ORDER))


def integrate(
    fun: RHS,
    t0: float,
    y0: Sequence[float],
    t_end: float,
    rtol: float = 1e-6,
    atol: float = 1e-9,
    max_step: float = math.inf,
) -> list[tuple[float, State]]:
    """Plain adaptive integration without events; returns accepted ``(t, y)`` pairs."""
    y = tuple(float(v) for v in y0)
    t = float(t0)
    f = fun(t, y)
    h = min(max_step, initial_step(fun, t, y, f, rtol, atol), t_end - t)
    ctrl = PIController()
    out = [(t, y)]
    while t < t_end:
        h = min(h, max_step, t_end - t)
        if h <= 16 * math.ulp(max(abs(t), 1.0)):
            raise FloatingPointError(f"step size underflow at t={t!r}")
        y_new, f_new, err_vec = dopri5_step(fun, t, y, h, f)
        err = error_norm(err_vec, y, y_new, rtol, atol)
        if err > 1.0:
            h *= PIController.reject_factor(err)
            continue
        t = t + h if t_end - (t + h) > 1e-15 * max(1.0, abs(t_end)) else t_end
        y, f = y_new, f_new
        out.append((t, y))
        h *= ctrl.accept_factor(err)
    return out
