"""Step-size convergence study and per-step execution timing."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .logic import StepRecord, simulate_scenario
from .reference import CtSolverConfig, CtTraceSample, simulate_ct
from .scenario import Scenario

# reference run used for convergence: tight tolerance, at most 1 ms steps
REFERENCE_CONFIG = CtSolverConfig(rel_tol=1e-8, abs_tol=1e-10, max_step=1e-3, event_tol=1e-9)


@dataclass(frozen=True)
class TimingStats:
    """Order statistics of per-execution mean step times, in microseconds."""

    samples_us: tuple[float, ...]
    mean_us: float
    median_us: float
    q1_us: float
    q3_us: float
    outliers_us: tuple[float, ...]
    executions: int
    steps_per_execution: int

    @classmethod
    def from_samples(cls, samples_us: Sequence[float], steps_per_execution: int) -> TimingStats:
        if len(samples_us) < 1:
            raise ValueError("need at least one timing sample")
        if steps_per_execution < 1:
            raise ValueError("steps_per_execution must be >= 1")
        x = np.asarray(samples_us, dtype=float)
        q1, med, q3 = (float(v) for v in np.percentile(x, [25.0, 50.0, 75.0]))
        iqr = q3 - q1
        lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
        outliers = tuple(float(v) for v in x if v < lo or v > hi)
        return cls(
            samples_us=tuple(float(v) for v in x),
            mean_us=float(x.mean()),
            median_us=med,
            q1_us=q1,
            q3_us=q3,
            outliers_us=outliers,
            executions=len(x),
            steps_per_execution=steps_per_execution,
        )

    def summary(self) -> str:
        return (
            f"executions={self.executions} steps/execution={self.steps_per_execution} "
            f"mean={self.mean_us:.3f}us median={self.median_us:.3f}us "
            f"q1={self.q1_us:.3f}us q3={self.q3_us:.3f}us outliers={len(self.outliers_us)}"
        )


def benchmark_discrete(
    scenario: Scenario, executions: int = 20, ts: float | None = None
) -> tuple[TimingStats, list[StepRecord]]:
    """Time ``executions`` full discrete runs after one untimed warm-up.

    Each run is timed as a whole with a monotonic clock and divided by its step
    count.  Also returns the trace of the last timed run, which is what an
    untimed run produces.
    """
    if executions < 1:
        raise ValueError("executions must be >= 1")
    trace = simulate_scenario(scenario, ts)
    n_steps = len(trace) - 1
    if n_steps < 1:
        raise ValueError("scenario has no steps to time")
    samples = []
    for _ in range(executions):
        t0 = time.perf_counter_ns()
        trace = simulate_scenario(scenario, ts)
        elapsed = time.perf_counter_ns() - t0
        samples.append(elapsed / 1e3 / n_steps)
    return TimingStats.from_samples(samples, n_steps), trace


@dataclass(frozen=True)
class ConvergenceRow:
    ts: float
    sup_err_w2: float


@dataclass
class ConvergenceStudy:
    rows: list[ConvergenceRow]
    reference: list[CtTraceSample] = field(repr=False)


def sup_error_w2(trace: Sequence[StepRecord], reference: Sequence[CtTraceSample]) -> float:
    """Max over the discrete instants of ``|w2 - w2_ref|``, reference linearly interpolated."""
    t_ref = np.array([s.t for s in reference])
    w2_ref = np.array([s.w.w2 for s in reference])
    t = np.array([r.t for r in trace])
    w2 = np.array([r.w.w2 for r in trace])
    return float(np.max(np.abs(w2 - np.interp(t, t_ref, w2_ref))))


def convergence_study(
    scenario: Scenario, ts_list: Sequence[float], cfg: CtSolverConfig = REFERENCE_CONFIG
) -> ConvergenceStudy:
    """Run the reference once, then the discrete model for each step size."""
    if len(ts_list) == 0:
        raise ValueError("ts_list must not be empty")
    if any(not ts > 0.0 for ts in ts_list):
        raise ValueError("step sizes must be > 0")
    ref = simulate_ct(scenario.params, scenario, scenario.w0, scenario.t_end, cfg)
    rows = [
        ConvergenceRow(float(ts), sup_error_w2(simulate_scenario(scenario, ts), ref)) for ts in ts_list
    ]
    return ConvergenceStudy(rows, ref)
