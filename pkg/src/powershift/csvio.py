"""CSV writers.  Floats use 17 significant digits so files are bit-stable."""

from __future__ import annotations

from typing import Iterable, Sequence, TextIO

from .bench import ConvergenceRow, TimingStats
from .logic import StepRecord
from .model import PowershiftParams, slip_speeds
from .reference import CtTraceSample

TRACE_COLUMNS = (
    "k", "t", "w1", "w2", "delta_a", "delta_b",
    "m_ca", "m_cb", "k_ca", "k_cb", "lock_a", "lock_b",
)  # fmt: skip


def fmt(x: float) -> str:
    return "%.17g" % x


def _write(fp: TextIO, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    fp.write(",".join(header) + "\n")
    for row in rows:
        fp.write(",".join(row) + "\n")


def write_discrete_trace(fp: TextIO, trace: Sequence[StepRecord]) -> None:
    _write(
        fp,
        TRACE_COLUMNS,
        (
            (
                str(r.k), fmt(r.t), fmt(r.w.w1), fmt(r.w.w2), fmt(r.d.da), fmt(r.d.db),
                fmt(r.mc.Mca), fmt(r.mc.Mcb), fmt(r.caps.Kca), fmt(r.caps.Kcb),
                str(int(r.locks.lock_a)), str(int(r.locks.lock_b)),
            )  # fmt: skip
            for r in trace
        ),
    )


def exec_frequency(trace: Sequence[CtTraceSample]) -> list[float]:
    """``1 / (t_i - t_{i-1})`` per sample; 0 for the first one."""
    freq = [0.0]
    for prev, cur in zip(trace, trace[1:]):
        freq.append(1.0 / (cur.t - prev.t))
    return freq


def write_ct_trace(fp: TextIO, params: PowershiftParams, trace: Sequence[CtTraceSample]) -> None:
    freq = exec_frequency(trace)
    rows = []
    for k, (s, f) in enumerate(zip(trace, freq)):
        d = slip_speeds(params, s.w)
        rows.append(
            (
                str(k), fmt(s.t), fmt(s.w.w1), fmt(s.w.w2), fmt(d.da), fmt(d.db),
                fmt(s.mc.Mca), fmt(s.mc.Mcb), fmt(s.caps.Kca), fmt(s.caps.Kcb),
                str(int(s.locks.lock_a)), str(int(s.locks.lock_b)), fmt(f),
            )  # fmt: skip
        )
    _write(fp, TRACE_COLUMNS + ("exec_frequency",), rows)


def write_convergence(fp: TextIO, rows: Sequence[ConvergenceRow]) -> None:
    _write(fp, ("ts", "sup_err_w2"), ((fmt(r.ts), fmt(r.sup_err_w2)) for r in rows))


def write_timing(fp: TextIO, stats: TimingStats) -> None:
    """One row per execution, then the summary statistics as ``stat`` rows."""
    rows = [("execution", str(i), fmt(v)) for i, v in enumerate(stats.samples_us)]
    rows += [
        ("stat", "mean", fmt(stats.mean_us)),
        ("stat", "median", fmt(stats.median_us)),
        ("stat", "q1", fmt(stats.q1_us)),
        ("stat", "q3", fmt(stats.q3_us)),
        ("stat", "outliers", str(len(stats.outliers_us))),
        ("stat", "steps_per_execution", str(stats.steps_per_execution)),
    ]
    _write(fp, ("kind", "key", "step_time_us"), rows)
