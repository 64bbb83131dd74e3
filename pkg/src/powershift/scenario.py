"""Input schedules and the ``.scn`` scenario text format.

A scenario file has one ``[params]`` block and four ``[schedule <name>]``
blocks (``m1``, ``m2``, ``kca``, ``kcb``)::

    # comments and blank lines are ignored
    [params]
    j1 = 0.1
    j2 = 0.5
    ra = 3
    rb = 2
    ts = 0.02
    w1_0 = 1000 rpm
    w2_0 = 100 rpm
    t_end = 6

    [schedule m1]
    mode: linear
    0.0  20
    1.5  20

Speeds take a ``rpm`` or ``rad_s`` unit suffix.  Every key and block is
required, unknown ones are rejected.  Schedules extrapolate their first/last
value as a constant.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .model import InvalidParamsError, PowershiftParams, ShaftState, rpm_to_rad_s

SCHEDULE_NAMES = ("m1", "m2", "kca", "kcb")
CAPACITY_SCHEDULES = ("kca", "kcb")
PARAM_KEYS = ("j1", "j2", "ra", "rb", "ts", "w1_0", "w2_0", "t_end")
MODES = ("linear", "hold")


class ScenarioError(ValueError):
    pass


class ScenarioSyntaxError(ScenarioError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class ScenarioValidationError(ScenarioError):
    pass


class ScenarioDomainError(ScenarioError):
    """A simulation was requested beyond the scenario horizon."""


@dataclass(frozen=True)
class Schedule:
    """Piecewise-linear or piecewise-constant signal of time."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    mode: str = "linear"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ScenarioValidationError(f"unknown interpolation mode {self.mode!r}")
        if len(self.times) == 0 or len(self.times) != len(self.values):
            raise ScenarioValidationError("schedule needs at least one (t, value) breakpoint")
        for t, v in zip(self.times, self.values):
            if not (math.isfinite(t) and math.isfinite(v)):
                raise ScenarioValidationError("schedule breakpoints must be finite")
        for t0, t1 in zip(self.times, self.times[1:]):
            if not t1 > t0:
                raise ScenarioValidationError("breakpoint times must be strictly increasing")

    @classmethod
    def constant(cls, value: float) -> Schedule:
        return cls((0.0,), (float(value),))

    @classmethod
    def from_points(cls, points, mode: str = "linear") -> Schedule:
        ts, vs = zip(*points)
        return cls(tuple(float(t) for t in ts), tuple(float(v) for v in vs), mode)

    def locate(self, t: float) -> int:
        """Index of the piece containing ``t``; -1 before the first breakpoint."""
        return bisect_right(self.times, t) - 1

    def eval_piece(self, i: int, t: float) -> float:
        """Evaluate piece ``i`` at ``t``, extending it past its own ends.

        Integrators pin the piece at the start of a step so that a jump at the
        step end is not seen from the left.
        """
        times, values = self.times, self.values
        if i < 0:
            return values[0]
        if i >= len(times) - 1 or self.mode == "hold":
            return values[i]
        t0 = times[i]
        v0 = values[i]
        return v0 + (values[i + 1] - v0) * (t - t0) / (times[i + 1] - t0)

    def sample(self, t: float) -> float:
        times, values = self.times, self.values
        if t >= times[-1]:
            return values[-1]
        if t <= times[0]:
            return values[0]
        return self.eval_piece(bisect_right(times, t) - 1, t)


@dataclass(frozen=True)
class Scenario:
    params: PowershiftParams
    w0: ShaftState
    m1: Schedule
    m2: Schedule
    kca: Schedule
    kcb: Schedule
    t_end: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t_end) and self.t_end > 0.0):
            raise ScenarioValidationError("t_end must be finite and > 0")
        if not all(math.isfinite(w) for w in self.w0):
            raise ScenarioValidationError("initial speeds must be finite")
        for name in CAPACITY_SCHEDULES:
            if any(v < 0.0 for v in getattr(self, name).values):
                raise ScenarioValidationError(f"{name}: capacity must be non-negative")

    def schedules(self) -> tuple[Schedule, Schedule, Schedule, Schedule]:
        return (self.m1, self.m2, self.kca, self.kcb)

    def breakpoints(self) -> list[float]:
        """Sorted union of all schedule breakpoint times inside ``(0, t_end)``."""
        ts = {t for s in self.schedules() for t in s.times if 0.0 < t < self.t_end}
        return sorted(ts)

    def with_ts(self, ts: float) -> Scenario:
        return Scenario(self.params.with_ts(ts), self.w0, self.m1, self.m2, self.kca, self.kcb, self.t_end)

    def n_steps(self, ts: float | None = None) -> int:
        """Number of whole steps of size ``ts`` (default ``params.Ts``) in ``[0, t_end]``."""
        ts = self.params.Ts if ts is None else ts
        n = self.t_end / ts
        rounded = round(n)
        # tolerate representation error such as 6 / 0.03 = 199.99999999999997
        if abs(n - rounded) <= 1e-9 * max(1.0, n):
            return int(rounded)
        return int(math.floor(n))


def _parse_float(text: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ScenarioSyntaxError(lineno, f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ScenarioSyntaxError(lineno, f"non-finite number {text!r}")
    return value


def _parse_speed(text: str, lineno: int) -> float:
    parts = text.split()
    if len(parts) != 2:
        raise ScenarioSyntaxError(lineno, "speed needs a value and a unit (rpm or rad_s)")
    value = _parse_float(parts[0], lineno)
    if parts[1] == "rpm":
        return rpm_to_rad_s(value)
    if parts[1] == "rad_s":
        return value
    raise ScenarioSyntaxError(lineno, f"unknown speed unit {parts[1]!r}")


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario text.

    Raises:
        ScenarioSyntaxError: malformed line (carries the line number).
        ScenarioValidationError: well-formed input violating an invariant.
    """
    params: dict[str, tuple[str, int]] = {}
    schedules: dict[str, dict] = {}
    section: str | None = None
    current: dict | None = None
    saw_content = False
    seen_params = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        saw_content = True
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioSyntaxError(lineno, f"unterminated section header {line!r}")
            head = line[1:-1].split()
            if head == ["params"]:
                if seen_params:
                    raise ScenarioSyntaxError(lineno, "duplicate [params] block")
                seen_params = True
                section, current = "params", None
            elif len(head) == 2 and head[0] == "schedule":
                name = head[1]
                if name not in SCHEDULE_NAMES:
                    raise ScenarioSyntaxError(lineno, f"unknown schedule {name!r}")
                if name in schedules:
                    raise ScenarioSyntaxError(lineno, f"duplicate schedule {name!r}")
                current = {"mode": None, "points": [], "lineno": lineno}
                schedules[name] = current
                section = "schedule"
            else:
                raise ScenarioSyntaxError(lineno, f"unknown section {line!r}")
            continue

        if section is None:
            raise ScenarioSyntaxError(lineno, "content outside of a section")
        if section == "params":
            if "=" not in line:
                raise ScenarioSyntaxError(lineno, "expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in PARAM_KEYS:
                raise ScenarioSyntaxError(lineno, f"unknown parameter {key!r}")
            if key in params:
                raise ScenarioSyntaxError(lineno, f"duplicate parameter {key!r}")
            params[key] = (value, lineno)
            continue

        assert current is not None
        if line.startswith("mode"):
            key, _, value = line.partition(":")
            if key.strip() != "mode" or not value.strip():
                raise ScenarioSyntaxError(lineno, "expected 'mode: linear|hold'")
            if current["mode"] is not None:
                raise ScenarioSyntaxError(lineno, "duplicate mode line")
            mode = value.strip()
            if mode not in MODES:
                raise ScenarioSyntaxError(lineno, f"unknown mode {mode!r}")
            current["mode"] = mode
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ScenarioSyntaxError(lineno, "expected 't value'")
        current["points"].append((_parse_float(parts[0], lineno), _parse_float(parts[1], lineno)))

    if not saw_content:
        raise ScenarioSyntaxError(1, "empty scenario")

    missing = [k for k in PARAM_KEYS if k not in params]
    if missing:
        raise ScenarioValidationError(f"missing parameters: {', '.join(missing)}")
    missing = [k for k in SCHEDULE_NAMES if k not in schedules]
    if missing:
        raise ScenarioValidationError(f"missing schedules: {', '.join(missing)}")

    num = {}
    for key in ("j1", "j2", "ra", "rb", "ts", "t_end"):
        value, lineno = params[key]
        num[key] = _parse_float(value, lineno)
    w1 = _parse_speed(*params["w1_0"])
    w2 = _parse_speed(*params["w2_0"])

    try:
        p = PowershiftParams(J1=num["j1"], J2=num["j2"], Ra=num["ra"], Rb=num["rb"], Ts=num["ts"])
    except InvalidParamsError as exc:
        raise ScenarioValidationError(str(exc)) from None

    built = {}
    for name in SCHEDULE_NAMES:
        block = schedules[name]
        if block["mode"] is None:
            raise ScenarioValidationError(f"schedule {name}: missing 'mode:' line")
        if not block["points"]:
            raise ScenarioValidationError(f"schedule {name}: needs at least one breakpoint")
        if any(t < 0.0 for t, _ in block["points"]):
            raise ScenarioValidationError(f"schedule {name}: breakpoint times must be >= 0")
        try:
            built[name] = Schedule.from_points(block["points"], block["mode"])
        except ScenarioValidationError as exc:
            raise ScenarioValidationError(f"schedule {name}: {exc}") from None

    return Scenario(params=p, w0=ShaftState(w1, w2), t_end=num["t_end"], **built)


def serialize_scenario(scn: Scenario) -> str:
    """Canonical text form; ``parse_scenario`` of the result equals ``scn``."""
    p = scn.params
    lines = [
        "[params]",
        f"j1 = {p.J1!r}",
        f"j2 = {p.J2!r}",
        f"ra = {p.Ra!r}",
        f"rb = {p.Rb!r}",
        f"ts = {p.Ts!r}",
        f"w1_0 = {scn.w0.w1!r} rad_s",
        f"w2_0 = {scn.w0.w2!r} rad_s",
        f"t_end = {scn.t_end!r}",
    ]
    for name in SCHEDULE_NAMES:
        s: Schedule = getattr(scn, name)
        lines += ["", f"[schedule {name}]", f"mode: {s.mode}"]
        lines += [f"{t!r} {v!r}" for t, v in zip(s.times, s.values)]
    return "\n".join(lines) + "\n"


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package, e.g. ``"paper_like"``."""
    ref = resources.files("powershift") / "scenarios" / f"{name}.scn"
    path = Path(str(ref))
    if not path.is_file():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    return path
