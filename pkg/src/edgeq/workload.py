"""Task traces: synthetic Poisson generation and CSV persistence."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

CSV_HEADER = "device_id,task_id,arrival_step,compute_demand,data_size_kb,deadline_steps"

COMPUTE_RANGE = (1, 5)  # uniform integer, compute units
DATA_RANGE_KB = (10.0, 200.0)  # uniform


@dataclass(frozen=True)
class Task:
    id: int
    arrival_step: int
    compute_demand: float
    data_size: float
    deadline_steps: int | None = None

    def __post_init__(self):
        if not self.compute_demand > 0:
            raise ValueError(f"task {self.id}: compute_demand must be > 0")
        if not self.data_size >= 0:
            raise ValueError(f"task {self.id}: data_size must be >= 0")


@dataclass
class Trace:
    horizon_steps: int
    tasks: list[list[Task]] = field(default_factory=list)  # per device

    @property
    def n_devices(self) -> int:
        return len(self.tasks)

    @property
    def n_tasks(self) -> int:
        return sum(len(ts) for ts in self.tasks)

    def validate(self) -> None:
        seen: set[int] = set()
        for dev, ts in enumerate(self.tasks):
            prev = -1
            for task in ts:
                if task.arrival_step < prev:
                    raise ValueError(f"device {dev}: arrivals not sorted at task {task.id}")
                if not 0 <= task.arrival_step < self.horizon_steps:
                    raise ValueError(f"task {task.id}: arrival_step outside [0, horizon)")
                if task.id in seen:
                    raise ValueError(f"duplicate task id {task.id}")
                seen.add(task.id)
                prev = task.arrival_step

    def checksum(self) -> str:
        """SHA-256 of the canonical CSV rendering; used to prove paired runs share a trace."""
        return hashlib.sha256(_render_csv(self).encode()).hexdigest()


class LoadTier(Enum):
    LOW = 0.2
    MEDIUM = 0.5
    HIGH = 0.9

    @property
    def rate(self) -> float:
        return self.value

    @classmethod
    def parse(cls, name: str) -> "LoadTier":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown load tier {name!r}; expected low, medium or high") from None


def generate_trace(
    n_devices: int,
    tier: LoadTier | float,
    horizon: int,
    seed: int | np.random.SeedSequence,
) -> Trace:
    """Per-device Poisson arrivals at the tier's rate (tasks per step).

    ``tier`` may also be a bare rate, which is how tests force λ = 0.
    """
    if n_devices < 1:
        raise ValueError("n_devices must be >= 1")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rate = tier.rate if isinstance(tier, LoadTier) else float(tier)
    if rate < 0:
        raise ValueError("arrival rate must be >= 0")
    rng = np.random.default_rng(seed)
    counts = rng.poisson(rate, size=(n_devices, horizon))
    tasks: list[list[Task]] = []
    next_id = 0
    lo_c, hi_c = COMPUTE_RANGE
    lo_d, hi_d = DATA_RANGE_KB
    for dev in range(n_devices):
        steps = np.repeat(np.arange(horizon), counts[dev])
        compute = rng.integers(lo_c, hi_c + 1, size=len(steps))
        data = rng.uniform(lo_d, hi_d, size=len(steps))
        dev_tasks = []
        for s, c, d in zip(steps, compute, data):
            dev_tasks.append(Task(next_id, int(s), float(c), float(d)))
            next_id += 1
        tasks.append(dev_tasks)
    return Trace(horizon, tasks)


class TraceFormatError(ValueError):
    """A trace CSV row is malformed. ``line`` is 1-based, header included."""

    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = path
        self.line = line


class TraceHeaderError(TraceFormatError):
    pass


class TraceArityError(TraceFormatError):
    pass


class TraceValueError(TraceFormatError):
    pass


class TraceOrderError(TraceFormatError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def _render_csv(trace: Trace) -> str:
    rows = [(task.arrival_step, dev, task) for dev, ts in enumerate(trace.tasks) for task in ts]
    rows.sort(key=lambda r: (r[0], r[1]))  # stable: keeps per-device order
    lines = [CSV_HEADER]
    for _, dev, task in rows:
        deadline = "" if task.deadline_steps is None else str(task.deadline_steps)
        lines.append(
            f"{dev},{task.id},{task.arrival_step},{_fmt(task.compute_demand)},"
            f"{_fmt(task.data_size)},{deadline}"
        )
    return "\n".join(lines) + "\n"


def write_trace(trace: Trace, path) -> None:
    Path(path).write_text(_render_csv(trace), encoding="utf-8", newline="\n")


def load_trace(path, horizon: int | None = None, n_devices: int | None = None) -> Trace:
    """Parse a trace CSV.

    The file carries neither the horizon nor devices without tasks; when not
    given they are inferred as ``max(arrival_step) + 1`` and ``max(device_id) + 1``.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"trace file not found: {path}")
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].rstrip("\r") != CSV_HEADER:
        raise TraceHeaderError(path, 1, f"expected header {CSV_HEADER!r}")

    per_dev: dict[int, list[Task]] = {}
    ids: set[int] = set()
    max_step = -1
    for lineno, raw in enumerate(lines[1:], start=2):
        fields = raw.rstrip("\r").split(",")
        if len(fields) != 6:
            raise TraceArityError(path, lineno, f"expected 6 fields, got {len(fields)}")
        try:
            dev, tid, step = int(fields[0]), int(fields[1]), int(fields[2])
            compute, data = float(fields[3]), float(fields[4])
            deadline = int(fields[5]) if fields[5] != "" else None
        except ValueError as exc:
            raise TraceValueError(path, lineno, f"non-numeric field ({exc})") from None
        if dev < 0 or step < 0:
            raise TraceValueError(path, lineno, "device_id and arrival_step must be >= 0")
        if not np.isfinite(compute) or compute <= 0:
            raise TraceValueError(path, lineno, "compute_demand must be > 0")
        if not np.isfinite(data) or data < 0:
            raise TraceValueError(path, lineno, "data_size_kb must be >= 0")
        if deadline is not None and deadline < 0:
            raise TraceValueError(path, lineno, "deadline_steps must be >= 0")
        if tid in ids:
            raise TraceValueError(path, lineno, f"duplicate task_id {tid}")
        if horizon is not None and step >= horizon:
            raise TraceValueError(path, lineno, f"arrival_step {step} >= horizon {horizon}")
        dev_tasks = per_dev.setdefault(dev, [])
        if dev_tasks and step < dev_tasks[-1].arrival_step:
            raise TraceOrderError(path, lineno, f"arrivals for device {dev} not sorted")
        ids.add(tid)
        max_step = max(max_step, step)
        dev_tasks.append(Task(tid, step, compute, data, deadline))

    n = max(per_dev, default=-1) + 1
    if n_devices is not None:
        if n > n_devices:
            raise ValueError(f"{path}: device_id {n - 1} >= n_devices {n_devices}")
        n = n_devices
    if horizon is None:
        horizon = max(max_step + 1, 1)
    return Trace(horizon, [per_dev.get(d, []) for d in range(n)])
