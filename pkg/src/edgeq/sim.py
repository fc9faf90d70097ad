"""Discrete-time multi-device edge environment.

Each step, every device picks one action for the task at the head of its
queue. Local compute occupies the device CPU for ceil(time / step) steps, and
a Local choice while the CPU is still busy just waits; the radio is separate,
so a busy device can still offload. Offloads share the home edge node's uplink
as random access: a send survives with probability exp(-other senders'
airtime / uplink budget), so a lone sender always gets through and a crowded
channel collapses. A failed send burns part of its transmit energy and the
task stays queued. Delivered
tasks join the node's FIFO compute queue, drained at ``edge_capacity``
compute units per step.

Feature vector order (fixed): load, battery, queue/Qmax, network, occupancy.
``load`` is local CPU load: committed compute time plus the head task's
local compute time, over a two-step window.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .workload import Task, Trace


class Action(IntEnum):
    LOCAL = 0
    OFFLOAD = 1
    DELAY = 2


N_ACTIONS = len(Action)
FEATURE_NAMES = ("load", "battery", "queue", "network", "occupancy")


@dataclass(frozen=True)
class RewardWeights:
    alpha: float = 1.0  # per mWh
    beta: float = 0.06  # per ms
    gamma_u: float = 0.5  # per unit of edge utilization

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma_u"):
            if getattr(self, name) < 0:
                raise ValueError(f"reward weight {name} must be >= 0")


def compute_reward(energy: float, delay: float, utilization: float, w: RewardWeights) -> float:
    """Energy-efficiency reward: ``-alpha*E - beta*D + gamma_u*U``."""
    if not energy >= 0:
        raise ValueError(f"energy must be >= 0, got {energy}")
    if not delay >= 0:
        raise ValueError(f"delay must be >= 0, got {delay}")
    if not 0.0 <= utilization <= 1.0:
        raise ValueError(f"utilization must be in [0, 1], got {utilization}")
    return -w.alpha * energy - w.beta * delay + w.gamma_u * utilization


def compute_rewards(energy: np.ndarray, delay: np.ndarray, utilization: float, w: RewardWeights) -> np.ndarray:
    """Vectorized ``compute_reward`` over devices sharing one utilization value."""
    if (energy < 0).any() or (delay < 0).any() or not 0.0 <= utilization <= 1.0:
        raise ValueError("reward inputs out of range")
    return -w.alpha * energy - w.beta * delay + w.gamma_u * utilization


@dataclass
class DeviceState:
    load_fraction: float
    battery_fraction: float
    queue_length: int
    network_quality: float
    edge_occupancy_seen: float
    queue_cap: int = 64

    def __post_init__(self):
        self.load_fraction = _clamp01(self.load_fraction)
        self.battery_fraction = _clamp01(self.battery_fraction)
        self.network_quality = _clamp01(self.network_quality)
        self.edge_occupancy_seen = _clamp01(self.edge_occupancy_seen)
        self.queue_length = max(0, int(self.queue_length))

    def vector(self) -> np.ndarray:
        return np.array(
            [
                self.load_fraction,
                self.battery_fraction,
                min(self.queue_length / self.queue_cap, 1.0),
                self.network_quality,
                self.edge_occupancy_seen,
            ]
        )


def _clamp01(x: float) -> float:
    return min(max(float(x), 0.0), 1.0)


@dataclass
class EnvConfig:
    """Environment constants. Energies in mWh, latencies in ms."""

    n_devices: int = 8
    n_edge_nodes: int = 2
    horizon: int = 200
    queue_cap: int = 64
    battery_capacity_mwh: float = 5000.0
    e_idle: float = 0.02
    e_cpu: float = 1.1  # per compute unit, local
    e_tx: float = 0.004  # per KB at perfect network; scaled by (2 - quality)
    e_hold: float = 0.05  # per queued task per step (device cannot sleep)
    reject_waste: float = 0.3  # fraction of tx energy burnt by a failed send
    local_speed: float = 0.035  # compute units per ms
    edge_speed: float = 0.4
    bandwidth_kb_per_ms: float = 10.0
    edge_capacity: float = 8.0  # compute units per step, per node
    uplink_kb_per_step: float = 350.0  # per node; a send occupies data * (2 - quality)
    step_ms: float = 100.0
    weights: RewardWeights = field(default_factory=RewardWeights)

    def __post_init__(self):
        if self.n_devices < 1 or self.n_edge_nodes < 1 or self.horizon < 1:
            raise ValueError("n_devices, n_edge_nodes and horizon must be >= 1")
        positive = ("battery_capacity_mwh", "local_speed", "edge_speed", "bandwidth_kb_per_ms",
                    "edge_capacity", "uplink_kb_per_step", "step_ms")
        bad = [k for k in positive if not getattr(self, k) > 0]
        bad += [k for k in ("e_idle", "e_cpu", "e_tx", "e_hold") if getattr(self, k) < 0]
        if not 0.0 <= self.reject_waste <= 1.0:
            bad.append("reject_waste")
        if self.queue_cap < 1:
            bad.append("queue_cap")
        if bad:
            raise ValueError(f"invalid environment constants: {', '.join(bad)}")


def access_probability(contending_airtime: float, budget: float) -> float:
    """Chance an uplink send survives ``contending_airtime`` from other senders."""
    return math.exp(-contending_airtime / budget)


def home_node(device: int, n_devices: int, n_nodes: int) -> int:
    """Contiguous blocks of devices share an edge node."""
    return device * n_nodes // n_devices


@dataclass
class _Pending:
    task: Task
    deferred_ms: float = 0.0


@dataclass
class EdgeNodeState:
    capacity: float
    busy_units: float = 0.0
    queue: deque = field(default_factory=deque)  # [task, remaining_units, total_delay_ms, finish_step]
    backlog_units: float = 0.0

    @property
    def utilization(self) -> float:
        return self.busy_units / self.capacity


@dataclass
class StepOutcome:
    energy_mwh: np.ndarray
    delay_ms: np.ndarray
    rewards: np.ndarray
    edge_utilization: float
    node_utilization: np.ndarray
    terminal: bool


@dataclass
class EpisodeStats:
    energy_mwh: np.ndarray  # cumulative per device
    completed: int = 0
    completed_delay_ms: float = 0.0
    util_sum: float = 0.0
    steps: int = 0
    arrived: int = 0

    @property
    def avg_energy_per_device(self) -> float:
        return float(self.energy_mwh.mean())

    @property
    def avg_delay_ms(self) -> float:
        return float(self.completed_delay_ms / self.completed) if self.completed else 0.0

    @property
    def utilization_pct(self) -> float:
        return float(100.0 * self.util_sum / self.steps) if self.steps else 0.0


class EdgeEnv:
    """Multi-device environment replaying one task trace.

    Network quality is drawn per device and step from ``seed`` at construction,
    so two environments built from the same (config, trace, seed) are
    indistinguishable for any action sequence.
    """

    def __init__(self, config: EnvConfig, trace: Trace, seed: int | np.random.SeedSequence = 0):
        if trace.n_devices != config.n_devices:
            raise ValueError(
                f"trace has {trace.n_devices} devices, config expects {config.n_devices}"
            )
        self.config = config
        self.trace = trace
        rng = np.random.default_rng(seed)
        self._quality = rng.uniform(0.0, 1.0, size=(config.horizon + 1, config.n_devices))
        self._access = rng.uniform(0.0, 1.0, size=(config.horizon + 1, config.n_devices))
        self._home = np.array(
            [home_node(i, config.n_devices, config.n_edge_nodes) for i in range(config.n_devices)]
        )
        self.reset()

    @property
    def n_devices(self) -> int:
        return self.config.n_devices

    @property
    def feature_dim(self) -> int:
        return len(FEATURE_NAMES)

    def reset(self) -> None:
        cfg = self.config
        self.t = 0
        self.done = False
        self.battery = np.full(cfg.n_devices, cfg.battery_capacity_mwh)
        self.cpu_busy_ms = np.zeros(cfg.n_devices)  # committed local compute left at the start of this step
        self.queues: list[deque[_Pending]] = [deque() for _ in range(cfg.n_devices)]
        self.nodes = [EdgeNodeState(cfg.edge_capacity) for _ in range(cfg.n_edge_nodes)]
        self._last_util = np.zeros(cfg.n_edge_nodes)
        self._cursor = [0] * cfg.n_devices
        self.stats = EpisodeStats(energy_mwh=np.zeros(cfg.n_devices))
        self._enqueue_arrivals()

    def _enqueue_arrivals(self) -> None:
        if self.t >= self.config.horizon:
            return
        for i, tasks in enumerate(self.trace.tasks):
            k = self._cursor[i]
            while k < len(tasks) and tasks[k].arrival_step <= self.t:
                self.queues[i].append(_Pending(tasks[k]))
                self.stats.arrived += 1
                k += 1
            self._cursor[i] = k

    def observe(self, i: int) -> DeviceState:
        if not 0 <= i < self.n_devices:
            raise IndexError(f"device index {i} out of range [0, {self.n_devices})")
        cfg = self.config
        q = self.queues[i]
        load = self._cpu_load(i)
        return DeviceState(
            load_fraction=load,
            battery_fraction=self.battery[i] / cfg.battery_capacity_mwh,
            queue_length=len(q),
            network_quality=self._quality[min(self.t, cfg.horizon), i],
            edge_occupancy_seen=self._last_util[self._home[i]],
            queue_cap=cfg.queue_cap,
        )

    def _cpu_load(self, i: int) -> float:
        q = self.queues[i]
        head = q[0].task.compute_demand / self.config.local_speed if q else 0.0
        return min((self.cpu_busy_ms[i] + head) / (2.0 * self.config.step_ms), 1.0)

    def observe_all(self) -> np.ndarray:
        """Feature matrix, one row per device; equals stacking ``observe(i).vector()``."""
        cfg = self.config
        out = np.empty((cfg.n_devices, len(FEATURE_NAMES)))
        for i, q in enumerate(self.queues):
            out[i, 0] = self._cpu_load(i)
            out[i, 2] = len(q) / cfg.queue_cap
        out[:, 1] = self.battery / cfg.battery_capacity_mwh
        out[:, 3] = self._quality[min(self.t, cfg.horizon)]
        out[:, 4] = self._last_util[self._home]
        return np.clip(out, 0.0, 1.0, out=out)

    def step(self, actions) -> StepOutcome:
        cfg = self.config
        if self.done:
            raise RuntimeError("step() called on a terminal environment")
        actions = [int(a) for a in actions]
        if len(actions) != cfg.n_devices:
            raise ValueError(f"expected {cfg.n_devices} actions, got {len(actions)}")
        bad = [a for a in actions if not 0 <= a < N_ACTIONS]
        if bad:
            raise ValueError(f"invalid action(s) {bad}; expected 0 (local), 1 (offload) or 2 (delay)")
        t = self.t
        energy = np.full(cfg.n_devices, cfg.e_idle)
        delay = np.zeros(cfg.n_devices)
        completed_now: list[float] = []
        offloaders: list[list[int]] = [[] for _ in range(cfg.n_edge_nodes)]

        for i, a in enumerate(actions):
            q = self.queues[i]
            if not q:
                continue
            head = q[0]
            if a == Action.LOCAL and self.cpu_busy_ms[i] <= 0.0:
                q.popleft()
                c = head.task.compute_demand
                energy[i] += cfg.e_cpu * c
                delay[i] = c / cfg.local_speed
                completed_now.append(head.deferred_ms + delay[i])
                self.cpu_busy_ms[i] = delay[i]
            elif a == Action.OFFLOAD:
                offloaders[self._home[i]].append(i)

        # Uplink random access: a sender gets through with probability
        # exp(-airtime of the other senders / uplink budget); a lone sender always does.
        for n, devs in enumerate(offloaders):
            node = self.nodes[n]
            airtime = {
                i: self.queues[i][0].task.data_size * (2.0 - self._quality[t, i]) for i in devs
            }
            total = sum(airtime.values())
            for i in devs:
                head = self.queues[i][0]
                d = head.task.data_size
                quality = self._quality[t, i]
                tx_energy = cfg.e_tx * d * (2.0 - quality)
                if self._access[t, i] < access_probability(total - airtime[i], cfg.uplink_kb_per_step):
                    self.queues[i].popleft()
                    c = head.task.compute_demand
                    ahead = node.backlog_units
                    finish = t + max(math.ceil((ahead + c) / node.capacity - 1e-12), 1) - 1
                    energy[i] += tx_energy
                    delay[i] = (
                        d / cfg.bandwidth_kb_per_ms * (2.0 - quality)
                        + (finish - t) * cfg.step_ms
                        + c / cfg.edge_speed
                    )
                    node.queue.append([head.task, c, head.deferred_ms + delay[i], finish])
                    node.backlog_units += c
                else:
                    energy[i] += cfg.reject_waste * tx_energy

        # Every task still queued on a device waits out the rest of the step.
        for i, q in enumerate(self.queues):
            if q:
                energy[i] += cfg.e_hold * len(q)
                delay[i] += cfg.step_ms * len(q)
                for p in q:
                    p.deferred_ms += cfg.step_ms

        # Edge compute: drain FIFO up to capacity.
        node_util = np.zeros(cfg.n_edge_nodes)
        for n, node in enumerate(self.nodes):
            room = node.capacity
            while node.queue and room > 1e-12:
                entry = node.queue[0]
                used = min(room, entry[1])
                entry[1] -= used
                room -= used
                if entry[1] <= 1e-12:
                    node.queue.popleft()
                    completed_now.append(entry[2])
            node.busy_units = node.capacity - room
            node.backlog_units = sum(e[1] for e in node.queue)
            node_util[n] = min(node.busy_units / node.capacity, 1.0)
        util = float(node_util.mean())

        self.cpu_busy_ms = np.maximum(self.cpu_busy_ms - cfg.step_ms, 0.0)
        rewards = compute_rewards(energy, delay, util, cfg.weights)
        self.battery = np.maximum(self.battery - energy, 0.0)
        self._last_util = node_util

        st = self.stats
        st.energy_mwh += energy
        st.completed += len(completed_now)
        st.completed_delay_ms += sum(completed_now)
        st.util_sum += util
        st.steps += 1

        self.t += 1
        self.done = self.t >= cfg.horizon or bool((self.battery <= 0).any())
        self._enqueue_arrivals()
        return StepOutcome(energy, delay, rewards, util, node_util, self.done)
