"""From-scratch deep Q-learning in float64 numpy.

The Q-network is a plain MLP (leaky ReLU hidden layers, linear head of 3
outputs) trained with SGD on the mean squared TD error against a frozen
target copy. The small negative slope keeps hidden units from dying when
large negative returns push pre-activations below zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .graph import CollabGraph, NeighborConditioner
from .sim import Action, N_ACTIONS

CHECKPOINT_FORMAT = 1
LEAK = 0.01  # hidden-layer slope for negative inputs


@dataclass
class QNetwork:
    """Layer ``k`` maps ``x -> x @ weights[k].T + biases[k]``; weights are (out, in)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @classmethod
    def init(cls, sizes, rng: np.random.Generator) -> "QNetwork":
        """Glorot-uniform weights, zero biases."""
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        ws, bs = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            lim = math.sqrt(6.0 / (fan_in + fan_out))
            ws.append(rng.uniform(-lim, lim, size=(fan_out, fan_in)))
            bs.append(np.zeros(fan_out))
        return cls(ws, bs)

    @classmethod
    def zeros(cls, sizes) -> "QNetwork":
        return cls(
            [np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])],
            [np.zeros(o) for o in sizes[1:]],
        )

    def copy(self) -> "QNetwork":
        return QNetwork([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def same_shape(self, other: "QNetwork") -> bool:
        return [p.shape for p in self.params()] == [p.shape for p in other.params()]


def _check_input(net: QNetwork, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.in_dim:
        raise ValueError(f"state arity {x.shape[-1]} != network input {net.in_dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite network input")
    return x


def _forward_cached(net: QNetwork, x: np.ndarray):
    acts = [x]
    pre = []
    h = x
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T
        z += b
        pre.append(z)
        h = z if k == last else np.maximum(z, LEAK * z)  # leaky ReLU, since 0 < LEAK < 1
        acts.append(h)
    return h, acts, pre


def forward(net: QNetwork, state) -> np.ndarray:
    """Q-values for one state (shape (3,)) or a batch (shape (B, 3))."""
    x = _check_input(net, state)
    q, _, _ = _forward_cached(net, x)
    return q


def bellman_target(r: float, discount: float, next_q, terminal: bool) -> float:
    if terminal:
        return float(r)
    return float(r + discount * np.max(next_q))


class Transition(NamedTuple):
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


class Batch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    @classmethod
    def of(cls, transitions) -> "Batch":
        ts = list(transitions)
        return cls(
            np.array([t.state for t in ts], dtype=float),
            np.array([int(t.action) for t in ts]),
            np.array([t.reward for t in ts], dtype=float),
            np.array([t.next_state for t in ts], dtype=float),
            np.array([bool(t.terminal) for t in ts]),
        )

    def __len__(self):
        return len(self.actions)


def td_targets(target_net: QNetwork, batch: Batch, discount: float) -> np.ndarray:
    """Bellman targets from the frozen network. No gradient is ever taken through these."""
    next_q = forward(target_net, batch.next_states)
    return np.where(batch.terminals, batch.rewards, batch.rewards + discount * next_q.max(axis=1))


def td_loss_and_gradient(net: QNetwork, target_net: QNetwork, batch: Batch, discount: float):
    """Mean squared TD error and its gradient with respect to ``net`` only."""
    n = len(batch)
    if n == 0:
        raise ValueError("empty batch")
    y = td_targets(target_net, batch, discount)
    x = _check_input(net, batch.states)
    q, acts, pre = _forward_cached(net, x)
    idx = np.arange(n)
    err = q[idx, batch.actions] - y
    loss = float(np.mean(err**2))

    delta = np.zeros_like(q)
    delta[idx, batch.actions] = 2.0 * err / n
    grad_w = [None] * len(net.weights)
    grad_b = [None] * len(net.weights)
    for k in range(len(net.weights) - 1, -1, -1):
        grad_w[k] = delta.T @ acts[k]
        grad_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = delta @ net.weights[k]
            delta[pre[k - 1] <= 0] *= LEAK
    return loss, QNetwork(grad_w, grad_b)


def sgd_update(net: QNetwork, grad: QNetwork, learning_rate: float) -> QNetwork:
    if not net.same_shape(grad):
        raise ValueError("gradient shape does not match network")
    return QNetwork(
        [w - learning_rate * g for w, g in zip(net.weights, grad.weights)],
        [b - learning_rate * g for b, g in zip(net.biases, grad.biases)],
    )


def clip_gradient(grad: QNetwork, max_norm: float) -> QNetwork:
    """Rescale ``grad`` so its global L2 norm is at most ``max_norm``."""
    norm = math.sqrt(sum(float(np.dot(p.ravel(), p.ravel())) for p in grad.params()))
    if norm <= max_norm:
        return grad
    k = max_norm / norm
    return QNetwork([w * k for w in grad.weights], [b * k for b in grad.biases])


def sync_target(net: QNetwork, target_net: QNetwork | None = None) -> QNetwork:
    """Return an exact, independent copy of ``net`` to serve as the target."""
    if target_net is not None and not net.same_shape(target_net):
        raise ValueError("target network shape differs from main network")
    return net.copy()


def select_action(q, epsilon: float, rng: np.random.Generator) -> Action:
    """Epsilon-greedy; greedy ties go to the lowest action index."""
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise ValueError("non-finite q-values")
    if epsilon > 0 and rng.random() < epsilon:
        return Action(int(rng.integers(N_ACTIONS)))
    return Action(int(np.argmax(q)))


def select_actions(q: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Row-wise epsilon-greedy over a (n, 3) q matrix, same rule as ``select_action``."""
    greedy = np.argmax(q, axis=1)
    if epsilon <= 0:
        return greedy
    explore = rng.random(len(q)) < epsilon
    random_a = rng.integers(N_ACTIONS, size=len(q))
    return np.where(explore, random_a, greedy)


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions, sampled uniformly with replacement."""

    def __init__(self, capacity: int, state_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.terminals = np.zeros(capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, t: Transition) -> None:
        if not np.isfinite(t.reward):
            raise ValueError("non-finite reward")
        k = self.cursor
        self.states[k] = t.state
        self.actions[k] = int(t.action)
        self.rewards[k] = t.reward
        self.next_states[k] = t.next_state
        self.terminals[k] = t.terminal
        self.cursor = (k + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def push_many(self, states, actions, rewards, next_states, terminal: bool) -> None:
        rewards = np.asarray(rewards, dtype=float)
        if not np.all(np.isfinite(rewards)):
            raise ValueError("non-finite reward")
        n = len(rewards)
        if n > self.capacity:
            raise ValueError("more transitions than capacity in one push")
        idx = (self.cursor + np.arange(n)) % self.capacity
        self.states[idx] = states
        self.actions[idx] = actions
        self.rewards[idx] = rewards
        self.next_states[idx] = next_states
        self.terminals[idx] = terminal
        self.cursor = int((self.cursor + n) % self.capacity)
        self.size = min(self.size + n, self.capacity)

    def contents(self) -> list[Transition]:
        """Oldest first."""
        start = self.cursor if self.size == self.capacity else 0
        order = [(start + j) % self.capacity for j in range(self.size)]
        return [
            Transition(self.states[k].copy(), int(self.actions[k]), float(self.rewards[k]),
                       self.next_states[k].copy(), bool(self.terminals[k]))
            for k in order
        ]

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.size < batch_size:
            raise ValueError(f"buffer holds {self.size} transitions, need {batch_size}")
        return rng.integers(self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        idx = self.sample_indices(batch_size, rng)
        return Batch(
            self.states[idx], self.actions[idx], self.rewards[idx],
            self.next_states[idx], self.terminals[idx],
        )


replay_push = ReplayBuffer.push
replay_sample = ReplayBuffer.sample


@dataclass
class AgentHyperparams:
    discount: float = 0.9
    learning_rate: float = 1e-3
    epsilon_start: float = 1.0
    epsilon_min: float = 0.05
    epsilon_decay: float = 0.995  # multiplicative, per episode
    batch_size: int = 32
    target_sync_interval: int = 250  # env steps
    replay_capacity: int = 10_000
    hidden: tuple[int, ...] = (64, 64)
    reward_scale: float = 0.1  # rewards are multiplied by this before storage
    max_grad_norm: float = 10.0  # global gradient norm cap per update; inf disables

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        problems = []
        if not 0.0 <= self.discount < 1.0:
            problems.append("discount must be in [0, 1)")
        if not self.learning_rate > 0:
            problems.append("learning_rate must be > 0")
        if not 0.0 <= self.epsilon_min <= self.epsilon_start <= 1.0:
            problems.append("need 0 <= epsilon_min <= epsilon_start <= 1")
        if not 0.0 < self.epsilon_decay <= 1.0:
            problems.append("epsilon_decay must be in (0, 1]")
        for name in ("batch_size", "target_sync_interval", "replay_capacity"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if not self.reward_scale > 0:
            problems.append("reward_scale must be > 0")
        if not self.max_grad_norm > 0:
            problems.append("max_grad_norm must be > 0")
        if any(h < 1 for h in self.hidden):
            problems.append("hidden widths must be >= 1")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass
class EpisodeLog:
    episode: int
    loss: float  # mean TD loss over this episode's updates; nan before warm-up
    reward: float  # per device, summed over the episode
    energy: float
    delay: float
    utilization: float
    epsilon: float
    steps: int


@dataclass
class TrainResult:
    net: QNetwork
    log: list[EpisodeLog] = field(default_factory=list)
    replay: ReplayBuffer | None = None


def train(
    env_factory: Callable[[int], object],
    graph: CollabGraph,
    hp: AgentHyperparams,
    episodes: int,
    seed,
    *,
    aggregation: str = "mean",
    agg_stride: int = 1,
) -> TrainResult:
    """Train one shared Q-network for all devices.

    ``env_factory(episode)`` returns a fresh environment exposing ``n_devices``,
    ``observe_all()`` and ``step(actions)``; it may carry ``stats``
    (``EpisodeStats``) for the log.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    rng = np.random.default_rng(seed)
    cond = NeighborConditioner(graph, aggregation, agg_stride)
    net = None
    target = None
    buf = None
    eps = hp.epsilon_start
    total_steps = 0
    log: list[EpisodeLog] = []

    for ep in range(episodes):
        env = env_factory(ep)
        cond.reset()
        feats = env.observe_all()
        joint = cond(feats)
        if net is None:
            in_dim = joint.shape[1]
            net = QNetwork.init([in_dim, *hp.hidden, N_ACTIONS], rng)
            target = sync_target(net)
            buf = ReplayBuffer(hp.replay_capacity, in_dim)
        losses = []
        ep_reward = 0.0
        steps = 0
        while True:
            q, _, _ = _forward_cached(net, joint)
            actions = select_actions(q, eps, rng)
            out = env.step(actions)
            next_joint = cond(env.observe_all())
            buf.push_many(joint, actions, hp.reward_scale * out.rewards, next_joint, out.terminal)
            ep_reward += float(np.mean(out.rewards))
            total_steps += 1
            steps += 1
            if len(buf) >= hp.batch_size:
                batch = buf.sample(hp.batch_size, rng)
                loss, grad = td_loss_and_gradient(net, target, batch, hp.discount)
                net = sgd_update(net, clip_gradient(grad, hp.max_grad_norm), hp.learning_rate)
                losses.append(loss)
            if total_steps % hp.target_sync_interval == 0:
                target = sync_target(net, target)
            joint = next_joint
            if out.terminal:
                break
        stats = getattr(env, "stats", None)
        log.append(
            EpisodeLog(
                episode=ep,
                loss=float(np.mean(losses)) if losses else float("nan"),
                reward=ep_reward,
                energy=stats.avg_energy_per_device if stats else float("nan"),
                delay=stats.avg_delay_ms if stats else float("nan"),
                utilization=stats.utilization_pct if stats else float("nan"),
                epsilon=eps,
                steps=steps,
            )
        )
        eps = max(hp.epsilon_min, eps * hp.epsilon_decay)
    return TrainResult(net, log, buf)


class GreedyQPolicy:
    """Evaluation-time policy: argmax of a frozen network on a joint state."""

    name = "dqn"

    def __init__(self, net: QNetwork):
        self.net = net

    def decide(self, state) -> Action:
        return Action(int(np.argmax(forward(self.net, state))))


def save_checkpoint(net: QNetwork, path) -> None:
    """JSON: format version, layer sizes, then row-major weights and biases per layer."""
    doc = {
        "format_version": CHECKPOINT_FORMAT,
        "sizes": net.sizes,
        "layers": [
            {"weights": w.ravel(order="C").tolist(), "biases": b.tolist()}
            for w, b in zip(net.weights, net.biases)
        ],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_checkpoint(path) -> QNetwork:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {doc.get('format_version')!r}")
    sizes = doc["sizes"]
    ws, bs = [], []
    for (fan_in, fan_out), layer in zip(zip(sizes[:-1], sizes[1:]), doc["layers"]):
        ws.append(np.array(layer["weights"], dtype=np.float64).reshape(fan_out, fan_in))
        bs.append(np.array(layer["biases"], dtype=np.float64))
    return QNetwork(ws, bs)
