"""Non-learning scheduling strategies.

Every policy exposes ``decide(state) -> Action``; one instance drives one
device for one run.
"""

from __future__ import annotations

import numpy as np

from .sim import Action, N_ACTIONS

STRATEGIES = ("local", "edge", "random", "round_robin", "dqn")


class LocalOnly:
    name = "local"

    def decide(self, state=None) -> Action:
        return Action.LOCAL


class EdgeOnly:
    name = "edge"

    def decide(self, state=None) -> Action:
        return Action.OFFLOAD


class RandomPolicy:
    """Uniform over all three actions, Delay included."""

    name = "random"

    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)

    def decide(self, state=None) -> Action:
        return Action(int(self.rng.integers(N_ACTIONS)))


class RoundRobin:
    """Cycles Local -> Offload -> Delay, advancing on every call."""

    name = "round_robin"
    CYCLE = (Action.LOCAL, Action.OFFLOAD, Action.DELAY)

    def __init__(self):
        self.counter = 0

    def decide(self, state=None) -> Action:
        a = self.CYCLE[self.counter % len(self.CYCLE)]
        self.counter += 1
        return a


def make_baseline(name: str, seed=None):
    if name == "local":
        return LocalOnly()
    if name == "edge":
        return EdgeOnly()
    if name == "random":
        return RandomPolicy(seed)
    if name == "round_robin":
        return RoundRobin()
    raise ValueError(f"unknown baseline {name!r}")
