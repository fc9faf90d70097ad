"""Energy-aware task scheduling for IoT devices with a neighbor-conditioned DQN."""

from .baselines import STRATEGIES, make_baseline
from .dqn import AgentHyperparams, QNetwork, train
from .graph import CollabGraph, NeighborConditioner, build_graph
from .sim import Action, EdgeEnv, EnvConfig, RewardWeights, compute_reward
from .workload import LoadTier, Task, Trace, generate_trace, load_trace, write_trace

__all__ = [
    "Action", "AgentHyperparams", "CollabGraph", "EdgeEnv", "EnvConfig", "LoadTier",
    "NeighborConditioner", "QNetwork", "RewardWeights", "STRATEGIES", "Task", "Trace",
    "build_graph", "compute_reward", "generate_trace", "load_trace", "make_baseline",
    "train", "write_trace",
]

__version__ = "0.1.0"
