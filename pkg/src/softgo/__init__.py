"""Self-play entropy-regularized Q-learning for small-board Go."""

from . import engine, evaluation, network, oracle, pipeline, replay, softq, storage, symmetry

__all__ = [
    "engine",
    "evaluation",
    "network",
    "oracle",
    "pipeline",
    "replay",
    "softq",
    "storage",
    "symmetry",
]

__version__ = "0.1.0"
