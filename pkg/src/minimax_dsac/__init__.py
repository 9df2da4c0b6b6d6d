"""Minimax distributional soft actor-critic on an intersection-crossing task.

A protagonist vehicle learns to cross an unsignalized intersection against
two adversarial vehicles. The critic learns a Gaussian distribution over
soft returns; the protagonist is risk-averse (penalized by return spread),
the co-trained adversary risk-seeking. A plain DSAC baseline (no adversary
policy, scripted random traffic) shares the rest of the pipeline.
"""

__version__ = "0.1.0"

from .config import TrainConfig
from .env import AdversaryMode, EnvConfig
from .kernels import BACKEND_NAME
from .training import RunArtifacts, evaluate, train

__all__ = [
    "AdversaryMode",
    "BACKEND_NAME",
    "EnvConfig",
    "RunArtifacts",
    "TrainConfig",
    "evaluate",
    "train",
    "__version__",
]
