from .buffer import Batch, ReplayBuffer
from .mlp import Adam, Mlp
from .policy import ConstantPolicy, Normalizer, Policy, normalize_state
from .td3 import Td3, TrainerConfig
from .train import CarFollowingEnv, TrainingResult, evaluate, rolling_normalized, train

__all__ = ["Batch", "ReplayBuffer", "Adam", "Mlp", "ConstantPolicy", "Normalizer", "Policy",
           "normalize_state", "Td3", "TrainerConfig", "CarFollowingEnv", "TrainingResult",
           "evaluate", "rolling_normalized", "train"]
