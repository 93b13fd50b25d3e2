from .gae import gae_advantages
from .nets import Adam, MlpSpec, init_params, mlp_forward_backward
from .policy import GaussianPolicy, PolicyConfig, ValueNet
from .ppo import PpoConfig, RolloutBuffer, flat_policy_params, ppo_update

__all__ = [
    "gae_advantages",
    "Adam",
    "MlpSpec",
    "init_params",
    "mlp_forward_backward",
    "GaussianPolicy",
    "PolicyConfig",
    "ValueNet",
    "PpoConfig",
    "RolloutBuffer",
    "flat_policy_params",
    "ppo_update",
]
