from .ddpg import (
    Adam,
    DdpgAgent,
    Hyperparams,
    Policy,
    load_checkpoint,
    save_checkpoint,
    select_action,
    soft_update,
    train_step,
)
from .mlp import IDENTITY, SOFTMAX, Mlp, mlp_backward, mlp_forward, softmax
from .replay import NotReady, ReplayBuffer, Transition, sample, store
