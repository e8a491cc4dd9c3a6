from .alloc import keep_large_blocks
from .checkpoint import load_arrays, save_arrays
from .losses import huber_loss, mse_loss
from .nn import MlpParams, dense, init_mlp, mlp_forward
from .optim import AdamState, adam_init, adam_step, polyak_update
from .tensor import Tensor, backward, concat

__all__ = [
    "Tensor", "backward", "concat",
    "MlpParams", "dense", "init_mlp", "mlp_forward",
    "mse_loss", "huber_loss",
    "AdamState", "adam_init", "adam_step", "polyak_update",
    "save_arrays", "load_arrays",
    "keep_large_blocks",
]
