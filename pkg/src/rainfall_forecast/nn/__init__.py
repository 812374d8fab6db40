from .lstm import (
    DenseParams,
    LstmCache,
    LstmParams,
    dense_backward,
    dense_forward,
    dropout,
    lstm_backward,
    lstm_forward,
    mae_loss,
)
from .model import (
    LstmRegressor,
    TrainConfig,
    fit_regressor,
    load_checkpoint,
    predict,
    save_checkpoint,
    train,
    write_history,
)
from .optim import OptimizerState, adamw_step, make_optimizer, nadam_step

__all__ = [
    "DenseParams",
    "LstmCache",
    "LstmParams",
    "LstmRegressor",
    "OptimizerState",
    "TrainConfig",
    "adamw_step",
    "dense_backward",
    "dense_forward",
    "dropout",
    "fit_regressor",
    "load_checkpoint",
    "lstm_backward",
    "lstm_forward",
    "mae_loss",
    "make_optimizer",
    "nadam_step",
    "predict",
    "save_checkpoint",
    "train",
    "write_history",
]
