from .checkpoint import load_params, save_params
from .gradcheck import check_array_gradient, max_relative_error, numerical_gradient
from .layers import LSTM, Conv2D, Dense, Dropout, MaxPool2D, Softmax, relu, sigmoid
from .losses import mse_loss
from .optim import sgd_step

__all__ = [
    "Conv2D",
    "Dense",
    "Dropout",
    "LSTM",
    "MaxPool2D",
    "Softmax",
    "check_array_gradient",
    "load_params",
    "max_relative_error",
    "mse_loss",
    "numerical_gradient",
    "relu",
    "save_params",
    "sgd_step",
    "sigmoid",
]
