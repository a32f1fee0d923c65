"""From-scratch numpy neural-network engine: layers, sequential models,
softmax cross-entropy training with early stopping, gradient checking,
FLOP accounting, and checkpoint I/O.
"""

from .layers import (
    Conv1D,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    MaxPool1D,
    MaxPool2D,
    ReLU,
    kaiming_uniform,
    layer_from_spec,
)
from .model import (
    ARCHITECTURES,
    Model,
    build_architecture,
    cross_entropy,
    dense18_spec,
    grad_check,
    load_model,
    mel_cnn2d_spec,
    model_from_spec,
    raw_cnn1d_spec,
    save_model,
    softmax,
)
from .train import (
    Adam,
    ArraySource,
    BatchSource,
    EarlyStopping,
    SGD,
    TrainConfig,
    evaluate_loss,
    load_history,
    make_optimizer,
    save_history,
    train,
)

__all__ = [
    "ARCHITECTURES", "Adam", "ArraySource", "BatchSource", "Conv1D", "Conv2D",
    "Dense", "Dropout", "EarlyStopping", "Flatten", "Layer", "MaxPool1D",
    "MaxPool2D", "Model", "ReLU", "SGD", "TrainConfig", "build_architecture",
    "cross_entropy", "dense18_spec", "evaluate_loss", "grad_check",
    "kaiming_uniform", "layer_from_spec", "load_history", "load_model",
    "make_optimizer", "mel_cnn2d_spec", "model_from_spec", "raw_cnn1d_spec",
    "save_history", "save_model", "softmax", "train",
]
