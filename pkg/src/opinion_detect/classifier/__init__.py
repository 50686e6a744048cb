"""Multinomial logistic regression trained by Newton-CG."""

from opinion_detect.classifier.model import (
    ModelChecksumError,
    ModelFormatError,
    ModelParams,
    ModelVersionError,
    TruncatedModelError,
    load_model,
    predict,
    predict_index,
    predict_many,
    predict_proba,
    predict_proba_many,
    save_model,
    train,
)
from opinion_detect.classifier.newton import Hyperparams, TrainReport, conjugate_gradient
from opinion_detect.classifier.objective import (
    NonFiniteError,
    hessian_vector_product,
    objective_and_gradient,
    softmax,
)

__all__ = [
    "Hyperparams",
    "ModelChecksumError",
    "ModelFormatError",
    "ModelParams",
    "ModelVersionError",
    "NonFiniteError",
    "TrainReport",
    "TruncatedModelError",
    "conjugate_gradient",
    "hessian_vector_product",
    "load_model",
    "objective_and_gradient",
    "predict",
    "predict_index",
    "predict_many",
    "predict_proba",
    "predict_proba_many",
    "save_model",
    "softmax",
    "train",
]
