"""Trainable classifiers, oversampling and evaluation."""

from .metrics import EvalReport, accuracy, confusion_matrix, evaluate, macro_f1, stratified_split
from .model import ClassifierModel, Predictor, forward, gradient_check, init_model, predict, predict_proba
from .smote import EmptyClassError, smote
from .train import TrainConfig, TrainingDivergedError, build_training_data, train

__all__ = [
    "ClassifierModel",
    "EmptyClassError",
    "EvalReport",
    "Predictor",
    "TrainConfig",
    "TrainingDivergedError",
    "accuracy",
    "build_training_data",
    "confusion_matrix",
    "evaluate",
    "forward",
    "gradient_check",
    "init_model",
    "macro_f1",
    "predict",
    "predict_proba",
    "smote",
    "stratified_split",
    "train",
]
