"""Fuzzy-logic-injected conditional GANs for tabular regression."""

from .tensor import DimensionError, DomainError, GradientTape, Tensor
from .fuzzy import FuzzyPartitionSpec, fuzzy_forward
from .optim import Adam
from .networks import (
    DnnSpec,
    GanSpec,
    TrainingDivergenceError,
    build_discriminator,
    build_dnn,
    build_generator,
    gan_losses,
    gan_spec_for,
    predict,
    train_cgan,
    train_dnn,
)
from .datasets import (
    CATALOG,
    Dataset,
    NormalizationParams,
    denormalize_target,
    load_dataset,
    minmax_fit_apply,
    train_test_split,
)
from .metrics import mae, mse
from .harness import ExperimentConfig, ExperimentResult, emit_results, run_experiment

__version__ = "0.1.0"
