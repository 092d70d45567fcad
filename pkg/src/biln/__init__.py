"""Learning binary classifiers under bounded instance- and label-dependent
label noise: distilled-example collection, random active labeling,
kernel-mean-matching reweighting, and a seeded benchmark harness."""

from ._kernels import USE_NUMBA
from .data import LabeledSample, Scaler, SplitConfig, add_intercept, load_csv, split, standardize, write_csv
from .distill import (
    DistillOutcome,
    LabelOracle,
    active_label,
    collect_knn,
    collect_with_bounds,
    collect_with_pointwise_bounds,
    knn_bounds,
    with_active,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    TrialReport,
    k_sweep,
    run_experiment,
    run_method,
    summary_csv,
    sweep_csv,
)
from .kmm import ImportanceWeights, KernelSpec, KmmProblem, build_problem, default_eps, embedding_residual, solve
from .logistic import FitConfig, LinearModel, classify, fit, predict_proba
from .synthetic import (
    GaussianPairSpec,
    InfeasibleNoiseError,
    NoiseModel,
    bayes_labels,
    clean_posterior,
    corrupt,
    noisy_posterior,
    sample_clean,
    sample_noise_model,
)
from .weighted import accuracy, train_weighted, zero_one_risk

__version__ = "0.1.0"
