"""Final training step on distilled examples with importance weights, and
0-1 risk evaluation."""

from __future__ import annotations

import numpy as np

from .data import LabeledSample
from .kmm import ImportanceWeights
from .logistic import FitConfig, LinearModel, classify, fit


def train_weighted(
    distilled: LabeledSample,
    beta: ImportanceWeights | np.ndarray,
    cfg: FitConfig | None = None,
) -> LinearModel:
    """Fit on the distilled sample with beta as per-example weights.

    Weights are rescaled to mean 1 before fitting so the effective strength
    of the l2 penalty does not depend on the scale the QP solution happens
    to land on.
    """
    weights = beta.beta if isinstance(beta, ImportanceWeights) else np.asarray(beta, dtype=np.float64)
    if weights.shape != (len(distilled),):
        raise ValueError("beta must have one weight per distilled example")
    total = float(weights.sum())
    if total <= 0.0:
        raise ValueError("importance weights must have a positive sum")
    normalized = weights * (len(distilled) / total)
    return fit(distilled, weights_per_example=normalized, cfg=cfg)


def zero_one_risk(model: LinearModel, test: LabeledSample) -> float:
    """Fraction of test examples the model labels incorrectly."""
    if len(test) == 0:
        raise ValueError("cannot evaluate risk on an empty sample")
    predictions = classify(model, test.features)
    return float(np.mean(predictions != test.labels))


def accuracy(model: LinearModel, test: LabeledSample) -> float:
    return 1.0 - zero_one_risk(model, test)
