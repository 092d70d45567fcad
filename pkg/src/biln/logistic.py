"""Regularized linear-logistic learner used both as the noisy-posterior
estimator and as the final (optionally importance-weighted) classifier.

The objective minimized over intercept-augmented features x~ is

    (1/n) sum_i w_i * log(1 + exp(-y_i * theta . x~_i)) + (l2/2) ||theta[1:]||^2

with per-example weights w defaulting to 1 and the intercept excluded from
the penalty. Optimization is full-batch gradient descent from theta = 0 with
Armijo backtracking restarted at step0 every iteration. Stops at sup-norm
gradient <= grad_tol or at max_iters; with the tiny default l2 the gradient
tolerance is usually out of reach within the iteration cap, so the returned
``converged`` flag records which stop fired.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import LabeledSample, add_intercept

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class FitConfig:
    l2: float = 1e-4
    max_iters: int = 5000
    grad_tol: float = 1e-6
    step0: float = 1.0       # step the backtracking search starts from each iteration
    shrink: float = 0.5      # backtracking shrink factor
    armijo: float = 1e-4     # sufficient-decrease constant

    def __post_init__(self):
        if self.l2 <= 0.0:
            raise ValueError("l2 must be positive (l2=0 diverges on separable data)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.grad_tol <= 0.0:
            raise ValueError("grad_tol must be positive")
        if self.step0 <= 0.0 or not 0.0 < self.shrink < 1.0 or not 0.0 < self.armijo < 1.0:
            raise ValueError("invalid line-search parameters")


@dataclass(frozen=True)
class LinearModel:
    """Fitted weights over intercept-augmented features, with fit diagnostics."""

    weights: np.ndarray  # (d+1,), element 0 multiplies the intercept
    l2: float
    converged: bool
    iterations: int
    objective_trace: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        object.__setattr__(
            self, "objective_trace", np.asarray(self.objective_trace, dtype=np.float64)
        )
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("model weights must be finite")

    def to_json(self) -> str:
        return json.dumps(
            {
                "weights": self.weights.tolist(),
                "l2": self.l2,
                "converged": self.converged,
                "iterations": self.iterations,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "LinearModel":
        obj = json.loads(text)
        return cls(np.asarray(obj["weights"]), obj["l2"], obj["converged"],
                   obj["iterations"], np.empty(0))


def objective_and_grad(theta, features_aug, labels, weights, l2):
    """Weighted logistic objective and its gradient (intercept unpenalized)."""
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    return _kernels.logistic_value_grad(
        theta,
        np.ascontiguousarray(features_aug, dtype=np.float64),
        np.ascontiguousarray(labels, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
        float(l2),
    )


def fit(
    sample: LabeledSample,
    weights_per_example: np.ndarray | None = None,
    cfg: FitConfig | None = None,
) -> LinearModel:
    """Fit the logistic model, optionally with non-negative per-example weights."""
    cfg = cfg or FitConfig()
    n = len(sample)
    if n == 0:
        raise ValueError("cannot fit on an empty sample")
    if weights_per_example is None:
        w = np.ones(n)
    else:
        w = np.ascontiguousarray(weights_per_example, dtype=np.float64)
        if w.shape != (n,):
            raise ValueError("weights_per_example must match the sample length")
        if np.any(w < 0.0):
            raise ValueError("weights_per_example must be non-negative")
        if w.sum() <= 0.0:
            raise ValueError("weights_per_example must have a positive sum")
    x = add_intercept(sample.features)
    y = np.ascontiguousarray(sample.labels, dtype=np.float64)
    theta, iters, converged, trace = _kernels.logistic_gd(
        x, y, w, float(cfg.l2), int(cfg.max_iters), float(cfg.grad_tol),
        float(cfg.step0), float(cfg.shrink), float(cfg.armijo),
    )
    return LinearModel(
        weights=theta,
        l2=cfg.l2,
        converged=bool(converged),
        iterations=int(iters),
        objective_trace=trace,
    )


def decision(model: LinearModel, features: np.ndarray):
    """Raw score theta . [1, x]; positive scores mean class +1."""
    feats = np.asarray(features, dtype=np.float64)
    scores = add_intercept(feats) @ model.weights
    return float(scores[0]) if feats.ndim == 1 else scores


def predict_proba(model: LinearModel, features: np.ndarray):
    """sigmoid(score), clamped away from {0, 1} so downstream logs stay finite."""
    scores = decision(model, features)
    probs = np.exp(-np.logaddexp(0.0, -np.asarray(scores)))
    probs = np.clip(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(probs) if np.ndim(scores) == 0 else probs


def classify(model: LinearModel, features: np.ndarray):
    """Sign of the score; an exact zero score resolves to +1."""
    scores = decision(model, features)
    labels = np.where(np.asarray(scores) >= 0.0, 1, -1).astype(np.int64)
    return int(labels) if np.ndim(scores) == 0 else labels
