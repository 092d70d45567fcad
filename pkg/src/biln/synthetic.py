"""Synthetic 2-D Gaussian-pair data and the random bounded noise process.

The clean distribution draws the label first (Bernoulli prior mapped to
{-1, +1}) and then the point from an isotropic unit-covariance Gaussian
centered at ``label * u``. Noise flips each label independently with an
instance-dependent rate

    rate_pos(x) = rho_pos_max * sigmoid(w_pos . [1, x])
    rate_neg(x) = rho_neg_max * sigmoid(w_neg . [1, x])

for true labels +1 / -1 respectively, where the weight vectors are drawn
i.i.d. standard normal. Both rates are bounded below their caps by
construction, and the sum condition rate_pos + rate_neg < 1 (which makes the
noise identifiable) is re-checked on a probe set whenever the caps alone do
not guarantee it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import LabeledSample, add_intercept


class InfeasibleNoiseError(RuntimeError):
    """Raised when rejection sampling cannot find a valid noise model."""


def _sigmoid(z):
    # exp(-log(1+exp(-z))) is stable for both signs of z
    return np.exp(-np.logaddexp(0.0, -z))


@dataclass(frozen=True)
class GaussianPairSpec:
    """Two unit-covariance 2-D Gaussians at +/- u with a positive-class prior."""

    u: tuple[float, float] = (-2.0, 2.0)
    prior_pos: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.prior_pos < 1.0:
            raise ValueError("prior_pos must lie strictly between 0 and 1")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("u must be finite")

    @property
    def u_array(self) -> np.ndarray:
        return np.asarray(self.u, dtype=np.float64)


@dataclass(frozen=True)
class NoiseModel:
    """Instance- and label-dependent flip rates with known upper bounds."""

    rho_pos_max: float
    rho_neg_max: float
    w_pos: np.ndarray  # (d+1,), applied to intercept-augmented features
    w_neg: np.ndarray

    def __post_init__(self):
        if not (0.0 <= self.rho_pos_max < 1.0 and 0.0 <= self.rho_neg_max < 1.0):
            raise ValueError("noise rate bounds must lie in [0, 1)")
        object.__setattr__(self, "w_pos", np.asarray(self.w_pos, dtype=np.float64))
        object.__setattr__(self, "w_neg", np.asarray(self.w_neg, dtype=np.float64))
        if self.w_pos.shape != self.w_neg.shape or self.w_pos.ndim != 1:
            raise ValueError("weight vectors must be 1-D and share a shape")

    def rho_pos(self, features: np.ndarray) -> np.ndarray:
        rates = self.rho_pos_max * _sigmoid(add_intercept(features) @ self.w_pos)
        return float(rates[0]) if np.ndim(features) == 1 else rates

    def rho_neg(self, features: np.ndarray) -> np.ndarray:
        rates = self.rho_neg_max * _sigmoid(add_intercept(features) @ self.w_neg)
        return float(rates[0]) if np.ndim(features) == 1 else rates

    def to_dict(self) -> dict:
        return {
            "rho_pos_max": float(self.rho_pos_max),
            "rho_neg_max": float(self.rho_neg_max),
            "w_pos": [float(v) for v in self.w_pos],
            "w_neg": [float(v) for v in self.w_neg],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "NoiseModel":
        return cls(obj["rho_pos_max"], obj["rho_neg_max"],
                   np.asarray(obj["w_pos"]), np.asarray(obj["w_neg"]))


def sample_clean(spec: GaussianPairSpec, n: int, seed) -> LabeledSample:
    """Draw n labeled points; labels first, then features, so draws are stable."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    labels = np.where(rng.random(n) < spec.prior_pos, 1, -1).astype(np.int64)
    feats = labels[:, None] * spec.u_array[None, :] + rng.standard_normal((n, 2))
    if n == 0:
        feats = np.empty((0, 2))
    return LabeledSample(feats, labels, "clean")


def clean_posterior(spec: GaussianPairSpec, x: np.ndarray) -> np.ndarray:
    """P(Y=+1 | x) for the Gaussian pair: sigmoid(2 u.x + logit(prior))."""
    x = np.asarray(x, dtype=np.float64)
    score = 2.0 * (x @ spec.u_array)
    score += np.log(spec.prior_pos) - np.log1p(-spec.prior_pos)
    return _sigmoid(score)


def bayes_labels(spec: GaussianPairSpec, x: np.ndarray) -> np.ndarray:
    """Risk-minimizing labels: +1 where the clean posterior is at least 1/2."""
    return np.where(clean_posterior(spec, x) >= 0.5, 1, -1).astype(np.int64)


def sample_noise_model(
    rho_pos_max: float,
    rho_neg_max: float,
    dim: int,
    seed,
    probe: np.ndarray | None = None,
    max_resamples: int = 1000,
) -> NoiseModel:
    """Draw a random noise model with i.i.d. standard-normal weight vectors.

    When the caps alone cannot guarantee rate_pos + rate_neg < 1 (i.e. their
    sum reaches 1), the drawn model is checked on ``probe`` and redrawn until
    the sum condition holds at every probe point, up to ``max_resamples``.
    """
    if not (0.0 <= rho_pos_max < 1.0 and 0.0 <= rho_neg_max < 1.0):
        raise ValueError("noise rate bounds must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    needs_check = rho_pos_max + rho_neg_max >= 1.0
    if needs_check and probe is None:
        raise ValueError("probe points are required when the bounds sum to 1 or more")
    for _ in range(max_resamples):
        w_pos = rng.standard_normal(dim + 1)
        w_neg = rng.standard_normal(dim + 1)
        model = NoiseModel(rho_pos_max, rho_neg_max, w_pos, w_neg)
        if not needs_check:
            return model
        total = model.rho_pos(probe) + model.rho_neg(probe)
        if np.max(total, initial=0.0) < 1.0:
            return model
    raise InfeasibleNoiseError(
        f"no valid noise model within {max_resamples} draws for bounds "
        f"({rho_pos_max}, {rho_neg_max})"
    )


def corrupt(sample: LabeledSample, model: NoiseModel, seed) -> LabeledSample:
    """Flip each label independently with its instance- and label-dependent rate."""
    if sample.kind != "clean":
        raise ValueError("corrupt expects a clean sample")
    rng = np.random.default_rng(seed)
    rate = np.where(
        sample.labels == 1,
        model.rho_pos(sample.features),
        model.rho_neg(sample.features),
    )
    flip = rng.random(len(sample)) < rate
    labels = np.where(flip, -sample.labels, sample.labels)
    return LabeledSample(sample.features, labels, "noisy")


def noisy_posterior(spec: GaussianPairSpec, model: NoiseModel, x: np.ndarray) -> np.ndarray:
    """P(observed label = +1 | x) by total probability over the true label."""
    x = np.asarray(x, dtype=np.float64)
    eta = clean_posterior(spec, x)
    return (1.0 - model.rho_pos(x)) * eta + model.rho_neg(x) * (1.0 - eta)
