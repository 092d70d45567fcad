"""Randomized property suites for the collection rules and rate bounds.

These run the core soundness claims the collection machinery relies on, over
freshly sampled noise models:

* soundness of auto-collection: fed the exact noisy posterior and valid rate
  upper bounds, every auto-collected label equals the risk-minimizing clean
  label, with no tolerance;
* pointwise rate bounds: the positive flip rate never exceeds one minus the
  noisy posterior, and the negative flip rate never exceeds the noisy
  posterior (up to 1e-12 of float slack).

Both are exposed through ``biln validate-theorems``.
"""

from __future__ import annotations

import numpy as np

from .data import LabeledSample
from .distill import collect_with_bounds, collect_with_pointwise_bounds
from .synthetic import GaussianPairSpec, NoiseModel, clean_posterior, sample_clean

BOUND_SLACK = 1e-12

# Small fixed discrete distribution: feature points paired with clean
# posteriors kept away from 1/2 so the risk-minimizing label is unambiguous.
TOY_POINTS = np.array(
    [
        [-1.6, 0.4],
        [-1.1, -0.8],
        [-0.7, 1.3],
        [-0.3, -1.5],
        [-0.1, 0.2],
        [0.2, -0.6],
        [0.5, 1.1],
        [0.9, -1.2],
        [1.4, 0.7],
        [1.8, -0.3],
    ]
)
TOY_ETA = np.array([0.02, 0.10, 0.22, 0.35, 0.45, 0.55, 0.68, 0.80, 0.91, 0.98])


def _toy_sample() -> LabeledSample:
    # Observed labels are irrelevant to collection; any valid values do.
    return LabeledSample(TOY_POINTS, np.ones(len(TOY_POINTS), dtype=np.int64), "noisy")


def check_distillation_soundness(n_models: int = 1000, seed: int = 0) -> dict:
    """Collected labels must match sign(eta - 1/2) for every random noise model.

    The noisy posterior fed to the collectors is computed analytically from
    the toy clean posteriors through the total-probability identity, and both
    the cap-based and exact-pointwise-bound collectors are exercised.
    """
    rng = np.random.default_rng(seed)
    sample = _toy_sample()
    bayes = np.where(TOY_ETA > 0.5, 1, -1)
    violations = 0
    collected = 0
    for _ in range(n_models):
        rho_pos_max = float(rng.uniform(0.0, 0.49))
        rho_neg_max = float(rng.uniform(0.0, 0.49))
        model = NoiseModel(
            rho_pos_max, rho_neg_max, rng.standard_normal(3), rng.standard_normal(3)
        )
        rho_pos = model.rho_pos(TOY_POINTS)
        rho_neg = model.rho_neg(TOY_POINTS)
        eta_noisy = (1.0 - rho_pos) * TOY_ETA + rho_neg * (1.0 - TOY_ETA)
        for outcome in (
            collect_with_bounds(sample, eta_noisy, rho_pos_max, rho_neg_max),
            collect_with_pointwise_bounds(sample, eta_noisy, rho_pos, rho_neg),
        ):
            collected += len(outcome.distilled)
            violations += int(
                np.sum(outcome.distilled.labels != bayes[outcome.source_indices])
            )
    return {"models": n_models, "collected": collected, "violations": violations}


def check_noise_rate_bounds(
    n_models: int = 1000, n_probe: int = 100, seed: int = 0
) -> dict:
    """rate_pos <= 1 - eta_noisy and rate_neg <= eta_noisy at every probe point."""
    rng = np.random.default_rng(seed)
    spec = GaussianPairSpec()
    violations = 0
    max_excess = 0.0
    for _ in range(n_models):
        rho_pos_max = float(rng.uniform(0.0, 0.49))
        rho_neg_max = float(rng.uniform(0.0, 0.49))
        model = NoiseModel(
            rho_pos_max, rho_neg_max, rng.standard_normal(3), rng.standard_normal(3)
        )
        probe = sample_clean(spec, n_probe, rng).features
        eta = clean_posterior(spec, probe)
        rho_pos = model.rho_pos(probe)
        rho_neg = model.rho_neg(probe)
        eta_noisy = (1.0 - rho_pos) * eta + rho_neg * (1.0 - eta)
        excess_pos = rho_pos - (1.0 - eta_noisy)
        excess_neg = rho_neg - eta_noisy
        worst = float(max(excess_pos.max(), excess_neg.max()))
        max_excess = max(max_excess, worst)
        violations += int(np.sum(excess_pos > BOUND_SLACK))
        violations += int(np.sum(excess_neg > BOUND_SLACK))
    return {
        "models": n_models,
        "points_per_model": n_probe,
        "violations": violations,
        "max_excess": max_excess,
    }
