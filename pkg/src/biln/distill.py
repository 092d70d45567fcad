"""Collecting distilled examples out of a noisy sample, plus random active
labeling of what remains.

A noisy example is auto-collected when its estimated noisy posterior clears a
threshold derived from an upper bound on the opposite flip rate:

    eta_hat_i > (1 + ub_neg_i) / 2  -> keep with label +1
    eta_hat_i < (1 - ub_pos_i) / 2  -> keep with label -1

Both inequalities are strict; boundary points stay in the remaining pool.
``collect_with_bounds`` uses the global caps as the per-point bounds, while
``collect_knn`` estimates per-point bounds by averaging eta_hat over each
point's k-nearest neighborhood (self included): the neighborhood mean of
1 - eta_hat bounds the positive-label flip rate and the mean of eta_hat
bounds the negative-label flip rate. With k=1 the positive rule would need
eta_hat > 1, so nothing is auto-collected; averaging over a wider
neighborhood is what makes the rule usable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import LabeledSample

PROVENANCE_TAGS = ("auto_pos", "auto_neg", "active")


class LabelOracle:
    """Label source for active queries, backed by stored labels; counts queries."""

    def __init__(self, labels: np.ndarray):
        self._labels = np.asarray(labels, dtype=np.int64)
        self.n_queries = 0

    def query(self, index: int) -> int:
        self.n_queries += 1
        return int(self._labels[index])


@dataclass(frozen=True)
class DistillOutcome:
    """Distilled examples, where they came from, and what is left over.

    ``source_indices[j]`` is the row of the original noisy sample that the
    j-th distilled example was taken from; ``provenance[j]`` says whether it
    was auto-collected as a positive/negative or actively labeled. Together
    with ``remaining_indices`` the source indices partition the noisy sample.
    """

    distilled: LabeledSample
    source_indices: np.ndarray
    provenance: tuple[str, ...]
    remaining_indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "source_indices", np.asarray(self.source_indices, dtype=np.int64)
        )
        object.__setattr__(
            self, "remaining_indices", np.asarray(self.remaining_indices, dtype=np.int64)
        )
        if len(self.provenance) != len(self.distilled):
            raise ValueError("provenance must tag every distilled example")
        if any(tag not in PROVENANCE_TAGS for tag in self.provenance):
            raise ValueError("unknown provenance tag")


def _collect(noisy: LabeledSample, pos_mask: np.ndarray, neg_mask: np.ndarray) -> DistillOutcome:
    if np.any(pos_mask & neg_mask):  # thresholds straddle 1/2, so this cannot fire
        raise AssertionError("an example matched both collection rules")
    picked = pos_mask | neg_mask
    idx = np.flatnonzero(picked)
    labels = np.where(pos_mask[idx], 1, -1).astype(np.int64)
    provenance = tuple("auto_pos" if lab == 1 else "auto_neg" for lab in labels)
    distilled = LabeledSample(noisy.features[idx], labels, "distilled")
    return DistillOutcome(distilled, idx, provenance, np.flatnonzero(~picked))


def collect_with_pointwise_bounds(
    noisy: LabeledSample,
    eta_hat: np.ndarray,
    ub_pos: np.ndarray,
    ub_neg: np.ndarray,
) -> DistillOutcome:
    """Apply the strict threshold rules with per-example rate upper bounds."""
    eta_hat = np.asarray(eta_hat, dtype=np.float64)
    if eta_hat.shape != (len(noisy),):
        raise ValueError("eta_hat must have one entry per noisy example")
    ub_pos = np.broadcast_to(np.asarray(ub_pos, dtype=np.float64), eta_hat.shape)
    ub_neg = np.broadcast_to(np.asarray(ub_neg, dtype=np.float64), eta_hat.shape)
    pos = eta_hat > 0.5 * (1.0 + ub_neg)
    neg = eta_hat < 0.5 * (1.0 - ub_pos)
    return _collect(noisy, pos, neg)


def collect_with_bounds(
    noisy: LabeledSample,
    eta_hat: np.ndarray,
    rho_pos_max: float,
    rho_neg_max: float,
) -> DistillOutcome:
    """Auto-collect using the known global caps on the flip rates."""
    if not (0.0 <= rho_pos_max < 1.0 and 0.0 <= rho_neg_max < 1.0):
        raise ValueError("rate bounds must lie in [0, 1)")
    return collect_with_pointwise_bounds(noisy, eta_hat, rho_pos_max, rho_neg_max)


def knn_bounds(
    noisy: LabeledSample,
    eta_hat: np.ndarray,
    k: int,
    swap_bounds: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-example rate bounds from k-nearest-neighborhood posterior averages.

    Neighborhoods are Euclidean in the sample's feature space, include the
    point itself, and break distance ties by ascending index. ``swap_bounds``
    flips which average feeds which bound (an alternate convention kept for
    comparison; the default is the one consistent with the pointwise bounds
    rate_pos <= 1 - eta and rate_neg <= eta).
    """
    n = len(noisy)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    eta_hat = np.asarray(eta_hat, dtype=np.float64)
    if eta_hat.shape != (n,):
        raise ValueError("eta_hat must have one entry per noisy example")
    neighbors = _kernels.knn_select(
        np.ascontiguousarray(noisy.features, dtype=np.float64), int(k)
    )
    ub_pos = (1.0 - eta_hat)[neighbors].mean(axis=1)
    ub_neg = eta_hat[neighbors].mean(axis=1)
    if swap_bounds:
        ub_pos, ub_neg = ub_neg, ub_pos
    return ub_pos, ub_neg


def collect_knn(
    noisy: LabeledSample,
    eta_hat: np.ndarray,
    k: int,
    swap_bounds: bool = False,
) -> DistillOutcome:
    """Auto-collect with the neighborhood-averaged bounds instead of the caps."""
    ub_pos, ub_neg = knn_bounds(noisy, eta_hat, k, swap_bounds=swap_bounds)
    return collect_with_pointwise_bounds(noisy, eta_hat, ub_pos, ub_neg)


def active_label(
    noisy: LabeledSample,
    remaining_indices: np.ndarray,
    n_act: int,
    oracle: LabelOracle,
    seed,
) -> list[tuple[int, int]]:
    """Query the oracle for n_act uniformly chosen remaining examples."""
    remaining = np.asarray(remaining_indices, dtype=np.int64)
    if n_act < 0:
        raise ValueError("n_act must be non-negative")
    if n_act > len(remaining):
        raise ValueError(
            f"cannot actively label {n_act} of {len(remaining)} remaining examples"
        )
    if n_act == 0:
        return []
    rng = np.random.default_rng(seed)
    chosen = remaining[rng.choice(len(remaining), size=n_act, replace=False)]
    return [(int(i), oracle.query(int(i))) for i in chosen]


def with_active(
    outcome: DistillOutcome,
    noisy: LabeledSample,
    labeled_pairs: list[tuple[int, int]],
) -> DistillOutcome:
    """Fold actively-labeled examples into an outcome's distilled sample."""
    if not labeled_pairs:
        return outcome
    idx = np.asarray([i for i, _ in labeled_pairs], dtype=np.int64)
    labels = np.asarray([lab for _, lab in labeled_pairs], dtype=np.int64)
    if not np.all(np.isin(idx, outcome.remaining_indices)):
        raise ValueError("active indices must come from the remaining pool")
    distilled = LabeledSample(
        np.vstack([outcome.distilled.features, noisy.features[idx]]),
        np.concatenate([outcome.distilled.labels, labels]),
        "distilled",
    )
    return DistillOutcome(
        distilled,
        np.concatenate([outcome.source_indices, idx]),
        outcome.provenance + ("active",) * len(idx),
        np.setdiff1d(outcome.remaining_indices, idx),
    )
