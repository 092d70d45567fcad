"""Importance weights by empirical kernel mean matching.

Given the distilled points (source) and all original sample points (target),
choose per-source weights beta minimizing

    (1/2) beta' K beta - kappa' beta

subject to 0 <= beta_i <= B and |sum(beta) - m| <= m * eps, where
K_ij = k(s_i, s_j) on the source set and kappa_i = (m/n) sum_j k(s_i, t_j)
sums the kernel against every target point. The kernel is Gaussian,
k(x, x') = exp(-sigma * ||x - x'||^2). Minimizing this objective matches the
weighted source kernel mean to the target kernel mean.

The solver is projected gradient descent with step 1/L (L an upper bound on
the top eigenvalue of K from power iteration) and Dykstra alternating
projection onto the box/sum-slab intersection. Besides the projected-gradient
tolerance and the iteration cap it stops once the projected-gradient norm is
no longer shrinking between checkpoints: kernel matrices with long flat tails
of tiny eigenvalues plateau far above any usable tolerance and would
otherwise spend the whole iteration budget drifting along directions the
kernel embedding cannot distinguish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

JITTER = 1e-8
STALL_WINDOW = 200
STALL_RATIO = 0.9


class FeasibilityError(ValueError):
    """The box and the sum slab do not intersect."""


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel scale: k(x, x') = exp(-sigma * ||x - x'||^2)."""

    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")

    def matrix(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return _kernels.gaussian_kernel(
            np.ascontiguousarray(a, dtype=np.float64),
            np.ascontiguousarray(b, dtype=np.float64),
            float(self.sigma),
        )


@dataclass(frozen=True)
class KmmProblem:
    """Assembled QP data. K carries the diagonal jitter; kappa is >= 0."""

    K: np.ndarray
    kappa: np.ndarray
    B: float
    eps: float

    @property
    def m(self) -> int:
        return self.kappa.shape[0]

    def objective(self, beta: np.ndarray) -> float:
        beta = np.asarray(beta, dtype=np.float64)
        return 0.5 * float(beta @ self.K @ beta) - float(self.kappa @ beta)

    def box_violation(self, beta: np.ndarray) -> float:
        return float(max(0.0, -np.min(beta, initial=0.0), np.max(beta, initial=0.0) - self.B))

    def slab_violation(self, beta: np.ndarray) -> float:
        return float(max(0.0, abs(float(np.sum(beta)) - self.m) - self.m * self.eps))


@dataclass(frozen=True)
class ImportanceWeights:
    beta: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    objective_trace: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=np.float64))
        object.__setattr__(
            self, "objective_trace", np.asarray(self.objective_trace, dtype=np.float64)
        )


def default_eps(m: int) -> float:
    """Slab half-width (sqrt(m) - 1) / sqrt(m); 0 at m=1, approaches 1 for large m."""
    if m < 1:
        raise ValueError("m must be at least 1")
    root = math.sqrt(m)
    return (root - 1.0) / root


def build_problem(
    distilled_x: np.ndarray,
    all_x: np.ndarray,
    kernel: KernelSpec,
    B: float = 1000.0,
    eps: float | None = None,
) -> KmmProblem:
    """Assemble K (jittered) and kappa from source and target point sets."""
    distilled_x = np.ascontiguousarray(distilled_x, dtype=np.float64)
    all_x = np.ascontiguousarray(all_x, dtype=np.float64)
    m, n = distilled_x.shape[0], all_x.shape[0]
    if m < 1 or n < 1:
        raise ValueError("both point sets must be non-empty")
    if distilled_x.shape[1] != all_x.shape[1]:
        raise ValueError("point sets must share a feature dimension")
    if B <= 0.0:
        raise ValueError("B must be positive")
    if eps is None:
        eps = default_eps(m)
    elif eps < 0.0:
        raise ValueError("eps must be non-negative")
    K = kernel.matrix(distilled_x, distilled_x)
    K = 0.5 * (K + K.T)  # exact symmetry regardless of kernel evaluation order
    np.fill_diagonal(K, 1.0 + JITTER)
    kappa = (m / n) * kernel.matrix(distilled_x, all_x).sum(axis=1)
    return KmmProblem(K=K, kappa=kappa, B=float(B), eps=float(eps))


def _spectral_upper_bound(K: np.ndarray, iters: int = 100) -> float:
    """Upper bound on ||K||_2: power iteration plus a safety margin."""
    m = K.shape[0]
    v = np.full(m, 1.0 / math.sqrt(m))
    for _ in range(iters):
        w = K @ v
        norm = float(np.sqrt(w @ w))
        if norm == 0.0:
            return JITTER
        v = w / norm
    rayleigh = float(v @ (K @ v))
    return rayleigh * 1.05 + 1e-12


def solve(problem: KmmProblem, max_iters: int = 20000, tol: float = 1e-7) -> ImportanceWeights:
    """Projected-gradient solve; the returned beta is always feasible."""
    if problem.B < 1.0 - problem.eps:
        raise FeasibilityError(
            f"box cap B={problem.B} cannot reach the slab floor m*(1-eps); "
            f"need B >= {1.0 - problem.eps}"
        )
    m = problem.m
    L = _spectral_upper_bound(problem.K)
    beta, iters, pg_norm, trace = _kernels.kmm_pgd(
        np.ascontiguousarray(problem.K, dtype=np.float64),
        np.ascontiguousarray(problem.kappa, dtype=np.float64),
        float(problem.B),
        float(m * (1.0 - problem.eps)),
        float(m * (1.0 + problem.eps)),
        1.0 / L,
        float(tol),
        int(max_iters),
        STALL_WINDOW,
        STALL_RATIO,
    )
    return ImportanceWeights(
        beta=beta,
        objective=float(trace[-1]),
        kkt_residual=float(pg_norm),
        iterations=int(iters),
        objective_trace=trace,
    )


def embedding_residual(
    distilled_x: np.ndarray,
    all_x: np.ndarray,
    kernel: KernelSpec,
    beta: np.ndarray,
) -> float:
    """RKHS distance between the weighted source mean and the target mean.

    Computed from Gram blocks only; useful as a diagnostic that solved
    weights match the target marginal at least as well as uniform weights.
    """
    beta = np.asarray(beta, dtype=np.float64)
    m, n = distilled_x.shape[0], all_x.shape[0]
    kss = kernel.matrix(distilled_x, distilled_x)
    kst = kernel.matrix(distilled_x, all_x)
    ktt = kernel.matrix(all_x, all_x)
    value = (
        float(beta @ kss @ beta) / (m * m)
        - 2.0 * float(beta @ kst.sum(axis=1)) / (m * n)
        + float(ktt.sum()) / (n * n)
    )
    return math.sqrt(max(value, 0.0))
