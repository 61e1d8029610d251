"""K-means grouping of batch samples and boosted cluster-mean aggregation.

Samples in a mini-batch are clustered by their feature vectors; each
cluster's mean gradient is boosted against the shared queue statistics
and the boosted means are recombined weighted by cluster population.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BoostConfig, QueueStats, delta_rho

__all__ = [
    "ClusterAssignment",
    "ClusterAggregate",
    "kmeans",
    "kmeans_objective",
    "cluster_aggregates",
    "aggregate",
    "choose_k",
]


@dataclass
class ClusterAssignment:
    labels: np.ndarray  # (B,) ints in [0, k)
    centroids: np.ndarray  # (k, f)
    k: int
    # objective after each Lloyd update of the winning restart
    objective_history: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class ClusterAggregate:
    cluster_mean_grad: np.ndarray
    population: int
    boosted: np.ndarray


def _sq_dists(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - centroids[None, :, :]
    return np.einsum("bkf,bkf->bk", diff, diff)


def _assign(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return np.argmin(_sq_dists(X, centroids), axis=1)


def kmeans_objective(X: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    """Sum of squared distances of each sample to its assigned centroid."""
    diff = X - centroids[labels]
    return float(np.sum(diff * diff))


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]), dtype=float)
    centroids[0] = X[rng.integers(n)]
    for i in range(1, k):
        d2 = np.min(_sq_dists(X, centroids[:i]), axis=1)
        total = d2.sum()
        if total <= 0.0:  # all points coincide with chosen centroids
            centroids[i] = X[rng.integers(n)]
            continue
        centroids[i] = X[rng.choice(n, p=d2 / total)]
    return centroids


def _repair_empty(X, labels, centroids, k):
    """Reseed each empty centroid at the point farthest from its assigned centroid."""
    repaired = False
    used = set()
    for j in range(k):
        if np.any(labels == j):
            continue
        diff = X - centroids[labels]
        dist = np.einsum("bf,bf->b", diff, diff)
        # never steal a cluster's last member or reuse a reseed point
        counts = np.bincount(labels, minlength=k)
        dist[counts[labels] <= 1] = -1.0
        for idx in used:
            dist[idx] = -1.0
        far = int(np.argmax(dist))
        if dist[far] < 0.0:
            continue
        centroids[j] = X[far]
        labels[far] = j
        used.add(far)
        repaired = True
    return labels, centroids, repaired


def _update_centroids(X, labels, centroids, k):
    return np.stack(
        [
            X[labels == j].mean(axis=0) if np.any(labels == j) else centroids[j]
            for j in range(k)
        ]
    )


def _lloyd(X, k, centroids, max_iters):
    labels = None
    history = []
    for _ in range(max_iters):
        new_labels = _assign(X, centroids)
        new_labels, centroids, repaired = _repair_empty(X, new_labels, centroids, k)
        if not repaired and labels is not None and np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
        centroids = _update_centroids(X, labels, centroids, k)
        history.append(kmeans_objective(X, labels, centroids))
    else:
        # iteration budget exhausted: leave a consistent nearest-centroid state
        labels = _assign(X, centroids)
    return labels, centroids, history


def kmeans(
    features,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    n_init: int = 10,
    init_centroids=None,
) -> ClusterAssignment:
    """Cluster feature rows into k groups via Lloyd iterations.

    Seeding is deterministic kmeans++ from ``seed``; the best of
    ``n_init`` restarts (by objective) is returned. ``init_centroids``
    bypasses seeding and forces a single run from the given centroids.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2:
        raise ValueError("features must be a (B, f) matrix")
    B = X.shape[0]
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k > B:
        raise ValueError(f"k={k} exceeds the number of samples B={B}")

    if init_centroids is not None:
        starts = [np.array(init_centroids, dtype=float, copy=True)]
    else:
        rng = np.random.default_rng(seed)
        starts = [_kmeans_pp_init(X, k, rng) for _ in range(max(1, n_init))]

    best = None
    for start in starts:
        labels, centroids, history = _lloyd(X, k, start, max_iters)
        obj = kmeans_objective(X, labels, centroids)
        if best is None or obj < best[0]:
            best = (obj, labels, centroids, history)
    _, labels, centroids, history = best
    return ClusterAssignment(
        labels=labels, centroids=centroids, k=k, objective_history=history
    )


def cluster_aggregates(
    per_sample_grads, assignment: ClusterAssignment, stats: QueueStats, cfg: BoostConfig
) -> list[ClusterAggregate]:
    """Per-cluster mean gradient, population and boosted mean."""
    G = np.asarray(per_sample_grads, dtype=float)
    if G.ndim != 2:
        raise ValueError("per-sample gradients must be a (B, d) matrix")
    if G.shape[0] != assignment.labels.shape[0]:
        raise ValueError("gradient count does not match the assignment")
    out = []
    for j in range(assignment.k):
        members = assignment.labels == j
        pop = int(members.sum())
        if pop == 0:
            continue
        mean_j = G[members].mean(axis=0)
        out.append(
            ClusterAggregate(
                cluster_mean_grad=mean_j,
                population=pop,
                boosted=delta_rho(mean_j, stats, cfg),
            )
        )
    return out


def aggregate(
    per_sample_grads, assignment: ClusterAssignment, stats: QueueStats, cfg: BoostConfig
) -> np.ndarray:
    """Population-weighted mean of the boosted cluster-mean gradients.

    g* = (1/B) * sum_j population_j * boost(mean_j). With rho = 1 this
    reconstructs the plain batch mean for any assignment.
    """
    G = np.asarray(per_sample_grads, dtype=float)
    if G.ndim != 2 or G.shape[0] == 0:
        raise ValueError("need a non-empty (B, d) gradient matrix")
    parts = cluster_aggregates(G, assignment, stats, cfg)
    total = np.zeros(G.shape[1])
    for part in parts:
        total += part.population * part.boosted
    return total / G.shape[0]


def choose_k(batch_size: int, optimal_batch: int) -> int:
    """Cluster count as the rounded ratio of batch size to the optimal size."""
    if batch_size < 1 or optimal_batch < 1:
        raise ValueError("batch_size and optimal_batch must be positive")
    return max(1, round(batch_size / optimal_batch))
