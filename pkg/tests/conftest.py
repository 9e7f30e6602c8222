"""Shared fixtures and hand-rolled oracles used across the suites."""
from __future__ import annotations

import numpy as np
import pytest

from embshift.dataset import Dataset, EmbeddingRecord


def random_psd(rng: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    """A random PSD matrix A^T A with controllable rank."""
    rank = d if rank is None else rank
    a = rng.normal(size=(rank, d))
    m = a.T @ a
    return 0.5 * (m + m.T)


def diagonal_fd(mu_a, var_a, mu_b, var_b) -> float:
    """Closed-form squared FD for diagonal covariances:
    ||mu_a - mu_b||^2 + sum_i (sqrt(var_a_i) - sqrt(var_b_i))^2."""
    mu_a = np.asarray(mu_a, dtype=float)
    mu_b = np.asarray(mu_b, dtype=float)
    var_a = np.asarray(var_a, dtype=float)
    var_b = np.asarray(var_b, dtype=float)
    return float(
        np.sum((mu_a - mu_b) ** 2) + np.sum((np.sqrt(var_a) - np.sqrt(var_b)) ** 2)
    )


def silhouette(coords: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette score, computed directly from the definition."""
    coords = np.asarray(coords, dtype=float)
    labels = np.asarray(labels)
    n = coords.shape[0]
    d = np.sqrt(
        np.maximum(
            np.sum(coords**2, axis=1)[:, None]
            + np.sum(coords**2, axis=1)[None, :]
            - 2 * coords @ coords.T,
            0.0,
        )
    )
    uniq = np.unique(labels)
    scores = np.empty(n)
    for i in range(n):
        own = labels == labels[i]
        own_others = own.copy()
        own_others[i] = False
        a = d[i][own_others].mean() if own_others.any() else 0.0
        b = min(d[i][labels == other].mean() for other in uniq if other != labels[i])
        scores[i] = 0.0 if max(a, b) == 0 else (b - a) / max(a, b)
    return float(scores.mean())


def make_dataset(
    vectors: np.ndarray,
    cohorts=None,
    labels=None,
    confidences=None,
    groups=None,
    prefix: str = "r",
) -> Dataset:
    """Assemble a Dataset from arrays, filling metadata with defaults."""
    vectors = np.asarray(vectors, dtype=np.float64)
    n, dim = vectors.shape
    records = []
    for i in range(n):
        records.append(
            EmbeddingRecord(
                id=f"{prefix}{i:05d}",
                cohort=cohorts[i] if cohorts is not None else "main",
                vector=vectors[i],
                labels=dict(labels[i]) if labels is not None else {},
                confidence=None if confidences is None else float(confidences[i]),
                group_id=None if groups is None else groups[i],
            )
        )
    return Dataset(records, dim=dim)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
