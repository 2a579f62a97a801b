"""KNN adjacency construction and symmetric degree renormalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DomainError, ParameterError, ShapeError

METRICS = ("euclidean", "cosine")


@dataclass
class Graph:
    """Dense symmetric non-negative adjacency with a renormalization flag."""

    adjacency: np.ndarray
    renormalized: bool = False

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]


def pairwise_distances(features: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    """All-pairs distance matrix; cosine rows with zero norm are treated as orthogonal."""
    if metric == "euclidean":
        return cdist(features, features, metric="euclidean")
    if metric == "cosine":
        norms = np.linalg.norm(features, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        unit = features / safe[:, None]
        sim = unit @ unit.T
        return 1.0 - np.clip(sim, -1.0, 1.0)
    raise ParameterError(f"unknown metric {metric!r}, expected one of {METRICS}")


def build_knn_graph(features: np.ndarray, k: int, metric: str = "euclidean") -> Graph:
    """Binary mutual-max KNN adjacency: an edge i-j exists when either point
    ranks the other among its k nearest. Ties in distance break toward the
    lower sample index; the diagonal stays zero.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected samples-by-features matrix, got shape {X.shape}")
    m = X.shape[0]
    if not 1 <= k < m:
        raise ParameterError(f"k must satisfy 1 <= k < m, got k={k} with m={m}")
    if np.isnan(X).any():
        raise DomainError("feature matrix contains NaN entries")

    dist = pairwise_distances(X, metric)
    np.fill_diagonal(dist, np.inf)
    adjacency = np.zeros((m, m))
    for i in range(m):
        neighbors = np.argsort(dist[i], kind="stable")[:k]
        adjacency[i, neighbors] = 1.0
    adjacency = np.maximum(adjacency, adjacency.T)
    return Graph(adjacency=adjacency, renormalized=False)


def renormalize(graph: Graph) -> Graph:
    """Self-loop degree renormalization: with hat(A) = A + I and
    hat(D) its row-sum diagonal, returns hat(D)^-1/2 hat(A) hat(D)^-1/2.
    Rejects graphs that are already renormalized.
    """
    if graph.renormalized:
        raise ParameterError("graph is already renormalized")
    A = np.asarray(graph.adjacency, dtype=np.float64)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"adjacency must be square, got shape {A.shape}")
    if not np.allclose(A, A.T, atol=1e-12):
        raise ParameterError("adjacency must be symmetric")
    if np.any(A < 0):
        raise ParameterError("adjacency must be non-negative")

    a_hat = A + np.eye(A.shape[0])
    inv_sqrt_deg = 1.0 / np.sqrt(a_hat.sum(axis=1))
    # np.outer keeps the result bitwise symmetric.
    out = a_hat * np.outer(inv_sqrt_deg, inv_sqrt_deg)
    return Graph(adjacency=out, renormalized=True)
