"""Trainable fusion of per-view graphs into a single adjacency.

A square mixing matrix passes through a row softmax, each view then gets a
complementary graph formed as that row's weighted sum over all views, and the
final adjacency averages the complementary graphs by per-view importance
(normalized column sums of the mixing weights). Everything stays on the tape
so gradients reach the raw mixing weights.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .errors import ParameterError, ShapeError
from .graphs import Graph


def _scale_const(s: Node, const: np.ndarray) -> Node:
    # 1x1 node times a fixed matrix, via explicit tiling
    m, n = const.shape
    tiled = ad.broadcast_cols(ad.broadcast_rows(s, m), n)
    return ad.mul_const(tiled, const)


def normalize_weights(raw: Node) -> Node:
    """Row-stochastic mixing weights from unconstrained ones."""
    rows, cols = raw.value.shape
    if rows != cols:
        raise ShapeError(f"mixing weights must be square, got shape {raw.value.shape}")
    return ad.softmax_rows(raw)


def complementary_graphs(views: list[Graph], W: Node) -> list[Node]:
    """One weighted-sum graph per view: out[v] = sum_i W[v, i] * A_i."""
    V = len(views)
    if V == 0:
        raise ParameterError("need at least one view")
    if W.value.shape != (V, V):
        raise ShapeError(
            f"mixing weights shape {W.value.shape} does not match {V} views"
        )
    m = views[0].num_nodes
    for g in views:
        if g.num_nodes != m:
            raise ShapeError(
                f"views disagree on node count: {g.num_nodes} vs {m}"
            )
        if not g.renormalized:
            raise ParameterError("fusion expects renormalized per-view graphs")
    outs = []
    for v in range(V):
        acc = _scale_const(ad.entry(W, v, 0), views[0].adjacency)
        for i in range(1, V):
            acc = ad.add(acc, _scale_const(ad.entry(W, v, i), views[i].adjacency))
        outs.append(acc)
    return outs


def view_importance(W: Node) -> Node:
    """Per-view contribution: column sums of W, renormalized to sum to 1."""
    totals = ad.col_sum(W)
    return ad.div(totals, ad.sum_all(totals))


def fuse(complementary: list[Node], alpha: Node) -> Node:
    """Importance-weighted average of the complementary graphs."""
    if alpha.value.shape != (1, len(complementary)):
        raise ShapeError(
            f"importance shape {alpha.value.shape} does not match "
            f"{len(complementary)} graphs"
        )
    acc = ad.mul(ad.entry(alpha, 0, 0), complementary[0])
    for i in range(1, len(complementary)):
        acc = ad.add(acc, ad.mul(ad.entry(alpha, 0, i), complementary[i]))
    return acc


@dataclass
class FusionResult:
    """Tape nodes for every stage of the fusion cascade."""

    weights: Node
    importance: Node
    complementary: list[Node]
    fused: Node


def fuse_views(views: list[Graph], raw: Node) -> FusionResult:
    """Full cascade from raw mixing weights to the fused adjacency."""
    W = normalize_weights(raw)
    comp = complementary_graphs(views, W)
    alpha = view_importance(W)
    return FusionResult(W, alpha, comp, fuse(comp, alpha))


def init_fusion_weights(num_views: int) -> np.ndarray:
    """All-zero raw weights, i.e. a uniform mix at step 0."""
    if num_views < 1:
        raise ParameterError(f"num_views must be positive, got {num_views}")
    return np.zeros((num_views, num_views))
