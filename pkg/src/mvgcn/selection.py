"""Differentiable node selection.

Node scores are the mean nonzero entry of each adjacency column. A
temperature-controlled softmax relaxes the descending sort of those scores
into a row-stochastic permutation matrix, a discounted-cumulative-gain
transform of each row scores how confidently a node ranks near the front,
and edges whose endpoint confidences fall below a learnable threshold are
shrunk toward zero. The whole pipeline stays on the tape; the hard top-k
variant at the bottom is a plain array routine kept for comparison runs.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .errors import ParameterError, ShapeError


def column_mean_nonzero(adj: Node) -> Node:
    """Mean of the nonzero entries in each column, as a 1 x m row.

    Columns with no nonzero entries score 0. The nonzero counts come from the
    current forward values and are treated as constants.
    """
    counts = np.count_nonzero(adj.value, axis=0).astype(float).reshape(1, -1)
    inv = np.divide(1.0, counts, out=np.zeros_like(counts), where=counts > 0)
    return ad.mul_const(ad.col_sum(adj), inv)


def pairwise_difference(a_s: Node) -> Node:
    """Absolute score gaps: out[i, j] = |a_s[i] - a_s[j]|."""
    if a_s.value.shape[0] != 1:
        raise ShapeError(f"scores must be a row vector, got shape {a_s.value.shape}")
    m = a_s.value.shape[1]
    rows = ad.broadcast_rows(a_s, m)
    cols = ad.broadcast_cols(ad.transpose(a_s), m)
    return ad.absval(ad.sub(cols, rows))


def relaxed_permutation(a_s: Node, tau: float) -> Node:
    """Temperature-relaxed descending sort of the scores.

    Row i (1-based) is softmax(((m + 1 - 2i) * a_s - delta_sums) / tau), so at
    low temperature row i concentrates on the node with the i-th largest
    score. Every row sums to 1 for any positive temperature.
    """
    if tau <= 0:
        raise ParameterError(f"temperature must be positive, got {tau}")
    if a_s.value.shape[0] != 1:
        raise ShapeError(f"scores must be a row vector, got shape {a_s.value.shape}")
    m = a_s.value.shape[1]
    delta = pairwise_difference(a_s)
    delta_sums = ad.broadcast_rows(ad.transpose(ad.row_sum(delta)), m)
    ranks = (m + 1 - 2 * np.arange(1, m + 1, dtype=float)).reshape(m, 1)
    scaled = ad.mul_const(ad.broadcast_rows(a_s, m), np.repeat(ranks, m, axis=1))
    return ad.softmax_rows(ad.scalar_mul(ad.sub(scaled, delta_sums), 1.0 / tau))


_LOG2 = float(np.log(2.0))


def dcg_confidence(P: Node) -> Node:
    """Per-node gain sum_j (2^P[i, j] - 1) / log2(j + 1), j 1-based, as 1 x m."""
    m = P.value.shape[0]
    discounts = 1.0 / np.log2(np.arange(2, m + 2, dtype=float))
    gains = ad.add_scalar(ad.exp2(P), -1.0)
    weighted = ad.mul_const(gains, np.tile(discounts, (m, 1)))
    return ad.transpose(ad.row_sum(weighted))


def normalize_confidence(raw: Node) -> Node:
    """Min-max rescaling to [0, 1].

    The positions of the extremes are fixed by the current forward values;
    only the extreme values themselves carry gradient. All-equal confidences
    collapse to a uniform 0.5 with no gradient, which downstream leaves the
    adjacency untouched.
    """
    lo = float(np.min(raw.value))
    hi = float(np.max(raw.value))
    if hi == lo:
        return ad.add_scalar(ad.scalar_mul(raw, 0.0), 0.5)
    low = ad.min_all(raw)
    return ad.div(ad.sub(raw, low), ad.sub(ad.max_all(raw), low))


def node_confidence(P: Node) -> Node:
    return normalize_confidence(dcg_confidence(P))


def confidence_coefficients(ibar: Node) -> Node:
    """Edge coefficients C[i, j] = (ibar[i] + ibar[j]) / 2."""
    if ibar.value.shape[0] != 1:
        raise ShapeError(f"confidences must be a row vector, got shape {ibar.value.shape}")
    m = ibar.value.shape[1]
    rows = ad.broadcast_rows(ibar, m)
    cols = ad.broadcast_cols(ad.transpose(ibar), m)
    return ad.scalar_mul(ad.add(cols, rows), 0.5)


def select_nodes(adj: Node, C: Node, raw_theta: Node) -> Node:
    """Gate edges by thresholded confidence.

    The threshold is sigmoid(raw_theta). Coefficients at or below it zero
    out; survivors are rescaled by their maximum so the strongest edge keeps
    its full weight. If the threshold tops every coefficient the adjacency
    passes through unchanged rather than collapsing to zero.
    """
    if C.value.shape != adj.value.shape:
        raise ShapeError(
            f"coefficient shape {C.value.shape} does not match adjacency {adj.value.shape}"
        )
    if raw_theta.value.shape != (1, 1):
        raise ShapeError(f"threshold must be 1x1, got shape {raw_theta.value.shape}")
    theta = ad.sigmoid(raw_theta)
    gated = ad.relu(ad.sub(C, theta))
    if float(np.max(gated.value)) == 0.0:
        return adj
    return ad.mul(adj, ad.div(gated, ad.max_all(gated)))


@dataclass
class SelectionResult:
    """Tape nodes for every stage of the selection pipeline."""

    scores: Node
    permutation: Node
    confidence: Node
    coefficients: Node
    selected: Node


def differentiable_node_selection(adj: Node, raw_theta: Node, tau: float) -> SelectionResult:
    """Full pipeline from a refined adjacency to the selected one."""
    a_s = column_mean_nonzero(adj)
    P = relaxed_permutation(a_s, tau)
    ibar = node_confidence(P)
    C = confidence_coefficients(ibar)
    return SelectionResult(a_s, P, ibar, C, select_nodes(adj, C, raw_theta))


def hard_topk_baseline(A: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest entries of each row, zeroing the rest.

    Ties break toward the lower column index. Rows are treated independently,
    so the result is generally asymmetric; this exists only as a
    non-differentiable reference for comparison runs.
    """
    m, n = A.shape
    if not 1 <= k <= n:
        raise ParameterError(f"k must satisfy 1 <= k <= {n}, got {k}")
    out = np.zeros_like(A)
    for i in range(m):
        keep = np.argsort(-A[i], kind="stable")[:k]
        out[i, keep] = A[i, keep]
    return out
