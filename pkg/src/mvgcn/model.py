"""Graph convolutional classifier over the fused, refined, selected graph.

The forward pass chains fusion, shrinkage refinement, and differentiable
node selection, then applies an L-layer graph convolution (relu between
layers, row softmax at the end) and a cross-entropy loss restricted to the
labeled rows. Training is full batch: one tape per iteration, one Adam step
per tape. A model is a flat name-to-array parameter registry so the
optimizer, the checkpoint format, and the gradient checks all see the same
thing.
"""

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Node, Tape
from .errors import DataLoadError, ParameterError, ShapeError, TrainingError
from .fusion import FusionResult, fuse_views, init_fusion_weights
from .graph_learning import init_glm_params, refine_graph
from .graphs import Graph
from .selection import SelectionResult, differentiable_node_selection, hard_topk_baseline

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
LOSS_CLAMP = 1e-12
DNS_MODES = ("soft", "hard-topk", "off")
CHECKPOINT_FORMAT = 1


@dataclass
class ModelState:
    """Trainable parameters plus Adam moments, keyed by parameter name."""

    params: dict[str, np.ndarray]
    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]
    step: int = 0

    def parameter_names(self) -> list[str]:
        return list(self.params)


def _glorot(rng: np.random.Generator, n_in: int, n_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-bound, bound, size=(n_in, n_out))


def init_model(
    num_views: int,
    num_nodes: int,
    feature_dim: int,
    hidden: int,
    classes: int,
    rng: np.random.Generator,
    layers: int = 2,
) -> ModelState:
    """Fresh parameters: zero mixing weights and threshold, uniform shrinkage
    factors, Glorot-scaled convolution weights."""
    if layers < 1:
        raise ParameterError(f"layers must be >= 1, got {layers}")
    if min(num_views, num_nodes, feature_dim, hidden, classes) < 1:
        raise ParameterError("all model dimensions must be positive")
    S1, S2 = init_glm_params(num_nodes, rng)
    params = {
        "raw_weights": init_fusion_weights(num_views),
        "S1": S1,
        "S2": S2,
        "raw_theta": np.zeros((1, 1)),
    }
    dims = [feature_dim] + [hidden] * (layers - 1) + [classes]
    for l in range(layers):
        params[f"W{l + 1}"] = _glorot(rng, dims[l], dims[l + 1])
    zeros = {name: np.zeros_like(p) for name, p in params.items()}
    return ModelState(params, zeros, {k: v.copy() for k, v in zeros.items()})


def gcn_layer(A: Node, H: Node, W: Node, activation: str = "none") -> Node:
    """One propagation step: activation(A @ H @ W)."""
    out = ad.matmul(ad.matmul(A, H), W)
    if activation == "relu":
        return ad.relu(out)
    if activation == "softmax-rows":
        return ad.softmax_rows(out)
    if activation == "none":
        return out
    raise ParameterError(f"unknown activation {activation!r}")


def _renormalize_on_tape(adj: Node, tape: Tape) -> Node:
    # same self-loop degree scaling as graphs.renormalize, but differentiable
    m = adj.value.shape[0]
    a_hat = ad.add(adj, tape.leaf(np.eye(m)))
    inv_sqrt = ad.exp(ad.scalar_mul(ad.log(ad.row_sum(a_hat)), -0.5))
    return ad.mul(a_hat, ad.matmul(inv_sqrt, ad.transpose(inv_sqrt)))


@dataclass
class ForwardPass:
    """Every stage of one forward evaluation, still on the tape."""

    fusion: FusionResult
    refined: Node
    selection: SelectionResult | None
    adjacency: Node
    probabilities: Node


def forward(
    tape: Tape,
    leaves: dict[str, Node],
    views: list[Graph],
    features: np.ndarray,
    *,
    gamma: float = 1.0,
    tau: float = 0.5,
    use_glm: bool = True,
    dns_mode: str = "soft",
    k: int = 10,
    renormalize_after_selection: bool = False,
) -> ForwardPass:
    """Run the full pipeline from per-view graphs to class probabilities."""
    if dns_mode not in DNS_MODES:
        raise ParameterError(f"dns_mode must be one of {DNS_MODES}, got {dns_mode!r}")
    fusion = fuse_views(views, leaves["raw_weights"])
    if use_glm:
        refined = refine_graph(fusion.fused, leaves["S1"], leaves["S2"], gamma)
    else:
        refined = fusion.fused

    selection = None
    if dns_mode == "soft":
        selection = differentiable_node_selection(refined, leaves["raw_theta"], tau)
        adjacency = selection.selected
    elif dns_mode == "hard-topk":
        # non-differentiable baseline: the selected graph is a constant of
        # the current forward values, so no gradient reaches the stages above
        adjacency = tape.leaf(hard_topk_baseline(refined.value, k))
    else:
        adjacency = refined
    if renormalize_after_selection:
        adjacency = _renormalize_on_tape(adjacency, tape)

    H = tape.leaf(features)
    num_layers = sum(1 for name in leaves if name.startswith("W"))
    for l in range(1, num_layers):
        H = gcn_layer(adjacency, H, leaves[f"W{l}"], "relu")
    Z = gcn_layer(adjacency, H, leaves[f"W{num_layers}"], "softmax-rows")
    return ForwardPass(fusion, refined, selection, adjacency, Z)


def masked_cross_entropy(Z: Node, Y: np.ndarray, labeled) -> Node:
    """Negative log likelihood of the true class over the labeled rows only."""
    idx = np.asarray(labeled, dtype=int)
    if idx.size == 0:
        raise ParameterError("labeled index set is empty")
    m = Z.value.shape[0]
    if idx.min() < 0 or idx.max() >= m:
        raise ParameterError(f"labeled indices out of range for {m} samples")
    if Y.shape != Z.value.shape:
        raise ShapeError(f"label matrix shape {Y.shape} does not match {Z.value.shape}")
    weights = np.zeros_like(Y)
    weights[idx] = Y[idx]
    logs = ad.log(ad.add_scalar(Z, LOSS_CLAMP))
    return ad.scalar_mul(ad.masked_sum(logs, weights), -1.0)


def adam_step(state: ModelState, grads: dict[str, np.ndarray], lr: float) -> ModelState:
    """Bias-corrected Adam update for every parameter, in place."""
    if lr <= 0:
        raise ParameterError(f"learning rate must be positive, got {lr}")
    state.step += 1
    t = state.step
    for name, p in state.params.items():
        if name not in grads:
            raise TrainingError(f"missing gradient for parameter {name!r}")
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
        m1 = state.first_moment[name]
        m2 = state.second_moment[name]
        m1 *= ADAM_BETA1
        m1 += (1 - ADAM_BETA1) * g
        m2 *= ADAM_BETA2
        m2 += (1 - ADAM_BETA2) * g * g
        m1_hat = m1 / (1 - ADAM_BETA1**t)
        m2_hat = m2 / (1 - ADAM_BETA2**t)
        p -= lr * m1_hat / (np.sqrt(m2_hat) + ADAM_EPS)
        if not np.all(np.isfinite(p)):
            raise TrainingError(f"parameter {name!r} became non-finite at step {t}")
    return state


def evaluate(Z: np.ndarray, labels: np.ndarray, mask) -> float:
    """Fraction of masked samples whose argmax row matches the label.

    Argmax ties resolve to the lowest class index.
    """
    idx = np.asarray(mask, dtype=int)
    if idx.size == 0:
        raise ParameterError("evaluation mask is empty")
    predicted = np.argmax(Z[idx], axis=1)
    return float(np.mean(predicted == np.asarray(labels)[idx]))


def one_hot(labels: np.ndarray, classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise ParameterError(f"labels must lie in [0, {classes})")
    Y = np.zeros((labels.shape[0], classes))
    Y[np.arange(labels.shape[0]), labels] = 1.0
    return Y


@dataclass
class TrainResult:
    state: ModelState
    history: list[tuple[int, float, float, float]]
    probabilities: np.ndarray


def train(
    views: list[Graph],
    features: np.ndarray,
    labels: np.ndarray,
    classes: int,
    labeled_idx,
    *,
    seed: int,
    epochs: int = 300,
    lr: float = 0.1,
    hidden: int = 64,
    layers: int = 2,
    gamma: float = 1.0,
    tau: float = 0.5,
    use_glm: bool = True,
    dns_mode: str = "soft",
    k: int = 10,
    renormalize_after_selection: bool = False,
    eval_idx=None,
    callback=None,
) -> TrainResult:
    """Full-batch training loop.

    History holds one row per iteration: (iteration, loss, accuracy on the
    labeled rows, accuracy on the evaluation rows), all measured at the
    parameters in force when the iteration started. ``callback``, if given,
    sees (iteration, forward_pass, loss_value, state) at the same moment,
    before the update.
    """
    if epochs < 1:
        raise ParameterError(f"epochs must be >= 1, got {epochs}")
    labels = np.asarray(labels, dtype=int)
    labeled_idx = np.asarray(labeled_idx, dtype=int)
    if eval_idx is None:
        eval_idx = np.setdiff1d(np.arange(labels.shape[0]), labeled_idx)
    eval_idx = np.asarray(eval_idx, dtype=int)
    Y = one_hot(labels, classes)

    rng = np.random.default_rng(seed)
    state = init_model(
        num_views=len(views),
        num_nodes=labels.shape[0],
        feature_dim=features.shape[1],
        hidden=hidden,
        classes=classes,
        rng=rng,
        layers=layers,
    )

    history = []
    Z_value = None
    for iteration in range(1, epochs + 1):
        tape = Tape()
        leaves = {name: tape.leaf(p) for name, p in state.params.items()}
        fwd = forward(
            tape,
            leaves,
            views,
            features,
            gamma=gamma,
            tau=tau,
            use_glm=use_glm,
            dns_mode=dns_mode,
            k=k,
            renormalize_after_selection=renormalize_after_selection,
        )
        loss = masked_cross_entropy(fwd.probabilities, Y, labeled_idx)
        loss_value = float(loss.value[0, 0])
        if not np.isfinite(loss_value):
            raise TrainingError(f"loss is not finite at iteration {iteration}")
        if callback is not None:
            callback(iteration, fwd, loss_value, state)
        Z_value = fwd.probabilities.value.copy()
        tape.backward(loss)
        grads = {name: leaf.grad for name, leaf in leaves.items()}
        adam_step(state, grads, lr)
        history.append(
            (
                iteration,
                loss_value,
                evaluate(Z_value, labels, labeled_idx),
                evaluate(Z_value, labels, eval_idx),
            )
        )
    return TrainResult(state, history, Z_value)


def predict(
    state: ModelState,
    views: list[Graph],
    features: np.ndarray,
    **forward_kwargs,
) -> np.ndarray:
    """Class probabilities under the given parameters, off the training loop."""
    tape = Tape()
    leaves = {name: tape.leaf(p) for name, p in state.params.items()}
    return forward(tape, leaves, views, features, **forward_kwargs).probabilities.value


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def config_digest(config: dict) -> str:
    """Stable hash of a JSON-serializable config mapping."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_checkpoint(path, state: ModelState, config: dict) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "step": state.step,
        "config": config,
        "config_hash": config_digest(config),
        "params": {k: v.tolist() for k, v in state.params.items()},
        "first_moment": {k: v.tolist() for k, v in state.first_moment.items()},
        "second_moment": {k: v.tolist() for k, v in state.second_moment.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_checkpoint(path) -> tuple[ModelState, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    for key in ("format", "step", "config", "config_hash", "params", "first_moment", "second_moment"):
        if key not in payload:
            raise DataLoadError(f"checkpoint is missing field {key!r}")
    if payload["format"] != CHECKPOINT_FORMAT:
        raise DataLoadError(f"unsupported checkpoint format {payload['format']!r}")
    if config_digest(payload["config"]) != payload["config_hash"]:
        raise DataLoadError("checkpoint config hash does not match its config")

    def arrays(section):
        return {k: np.asarray(v, dtype=float) for k, v in payload[section].items()}

    state = ModelState(
        arrays("params"), arrays("first_moment"), arrays("second_moment"), payload["step"]
    )
    return state, payload["config"]
