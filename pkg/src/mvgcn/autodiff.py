"""Dense-matrix reverse-mode automatic differentiation.

Values are 2-D float64 numpy arrays throughout; vectors are represented as
1xN or Nx1 matrices. Forward values are computed eagerly and every operation
appends a node to a :class:`Tape`; calling ``tape.backward(loss)`` on a 1x1
loss node fills in ``node.grad`` for everything on the tape.

Elementwise binary operations accept operands of identical shape, or allow
one side to be 1x1 (broadcast as a scalar). Row/column vectors are broadcast
only through the explicit ``broadcast_rows`` / ``broadcast_cols`` operations.
Subgradients at the ReLU / abs / max kinks are defined as 0.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ParameterError, ShapeError

__all__ = [
    "Node",
    "Tape",
    "matmul",
    "transpose",
    "add",
    "sub",
    "mul",
    "div",
    "scalar_mul",
    "add_scalar",
    "mul_const",
    "absval",
    "sigmoid",
    "relu",
    "maximum",
    "exp",
    "log",
    "exp2",
    "softmax_rows",
    "row_sum",
    "col_sum",
    "sum_all",
    "max_all",
    "min_all",
    "broadcast_rows",
    "broadcast_cols",
    "masked_sum",
    "entry",
    "finite_difference_check",
]


def as_matrix(value) -> np.ndarray:
    """Coerce ``value`` to a 2-D float64 array; scalars become 1x1."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got array of shape {arr.shape}")
    return np.ascontiguousarray(arr)


class Node:
    """One value on the tape: a matrix, its gradient, and its backward rule."""

    __slots__ = ("value", "grad", "parents", "op", "tape", "_backward")

    def __init__(self, value: np.ndarray, parents: tuple, op: str, tape: "Tape"):
        self.value = value
        self.grad = np.zeros_like(value)
        self.parents = parents
        self.op = op
        self.tape = tape
        self._backward = None
        tape._append(self)

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def T(self) -> "Node":
        return transpose(self)

    def __add__(self, other):
        if isinstance(other, Node):
            return add(self, other)
        return add_scalar(self, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Node):
            return sub(self, other)
        return add_scalar(self, -float(other))

    def __rsub__(self, other):
        return add_scalar(scalar_mul(self, -1.0), float(other))

    def __mul__(self, other):
        if isinstance(other, Node):
            return mul(self, other)
        return scalar_mul(self, float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Node):
            return div(self, other)
        return scalar_mul(self, 1.0 / float(other))

    def __neg__(self):
        return scalar_mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Node(op={self.op!r}, shape={self.value.shape})"


class Tape:
    """Ordered record of nodes; reverse iteration visits consumers first."""

    def __init__(self):
        self.nodes: list[Node] = []

    def _append(self, node: Node):
        self.nodes.append(node)

    def leaf(self, value) -> Node:
        """Create an input node (parameter or constant) holding ``value``."""
        arr = as_matrix(value)
        if not np.all(np.isfinite(arr)):
            raise DomainError("leaf value contains non-finite entries")
        return Node(arr.copy(), (), "leaf", self)

    def backward(self, loss: Node) -> dict:
        """Reverse sweep from a 1x1 ``loss`` node.

        Fills ``node.grad`` with d(loss)/d(node) for every node on the tape
        (zero for nodes the loss does not depend on) and returns a map from
        each leaf node to its gradient array.
        """
        if loss.tape is not self:
            raise ValueError("loss node belongs to a different tape")
        if loss.value.shape != (1, 1):
            raise ShapeError(f"loss must be 1x1, got shape {loss.value.shape}")
        for node in self.nodes:
            node.grad = np.zeros_like(node.value)
        loss.grad[0, 0] = 1.0
        for node in reversed(self.nodes):
            if node._backward is not None:
                node._backward(node.grad)
        return {node: node.grad for node in self.nodes if not node.parents}


def _same_tape(a: Node, b: Node, op: str) -> Tape:
    if a.tape is not b.tape:
        raise ValueError(f"{op}: operands belong to different tapes")
    return a.tape


def _binary_shape(a: Node, b: Node, op: str):
    if a.value.shape == b.value.shape:
        return
    if a.value.shape == (1, 1) or b.value.shape == (1, 1):
        return
    raise ShapeError(f"{op}: shapes {a.value.shape} and {b.value.shape} do not conform")


def _accumulate(parent: Node, term: np.ndarray):
    # Scalar (1x1) operands collect the sum of the broadcast contributions.
    if parent.value.shape == term.shape:
        parent.grad += term
    else:
        parent.grad += term.sum()


# ---------------------------------------------------------------------------
# binary elementwise and matrix product
# ---------------------------------------------------------------------------


def add(a: Node, b: Node) -> Node:
    tape = _same_tape(a, b, "add")
    _binary_shape(a, b, "add")
    out = Node(a.value + b.value, (a, b), "add", tape)

    def _bw(g):
        _accumulate(a, g)
        _accumulate(b, g)

    out._backward = _bw
    return out


def sub(a: Node, b: Node) -> Node:
    tape = _same_tape(a, b, "sub")
    _binary_shape(a, b, "sub")
    out = Node(a.value - b.value, (a, b), "sub", tape)

    def _bw(g):
        _accumulate(a, g)
        _accumulate(b, -g)

    out._backward = _bw
    return out


def mul(a: Node, b: Node) -> Node:
    """Hadamard (elementwise) product."""
    tape = _same_tape(a, b, "mul")
    _binary_shape(a, b, "mul")
    out = Node(a.value * b.value, (a, b), "mul", tape)

    def _bw(g):
        _accumulate(a, g * b.value)
        _accumulate(b, g * a.value)

    out._backward = _bw
    return out


def div(a: Node, b: Node) -> Node:
    tape = _same_tape(a, b, "div")
    _binary_shape(a, b, "div")
    if np.any(b.value == 0.0):
        raise DomainError("div: divisor contains zero entries")
    out = Node(a.value / b.value, (a, b), "div", tape)

    def _bw(g):
        _accumulate(a, g / b.value)
        _accumulate(b, -g * a.value / (b.value * b.value))

    out._backward = _bw
    return out


def matmul(a: Node, b: Node) -> Node:
    tape = _same_tape(a, b, "matmul")
    if a.value.shape[1] != b.value.shape[0]:
        raise ShapeError(
            f"matmul: shapes {a.value.shape} and {b.value.shape} do not conform"
        )
    out = Node(a.value @ b.value, (a, b), "matmul", tape)

    def _bw(g):
        a.grad += g @ b.value.T
        b.grad += a.value.T @ g

    out._backward = _bw
    return out


# ---------------------------------------------------------------------------
# ops with a plain-number or constant-array second argument
# ---------------------------------------------------------------------------


def scalar_mul(a: Node, c: float) -> Node:
    c = float(c)
    out = Node(a.value * c, (a,), "scalar_mul", a.tape)

    def _bw(g):
        a.grad += g * c

    out._backward = _bw
    return out


def add_scalar(a: Node, c: float) -> Node:
    c = float(c)
    out = Node(a.value + c, (a,), "add_scalar", a.tape)

    def _bw(g):
        a.grad += g

    out._backward = _bw
    return out


def mul_const(a: Node, const) -> Node:
    """Elementwise product with a fixed (non-differentiated) array."""
    carr = as_matrix(const)
    if carr.shape != a.value.shape:
        raise ShapeError(
            f"mul_const: shapes {a.value.shape} and {carr.shape} do not conform"
        )
    out = Node(a.value * carr, (a,), "mul_const", a.tape)

    def _bw(g):
        a.grad += g * carr

    out._backward = _bw
    return out


# ---------------------------------------------------------------------------
# unary elementwise
# ---------------------------------------------------------------------------


def transpose(a: Node) -> Node:
    out = Node(np.ascontiguousarray(a.value.T), (a,), "transpose", a.tape)

    def _bw(g):
        a.grad += g.T

    out._backward = _bw
    return out


def absval(a: Node) -> Node:
    out = Node(np.abs(a.value), (a,), "abs", a.tape)

    def _bw(g):
        a.grad += g * np.sign(a.value)

    out._backward = _bw
    return out


def sigmoid(a: Node) -> Node:
    # Stable in both tails: exp of a non-positive argument only.
    x = a.value
    s = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out = Node(s, (a,), "sigmoid", a.tape)

    def _bw(g):
        a.grad += g * s * (1.0 - s)

    out._backward = _bw
    return out


def relu(a: Node) -> Node:
    return maximum(a, 0.0, _op="relu")


def maximum(a: Node, c: float, _op: str = "maximum") -> Node:
    """Elementwise max with a constant; subgradient at the kink is 0."""
    c = float(c)
    out = Node(np.maximum(a.value, c), (a,), _op, a.tape)
    mask = a.value > c

    def _bw(g):
        a.grad += g * mask

    out._backward = _bw
    return out


def exp(a: Node) -> Node:
    v = np.exp(a.value)
    if not np.all(np.isfinite(v)):
        raise DomainError("exp: result overflows float64")
    out = Node(v, (a,), "exp", a.tape)

    def _bw(g):
        a.grad += g * v

    out._backward = _bw
    return out


def log(a: Node) -> Node:
    if np.any(a.value <= 0.0):
        raise DomainError("log: input contains non-positive entries")
    out = Node(np.log(a.value), (a,), "log", a.tape)

    def _bw(g):
        a.grad += g / a.value

    out._backward = _bw
    return out


def exp2(a: Node) -> Node:
    """Elementwise 2**x."""
    v = np.exp2(a.value)
    if not np.all(np.isfinite(v)):
        raise DomainError("exp2: result overflows float64")
    out = Node(v, (a,), "exp2", a.tape)
    ln2 = np.log(2.0)

    def _bw(g):
        a.grad += g * v * ln2

    out._backward = _bw
    return out


def softmax_rows(a: Node) -> Node:
    # Per-row max subtraction keeps exp arguments non-positive.
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=1, keepdims=True)
    out = Node(s, (a,), "softmax_rows", a.tape)

    def _bw(g):
        a.grad += s * (g - (g * s).sum(axis=1, keepdims=True))

    out._backward = _bw
    return out


# ---------------------------------------------------------------------------
# reductions and broadcasts
# ---------------------------------------------------------------------------


def row_sum(a: Node) -> Node:
    """Sum along each row: (m, n) -> (m, 1)."""
    out = Node(a.value.sum(axis=1, keepdims=True), (a,), "row_sum", a.tape)

    def _bw(g):
        a.grad += g  # (m,1) broadcasts over columns

    out._backward = _bw
    return out


def col_sum(a: Node) -> Node:
    """Sum along each column: (m, n) -> (1, n)."""
    out = Node(a.value.sum(axis=0, keepdims=True), (a,), "col_sum", a.tape)

    def _bw(g):
        a.grad += g

    out._backward = _bw
    return out


def sum_all(a: Node) -> Node:
    out = Node(np.array([[a.value.sum()]]), (a,), "sum_all", a.tape)

    def _bw(g):
        a.grad += g[0, 0]

    out._backward = _bw
    return out


def max_all(a: Node) -> Node:
    """Largest entry as a 1x1 node; gradient flows to the first argmax."""
    flat_idx = int(np.argmax(a.value))
    idx = np.unravel_index(flat_idx, a.value.shape)
    out = Node(np.array([[a.value[idx]]]), (a,), "max_all", a.tape)

    def _bw(g):
        a.grad[idx] += g[0, 0]

    out._backward = _bw
    return out


def min_all(a: Node) -> Node:
    """Smallest entry as a 1x1 node; gradient flows to the first argmin."""
    flat_idx = int(np.argmin(a.value))
    idx = np.unravel_index(flat_idx, a.value.shape)
    out = Node(np.array([[a.value[idx]]]), (a,), "min_all", a.tape)

    def _bw(g):
        a.grad[idx] += g[0, 0]

    out._backward = _bw
    return out


def broadcast_rows(a: Node, m: int) -> Node:
    """Tile a 1xN row vector down to an MxN matrix."""
    if a.value.shape[0] != 1:
        raise ShapeError(f"broadcast_rows: expected a 1xN row vector, got {a.value.shape}")
    out = Node(np.repeat(a.value, m, axis=0), (a,), "broadcast_rows", a.tape)

    def _bw(g):
        a.grad += g.sum(axis=0, keepdims=True)

    out._backward = _bw
    return out


def broadcast_cols(a: Node, n: int) -> Node:
    """Tile an Mx1 column vector across to an MxN matrix."""
    if a.value.shape[1] != 1:
        raise ShapeError(f"broadcast_cols: expected an Mx1 column vector, got {a.value.shape}")
    out = Node(np.repeat(a.value, n, axis=1), (a,), "broadcast_cols", a.tape)

    def _bw(g):
        a.grad += g.sum(axis=1, keepdims=True)

    out._backward = _bw
    return out


def masked_sum(a: Node, mask) -> Node:
    """Weighted sum of the entries selected (and scaled) by a fixed mask."""
    marr = as_matrix(mask)
    if marr.shape != a.value.shape:
        raise ShapeError(
            f"masked_sum: shapes {a.value.shape} and {marr.shape} do not conform"
        )
    out = Node(np.array([[(a.value * marr).sum()]]), (a,), "masked_sum", a.tape)

    def _bw(g):
        a.grad += marr * g[0, 0]

    out._backward = _bw
    return out


def entry(a: Node, i: int, j: int) -> Node:
    """Extract a single entry as a 1x1 node."""
    m, n = a.value.shape
    if not (0 <= i < m and 0 <= j < n):
        raise ParameterError(f"entry: index ({i}, {j}) out of range for shape {a.value.shape}")
    out = Node(np.array([[a.value[i, j]]]), (a,), "entry", a.tape)

    def _bw(g):
        a.grad[i, j] += g[0, 0]

    out._backward = _bw
    return out


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------


def finite_difference_check(build, params, step: float = 1e-6) -> float:
    """Compare analytic gradients of a scalar function against central differences.

    ``build(tape, leaves)`` must construct and return a 1x1 loss node from the
    given leaf nodes; it is called repeatedly with perturbed copies of
    ``params`` and must be deterministic. Returns the maximum over all
    parameter entries of ``|analytic - numeric| / max(1, |numeric|)``.
    """
    if step <= 0:
        raise ParameterError(f"step must be positive, got {step}")
    params = [as_matrix(p) for p in params]

    def evaluate(arrays):
        tape = Tape()
        leaves = [tape.leaf(arr) for arr in arrays]
        loss = build(tape, leaves)
        if loss.value.shape != (1, 1):
            raise ShapeError(f"loss must be 1x1, got shape {loss.value.shape}")
        if not np.isfinite(loss.value[0, 0]):
            raise DomainError("function value is not finite")
        return tape, leaves, loss

    tape, leaves, loss = evaluate(params)
    tape.backward(loss)
    analytic = [leaf.grad.copy() for leaf in leaves]

    worst = 0.0
    for pi, base in enumerate(params):
        it = np.nditer(base, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            plus = [p.copy() for p in params]
            plus[pi][idx] += step
            minus = [p.copy() for p in params]
            minus[pi][idx] -= step
            f_plus = float(evaluate(plus)[2].value[0, 0])
            f_minus = float(evaluate(minus)[2].value[0, 0])
            numeric = (f_plus - f_minus) / (2.0 * step)
            err = abs(analytic[pi][idx] - numeric) / max(1.0, abs(numeric))
            worst = max(worst, err)
    return worst
