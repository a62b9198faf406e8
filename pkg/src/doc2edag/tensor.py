"""Minimal reverse-mode automatic differentiation over numpy arrays.

Operations record a backward rule on the active :class:`Tape` whenever one
of their inputs requires a gradient. Shapes must match exactly; the only
broadcasts are explicit masks and trailing-dimension bias vectors.

Usage:
    with Tape():
        loss = reduce_sum(mul(w, x))
    backward(loss)
    w.grad
"""

from __future__ import annotations

import contextvars
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from doc2edag.exceptions import NonDeterminismError, ShapeError, TapeError

logger = logging.getLogger("doc2edag.tensor")

DEFAULT_DTYPE = np.float32
LAYER_NORM_EPS = 1e-5

BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]

_ACTIVE_TAPE: contextvars.ContextVar[Tape | None] = contextvars.ContextVar(
    "doc2edag_active_tape", default=None
)


class Tensor:
    """A numpy array that may take part in gradient recording."""

    __slots__ = ("data", "requires_grad", "grad", "name", "_tape")

    def __init__(
        self,
        data: Any,
        *,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: Any = None,
    ) -> None:
        array = np.asarray(data)
        if dtype is not None:
            array = array.astype(dtype, copy=False)
        elif not np.issubdtype(array.dtype, np.floating):
            array = array.astype(DEFAULT_DTYPE)
        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._tape: Tape | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> Tensor:
        """Same data, outside any gradient recording."""
        return Tensor(self.data, name=self.name)

    def zero_grad(self) -> None:
        self.grad = None

    def __add__(self, other: Tensor) -> Tensor:
        return add(self, other)

    def __mul__(self, other: Tensor) -> Tensor:
        return mul(self, other)

    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{label})"


@dataclass
class _Node:
    name: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Tape:
    """Records operations in execution order for one backward pass.

    A tape is single-use: after :func:`backward` it is consumed.
    """

    def __init__(self) -> None:
        self._nodes: list[_Node] = []
        self._produced: set[int] = set()
        self._consumed = False
        self._token: contextvars.Token[Tape | None] | None = None

    def __enter__(self) -> Tape:
        if self._consumed:
            raise TapeError("tape already consumed by a backward pass")
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *args: Any) -> None:
        if self._token is not None:
            _ACTIVE_TAPE.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def consumed(self) -> bool:
        return self._consumed

    def _append(self, node: _Node) -> None:
        self._nodes.append(node)
        self._produced.add(id(node.output))

    def run_backward(self, loss: Tensor) -> None:
        if self._consumed:
            raise TapeError("tape already consumed; run the forward pass again")
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self._nodes):
            upstream = grads.pop(id(node.output), None)
            if upstream is None:
                continue
            for inp, g in zip(node.inputs, node.backward(upstream)):
                if g is None or not inp.requires_grad:
                    continue
                if g.shape != inp.data.shape:
                    raise ShapeError(
                        f"{node.name}: gradient shape {g.shape} != input shape {inp.shape}",
                        primitive=node.name,
                        shapes=(g.shape, inp.shape),
                    )
                key = id(inp)
                if key in self._produced:
                    grads[key] = grads[key] + g if key in grads else g
                else:
                    g = g.astype(inp.data.dtype, copy=False)
                    inp.grad = g.copy() if inp.grad is None else inp.grad + g
        self._consumed = True
        self._nodes.clear()
        self._produced.clear()


def active_tape() -> Tape | None:
    return _ACTIVE_TAPE.get()


def record(
    name: str,
    inputs: Sequence[Tensor],
    output: np.ndarray,
    backward: BackwardFn,
) -> Tensor:
    """Wrap ``output`` as a tensor, recording ``backward`` when needed.

    ``backward`` maps the upstream gradient to one gradient (or None) per
    input. Custom fused primitives use this entry point too.
    """
    out = Tensor(output, dtype=output.dtype)
    tape = _ACTIVE_TAPE.get()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out._tape = tape
        tape._append(_Node(name, tuple(inputs), out, backward))
    return out


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every requires-grad leaf.

    Raises:
        ShapeError: ``loss`` is not a scalar.
        TapeError: ``loss`` was not recorded, or its tape was already used.
    """
    if loss.data.size != 1 or loss.ndim != 0:
        raise ShapeError(
            f"backward needs a scalar loss, got shape {loss.shape}",
            primitive="backward",
            shapes=(loss.shape,),
        )
    if loss._tape is None:
        raise TapeError("loss was not produced under a recording tape")
    loss._tape.run_backward(loss)


def _shape_error(primitive: str, detail: str, *tensors: Any) -> ShapeError:
    shapes = tuple(tuple(np.shape(t.data if isinstance(t, Tensor) else t)) for t in tensors)
    return ShapeError(f"{primitive}: {detail} (shapes {shapes})", primitive=primitive, shapes=shapes)


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product; ``b`` is either 2-D or shares ``a``'s leading dims."""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise _shape_error("matmul", "inner dimensions differ", a, b)
    shared = b.ndim == 2
    if not shared and a.shape[:-2] != b.shape[:-2]:
        raise _shape_error("matmul", "leading dimensions differ", a, b)
    a_data, b_data = a.data, b.data

    def grad(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ga = g @ np.swapaxes(b_data, -1, -2)
        if shared:
            k, m = b_data.shape
            gb = a_data.reshape(-1, k).T @ g.reshape(-1, m)
        else:
            gb = np.swapaxes(a_data, -1, -2) @ g
        return ga, gb

    return record("matmul", (a, b), a_data @ b_data, grad)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise _shape_error("add", "shapes must match exactly", a, b)
    return record("add", (a, b), a.data + b.data, lambda g: (g, g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of equal-shaped tensors."""
    if a.shape != b.shape:
        raise _shape_error("mul", "shapes must match exactly", a, b)
    a_data, b_data = a.data, b.data
    return record("mul", (a, b), a_data * b_data, lambda g: (g * b_data, g * a_data))


def bias_add(x: Tensor, bias: Tensor) -> Tensor:
    """Add a vector along the trailing dimension."""
    if bias.ndim != 1 or x.ndim < 1 or x.shape[-1] != bias.shape[0]:
        raise _shape_error("bias_add", "bias must match the trailing dimension", x, bias)
    lead = tuple(range(x.ndim - 1))
    return record("bias_add", (x, bias), x.data + bias.data, lambda g: (g, g.sum(axis=lead)))


def scale(x: Tensor, factor: float) -> Tensor:
    return record("scale", (x,), x.data * x.data.dtype.type(factor), lambda g: (g * factor,))


def masked(x: Tensor, mask: np.ndarray) -> Tensor:
    """Multiply by a constant 0/1 mask broadcastable to ``x``."""
    try:
        m = np.broadcast_to(np.asarray(mask, dtype=x.data.dtype), x.shape)
    except ValueError:
        raise _shape_error("masked", "mask is not broadcastable", x, mask) from None
    return record("masked", (x,), x.data * m, lambda g: (g * m,))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat: no inputs", primitive="concat")
    ndim = tensors[0].ndim
    ax = axis % ndim
    for t in tensors:
        if t.ndim != ndim or t.shape[:ax] + t.shape[ax + 1 :] != (
            tensors[0].shape[:ax] + tensors[0].shape[ax + 1 :]
        ):
            raise _shape_error("concat", f"off-axis dimensions differ on axis {axis}", *tensors)
    sizes = [t.shape[ax] for t in tensors]
    bounds = np.cumsum([0, *sizes])

    def grad(g: np.ndarray) -> list[np.ndarray]:
        return [
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=ax) for i in range(len(sizes))
        ]

    return record("concat", tensors, np.concatenate([t.data for t in tensors], axis=ax), grad)


def select(x: Tensor, key: Any) -> Tensor:
    """Slice or gather with numpy indexing; repeated indices accumulate gradient."""
    try:
        out = x.data[key]
    except IndexError as e:
        raise _shape_error("select", str(e), x) from None
    shape = x.data.shape
    dtype = x.data.dtype

    def grad(g: np.ndarray) -> tuple[np.ndarray]:
        gx = np.zeros(shape, dtype=dtype)
        np.add.at(gx, key, g)
        return (gx,)

    return record("select", (x,), np.array(out, copy=True), grad)


def embedding_lookup(table: Tensor, ids: Any) -> Tensor:
    """Rows of ``table`` for integer ``ids`` of any shape."""
    index = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise _shape_error("embedding_lookup", "table must be 2-D", table)
    if index.size and (index.min() < 0 or index.max() >= table.shape[0]):
        raise _shape_error("embedding_lookup", "id out of range", table, index)
    shape, dtype = table.data.shape, table.data.dtype

    def grad(g: np.ndarray) -> tuple[np.ndarray]:
        gt = np.zeros(shape, dtype=dtype)
        np.add.at(gt, index, g)
        return (gt,)

    return record("embedding_lookup", (table,), table.data[index], grad)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError:
        raise _shape_error("reshape", f"cannot reshape to {tuple(shape)}", x) from None
    original = x.data.shape
    return record("reshape", (x,), out, lambda g: (g.reshape(original),))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(a % x.ndim for a in axes) != list(range(x.ndim)):
        raise _shape_error("transpose", f"invalid axes {axes}", x)
    inverse = tuple(np.argsort([a % x.ndim for a in axes]))
    return record("transpose", (x,), np.transpose(x.data, axes), lambda g: (np.transpose(g, inverse),))


def softmax(x: Tensor, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """Softmax along ``axis``; masked entries (mask 0) get probability exactly 0.

    Rows with every entry masked produce all zeros.
    """
    data = x.data
    if mask is not None:
        try:
            keep = np.broadcast_to(np.asarray(mask).astype(bool), data.shape)
        except ValueError:
            raise _shape_error("softmax", "mask is not broadcastable", x, mask) from None
        z = np.where(keep, data, -np.inf)
    else:
        keep = None
        z = data
    top = np.max(z, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    e = np.exp(z - top)
    if keep is not None:
        e = np.where(keep, e, 0.0)
    total = e.sum(axis=axis, keepdims=True)
    p = (e / np.where(total == 0, 1.0, total)).astype(data.dtype)

    def grad(g: np.ndarray) -> tuple[np.ndarray]:
        return (p * (g - (g * p).sum(axis=axis, keepdims=True)),)

    return record("softmax", (x,), p, grad)


def sigmoid(x: Tensor) -> Tensor:
    s = np.exp(-np.logaddexp(0.0, -x.data)).astype(x.data.dtype)
    return record("sigmoid", (x,), s, lambda g: (g * s * (1.0 - s),))


def relu(x: Tensor) -> Tensor:
    positive = x.data > 0
    return record("relu", (x,), np.where(positive, x.data, 0).astype(x.data.dtype), lambda g: (g * positive,))


def layer_norm(
    x: Tensor,
    gamma: Tensor | None = None,
    beta: Tensor | None = None,
    axis: int = -1,
    eps: float = LAYER_NORM_EPS,
) -> Tensor:
    """Normalize along ``axis``; affine terms apply along the last axis only."""
    affine = [t for t in (gamma, beta) if t is not None]
    if affine and axis % x.ndim != x.ndim - 1:
        raise _shape_error("layer_norm", "affine terms need the last axis", x)
    for t in affine:
        if t.shape != (x.shape[-1],):
            raise _shape_error("layer_norm", "affine term must match the last axis", x, t)
    data = x.data
    n = data.shape[axis]
    mu = data.mean(axis=axis, keepdims=True)
    centered = data - mu
    inv = 1.0 / np.sqrt((centered**2).mean(axis=axis, keepdims=True) + eps)
    xhat = centered * inv
    out = xhat
    if gamma is not None:
        out = out * gamma.data
    if beta is not None:
        out = out + beta.data
    lead = tuple(range(data.ndim - 1))

    def grad(g: np.ndarray) -> list[np.ndarray | None]:
        dxhat = g * gamma.data if gamma is not None else g
        dx = (inv / n) * (
            n * dxhat
            - dxhat.sum(axis=axis, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=axis, keepdims=True)
        )
        grads: list[np.ndarray | None] = [dx.astype(data.dtype)]
        if gamma is not None:
            grads.append((g * xhat).sum(axis=lead))
        if beta is not None:
            grads.append(g.sum(axis=lead))
        return grads

    return record("layer_norm", (x, *affine), out.astype(data.dtype), grad)


def dropout(x: Tensor, p: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout; the identity when not training or ``p`` is 0."""
    if not train or p <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs a random generator")
    keep = (rng.random(x.shape) >= p).astype(x.data.dtype) / x.data.dtype.type(1.0 - p)
    return record("dropout", (x,), x.data * keep, lambda g: (g * keep,))


def weighted_ce(logits: Tensor, labels: Any, class_weights: Any = None) -> Tensor:
    """Summed cross-entropy of ``logits`` [n, C] against integer ``labels`` [n].

    Each row is weighted by the weight of its gold class.
    """
    y = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or y.shape != (logits.shape[0],):
        raise _shape_error("weighted_ce", "expected logits [n, C] and labels [n]", logits, y)
    num_classes = logits.shape[1]
    if y.size and (y.min() < 0 or y.max() >= num_classes):
        raise _shape_error("weighted_ce", "label out of range", logits, y)
    weights = (
        np.ones(num_classes, dtype=np.float64)
        if class_weights is None
        else np.asarray(class_weights, dtype=np.float64)
    )
    if weights.shape != (num_classes,):
        raise _shape_error("weighted_ce", "one weight per class expected", logits, weights)
    if y.size == 0:
        zero = np.zeros(logits.shape, dtype=logits.data.dtype)
        return record("weighted_ce", (logits,), np.asarray(0.0, dtype=logits.data.dtype), lambda g: (zero,))
    data = logits.data.astype(np.float64)
    top = data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(data - top).sum(axis=1)) + top[:, 0]
    rows = np.arange(y.size)
    w = weights[y]
    loss = float((w * (log_z - data[rows, y])).sum())

    def grad(g: np.ndarray) -> tuple[np.ndarray]:
        probs = np.exp(data - log_z[:, None])
        probs[rows, y] -= 1.0
        return ((g * w[:, None] * probs).astype(logits.data.dtype),)

    return record("weighted_ce", (logits,), np.asarray(loss, dtype=logits.data.dtype), grad)


def logsumexp(x: Tensor, axis: int = -1) -> Tensor:
    data = x.data
    top = data.max(axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    e = np.exp(data - top)
    total = e.sum(axis=axis, keepdims=True)
    out = np.log(total) + top

    def grad(g: np.ndarray) -> tuple[np.ndarray]:
        return ((e / total) * np.expand_dims(g, axis),)

    return record("logsumexp", (x,), np.squeeze(out, axis=axis).astype(data.dtype), grad)


def reduce_sum(x: Tensor, axis: int | None = None) -> Tensor:
    """Sum of all entries (a scalar) or along one axis."""
    shape = x.data.shape

    def grad(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return record("reduce_sum", (x,), np.asarray(x.data.sum(axis=axis)), grad)


def add_scalars(terms: Sequence[Tensor], weights: Sequence[float] | None = None) -> Tensor:
    """Weighted sum of scalar tensors."""
    if not terms:
        return Tensor(np.asarray(0.0, dtype=DEFAULT_DTYPE))
    weights = list(weights) if weights is not None else [1.0] * len(terms)
    for t in terms:
        if t.ndim != 0:
            raise _shape_error("add_scalars", "terms must be scalars", *terms)
    value = np.asarray(sum(w * t.data for w, t in zip(weights, terms)), dtype=terms[0].data.dtype)

    def grad(g: np.ndarray) -> list[np.ndarray]:
        return [np.asarray(g * w, dtype=t.data.dtype) for w, t in zip(weights, terms)]

    return record("add_scalars", terms, value, grad)


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``x`` is promoted to float64 and perturbed in place while checking, so
    ``f`` may read it directly (e.g. a layer parameter). The relative error
    denominator is ``max(|analytic|, |numeric|, 1e-8)``.

    Raises:
        NonDeterminismError: Two forward evaluations of ``f`` differ.
    """
    original_dtype, original_flag = x.data.dtype, x.requires_grad
    x.data = x.data.astype(np.float64, copy=True)
    x.requires_grad = True
    x.grad = None
    try:
        first, second = f(x).data.copy(), f(x).data.copy()
        if first.shape != ():
            raise ShapeError(
                f"grad_check needs a scalar function, got shape {first.shape}",
                primitive="grad_check",
                shapes=(first.shape,),
            )
        if not np.array_equal(first, second):
            raise NonDeterminismError(f"f returned {first!r} then {second!r}")
        with Tape():
            loss = f(x)
        backward(loss)
        analytic = x.grad if x.grad is not None else np.zeros_like(x.data)
        numeric = np.zeros_like(x.data)
        flat = x.data.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            plus = float(f(x).data)
            flat[i] = saved - eps
            minus = float(f(x).data)
            flat[i] = saved
            numeric.reshape(-1)[i] = (plus - minus) / (2 * eps)
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
        error = float(np.max(np.abs(analytic - numeric) / denom)) if flat.size else 0.0
        logger.debug("grad_check over %d entries: max relative error %.3e", flat.size, error)
        return error
    finally:
        x.data = x.data.astype(original_dtype)
        x.requires_grad = original_flag
        x.grad = None
