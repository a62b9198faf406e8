"""Neural building blocks: Transformer encoder, attentive pooling and a BIO CRF."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from doc2edag.exceptions import ShapeError
from doc2edag.models.schema import OUTSIDE_TAG
from doc2edag.tensor import (
    DEFAULT_DTYPE,
    Tensor,
    add,
    bias_add,
    dropout,
    layer_norm,
    masked,
    matmul,
    record,
    relu,
    reshape,
    scale,
    softmax,
    transpose,
)

logger = logging.getLogger("doc2edag.layers")

EMBEDDING_STD = 0.02


@dataclass
class ForwardContext:
    """Training flag plus the random generator that dropout draws from."""

    train: bool = False
    rng: np.random.Generator | None = None
    dropout_enabled: bool = field(default=True)

    @property
    def active_dropout(self) -> bool:
        return self.train and self.dropout_enabled and self.rng is not None


EVAL = ForwardContext()


def glorot_uniform(
    rng: np.random.Generator, fan_in: int, fan_out: int, dtype: Any = DEFAULT_DTYPE
) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)


def normal_init(
    rng: np.random.Generator, shape: tuple[int, ...], dtype: Any = DEFAULT_DTYPE
) -> np.ndarray:
    return rng.normal(0.0, EMBEDDING_STD, size=shape).astype(dtype)


class Module:
    """Container of named parameters and child modules."""

    def __init__(self) -> None:
        self._params: dict[str, Tensor] = {}
        self._children: dict[str, Module] = {}

    def add_param(self, name: str, data: np.ndarray) -> Tensor:
        tensor = Tensor(data, requires_grad=True, name=name, dtype=data.dtype)
        self._params[name] = tensor
        return tensor

    def add_child(self, name: str, module: Module) -> Any:
        self._children[name] = module
        return module

    def child(self, name: str) -> Any:
        return self._children[name]

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, tensor in self._params.items():
            yield prefix + name, tensor
        for name, child in self._children.items():
            yield from child.named_parameters(f"{prefix}{name}.")

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def zero_grad(self) -> None:
        for tensor in self.parameters():
            tensor.grad = None

    def freeze(self) -> None:
        """Strip requires_grad so the parameters can be shared read-only."""
        for tensor in self.parameters():
            tensor.requires_grad = False

    def unfreeze(self) -> None:
        for tensor in self.parameters():
            tensor.requires_grad = True


class Linear(Module):
    def __init__(
        self, in_dim: int, out_dim: int, rng: np.random.Generator, dtype: Any = DEFAULT_DTYPE
    ) -> None:
        super().__init__()
        self.in_dim, self.out_dim = in_dim, out_dim
        self.weight = self.add_param("weight", glorot_uniform(rng, in_dim, out_dim, dtype))
        self.bias = self.add_param("bias", np.zeros(out_dim, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim == 1:
            out = self(reshape(x, (1, x.shape[0])))
            return reshape(out, (self.out_dim,))
        return bias_add(matmul(x, self.weight), self.bias)


class LayerNorm(Module):
    def __init__(self, dim: int, dtype: Any = DEFAULT_DTYPE) -> None:
        super().__init__()
        self.gamma = self.add_param("gamma", np.ones(dim, dtype=dtype))
        self.beta = self.add_param("beta", np.zeros(dim, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta)


class Embedding(Module):
    def __init__(
        self, num: int, dim: int, rng: np.random.Generator, dtype: Any = DEFAULT_DTYPE
    ) -> None:
        super().__init__()
        self.num, self.dim = num, dim
        self.table = self.add_param("table", normal_init(rng, (num, dim), dtype))


# ---------------------------------------------------------------------------
# Transformer
# ---------------------------------------------------------------------------


class MultiHeadAttention(Module):
    def __init__(
        self, dim: int, num_heads: int, rng: np.random.Generator, dtype: Any = DEFAULT_DTYPE
    ) -> None:
        super().__init__()
        if dim % num_heads:
            raise ValueError(f"model dim {dim} is not divisible by {num_heads} heads")
        self.dim, self.num_heads, self.head_dim = dim, num_heads, dim // num_heads
        self.wq = self.add_child("wq", Linear(dim, dim, rng, dtype))
        self.wk = self.add_child("wk", Linear(dim, dim, rng, dtype))
        self.wv = self.add_child("wv", Linear(dim, dim, rng, dtype))
        self.wo = self.add_child("wo", Linear(dim, dim, rng, dtype))

    def _split(self, x: Tensor) -> Tensor:
        b, n, _ = x.shape
        return transpose(reshape(x, (b, n, self.num_heads, self.head_dim)), (0, 2, 1, 3))

    def __call__(self, x: Tensor, mask: np.ndarray, ctx: ForwardContext, p: float) -> Tensor:
        b, n, d = x.shape
        q, k, v = self._split(self.wq(x)), self._split(self.wk(x)), self._split(self.wv(x))
        scores = scale(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(self.head_dim))
        weights = softmax(scores, axis=-1, mask=mask[:, None, None, :])
        if ctx.active_dropout:
            weights = dropout(weights, p, True, ctx.rng)
        context = transpose(matmul(weights, v), (0, 2, 1, 3))
        return self.wo(reshape(context, (b, n, d)))


class TransformerLayer(Module):
    """Pre-norm self-attention and feed-forward sublayers with residuals."""

    def __init__(
        self,
        dim: int,
        ff_dim: int,
        num_heads: int,
        rng: np.random.Generator,
        dtype: Any = DEFAULT_DTYPE,
    ) -> None:
        super().__init__()
        self.norm1 = self.add_child("norm1", LayerNorm(dim, dtype))
        self.attn = self.add_child("attn", MultiHeadAttention(dim, num_heads, rng, dtype))
        self.norm2 = self.add_child("norm2", LayerNorm(dim, dtype))
        self.ff1 = self.add_child("ff1", Linear(dim, ff_dim, rng, dtype))
        self.ff2 = self.add_child("ff2", Linear(ff_dim, dim, rng, dtype))

    def __call__(self, x: Tensor, mask: np.ndarray, ctx: ForwardContext, p: float) -> Tensor:
        h = self.attn(self.norm1(x), mask, ctx, p)
        x = add(x, dropout(h, p, ctx.active_dropout, ctx.rng))
        h = self.ff2(relu(self.ff1(self.norm2(x))))
        return add(x, dropout(h, p, ctx.active_dropout, ctx.rng))


class TransformerEncoder(Module):
    """A stack of Transformer layers followed by a final layer norm."""

    def __init__(
        self,
        dim: int,
        num_layers: int,
        ff_dim: int,
        num_heads: int,
        rng: np.random.Generator,
        dropout_p: float = 0.1,
        dtype: Any = DEFAULT_DTYPE,
    ) -> None:
        super().__init__()
        self.dim, self.dropout_p = dim, dropout_p
        self.layers = [
            self.add_child(f"layer{i}", TransformerLayer(dim, ff_dim, num_heads, rng, dtype))
            for i in range(num_layers)
        ]
        self.norm = self.add_child("norm", LayerNorm(dim, dtype))

    def __call__(self, x: Tensor, mask: np.ndarray, ctx: ForwardContext = EVAL) -> Tensor:
        """Encode ``x`` [B, L, d] under ``mask`` [B, L]; padded rows come out as zeros."""
        mask = np.asarray(mask, dtype=bool)
        if x.ndim != 3 or mask.shape != x.shape[:2] or x.shape[2] != self.dim:
            raise ShapeError(
                f"transformer_encode: expected x [B, L, {self.dim}] and mask [B, L]",
                primitive="transformer_encode",
                shapes=(x.shape, mask.shape),
            )
        if x.shape[1] == 0 or not mask.any(axis=1).all():
            raise ShapeError(
                "transformer_encode: a sequence has no unmasked position",
                primitive="transformer_encode",
                shapes=(x.shape, mask.shape),
            )
        h = x
        for layer in self.layers:
            h = layer(h, mask, ctx, self.dropout_p)
        return masked(self.norm(h), mask[:, :, None])


# ---------------------------------------------------------------------------
# Attentive pooling
# ---------------------------------------------------------------------------


class AwaPool(Module):
    """Scaled dot-product attention pooling with a learned query vector.

    ``u_i = Q . x_i / sqrt(d)``, ``alpha = softmax(u)`` over unmasked rows,
    output ``Dropout(LayerNorm(sum_i alpha_i x_i))``.
    """

    def __init__(
        self,
        dim: int,
        rng: np.random.Generator,
        dropout_p: float = 0.1,
        dtype: Any = DEFAULT_DTYPE,
    ) -> None:
        super().__init__()
        self.dim, self.dropout_p = dim, dropout_p
        self.query = self.add_param("query", normal_init(rng, (dim, 1), dtype))
        self.norm = self.add_child("norm", LayerNorm(dim, dtype))

    def attention(self, x: Tensor, mask: np.ndarray) -> Tensor:
        """Weights [B, n] of ``x`` [B, n, d] under ``mask`` [B, n]."""
        mask = np.asarray(mask, dtype=bool)
        if x.ndim != 3 or mask.shape != x.shape[:2] or x.shape[2] != self.dim:
            raise ShapeError(
                f"awa_pool: expected x [B, n, {self.dim}] and mask [B, n]",
                primitive="awa_pool",
                shapes=(x.shape, mask.shape),
            )
        if x.shape[1] == 0 or not mask.any(axis=1).all():
            raise ShapeError(
                "awa_pool: every row of a group is masked",
                primitive="awa_pool",
                shapes=(x.shape, mask.shape),
            )
        b, n, _ = x.shape
        u = scale(reshape(matmul(x, self.query), (b, n)), 1.0 / math.sqrt(self.dim))
        return softmax(u, axis=-1, mask=mask)

    def __call__(self, x: Tensor, mask: np.ndarray | None = None, ctx: ForwardContext = EVAL) -> Tensor:
        """Pool ``x`` [B, n, d] to [B, d]; a 2-D ``x`` [n, d] pools to [d]."""
        if x.ndim == 2:
            n = x.shape[0]
            row_mask = np.ones((1, n), dtype=bool) if mask is None else np.asarray(mask)[None, :]
            return reshape(self(reshape(x, (1, n, self.dim)), row_mask, ctx), (self.dim,))
        if mask is None:
            mask = np.ones(x.shape[:2], dtype=bool)
        b, n, _ = x.shape
        alpha = self.attention(x, mask)
        pooled = reshape(matmul(reshape(alpha, (b, 1, n)), x), (b, self.dim))
        return dropout(self.norm(pooled), self.dropout_p, ctx.active_dropout, ctx.rng)


# ---------------------------------------------------------------------------
# CRF
# ---------------------------------------------------------------------------


def bio_constraints(tag_vocabulary: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Additive transition and start masks (0 or -inf) forbidding invalid BIO moves.

    ``O -> I-x``, ``B-x -> I-y`` and ``I-x -> I-y`` with ``x != y`` are
    forbidden, as is starting a sentence with an I- tag.
    """
    n = len(tag_vocabulary)
    trans = np.zeros((n, n))
    start = np.zeros(n)
    for j, tag in enumerate(tag_vocabulary):
        if not tag.startswith("I-"):
            continue
        start[j] = -np.inf
        for i, prev in enumerate(tag_vocabulary):
            if prev == OUTSIDE_TAG or prev[2:] != tag[2:]:
                trans[i, j] = -np.inf
    return trans, start


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    top = np.max(a, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.exp(a - top).sum(axis=axis, keepdims=True)) + top
    return np.squeeze(out, axis=axis)


def sequence_score(
    emissions: np.ndarray,
    tags: Sequence[int],
    transitions: np.ndarray,
    start: np.ndarray,
    stop: np.ndarray,
) -> float:
    """Unnormalized log score of one tag path over emissions [L, T]."""
    tags = list(tags)
    score = start[tags[0]] + stop[tags[-1]]
    score += sum(emissions[t, y] for t, y in enumerate(tags))
    score += sum(transitions[a, b] for a, b in zip(tags, tags[1:]))
    return float(score)


def crf_nll(
    emissions: Tensor,
    tags: np.ndarray,
    lengths: np.ndarray,
    transitions: Tensor,
    start: Tensor,
    stop: Tensor,
    constraints: tuple[np.ndarray, np.ndarray] | None = None,
) -> Tensor:
    """Summed negative log-likelihood of gold ``tags`` over a batch of sentences.

    ``emissions`` is [S, L, T]; positions at or beyond ``lengths[s]`` are
    ignored. The partition function comes from the forward algorithm in
    log space and the backward rule from forward-backward marginals.
    """
    e = emissions.data.astype(np.float64)
    if e.ndim != 3 or transitions.shape != (e.shape[2], e.shape[2]):
        raise ShapeError(
            "crf_nll: expected emissions [S, L, T] and transitions [T, T]",
            primitive="crf_nll",
            shapes=(emissions.shape, transitions.shape),
        )
    num_sents, max_len, num_tags = e.shape
    tags = np.asarray(tags, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    if tags.shape != (num_sents, max_len) or lengths.shape != (num_sents,):
        raise ShapeError(
            "crf_nll: tags must be [S, L] and lengths [S]",
            primitive="crf_nll",
            shapes=(emissions.shape, tags.shape, lengths.shape),
        )
    if (lengths < 1).any() or (lengths > max_len).any():
        raise ShapeError("crf_nll: lengths out of range", primitive="crf_nll", shapes=(lengths.shape,))

    trans_mask, start_mask = constraints if constraints is not None else (0.0, 0.0)
    trans = transitions.data.astype(np.float64) + trans_mask
    first = start.data.astype(np.float64) + start_mask
    last = stop.data.astype(np.float64)
    rows = np.arange(num_sents)
    valid = np.arange(max_len)[None, :] < lengths[:, None]
    final = lengths - 1

    # forward
    alphas = np.full((num_sents, max_len, num_tags), -np.inf)
    alphas[:, 0] = first + e[:, 0]
    for t in range(1, max_len):
        step = _logsumexp(alphas[:, t - 1, :, None] + trans[None], axis=1) + e[:, t]
        alphas[:, t] = np.where(valid[:, t, None], step, -np.inf)
    log_z = _logsumexp(alphas[rows, final] + last, axis=1)

    # gold path score
    gold = first[tags[:, 0]] + last[tags[rows, final]]
    gold = gold + np.where(valid, e[rows[:, None], np.arange(max_len)[None, :], tags], 0.0).sum(axis=1)
    pair_valid = valid[:, 1:]
    gold = gold + np.where(pair_valid, trans[tags[:, :-1], tags[:, 1:]], 0.0).sum(axis=1)
    loss = float((log_z - gold).sum())

    def grad(g: np.ndarray) -> list[np.ndarray]:
        betas = np.full((num_sents, max_len, num_tags), -np.inf)
        betas[rows, final] = last
        for t in range(max_len - 2, -1, -1):
            step = _logsumexp(trans[None] + (e[:, t + 1] + betas[:, t + 1])[:, None, :], axis=2)
            inner = (t < final)[:, None]
            betas[:, t] = np.where(inner, step, betas[:, t])
        with np.errstate(invalid="ignore"):
            unary = np.exp(alphas + betas - log_z[:, None, None])
        unary = np.where(valid[:, :, None], np.nan_to_num(unary), 0.0)

        d_emit = unary.copy()
        d_start = unary[:, 0].sum(axis=0)
        d_stop = unary[rows, final].sum(axis=0)
        d_trans = np.zeros((num_tags, num_tags))
        for t in range(max_len - 1):
            live = pair_valid[:, t]
            if not live.any():
                continue
            with np.errstate(invalid="ignore"):
                pair = np.exp(
                    alphas[live, t, :, None]
                    + trans[None]
                    + (e[live, t + 1] + betas[live, t + 1])[:, None, :]
                    - log_z[live, None, None]
                )
            d_trans += np.nan_to_num(pair).sum(axis=0)

        # subtract gold counts
        for s in range(num_sents):
            n = int(lengths[s])
            path = tags[s, :n]
            d_emit[s, np.arange(n), path] -= 1.0
            d_start[path[0]] -= 1.0
            d_stop[path[-1]] -= 1.0
            np.add.at(d_trans, (path[:-1], path[1:]), -1.0)
        scalar = float(g)
        return [
            (scalar * d_emit).astype(emissions.data.dtype),
            (scalar * d_trans).astype(transitions.data.dtype),
            (scalar * d_start).astype(start.data.dtype),
            (scalar * d_stop).astype(stop.data.dtype),
        ]

    return record(
        "crf_nll",
        (emissions, transitions, start, stop),
        np.asarray(loss, dtype=emissions.data.dtype),
        grad,
    )


def viterbi_decode(
    emissions: np.ndarray,
    transitions: np.ndarray,
    start: np.ndarray,
    stop: np.ndarray,
) -> list[int]:
    """Best tag path of emissions [L, T]; ties go to the lower tag index."""
    emissions = np.asarray(emissions, dtype=np.float64)
    length = emissions.shape[0]
    if length == 0:
        return []
    score = start + emissions[0]
    back = np.zeros((length, emissions.shape[1]), dtype=np.int64)
    for t in range(1, length):
        cand = score[:, None] + transitions
        back[t] = np.argmax(cand, axis=0)
        score = cand[back[t], np.arange(cand.shape[1])] + emissions[t]
    best = [int(np.argmax(score + stop))]
    for t in range(length - 1, 0, -1):
        best.append(int(back[t, best[-1]]))
    return best[::-1]


class CrfLayer(Module):
    """Emission projection plus transition, start and stop scores.

    With a tag vocabulary, invalid BIO moves are hard-masked for both the
    loss and decoding.
    """

    def __init__(
        self,
        dim: int,
        num_tags: int,
        rng: np.random.Generator,
        tag_vocabulary: Sequence[str] | None = None,
        dtype: Any = DEFAULT_DTYPE,
    ) -> None:
        super().__init__()
        if tag_vocabulary is not None and len(tag_vocabulary) != num_tags:
            raise ValueError(f"{len(tag_vocabulary)} tags given for a {num_tags}-tag CRF")
        self.num_tags = num_tags
        self.emission = self.add_child("emission", Linear(dim, num_tags, rng, dtype))
        self.transitions = self.add_param("transitions", np.zeros((num_tags, num_tags), dtype=dtype))
        self.start = self.add_param("start", np.zeros(num_tags, dtype=dtype))
        self.stop = self.add_param("stop", np.zeros(num_tags, dtype=dtype))
        self.constraints = bio_constraints(tag_vocabulary) if tag_vocabulary is not None else None

    def emissions(self, h: Tensor) -> Tensor:
        return self.emission(h)

    def nll(self, emissions: Tensor, tags: np.ndarray, lengths: np.ndarray) -> Tensor:
        return crf_nll(
            emissions, tags, lengths, self.transitions, self.start, self.stop, self.constraints
        )

    def _effective(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        trans = self.transitions.data.astype(np.float64)
        first = self.start.data.astype(np.float64)
        if self.constraints is not None:
            trans = trans + self.constraints[0]
            first = first + self.constraints[1]
        return trans, first, self.stop.data.astype(np.float64)

    def decode(self, emissions: np.ndarray, lengths: Sequence[int]) -> list[list[int]]:
        """Viterbi paths of emissions [S, L, T], one per sentence length."""
        trans, first, last = self._effective()
        return [
            viterbi_decode(emissions[s, :n], trans, first, last) for s, n in enumerate(lengths)
        ]
