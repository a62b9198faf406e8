"""The Doc2EDAG network.

Sentences are encoded token by token and tagged by a CRF. Recognized
mentions and sentences are then encoded jointly at document level, event
types are triggered from a pooled document embedding, and every triggered
type's event table is generated as an EDAG: paths grow one role at a time
and each growth step is a binary decision per candidate entity, made with
the path's memory of already chosen arguments in context.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from doc2edag.baselines import (
    dcfee_m_decode,
    dcfee_o_decode,
    derive_key_sentence_labels,
    greedy_decode,
    select_key_sentences,
)
from doc2edag.corpus import truncate
from doc2edag.edag import edag_to_records, records_to_edag, validate_edag
from doc2edag.exceptions import ConfigError, ShapeError
from doc2edag.layers import (
    EVAL,
    AwaPool,
    CrfLayer,
    Embedding,
    ForwardContext,
    Linear,
    Module,
    TransformerEncoder,
    normal_init,
)
from doc2edag.models.corpus import Document, EntityMention, EventRecord
from doc2edag.models.edag import Edag
from doc2edag.models.labeling import LabeledDoc, spans_from_tags
from doc2edag.models.prediction import DocumentPrediction, PredictionDiagnostics
from doc2edag.models.run import ModelConfig
from doc2edag.models.schema import EventTypeSpec, SchemaRegistry
from doc2edag.tensor import (
    DEFAULT_DTYPE,
    Tensor,
    add,
    add_scalars,
    bias_add,
    concat,
    dropout,
    embedding_lookup,
    reshape,
    select,
    weighted_ce,
)

logger = logging.getLogger("doc2edag.network")

# scores (path histories, level) -> expansion probabilities [P, N_e + 1]
Scorer = Callable[[list[tuple[int | None, ...]], int], np.ndarray]


class CharVocabulary:
    """Character ids; 0 pads and 1 stands for unseen characters."""

    PAD = 0
    UNK = 1

    def __init__(self, chars: Iterable[str]) -> None:
        self.chars = sorted(set(chars))
        self._index = {c: i + 2 for i, c in enumerate(self.chars)}

    @classmethod
    def build(cls, documents: Iterable[Document]) -> CharVocabulary:
        return cls(c for doc in documents for raw in doc.raw_sentences for c in raw)

    @property
    def size(self) -> int:
        return len(self.chars) + 2

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self._index.get(t, self.UNK) for t in tokens]


def scheduled_sampling_prob(epoch: int, config: ModelConfig) -> float:
    """Probability of feeding gold mentions to the document encoder at ``epoch``.

    Constant before the start epoch, linear to the end probability, constant after.
    """
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    start, end = config.ss_start_epoch, config.ss_end_epoch
    if epoch <= start:
        return config.ss_start_prob
    if epoch >= end:
        return config.ss_end_prob
    frac = (epoch - start) / (end - start)
    return config.ss_start_prob + frac * (config.ss_end_prob - config.ss_start_prob)


@dataclass
class EncodedDoc:
    """Everything the decoders read from one document."""

    doc: Document
    token_states: Tensor
    lengths: np.ndarray
    mentions: list[EntityMention]
    sentence_embeddings: Tensor
    entity_names: list[str]
    entity_tensor: Tensor
    sentence_tensor: Tensor

    @property
    def num_entities(self) -> int:
        return len(self.entity_names)

    @property
    def num_sentences(self) -> int:
        return self.sentence_tensor.shape[0]


@dataclass(frozen=True)
class PathState:
    """A partial path: chosen entity indices (None for NA) and its log-probability."""

    history: tuple[int | None, ...] = ()
    log_prob: float = 0.0

    @property
    def role_position(self) -> int:
        return len(self.history)


@dataclass
class LossBreakdown:
    """One document's (or batch's) objective and its logged parts."""

    objective: Tensor
    total: float
    er: float
    tr: float
    dag: float
    key: float = 0.0
    mention_mismatches: int = 0
    used_gold_mentions: bool = True


@dataclass
class DocumentAnalysis:
    """Decoder-independent outputs of one inference pass."""

    encoded: EncodedDoc
    trigger_probs: dict[str, float]
    key_sentence_probs: dict[str, np.ndarray] = field(default_factory=dict)


def _log(p: float) -> float:
    return math.log(max(p, 1e-12))


def generate_edag(
    entity_names: Sequence[str],
    spec: EventTypeSpec,
    scorer: Scorer,
    threshold: float = 0.5,
    frontier_cap: int = 64,
) -> tuple[Edag, int]:
    """Expand paths breadth-wise over the roles of ``spec`` in generation order.

    Every candidate at or above ``threshold`` spawns a child. The NA child
    spawns when the NA candidate reaches the threshold or when no entity
    does. Frontiers larger than ``frontier_cap`` keep their most probable
    paths. Returns the validated EDAG and the number of truncations.
    """
    num_entities = len(entity_names)
    frontier = [PathState()]
    truncations = 0
    for level in range(len(spec.roles)):
        probs = np.asarray(scorer([p.history for p in frontier], level), dtype=np.float64)
        if probs.shape != (len(frontier), num_entities + 1):
            raise ShapeError(
                f"scorer returned {probs.shape}, expected {(len(frontier), num_entities + 1)}",
                primitive="generate_edag",
                shapes=(probs.shape,),
            )
        grown: list[PathState] = []
        for path, row in zip(frontier, probs):
            chosen = [j for j in range(num_entities) if row[j] >= threshold]
            for j in chosen:
                grown.append(PathState((*path.history, j), path.log_prob + _log(row[j])))
            if row[num_entities] >= threshold or not chosen:
                grown.append(
                    PathState((*path.history, None), path.log_prob + _log(row[num_entities]))
                )
        if len(grown) > frontier_cap:
            truncations += 1
            logger.debug(
                "%s level %d: frontier of %d paths capped at %d",
                spec.code,
                level,
                len(grown),
                frontier_cap,
            )
            grown = sorted(grown, key=lambda p: -p.log_prob)[:frontier_cap]
        frontier = grown

    roles = spec.ordered_role_names
    records = [
        EventRecord(
            event_type=spec.code,
            args={
                role: (entity_names[j] if j is not None else None)
                for role, j in zip(roles, path.history)
            },
        )
        for path in frontier
    ]
    edag = records_to_edag(records, spec)
    validate_edag(edag)
    return edag, truncations


def _clip_labeled(labeled: LabeledDoc, doc: Document) -> LabeledDoc:
    if doc is labeled.doc:
        return labeled
    tags = [row[: len(tokens)] for row, tokens in zip(labeled.tags, doc.sentences)]
    return labeled.model_copy(update={"doc": doc, "tags": tags})


class Doc2EdagModel(Module):
    """Entity recognition, document encoding, triggering and EDAG generation."""

    def __init__(
        self,
        config: ModelConfig,
        registry: SchemaRegistry,
        vocab: CharVocabulary,
        seed: int = 0,
    ) -> None:
        super().__init__()
        if config.vocab_size not in (0, vocab.size):
            raise ConfigError(
                f"config vocab_size {config.vocab_size} != vocabulary size {vocab.size}",
                key="vocab_size",
            )
        self.config = config.model_copy(update={"vocab_size": vocab.size})
        self.registry = registry
        self.vocab = vocab
        cfg = self.config
        d, p = cfg.d_w, cfg.dropout
        rng = np.random.default_rng(seed)

        def encoder() -> TransformerEncoder:
            return TransformerEncoder(d, cfg.num_layers, cfg.ff_dim, cfg.num_heads, rng, p)

        self.token_embedding = self.add_child("token_embedding", Embedding(vocab.size, d, rng))
        self.token_position = self.add_child("token_position", Embedding(cfg.max_sent_len, d, rng))
        self.transformer1 = self.add_child("transformer1", encoder())
        self.crf = self.add_child(
            "crf", CrfLayer(d, registry.num_tags, rng, tag_vocabulary=registry.tag_vocabulary)
        )
        self.mention_awa = self.add_child("mention_awa", AwaPool(d, rng, p))
        self.sentence_awa = self.add_child("sentence_awa", AwaPool(d, rng, p))
        self.merge_awa = self.add_child("merge_awa", AwaPool(d, rng, p))
        self.document_awa = self.add_child("document_awa", AwaPool(d, rng, p))
        self.sentence_position = self.add_child("sentence_position", Embedding(cfg.max_sents, d, rng))
        self.transformer2 = self.add_child("transformer2", encoder())

        self.trigger = self.add_child("trigger", Module())
        for code in registry.codes:
            self.trigger.add_child(code, Linear(d, 2, rng))

        self._role_offsets: dict[str, int] = {}
        offset = 0
        for spec in registry.specs:
            self._role_offsets[spec.code] = offset
            offset += len(spec.roles)
        self.role_indicator = self.add_child("role_indicator", Embedding(offset, d, rng))
        self.na_candidate = self.add_param("na_candidate", normal_init(rng, (1, d)))
        self.transformer3 = self.add_child("transformer3", encoder())
        self.expansion = self.add_child("expansion", Linear(d, 2, rng))

        self.key_sentence = self.add_child("key_sentence", Module())
        for code in registry.codes:
            self.key_sentence.add_child(code, Linear(d, 2, rng))

    # ------------------------------------------------------------------
    # Sentence level
    # ------------------------------------------------------------------

    def prepare(self, doc: Document) -> Document:
        return truncate(doc, self.config.max_sents, self.config.max_sent_len).doc

    def encode_sentences(self, doc: Document, ctx: ForwardContext = EVAL) -> tuple[Tensor, np.ndarray]:
        """Token states [S, L, d] of an already truncated document, plus lengths."""
        if doc.num_sentences == 0:
            raise ShapeError("cannot encode a document without sentences", primitive="encode")
        lengths = np.array([len(s) for s in doc.sentences], dtype=np.int64)
        width = int(lengths.max())
        ids = np.full((doc.num_sentences, width), CharVocabulary.PAD, dtype=np.int64)
        for i, tokens in enumerate(doc.sentences):
            ids[i, : len(tokens)] = self.vocab.encode(tokens)
        positions = np.broadcast_to(np.arange(width), ids.shape)
        x = add(
            embedding_lookup(self.token_embedding.table, ids),
            embedding_lookup(self.token_position.table, positions),
        )
        x = dropout(x, self.config.dropout, ctx.active_dropout, ctx.rng)
        mask = np.arange(width)[None, :] < lengths[:, None]
        return self.transformer1(x, mask, ctx), lengths

    def tag_ids(self, tags: Sequence[Sequence[str]], width: int) -> np.ndarray:
        ids = np.zeros((len(tags), width), dtype=np.int64)
        for i, row in enumerate(tags):
            ids[i, : len(row)] = [self.registry.tag_id(t) for t in row]
        return ids

    def recognize(self, doc: Document, emissions: np.ndarray, lengths: np.ndarray) -> list[EntityMention]:
        """Viterbi spans as mentions, in document order."""
        mentions = []
        for sent_idx, path in enumerate(self.crf.decode(emissions, lengths)):
            tags = [self.registry.tag_vocabulary[t] for t in path]
            raw = doc.raw_sentences[sent_idx]
            for start, end, label in spans_from_tags(tags):
                mentions.append(
                    EntityMention(
                        sent_idx=sent_idx, span=(start, end), surface=raw[start:end], label=label
                    )
                )
        return mentions

    def encode_and_recognize(
        self,
        doc: Document,
        gold_tags: Sequence[Sequence[str]] | None = None,
        ctx: ForwardContext = EVAL,
    ) -> tuple[Tensor, np.ndarray, Tensor | None, list[EntityMention]]:
        """Token states, lengths, the CRF loss (with gold tags) and predicted mentions.

        Predicted mentions are decoded in either case; the training loop
        needs them for scheduled sampling.
        """
        h, lengths = self.encode_sentences(doc, ctx)
        emissions = self.crf.emissions(h)
        er_loss = None
        if gold_tags is not None:
            er_loss = self.crf.nll(emissions, self.tag_ids(gold_tags, h.shape[1]), lengths)
        predicted = self.recognize(doc, emissions.data, lengths)
        return h, lengths, er_loss, predicted

    # ------------------------------------------------------------------
    # Document level
    # ------------------------------------------------------------------

    def _mention_embeddings(self, h: Tensor, mentions: Sequence[EntityMention], ctx: ForwardContext) -> Tensor:
        width = max(m.end - m.start for m in mentions)
        rows = np.zeros((len(mentions), width), dtype=np.int64)
        cols = np.zeros((len(mentions), width), dtype=np.int64)
        mask = np.zeros((len(mentions), width), dtype=bool)
        for i, m in enumerate(mentions):
            n = m.end - m.start
            rows[i] = m.sent_idx
            cols[i, :n] = np.arange(m.start, m.end)
            cols[i, n:] = m.start
            mask[i, :n] = True
        return self.mention_awa(select(h, (rows, cols)), mask, ctx)

    def encode_document(
        self,
        doc: Document,
        h: Tensor,
        lengths: np.ndarray,
        mentions: Sequence[EntityMention],
        ctx: ForwardContext = EVAL,
    ) -> EncodedDoc:
        """Build the entity tensor (one row per surface name) and the sentence tensor."""
        d = self.config.d_w
        num_sents = h.shape[0]
        mask = np.arange(h.shape[1])[None, :] < lengths[:, None]
        sentences = add(
            self.sentence_awa(h, mask, ctx),
            embedding_lookup(self.sentence_position.table, np.arange(num_sents)),
        )
        mentions = list(mentions)
        num_mentions = len(mentions)
        if num_mentions:
            mention_rows = self._mention_embeddings(h, mentions, ctx)
            joint = concat([mention_rows, sentences], axis=0)
        else:
            joint = sentences
        if self.config.use_doc_encoder:
            n = joint.shape[0]
            joint = reshape(
                self.transformer2(reshape(joint, (1, n, d)), np.ones((1, n), dtype=bool), ctx),
                (n, d),
            )
        sentence_tensor = select(joint, slice(num_mentions, None))

        names: list[str] = []
        groups: dict[str, list[int]] = {}
        for i, m in enumerate(mentions):
            if m.surface not in groups:
                names.append(m.surface)
                groups[m.surface] = []
            groups[m.surface].append(i)
        if names:
            widest = max(len(g) for g in groups.values())
            index = np.zeros((len(names), widest), dtype=np.int64)
            group_mask = np.zeros((len(names), widest), dtype=bool)
            for row, name in enumerate(names):
                members = groups[name]
                index[row, : len(members)] = members
                index[row, len(members) :] = members[0]
                group_mask[row, : len(members)] = True
            entity_tensor = self.merge_awa(select(joint, index), group_mask, ctx)
        else:
            entity_tensor = Tensor(np.zeros((0, d), dtype=DEFAULT_DTYPE))
        return EncodedDoc(
            doc=doc,
            token_states=h,
            lengths=lengths,
            mentions=mentions,
            sentence_embeddings=sentences,
            entity_names=names,
            entity_tensor=entity_tensor,
            sentence_tensor=sentence_tensor,
        )

    # ------------------------------------------------------------------
    # Heads
    # ------------------------------------------------------------------

    def trigger_logits(self, encoded: EncodedDoc, ctx: ForwardContext = EVAL) -> Tensor:
        """Two-way logits [K, 2] per event type from the pooled document embedding."""
        document = self.document_awa(encoded.sentence_tensor, None, ctx)
        rows = [
            reshape(self.trigger.child(code)(document), (1, 2)) for code in self.registry.codes
        ]
        return concat(rows, axis=0)

    def trigger_events(self, encoded: EncodedDoc) -> dict[str, float]:
        return dict(zip(self.registry.codes, _positive_probs(self.trigger_logits(encoded).data)))

    def key_sentence_logits(self, code: str, encoded: EncodedDoc) -> Tensor:
        return self.key_sentence.child(code)(encoded.sentence_embeddings)

    def _indicator(self, spec: EventTypeSpec, level: int) -> Tensor:
        row = self._role_offsets[spec.code] + spec.generation_order[level]
        return select(self.role_indicator.table, row)

    def expansion_logits(
        self,
        encoded: EncodedDoc,
        spec: EventTypeSpec,
        level: int,
        histories: Sequence[Sequence[int | None]],
        ctx: ForwardContext = EVAL,
    ) -> Tensor:
        """Expansion logits [P * (N_e + 1), 2] for every candidate of every path.

        Row ``p * (N_e + 1) + j`` scores entity ``j`` on path ``p``; the last
        row of each path scores the NA candidate.
        """
        d = self.config.d_w
        num_sents, num_entities = encoded.num_sentences, encoded.num_entities
        zero_row = num_sents + num_entities + 1
        table = concat(
            [
                encoded.sentence_tensor,
                encoded.entity_tensor,
                self.na_candidate,
                Tensor(np.zeros((1, d), dtype=DEFAULT_DTYPE)),
            ],
            axis=0,
        )
        memory = np.array(
            [
                [
                    num_sents + j if j is not None and self.config.use_path_memory else zero_row
                    for j in history
                ]
                for history in histories
            ],
            dtype=np.int64,
        ).reshape(len(histories), level)
        base = np.arange(num_sents + num_entities + 1)
        ids = np.concatenate(
            [
                np.broadcast_to(base[:num_sents], (len(histories), num_sents)),
                memory,
                np.broadcast_to(base[num_sents:], (len(histories), num_entities + 1)),
            ],
            axis=1,
        )
        x = bias_add(embedding_lookup(table, ids), self._indicator(spec, level))
        n = ids.shape[1]
        out = self.transformer3(x, np.ones((len(histories), n), dtype=bool), ctx)
        candidates = select(out, (slice(None), slice(num_sents + level, None)))
        flat = reshape(candidates, (len(histories) * (num_entities + 1), d))
        return self.expansion(flat)

    def expand_path(
        self, encoded: EncodedDoc, spec: EventTypeSpec, state: PathState
    ) -> np.ndarray:
        """Expansion probabilities [N_e + 1] of one path; the last entry is NA."""
        logits = self.expansion_logits(encoded, spec, state.role_position, [state.history])
        return _positive_probs(logits.data)

    def scorer(self, encoded: EncodedDoc, spec: EventTypeSpec) -> Scorer:
        def score(histories: list[tuple[int | None, ...]], level: int) -> np.ndarray:
            logits = self.expansion_logits(encoded, spec, level, histories)
            return _positive_probs(logits.data).reshape(len(histories), encoded.num_entities + 1)

        return score

    # ------------------------------------------------------------------
    # Training objective
    # ------------------------------------------------------------------

    def dag_loss(
        self,
        encoded: EncodedDoc,
        spec: EventTypeSpec,
        records: Sequence[EventRecord],
        ctx: ForwardContext = EVAL,
    ) -> tuple[Tensor, int]:
        """Gold-path expansion loss over the gold EDAG of ``records``.

        Gold arguments missing from the candidate entities supervise NA on
        their branch and are counted as mismatches.
        """
        edag = records_to_edag(records, spec)
        index = {name: i for i, name in enumerate(encoded.entity_names)}
        num_entities = encoded.num_entities
        weights = [self.config.gamma, 1.0]

        frontier: list[tuple[int, tuple[int | None, ...]]] = [(edag.root_id, ())]
        terms: list[Tensor] = []
        mismatches = 0
        for level in range(len(spec.roles)):
            if not frontier:
                break
            labels = np.zeros((len(frontier), num_entities + 1), dtype=np.int64)
            grown: list[tuple[int, tuple[int | None, ...]]] = []
            for p, (node_id, history) in enumerate(frontier):
                for child in edag.children_of(node_id):
                    j = index.get(child.argument) if child.argument is not None else None
                    if child.argument is not None and j is None:
                        mismatches += 1
                    if j is None:
                        labels[p, num_entities] = 1
                    else:
                        labels[p, j] = 1
                    grown.append((child.node_id, (*history, j)))
            logits = self.expansion_logits(encoded, spec, level, [h for _, h in frontier], ctx)
            terms.append(weighted_ce(logits, labels.reshape(-1), weights))
            frontier = grown
        if mismatches:
            logger.debug(
                "%s/%s: %d gold argument(s) not among candidates", encoded.doc.doc_id, spec.code, mismatches
            )
        return add_scalars(terms), mismatches

    def compute_loss(
        self,
        labeled: LabeledDoc,
        epoch: int = 0,
        ctx: ForwardContext = EVAL,
        use_key_sentence: bool = True,
    ) -> LossBreakdown:
        """L_all = λ1·L_er + λ2·L_tr + λ3·L_dag, plus the key-sentence loss when enabled.

        Scheduled sampling picks gold or recognized mentions as the entity
        candidates, drawing from ``ctx.rng``.
        """
        cfg = self.config
        doc = self.prepare(labeled.doc)
        gold = _clip_labeled(labeled, doc)

        h, lengths, er_loss, predicted = self.encode_and_recognize(doc, gold.tags, ctx)
        assert er_loss is not None
        p_gold = scheduled_sampling_prob(epoch, cfg)
        use_gold = ctx.rng is None or p_gold >= 1.0 or ctx.rng.random() < p_gold
        mentions = gold.mentions() if use_gold else predicted
        encoded = self.encode_document(doc, h, lengths, mentions, ctx)

        codes = self.registry.codes
        trigger_labels = [int(bool(labeled.tables.get(code))) for code in codes]
        tr_loss = weighted_ce(self.trigger_logits(encoded, ctx), trigger_labels)

        dag_terms: list[Tensor] = []
        mismatches = 0
        for spec in self.registry.specs:
            records = labeled.tables.get(spec.code, [])
            if not records:
                continue
            term, missed = self.dag_loss(encoded, spec, records, ctx)
            dag_terms.append(term)
            mismatches += missed
        dag_loss = add_scalars(dag_terms)

        l_all = add_scalars([er_loss, tr_loss, dag_loss], [cfg.lambda_er, cfg.lambda_tr, cfg.lambda_dag])
        total = cfg.lambda_er * er_loss.item() + cfg.lambda_tr * tr_loss.item() + cfg.lambda_dag * dag_loss.item()

        objective = l_all
        key_value = 0.0
        if use_key_sentence:
            key_labels = derive_key_sentence_labels(gold)
            key_terms = []
            for code in codes:
                labels = np.zeros(encoded.num_sentences, dtype=np.int64)
                if code in key_labels:
                    labels[key_labels[code]] = 1
                key_terms.append(weighted_ce(self.key_sentence_logits(code, encoded), labels))
            key_loss = add_scalars(key_terms)
            key_value = key_loss.item()
            objective = add_scalars([l_all, key_loss])

        return LossBreakdown(
            objective=objective,
            total=total,
            er=er_loss.item(),
            tr=tr_loss.item(),
            dag=dag_loss.item(),
            key=key_value,
            mention_mismatches=mismatches,
            used_gold_mentions=use_gold,
        )

    # ------------------------------------------------------------------
    # Inference
    # ------------------------------------------------------------------

    def analyze(self, doc: Document) -> DocumentAnalysis:
        """Recognize, encode and trigger; reads nothing but the document."""
        doc = self.prepare(doc)
        h, lengths, _, mentions = self.encode_and_recognize(doc)
        encoded = self.encode_document(doc, h, lengths, mentions)
        key_probs = {
            code: _positive_probs(self.key_sentence_logits(code, encoded).data)
            for code in self.registry.codes
        }
        return DocumentAnalysis(
            encoded=encoded, trigger_probs=self.trigger_events(encoded), key_sentence_probs=key_probs
        )

    def triggered_types(self, trigger_probs: dict[str, float]) -> list[str]:
        return [
            code
            for code in self.registry.codes
            if trigger_probs[code] >= self.config.trigger_threshold_for(code)
        ]

    def predict(self, doc: Document, decoder: str = "doc2edag") -> DocumentPrediction:
        analysis = self.analyze(doc)
        encoded = analysis.encoded
        triggered = self.triggered_types(analysis.trigger_probs)
        diagnostics = PredictionDiagnostics()
        if decoder == "doc2edag":
            tables: dict[str, list[EventRecord]] = {code: [] for code in self.registry.codes}
            for code in triggered:
                spec = self.registry.get(code)
                edag, truncations = generate_edag(
                    encoded.entity_names,
                    spec,
                    self.scorer(encoded, spec),
                    threshold=self.config.expand_threshold,
                    frontier_cap=self.config.frontier_cap,
                )
                diagnostics.frontier_truncations += truncations
                tables[code] = edag_to_records(edag, spec)
        elif decoder == "greedy":
            tables = greedy_decode(encoded.mentions, triggered, self.registry)
        elif decoder in ("dcfee-o", "dcfee-m"):
            key_sentences = select_key_sentences(analysis.key_sentence_probs, triggered)
            decode = dcfee_o_decode if decoder == "dcfee-o" else dcfee_m_decode
            tables = decode(encoded.doc, key_sentences, encoded.mentions, self.registry)
        else:
            raise ConfigError(f"unknown decoder {decoder!r}", key="decoder")
        return DocumentPrediction(
            doc_id=doc.doc_id,
            triggered=analysis.trigger_probs,
            tables=tables,
            diagnostics=diagnostics,
            decoder=decoder,
            mentions=encoded.mentions,
        )


def _positive_probs(logits: np.ndarray) -> np.ndarray:
    """Probability of class 1 from two-way logits [..., 2]."""
    logits = np.asarray(logits, dtype=np.float64)
    return np.exp(-np.logaddexp(0.0, logits[..., 0] - logits[..., 1]))

