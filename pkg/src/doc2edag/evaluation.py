"""Event-table-filling metric.

Predicted and gold records of one event type are paired greedily by
similarity without replacement; each pair is scored slot by slot and the
counters are micro-averaged per type.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence

import numpy as np

from doc2edag.exceptions import EvaluationError
from doc2edag.models.corpus import EntityMention, EventRecord
from doc2edag.models.evaluation import (
    EvalReport,
    MentionReport,
    RoleStats,
    ScoreLine,
    SlotCounts,
    SubsetReport,
    TypeReport,
)
from doc2edag.models.schema import EventTypeSpec, SchemaRegistry
from doc2edag.observability import track

logger = logging.getLogger("doc2edag.evaluation")

Tables = Mapping[str, Sequence[EventRecord]]
RecordPair = tuple[EventRecord | None, EventRecord | None]


def similarity(a: EventRecord | None, b: EventRecord | None, spec: EventTypeSpec) -> int:
    """Number of roles whose arguments are equal, both-NA included."""
    a_args = a.args if a is not None else {}
    b_args = b.args if b is not None else {}
    return sum(1 for name in spec.role_names if a_args.get(name) == b_args.get(name))


def pair_records(
    pred: Sequence[EventRecord], gold: Sequence[EventRecord], spec: EventTypeSpec
) -> list[RecordPair]:
    """Greedy best-first pairing; leftovers pair with the all-NA phantom.

    Ties go to the lower prediction index, then the lower gold index.
    """
    pairs: list[RecordPair] = []
    used_pred: set[int] = set()
    used_gold: set[int] = set()
    if pred and gold:
        sim = np.array(
            [[similarity(p, g, spec) for g in gold] for p in pred], dtype=np.int64
        )
        for _ in range(min(len(pred), len(gold))):
            # row-major argmax yields the lowest (pred, gold) index among ties
            i, j = np.unravel_index(int(np.argmax(sim)), sim.shape)
            pairs.append((pred[i], gold[j]))
            used_pred.add(int(i))
            used_gold.add(int(j))
            sim[i, :] = -1
            sim[:, j] = -1
    pairs.extend((p, None) for i, p in enumerate(pred) if i not in used_pred)
    pairs.extend((None, g) for j, g in enumerate(gold) if j not in used_gold)
    return pairs


def score_pair(pair: RecordPair, spec: EventTypeSpec, stats: RoleStats) -> RoleStats:
    """Add one pair's slot outcomes to ``stats`` and return it."""
    pred, gold = pair
    for name in spec.role_names:
        p = pred.args.get(name) if pred is not None else None
        g = gold.args.get(name) if gold is not None else None
        counts = stats.role(spec.code, name)
        if p is not None and p == g:
            counts.tp += 1
        elif p is not None:
            counts.fp += 1
            if g is not None:
                counts.fn += 1
        elif g is not None:
            counts.fn += 1
    return stats


def score_document(pred: Tables, gold: Tables, registry: SchemaRegistry) -> RoleStats:
    """Slot counters of one document over every event type."""
    stats = RoleStats()
    for spec in registry.specs:
        p = list(pred.get(spec.code, ()))
        g = list(gold.get(spec.code, ()))
        if not p and not g:
            continue
        for pair in pair_records(p, g, spec):
            score_pair(pair, spec, stats)
    return stats


def _subset_report(stats: RoleStats, registry: SchemaRegistry, documents: int) -> SubsetReport:
    types: dict[str, TypeReport] = {}
    overall = SlotCounts()
    scored_f1 = []
    for spec in registry.specs:
        total = stats.type_total(spec.code)
        overall.add(total)
        line = ScoreLine.from_counts(total)
        types[spec.code] = TypeReport(
            **line.model_dump(),
            roles={
                name: ScoreLine.from_counts(stats.role(spec.code, name))
                for name in spec.role_names
            },
        )
        if total.tp + total.fp + total.fn:
            scored_f1.append(total.f1)
    return SubsetReport(
        documents=documents,
        types=types,
        overall=ScoreLine.from_counts(overall),
        mean_f1=float(np.mean(scored_f1)) if scored_f1 else 0.0,
    )


@track(name="eval.report", capture_input=False, capture_output=False)
def report(
    predictions: Mapping[str, Tables],
    gold: Mapping[str, Tables],
    registry: SchemaRegistry,
    *,
    mentions: SlotCounts | None = None,
    decoder: str | None = None,
) -> EvalReport:
    """Aggregate the metric over a corpus, with single/multi-event splits.

    Gold documents without a prediction count as empty predictions.

    Raises:
        EvaluationError: A prediction refers to a document absent from gold.
    """
    for doc_id in predictions:
        if doc_id not in gold:
            raise EvaluationError(f"prediction for unknown document {doc_id}", doc_id=doc_id)
    missing = [doc_id for doc_id in gold if doc_id not in predictions]
    if missing:
        logger.warning("%d gold document(s) have no prediction", len(missing))

    totals, single, multi = RoleStats(), RoleStats(), RoleStats()
    n_single = n_multi = 0
    for doc_id, gold_tables in gold.items():
        stats = score_document(predictions.get(doc_id, {}), gold_tables, registry)
        totals.merge(stats)
        num_gold = sum(len(records) for records in gold_tables.values())
        if num_gold == 1:
            single.merge(stats)
            n_single += 1
        elif num_gold > 1:
            multi.merge(stats)
            n_multi += 1

    whole = _subset_report(totals, registry, len(gold))
    return EvalReport(
        **whole.model_dump(),
        single=_subset_report(single, registry, n_single),
        multi=_subset_report(multi, registry, n_multi),
        mentions=MentionReport(**ScoreLine.from_counts(mentions).model_dump())
        if mentions is not None
        else None,
        decoder=decoder,
    )


def mention_counts(
    predicted: Iterable[EntityMention], gold: Iterable[EntityMention]
) -> SlotCounts:
    """Exact-match span counts over (sentence, span, label) triples."""
    pred_keys = {(m.sent_idx, m.span, m.label) for m in predicted}
    gold_keys = {(m.sent_idx, m.span, m.label) for m in gold}
    tp = len(pred_keys & gold_keys)
    return SlotCounts(tp=tp, fp=len(pred_keys) - tp, fn=len(gold_keys) - tp)
