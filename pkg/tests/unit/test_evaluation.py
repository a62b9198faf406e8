"""Tests for the table-filling metric."""

from __future__ import annotations

from itertools import permutations

import numpy as np
import pytest

from doc2edag.evaluation import (
    mention_counts,
    pair_records,
    report,
    score_document,
    score_pair,
    similarity,
)
from doc2edag.exceptions import EvaluationError
from doc2edag.models.corpus import EntityMention, EventRecord
from doc2edag.models.evaluation import RoleStats, SlotCounts
from doc2edag.models.schema import EventTypeSpec, SchemaRegistry
from doc2edag.schema import build_registry

ROLES = ["Pledger", "Pledged Shares", "Pledgee", "Start Date", "End Date"]


def _ep(*args: str | None) -> EventRecord:
    return EventRecord(event_type="EP", args=dict(zip(ROLES, args)))


@pytest.fixture
def spec(registry: SchemaRegistry) -> EventTypeSpec:
    return registry.get("EP")


def _reference_pairing(pred, gold, spec):
    """Best-first pairing written as plain loops."""
    left_p, left_g = list(range(len(pred))), list(range(len(gold)))
    pairs = []
    while left_p and left_g:
        best = None
        for i in left_p:
            for j in left_g:
                s = similarity(pred[i], gold[j], spec)
                if best is None or s > best[0]:
                    best = (s, i, j)
        _, i, j = best
        pairs.append((pred[i], gold[j]))
        left_p.remove(i)
        left_g.remove(j)
    pairs += [(pred[i], None) for i in left_p]
    pairs += [(None, gold[j]) for j in left_g]
    return pairs


TOY = build_registry([("T", "Toy", 1, ["A*", "B", "C", "D"])])


def _toy_value(rng: np.random.Generator, role: str) -> str | None:
    return None if rng.random() < 0.2 else f"{role}{rng.integers(6)}"


def _toy_record(rng: np.random.Generator) -> EventRecord:
    return EventRecord(event_type="T", args={r: _toy_value(rng, r) for r in "ABCD"})


def _noisy_tables(rng: np.random.Generator) -> tuple[list[EventRecord], list[EventRecord]]:
    """Up to three gold records and corrupted, shuffled copies as predictions."""
    gold = [_toy_record(rng) for _ in range(rng.integers(1, 4))]
    pred = [
        EventRecord(
            event_type="T",
            args={r: _toy_value(rng, r) if rng.random() < 0.25 else g.args[r] for r in "ABCD"},
        )
        for g in gold
        if rng.random() >= 0.15
    ]
    if len(pred) < 3 and rng.random() < 0.15:
        pred.append(_toy_record(rng))
    return [pred[i] for i in rng.permutation(len(pred))], gold


def _total_similarity(pairs, spec: EventTypeSpec) -> int:
    return sum(similarity(p, g, spec) for p, g in pairs)


def _optimal_similarity(pred, gold, spec: EventTypeSpec) -> int:
    """Best total similarity over every one-to-one pairing, all-NA phantoms included."""
    n = max(len(pred), len(gold))
    left = list(pred) + [None] * (n - len(pred))
    right = list(gold) + [None] * (n - len(gold))
    return max(
        sum(similarity(left[i], right[j], spec) for i, j in enumerate(order))
        for order in permutations(range(n))
    )


class TestPairing:
    """Greedy best-first pairing."""

    def test_similarity_counts_both_na(self, spec: EventTypeSpec) -> None:
        assert similarity(_ep("A", "1", None, None, None), _ep("A", "2", None, None, "E"), spec) == 3
        assert similarity(None, _ep(None, None, None, None, None), spec) == 5

    def test_tie_break_order_on_random_tables(self, spec: EventTypeSpec) -> None:
        rng = np.random.default_rng(0)
        pool = ["a", "b", None]
        for _ in range(50):
            pred = [_ep(*(pool[i] for i in rng.integers(0, 3, 5))) for _ in range(rng.integers(0, 4))]
            gold = [_ep(*(pool[i] for i in rng.integers(0, 3, 5))) for _ in range(rng.integers(0, 4))]

            pairs = pair_records(pred, gold, spec)

            assert pairs == _reference_pairing(pred, gold, spec)
            assert len(pairs) == max(len(pred), len(gold))

    def test_greedy_reaches_optimum_on_small_tables(self) -> None:
        spec = TOY.get("T")
        rng = np.random.default_rng(0)
        misses = []
        for case in range(1000):
            pred, gold = _noisy_tables(rng)
            greedy = _total_similarity(pair_records(pred, gold, spec), spec)
            best = _optimal_similarity(pred, gold, spec)
            assert greedy <= best
            if greedy < best:
                misses.append((case, greedy, best))

        assert len(misses) <= 50, misses

    def test_every_record_used_once(self, spec: EventTypeSpec) -> None:
        pred = [_ep("A", "1", None, None, None), _ep("B", "2", None, None, None)]
        gold = [_ep("B", "2", "X", None, None)]

        pairs = pair_records(pred, gold, spec)

        assert pairs == [(pred[1], gold[0]), (pred[0], None)]


class TestSlotCounts:
    """Hand-computed slot outcomes."""

    def test_one_pair(self, spec: EventTypeSpec) -> None:
        stats = score_pair((_ep("A", "2", "X", None, "E"), _ep("A", "1", "X", "D", None)), spec, RoleStats())

        total = stats.type_total("EP")
        assert (total.tp, total.fp, total.fn) == (2, 2, 2)
        shares = stats.role("EP", "Pledged Shares")
        assert (shares.tp, shares.fp, shares.fn) == (0, 1, 1)

    def test_unpaired_records(self, spec: EventTypeSpec) -> None:
        stats = score_pair((_ep("B", "1", None, None, None), None), spec, RoleStats())
        stats = score_pair((None, _ep("C", "3", "Y", None, None)), spec, stats)

        total = stats.type_total("EP")
        assert (total.tp, total.fp, total.fn) == (0, 2, 3)

    def test_empty_tables_score_nothing(self, registry: SchemaRegistry) -> None:
        stats = score_document({"EP": []}, {}, registry)
        assert stats.counts == {}

    def test_f1_of_zero_counts(self) -> None:
        assert SlotCounts().f1 == 0.0


class TestReport:
    """Corpus aggregation."""

    def test_perfect_and_split(self, registry: SchemaRegistry) -> None:
        gold = {
            "single": {"EP": [_ep("A", "1", "X", None, None)]},
            "multi": {"EP": [_ep("A", "1", "X", None, None), _ep("B", "2", "X", None, None)]},
        }

        result = report(gold, gold, registry, decoder="greedy")

        assert result.overall.f1 == pytest.approx(1.0)
        assert result.single.documents == 1
        assert result.multi.documents == 1
        assert result.multi.overall.tp == 6
        assert result.decoder == "greedy"
        # only EP has any slot, so the mean covers one type
        assert result.mean_f1 == pytest.approx(1.0)

    def test_missing_prediction_counts_as_empty(self, registry: SchemaRegistry) -> None:
        gold = {"d": {"EP": [_ep("A", "1", "X", None, None)]}}

        result = report({}, gold, registry)

        assert result.overall.fn == 3
        assert result.overall.f1 == 0.0

    def test_unknown_document(self, registry: SchemaRegistry) -> None:
        with pytest.raises(EvaluationError) as exc_info:
            report({"ghost": {}}, {}, registry)
        assert exc_info.value.doc_id == "ghost"

    def test_mention_scores_attached(self, registry: SchemaRegistry) -> None:
        gold_mentions = [
            EntityMention(sent_idx=0, span=(0, 1), surface="A", label="EP.Pledger"),
            EntityMention(sent_idx=1, span=(2, 3), surface="B", label="EP.Pledgee"),
        ]
        predicted = [
            gold_mentions[0],
            EntityMention(sent_idx=1, span=(2, 3), surface="B", label="EP.Pledger"),
        ]
        counts = mention_counts(predicted, gold_mentions)

        result = report({}, {}, registry, mentions=counts)

        assert (counts.tp, counts.fp, counts.fn) == (1, 1, 1)
        assert result.mentions is not None
        assert result.mentions.f1 == pytest.approx(0.5)


class TestMetricProperties:
    """Symmetry and monotonicity of the slot counts."""

    def test_swapping_sides_swaps_fp_and_fn(self) -> None:
        rng = np.random.default_rng(1)
        for _ in range(200):
            pred, gold = _noisy_tables(rng)

            forward = score_document({"T": pred}, {"T": gold}, TOY).type_total("T")
            backward = score_document({"T": gold}, {"T": pred}, TOY).type_total("T")

            assert (backward.tp, backward.fp, backward.fn) == (forward.tp, forward.fn, forward.fp)

    def test_filling_a_correct_slot_never_lowers_f1(self) -> None:
        rng = np.random.default_rng(2)
        checked = 0
        for _ in range(300):
            pred, gold = _toy_record(rng), _toy_record(rng)
            missing = [r for r in "ABCD" if pred.args[r] is None and gold.args[r] is not None]
            if not missing:
                continue
            filled = EventRecord(event_type="T", args={**pred.args, missing[0]: gold.args[missing[0]]})

            before = score_document({"T": [pred]}, {"T": [gold]}, TOY).type_total("T")
            after = score_document({"T": [filled]}, {"T": [gold]}, TOY).type_total("T")

            assert after.f1 >= before.f1
            assert after.tp == before.tp + 1
            checked += 1
        assert checked > 0

    def test_filling_a_slot_in_a_multi_record_table(self, registry: SchemaRegistry) -> None:
        gold = [_ep("A", "1", "X", None, None), _ep("B", "2", "Y", "D", None)]
        pred = [_ep("B", "2", None, "D", None), _ep("A", "1", "X", None, None)]
        filled = [_ep("B", "2", "Y", "D", None), pred[1]]

        before = score_document({"EP": pred}, {"EP": gold}, registry).type_total("EP")
        after = score_document({"EP": filled}, {"EP": gold}, registry).type_total("EP")

        assert (before.tp, before.fp, before.fn) == (6, 0, 1)
        assert (after.tp, after.fp, after.fn) == (7, 0, 0)
        assert after.f1 > before.f1
