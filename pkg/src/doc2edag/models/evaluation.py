"""Evaluation report models."""

from __future__ import annotations

from pydantic import Field, NonNegativeInt

from doc2edag.models.common import DataModel


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


class SlotCounts(DataModel):
    """TP/FP/FN counters of one role (or of an aggregate)."""

    tp: NonNegativeInt = 0
    fp: NonNegativeInt = 0
    fn: NonNegativeInt = 0

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)

    def add(self, other: SlotCounts) -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn


class RoleStats(DataModel):
    """Slot counters per (event type, role)."""

    counts: dict[str, dict[str, SlotCounts]] = Field(default_factory=dict)

    def role(self, code: str, role: str) -> SlotCounts:
        return self.counts.setdefault(code, {}).setdefault(role, SlotCounts())

    def type_total(self, code: str) -> SlotCounts:
        total = SlotCounts()
        for counts in self.counts.get(code, {}).values():
            total.add(counts)
        return total

    def merge(self, other: RoleStats) -> None:
        for code, roles in other.counts.items():
            for role, counts in roles.items():
                self.role(code, role).add(counts)


class ScoreLine(DataModel):
    """Precision, recall and F1 with the counts they came from."""

    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @classmethod
    def from_counts(cls, counts: SlotCounts) -> ScoreLine:
        return cls(
            precision=counts.precision,
            recall=counts.recall,
            f1=counts.f1,
            tp=counts.tp,
            fp=counts.fp,
            fn=counts.fn,
        )


class TypeReport(ScoreLine):
    """Event-level micro scores of one type plus its per-role lines."""

    roles: dict[str, ScoreLine] = Field(default_factory=dict)


class SubsetReport(DataModel):
    """Scores over a set of documents."""

    documents: int = 0
    types: dict[str, TypeReport] = Field(default_factory=dict)
    overall: ScoreLine = Field(default_factory=ScoreLine)
    mean_f1: float = 0.0


class MentionReport(ScoreLine):
    """Span-level entity recognition scores (diagnostic)."""


class EvalReport(SubsetReport):
    """Table-filling scores with single-event and multi-event splits."""

    single: SubsetReport = Field(default_factory=SubsetReport)
    multi: SubsetReport = Field(default_factory=SubsetReport)
    mentions: MentionReport | None = None
    decoder: str | None = None
