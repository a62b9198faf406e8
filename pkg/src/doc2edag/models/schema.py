"""Event schema models."""

from __future__ import annotations

from typing import Any

from pydantic import Field, PositiveInt, model_validator

from doc2edag.models.common import DataModel, FrozenModel

OUTSIDE_TAG = "O"


class EventRole(FrozenModel):
    """A predefined field of an event table."""

    name: str
    is_key: bool = False
    bio_tag_ids: tuple[int, int]


class EventTypeSpec(DataModel):
    """Ordered roles, key flags and matching threshold of one event type."""

    code: str
    name: str = ""
    roles: list[EventRole]
    min_matched_roles: PositiveInt
    generation_order: list[int] = Field(default_factory=list)

    @model_validator(mode="before")
    @classmethod
    def _default_generation_order(cls, data: Any) -> Any:
        if isinstance(data, dict) and not data.get("generation_order"):
            data = dict(data)
            data["generation_order"] = list(range(len(data.get("roles", []))))
        return data

    @model_validator(mode="after")
    def _check_invariants(self) -> EventTypeSpec:
        names = [r.name for r in self.roles]
        if len(set(names)) != len(names):
            raise ValueError(f"event type {self.code}: duplicate role names")
        if self.min_matched_roles > len(self.roles):
            raise ValueError(
                f"event type {self.code}: min_matched_roles {self.min_matched_roles} "
                f"exceeds role count {len(self.roles)}"
            )
        if not any(r.is_key for r in self.roles):
            raise ValueError(f"event type {self.code}: at least one key role is required")
        if sorted(self.generation_order) != list(range(len(self.roles))):
            raise ValueError(f"event type {self.code}: generation_order is not a permutation")
        return self

    @property
    def role_names(self) -> list[str]:
        return [r.name for r in self.roles]

    @property
    def key_role_names(self) -> list[str]:
        return [r.name for r in self.roles if r.is_key]

    @property
    def ordered_role_names(self) -> list[str]:
        """Role names in EDAG generation order."""
        return [self.roles[i].name for i in self.generation_order]

    def has_role(self, name: str) -> bool:
        return any(r.name == name for r in self.roles)

    def role(self, name: str) -> EventRole:
        for r in self.roles:
            if r.name == name:
                return r
        raise KeyError(name)

    def role_label(self, name: str) -> str:
        """Entity label shared by the B-/I- tags of a role, e.g. ``EP.Pledger``."""
        return f"{self.code}.{name}"


class SchemaRegistry(DataModel):
    """All event types plus the BIO tag vocabulary derived from them."""

    specs: list[EventTypeSpec]
    tag_vocabulary: list[str]

    @model_validator(mode="after")
    def _check_invariants(self) -> SchemaRegistry:
        codes = [s.code for s in self.specs]
        if len(set(codes)) != len(codes):
            raise ValueError("event type codes must be unique")
        expected = 1 + 2 * sum(len(s.roles) for s in self.specs)
        if len(self.tag_vocabulary) != expected:
            raise ValueError(
                f"tag vocabulary has {len(self.tag_vocabulary)} tags, expected {expected}"
            )
        return self

    @property
    def codes(self) -> list[str]:
        return [s.code for s in self.specs]

    @property
    def num_tags(self) -> int:
        return len(self.tag_vocabulary)

    def get(self, code: str) -> EventTypeSpec:
        for spec in self.specs:
            if spec.code == code:
                return spec
        raise KeyError(code)

    def tag_id(self, tag: str) -> int:
        return self.tag_vocabulary.index(tag)

    def label_of_tag(self, tag_id: int) -> str | None:
        """``EP.Pledger`` for both B- and I- tags; None for O."""
        tag = self.tag_vocabulary[tag_id]
        return None if tag == OUTSIDE_TAG else tag[2:]
