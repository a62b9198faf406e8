"""EDAG models."""

from __future__ import annotations

from typing import Any

from pydantic import Field

from doc2edag.models.common import DataModel, FrozenModel


class EdagNode(FrozenModel):
    """One argument node; ``argument`` None is NA (or the root at level 0)."""

    node_id: int
    level: int
    argument: str | None = None
    children: tuple[int, ...] = ()


class Edag(DataModel):
    """Per-event-type argument DAG; root-to-leaf paths are records.

    ``role_order`` holds role indices in generation order; node ``level``
    ``k`` (k >= 1) holds the argument of role ``role_order[k - 1]``.
    """

    event_type: str
    role_order: list[int]
    nodes: list[EdagNode] = Field(default_factory=list)
    root_id: int = 0

    @property
    def num_roles(self) -> int:
        return len(self.role_order)

    @property
    def root(self) -> EdagNode:
        return self.nodes[self.root_id]

    def node(self, node_id: int) -> EdagNode:
        return self.nodes[node_id]

    def children_of(self, node_id: int) -> list[EdagNode]:
        return [self.nodes[c] for c in self.nodes[node_id].children]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "event_type": self.event_type,
            "role_order": list(self.role_order),
            "nodes": [
                {
                    "id": n.node_id,
                    "level": n.level,
                    "arg": n.argument,
                    "children": list(n.children),
                }
                for n in self.nodes
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> Edag:
        return cls(
            event_type=data["event_type"],
            role_order=list(data["role_order"]),
            nodes=[
                EdagNode(
                    node_id=n["id"],
                    level=n["level"],
                    argument=n.get("arg"),
                    children=tuple(n.get("children", ())),
                )
                for n in data["nodes"]
            ],
        )
