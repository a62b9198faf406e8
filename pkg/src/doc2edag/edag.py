"""Entity-based DAGs: event tables as prefix-merged argument paths."""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path

from doc2edag.exceptions import ConfigError, EdagStructureError
from doc2edag.models.corpus import EventRecord
from doc2edag.models.edag import Edag, EdagNode
from doc2edag.models.schema import EventTypeSpec

logger = logging.getLogger("doc2edag.edag")

NA_LABEL = "NA"


def _sort_key(record: EventRecord, roles: Sequence[str]) -> tuple[tuple[int, str], ...]:
    # NA sorts after every string at each position
    return tuple(
        (1, "") if record.args.get(r) is None else (0, record.args[r] or "") for r in roles
    )


def unique_records(records: Iterable[EventRecord]) -> list[EventRecord]:
    """Drop repeated records, keeping first occurrences in order."""
    return list(dict.fromkeys(records))


def canonicalize(records: Iterable[EventRecord], spec: EventTypeSpec) -> list[EventRecord]:
    """Deduplicate and sort records by their arguments in generation order."""
    roles = spec.ordered_role_names
    unique: dict[tuple[str | None, ...], EventRecord] = {}
    for record in records:
        full = EventRecord(
            event_type=spec.code, args={name: record.args.get(name) for name in spec.role_names}
        )
        unique.setdefault(full.key(roles), full)
    return sorted(unique.values(), key=lambda r: _sort_key(r, roles))


def records_to_edag(records: Iterable[EventRecord], spec: EventTypeSpec) -> Edag:
    """Turn each record into a path in role order and merge shared prefixes."""
    roles = spec.ordered_role_names
    arguments: list[str | None] = [None]
    levels = [0]
    children: list[list[int]] = [[]]
    for record in canonicalize(records, spec):
        node = 0
        for depth, role in enumerate(roles, start=1):
            arg = record.args.get(role)
            nxt = next((c for c in children[node] if arguments[c] == arg), None)
            if nxt is None:
                nxt = len(arguments)
                arguments.append(arg)
                levels.append(depth)
                children.append([])
                children[node].append(nxt)
            node = nxt
    nodes = [
        EdagNode(node_id=i, level=levels[i], argument=arguments[i], children=tuple(children[i]))
        for i in range(len(arguments))
    ]
    return Edag(event_type=spec.code, role_order=list(spec.generation_order), nodes=nodes)


def validate_edag(edag: Edag) -> None:
    """Check the structural invariants.

    Raises:
        EdagStructureError: Bad ids or levels, duplicate siblings, nodes with
            several parents or unreachable nodes, or a leaf above the final level.
    """
    nodes = edag.nodes
    if not nodes:
        raise EdagStructureError("EDAG has no root")
    for i, node in enumerate(nodes):
        if node.node_id != i:
            raise EdagStructureError(f"node stored at {i} has id {node.node_id}", node_id=i)
    root = nodes[edag.root_id]
    if root.level != 0 or root.argument is not None:
        raise EdagStructureError("root must be the level-0 NA sentinel", node_id=edag.root_id)

    parents = [0] * len(nodes)
    for node in nodes:
        seen: set[str | None] = set()
        for child_id in node.children:
            if not 0 <= child_id < len(nodes):
                raise EdagStructureError(
                    f"node {node.node_id} links to missing node {child_id}", node_id=node.node_id
                )
            child = nodes[child_id]
            if child.level != node.level + 1:
                raise EdagStructureError(
                    f"node {child_id} at level {child.level} under level {node.level}",
                    node_id=child_id,
                )
            if child.argument in seen:
                raise EdagStructureError(
                    f"node {node.node_id} has duplicate children {child.argument!r}",
                    node_id=node.node_id,
                )
            seen.add(child.argument)
            parents[child_id] += 1
        if not node.children and node.node_id != edag.root_id and node.level != edag.num_roles:
            raise EdagStructureError(
                f"leaf {node.node_id} at level {node.level} of {edag.num_roles}",
                node_id=node.node_id,
            )
    for i, count in enumerate(parents):
        if i != edag.root_id and count != 1:
            raise EdagStructureError(f"node {i} has {count} parents", node_id=i)


def edag_to_records(edag: Edag, spec: EventTypeSpec) -> list[EventRecord]:
    """Every root-to-leaf path as a record, depth-first in sibling order."""
    validate_edag(edag)
    roles = [spec.roles[i].name for i in edag.role_order]
    records: list[EventRecord] = []

    def walk(node_id: int, path: list[str | None]) -> None:
        node = edag.node(node_id)
        if node.level == len(roles):
            records.append(EventRecord(event_type=spec.code, args=dict(zip(roles, path))))
            return
        for child_id in node.children:
            walk(child_id, [*path, edag.node(child_id).argument])

    if edag.root.children:
        walk(edag.root_id, [])
    return [
        EventRecord(event_type=r.event_type, args={n: r.args.get(n) for n in spec.role_names})
        for r in records
    ]


def render_tree(edag: Edag, spec: EventTypeSpec) -> str:
    """Indented text view, one node per line as ``Role: argument``."""
    lines = [f"{spec.code} {spec.name}".rstrip()]

    def walk(node_id: int, depth: int) -> None:
        for child in edag.children_of(node_id):
            role = spec.roles[edag.role_order[child.level - 1]].name
            value = child.argument if child.argument is not None else NA_LABEL
            lines.append(f"{'  ' * depth}{role}: {value}")
            walk(child.node_id, depth + 1)

    walk(edag.root_id, 1)
    return "\n".join(lines)


def save_edag(edag: Edag, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(edag.to_json_dict(), indent=2, ensure_ascii=False) + "\n")


def load_edag(path: Path) -> Edag:
    """Read and validate an EDAG JSON file."""
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        edag = Edag.from_json_dict(data)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"cannot read EDAG from {path}: {e}") from e
    validate_edag(edag)
    return edag
