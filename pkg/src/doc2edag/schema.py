"""Event-type registry.

Builds registries (the five financial event types, the two-type desk
registry, or one read from TOML), orders roles for EDAG generation and
checks records against the labeling constraints.
"""

from __future__ import annotations

import hashlib
import json
import logging
import sys
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from doc2edag.exceptions import (
    ConfigError,
    InsufficientStatisticsError,
    SchemaMismatchError,
)
from doc2edag.models.corpus import EventRecord
from doc2edag.models.schema import OUTSIDE_TAG, EventRole, EventTypeSpec, SchemaRegistry

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

if TYPE_CHECKING:
    from doc2edag.models.labeling import LabeledDoc

logger = logging.getLogger("doc2edag.schema")

KEY_MARKER = "*"

# (code, name, threshold, roles); a trailing "*" marks a key role.
_FINANCIAL_EVENT_TYPES: list[tuple[str, str, int, list[str]]] = [
    (
        "EF",
        "Equity Freeze",
        5,
        [
            "Equity Holder*",
            "Froze Shares*",
            "Legal Institution*",
            "Start Date",
            "End Date",
            "Unfroze Date",
            "Total Holding Shares",
            "Total Holding Ratio",
        ],
    ),
    (
        "ER",
        "Equity Repurchase",
        4,
        [
            "Company Name*",
            "Highest Trading Price",
            "Lowest Trading Price",
            "Closing Date",
            "Repurchased Shares",
            "Repurchase Amount",
        ],
    ),
    (
        "EU",
        "Equity Underweight",
        4,
        [
            "Equity Holder*",
            "Traded Shares*",
            "Start Date",
            "End Date",
            "Average Price",
            "Later Holding Shares",
        ],
    ),
    (
        "EO",
        "Equity Overweight",
        4,
        [
            "Equity Holder*",
            "Traded Shares*",
            "Start Date",
            "End Date",
            "Average Price",
            "Later Holding Shares",
        ],
    ),
    (
        "EP",
        "Equity Pledge",
        5,
        [
            "Pledger*",
            "Pledged Shares*",
            "Pledgee*",
            "Start Date",
            "End Date",
            "Released Date",
            "Total Pledged Shares",
            "Total Holding Shares",
            "Total Holding Ratio",
        ],
    ),
]

_DESK_EVENT_TYPES: list[tuple[str, str, int, list[str]]] = [
    (
        "EP",
        "Equity Pledge",
        3,
        ["Pledger*", "Pledged Shares*", "Pledgee*", "Start Date", "End Date"],
    ),
    (
        "EU",
        "Equity Underweight",
        3,
        ["Equity Holder*", "Traded Shares*", "Start Date", "Average Price"],
    ),
]


def build_registry(definitions: Iterable[tuple[str, str, int, Sequence[str]]]) -> SchemaRegistry:
    """Assign BIO tag ids in declaration order and validate the result.

    Args:
        definitions: ``(code, name, min_matched_roles, roles)`` tuples where a
            role string ending in ``*`` is a key role.
    """
    vocabulary = [OUTSIDE_TAG]
    specs = []
    for code, name, threshold, role_defs in definitions:
        roles = []
        for role_def in role_defs:
            is_key = role_def.endswith(KEY_MARKER)
            role_name = role_def.rstrip(KEY_MARKER).strip()
            b_id = len(vocabulary)
            vocabulary.extend([f"B-{code}.{role_name}", f"I-{code}.{role_name}"])
            roles.append(EventRole(name=role_name, is_key=is_key, bio_tag_ids=(b_id, b_id + 1)))
        specs.append(
            EventTypeSpec(code=code, name=name, roles=roles, min_matched_roles=threshold)
        )
    return SchemaRegistry(specs=specs, tag_vocabulary=vocabulary)


def builtin_registry() -> SchemaRegistry:
    """The five financial event types (EF, ER, EU, EO, EP)."""
    return build_registry(_FINANCIAL_EVENT_TYPES)


def desk_registry() -> SchemaRegistry:
    """Two small event types for CPU-scale experiments."""
    return build_registry(_DESK_EVENT_TYPES)


def compute_generation_order(
    spec: EventTypeSpec, labeled_corpus: Iterable[LabeledDoc]
) -> list[int]:
    """Order roles by decreasing non-empty argument ratio.

    Ties keep declaration order. The order is stored into
    ``spec.generation_order`` and returned.

    Raises:
        InsufficientStatisticsError: No records of this type; the
            declaration order is kept.
    """
    filled = [0] * len(spec.roles)
    total = 0
    for labeled in labeled_corpus:
        for record in labeled.tables.get(spec.code, []):
            total += 1
            for i, role in enumerate(spec.roles):
                if record.args.get(role.name) is not None:
                    filled[i] += 1
    if total == 0:
        spec.generation_order = list(range(len(spec.roles)))
        raise InsufficientStatisticsError(
            f"no labeled records of type {spec.code}; keeping declaration order",
            event_type=spec.code,
        )
    order = sorted(range(len(spec.roles)), key=lambda i: (-filled[i] / total, i))
    spec.generation_order = order
    logger.debug(
        "generation order for %s: %s",
        spec.code,
        [spec.roles[i].name for i in order],
    )
    return order


def apply_role_order(
    registry: SchemaRegistry,
    labeled_corpus: Sequence[LabeledDoc],
    strategy: str = "ratio",
    seed: int = 0,
) -> None:
    """Set every spec's generation order by ``ratio``, ``declaration`` or ``random``."""
    rng = np.random.default_rng(seed)
    for spec in registry.specs:
        if strategy == "declaration":
            spec.generation_order = list(range(len(spec.roles)))
        elif strategy == "random":
            spec.generation_order = [int(i) for i in rng.permutation(len(spec.roles))]
        elif strategy == "ratio":
            try:
                compute_generation_order(spec, labeled_corpus)
            except InsufficientStatisticsError as e:
                logger.warning("%s", e)
        else:
            raise ConfigError(f"unknown role order strategy {strategy!r}", key="role_order")


def validate_record(record: EventRecord, spec: EventTypeSpec) -> bool:
    """True iff all key roles are filled and enough roles are filled overall.

    Raises:
        SchemaMismatchError: The record is of another type or names a role
            the event type does not define.
    """
    check_record_schema(record, spec)
    filled = [role for role, arg in record.args.items() if arg is not None]
    if any(record.args.get(name) is None for name in spec.key_role_names):
        return False
    return len(filled) >= spec.min_matched_roles


def check_record_schema(record: EventRecord, spec: EventTypeSpec) -> None:
    """Raise SchemaMismatchError unless the record fits the event type."""
    if record.event_type != spec.code:
        raise SchemaMismatchError(
            f"record of type {record.event_type} checked against {spec.code}",
            event_type=record.event_type,
        )
    for role in record.args:
        if not spec.has_role(role):
            raise SchemaMismatchError(
                f"role {role!r} is not defined for event type {spec.code}",
                event_type=spec.code,
                role=role,
            )


def complete_record(record: EventRecord, spec: EventTypeSpec) -> EventRecord:
    """Return the record with every spec role present (missing ones as NA)."""
    check_record_schema(record, spec)
    return EventRecord(
        event_type=spec.code,
        args={name: record.args.get(name) for name in spec.role_names},
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def registry_to_dict(registry: SchemaRegistry) -> dict[str, Any]:
    """Key-value document form: codes, roles with ``*`` key markers, thresholds."""
    return {
        "event_types": [
            {
                "code": spec.code,
                "name": spec.name,
                "min_matched_roles": spec.min_matched_roles,
                "roles": [r.name + (KEY_MARKER if r.is_key else "") for r in spec.roles],
            }
            for spec in registry.specs
        ]
    }


def registry_from_dict(data: dict[str, Any]) -> SchemaRegistry:
    """Inverse of :func:`registry_to_dict`."""
    try:
        definitions = [
            (
                str(entry["code"]),
                str(entry.get("name", "")),
                int(entry["min_matched_roles"]),
                [str(r) for r in entry["roles"]],
            )
            for entry in data["event_types"]
        ]
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"malformed schema document: {e}") from e
    try:
        return build_registry(definitions)
    except ValueError as e:
        raise ConfigError(f"invalid schema: {e}") from e


def load_registry(path: Path | None) -> SchemaRegistry:
    """Read a registry from TOML; ``None`` yields the built-in registry."""
    if path is None:
        return builtin_registry()
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot read schema {path}: {e}") from e
    return registry_from_dict(data)


def save_registry(registry: SchemaRegistry, path: Path) -> None:
    """Write a registry as TOML."""
    import tomli_w

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        tomli_w.dump(registry_to_dict(registry), f)


def registry_digest(registry: SchemaRegistry) -> str:
    """Digest of the schema content, independent of generation order."""
    canonical = json.dumps(registry_to_dict(registry), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
