"""Tests for EDAG construction, validation and rendering."""

from __future__ import annotations

import itertools
import json
from pathlib import Path

import numpy as np
import pytest

from doc2edag.edag import (
    canonicalize,
    edag_to_records,
    load_edag,
    records_to_edag,
    render_tree,
    save_edag,
    unique_records,
    validate_edag,
)
from doc2edag.exceptions import ConfigError, EdagStructureError
from doc2edag.models.corpus import EventRecord
from doc2edag.models.edag import Edag, EdagNode
from doc2edag.models.schema import EventTypeSpec, SchemaRegistry


@pytest.fixture
def spec(registry: SchemaRegistry) -> EventTypeSpec:
    return registry.get("EP")


def _records(rows: list[tuple[str | None, ...]]) -> list[EventRecord]:
    roles = ["Pledger", "Pledged Shares", "Pledgee", "Start Date", "End Date"]
    return [EventRecord(event_type="EP", args=dict(zip(roles, row))) for row in rows]


class TestRecordsToEdag:
    """Test prefix merging of records into an EDAG."""

    def test_shared_prefix_is_merged(
        self, spec: EventTypeSpec, pledge_records: list[EventRecord]
    ) -> None:
        spec.generation_order = [2, 3, 0, 1, 4]  # Pledgee, Start Date first

        edag = records_to_edag(pledge_records, spec)

        validate_edag(edag)
        assert len(edag.root.children) == 1
        # root + shared (Pledgee, Start Date) + 2 x (Pledger, Shares, End Date)
        assert len(edag.nodes) == 1 + 2 + 2 * 3
        assert len(edag.children_of(edag.children_of(0)[0].node_id)[0].children) == 2

    def test_no_shared_prefix(self, spec: EventTypeSpec, pledge_records: list[EventRecord]) -> None:
        edag = records_to_edag(pledge_records, spec)

        assert len(edag.root.children) == 2
        assert len(edag.nodes) == 1 + 2 * 5

    def test_empty_table_is_root_only(self, spec: EventTypeSpec) -> None:
        edag = records_to_edag([], spec)

        validate_edag(edag)
        assert len(edag.nodes) == 1
        assert edag_to_records(edag, spec) == []

    def test_duplicates_collapse(self, spec: EventTypeSpec, pledge_records: list[EventRecord]) -> None:
        edag = records_to_edag([*pledge_records, pledge_records[0]], spec)
        assert len(edag_to_records(edag, spec)) == 2

    def test_na_arguments_become_nodes(self, spec: EventTypeSpec) -> None:
        records = _records([("A", "1", None, None, None)])
        edag = records_to_edag(records, spec)

        assert [n.argument for n in edag.nodes] == [None, "A", "1", None, None, None]
        assert edag.nodes[-1].level == 5


class TestEdagRoundTrip:
    """Test that decoding an EDAG gives back its records."""

    def test_random_tables(self, spec: EventTypeSpec) -> None:
        rng = np.random.default_rng(0)
        pool = ["a", "b", None]
        for _ in range(25):
            rows = [tuple(pool[int(i)] for i in rng.integers(0, 3, size=5)) for _ in range(4)]
            records = _records(rows)
            spec.generation_order = [int(i) for i in rng.permutation(5)]

            decoded = edag_to_records(records_to_edag(records, spec), spec)

            assert set(decoded) == set(canonicalize(records, spec))
            assert len(decoded) == len(set(decoded))

    def test_leaves_match_record_count(self, spec: EventTypeSpec) -> None:
        rows = list(itertools.product(["x", "y"], ["1"], ["p"], [None], ["e", None]))
        edag = records_to_edag(_records(rows), spec)

        leaves = [n for n in edag.nodes if not n.children and n.node_id != edag.root_id]
        assert len(leaves) == len(rows)

    def test_file_round_trip(
        self, spec: EventTypeSpec, pledge_records: list[EventRecord], tmp_path: Path
    ) -> None:
        edag = records_to_edag(pledge_records, spec)
        path = tmp_path / "edag.json"
        save_edag(edag, path)

        loaded = load_edag(path)

        assert edag_to_records(loaded, spec) == edag_to_records(edag, spec)
        assert json.loads(path.read_text())["nodes"][0] == {
            "id": 0,
            "level": 0,
            "arg": None,
            "children": [1, 6],
        }


class TestValidateEdag:
    """Test structural invariant checks."""

    def _edag(self, nodes: list[EdagNode], order: int = 2) -> Edag:
        return Edag(event_type="EP", role_order=list(range(order)), nodes=nodes)

    def test_leaf_above_final_level(self) -> None:
        edag = self._edag(
            [EdagNode(node_id=0, level=0, children=(1,)), EdagNode(node_id=1, level=1, argument="a")]
        )
        with pytest.raises(EdagStructureError, match="leaf") as exc_info:
            validate_edag(edag)
        assert exc_info.value.node_id == 1

    def test_duplicate_siblings(self) -> None:
        edag = self._edag(
            [
                EdagNode(node_id=0, level=0, children=(1, 2)),
                EdagNode(node_id=1, level=1, argument="a"),
                EdagNode(node_id=2, level=1, argument="a"),
            ],
            order=1,
        )
        with pytest.raises(EdagStructureError, match="duplicate"):
            validate_edag(edag)

    def test_two_parents(self) -> None:
        edag = self._edag(
            [
                EdagNode(node_id=0, level=0, children=(1, 2)),
                EdagNode(node_id=1, level=1, argument="a", children=(3,)),
                EdagNode(node_id=2, level=1, argument="b", children=(3,)),
                EdagNode(node_id=3, level=2, argument="c"),
            ]
        )
        with pytest.raises(EdagStructureError, match="parents"):
            validate_edag(edag)

    def test_level_skip(self) -> None:
        edag = self._edag(
            [EdagNode(node_id=0, level=0, children=(1,)), EdagNode(node_id=1, level=2, argument="a")]
        )
        with pytest.raises(EdagStructureError, match="level"):
            validate_edag(edag)

    def test_load_rejects_invalid_structure(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.json"
        path.write_text(
            json.dumps(
                {
                    "event_type": "EP",
                    "role_order": [0, 1],
                    "nodes": [
                        {"id": 0, "level": 0, "arg": None, "children": [1]},
                        {"id": 1, "level": 1, "arg": "a", "children": []},
                    ],
                }
            )
        )
        with pytest.raises(EdagStructureError):
            load_edag(path)

    def test_load_rejects_garbage(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_edag(path)


class TestRenderTree:
    """Test the indented text view."""

    def test_na_and_indentation(self, spec: EventTypeSpec) -> None:
        edag = records_to_edag(_records([("A", "1", "X", None, None)]), spec)

        lines = render_tree(edag, spec).splitlines()

        assert lines[0] == "EP Equity Pledge"
        assert lines[1] == "  Pledger: A"
        assert lines[2] == "    Pledged Shares: 1"
        assert lines[-1] == "          End Date: NA"


class TestUniqueRecords:
    def test_keeps_first_occurrences_in_order(self, pledge_records: list[EventRecord]) -> None:
        first, second = pledge_records
        copy = EventRecord(event_type="EP", args=dict(second.args))

        assert unique_records([second, first, copy, first]) == [second, first]
        assert unique_records([]) == []
