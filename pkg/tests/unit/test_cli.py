"""Tests for the doc2edag command line."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from typer.testing import CliRunner

from doc2edag.cli.main import app
from doc2edag.edag import records_to_edag, save_edag
from doc2edag.models.corpus import EventRecord
from doc2edag.schema import desk_registry, save_registry

runner = CliRunner()

TINY = """\
[model]
d_w = 8
num_layers = 1
num_heads = 2
ff_dim = 16
max_sents = 8
max_sent_len = 40
dropout = 0.0
frontier_cap = 8

[train]
learning_rate = 0.01
batch_size = 4
max_epochs = 1

[generator]
num_docs = 10
multi_event_ratio = 0.5
max_sentence_chars = 40
"""


@pytest.fixture
def schema_file(tmp_path: Path) -> Path:
    path = tmp_path / "schema.toml"
    save_registry(desk_registry(), path)
    return path


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "tiny.toml"
    path.write_text(TINY)
    return path


@pytest.fixture
def data_dir(tmp_path: Path, schema_file: Path, config_file: Path) -> Path:
    out = tmp_path / "data"
    result = runner.invoke(
        app, ["gen", "-o", str(out), "--schema", str(schema_file), "-c", str(config_file), "--set", "seed=1"]
    )
    assert result.exit_code == 0, result.output
    return out


def _label(data_dir: Path, schema_file: Path, config_file: Path) -> Path:
    labels = data_dir / "labels.jsonl"
    result = runner.invoke(
        app,
        [
            "label",
            "--corpus", str(data_dir / "documents.jsonl"),
            "--kb", str(data_dir / "kb.jsonl"),
            "-o", str(labels),
            "--schema", str(schema_file),
            "-c", str(config_file),
        ],
    )
    assert result.exit_code == 0, result.output
    return labels


class TestGen:
    """Test corpus generation."""

    def test_writes_corpus_and_manifest(self, data_dir: Path) -> None:
        documents = (data_dir / "documents.jsonl").read_text().splitlines()
        manifest = json.loads((data_dir / "manifest.gen.json").read_text())

        assert len(documents) == 10
        assert (data_dir / "kb.jsonl").exists()
        assert manifest["command"] == "gen"
        assert manifest["seed"] == 1
        assert manifest["notes"]["documents"] == 10
        assert manifest["input_digests"]

    def test_json_summary(self, tmp_path: Path, schema_file: Path) -> None:
        result = runner.invoke(
            app, ["--json", "gen", "-o", str(tmp_path / "d"), "--schema", str(schema_file), "--set", "num_docs=4"]
        )

        assert result.exit_code == 0, result.output
        assert json.loads(result.stdout)["documents"] == 4

    def test_bad_override(self, tmp_path: Path) -> None:
        result = runner.invoke(app, ["gen", "-o", str(tmp_path / "d"), "--set", "num_doc=4"])

        assert result.exit_code == 1
        assert "Error (config)" in result.output
        assert "num_docs" in result.output

    def test_generator_flags(self, tmp_path: Path, schema_file: Path) -> None:
        out = tmp_path / "d"
        result = runner.invoke(
            app,
            [
                "gen",
                "--seed", "3",
                "--num-docs", "20",
                "--mer", "0.5",
                "--out-dir", str(out),
                "--schema", str(schema_file),
            ],
        )

        assert result.exit_code == 0, result.output
        rows = [json.loads(line) for line in (out / "kb.jsonl").read_text().splitlines()]
        assert len(rows) == 20
        assert sum(len(row["records"]) > 1 for row in rows) == round(0.5 * 20)
        assert json.loads((out / "manifest.gen.json").read_text())["seed"] == 3

    def test_generator_flags_win_over_set_and_file(
        self, tmp_path: Path, schema_file: Path, config_file: Path
    ) -> None:
        out = tmp_path / "d"
        result = runner.invoke(
            app,
            [
                "--json",
                "gen",
                "-o", str(out),
                "--schema", str(schema_file),
                "-c", str(config_file),
                "--set", "num_docs=4",
                "--num-docs", "6",
                "--mer", "0",
            ],
        )

        assert result.exit_code == 0, result.output
        summary = json.loads(result.stdout)
        assert summary["documents"] == 6
        assert summary["multi_event_documents"] == 0

    def test_mer_out_of_range(self, tmp_path: Path) -> None:
        result = runner.invoke(app, ["gen", "-o", str(tmp_path / "d"), "--mer", "1.5"])

        assert result.exit_code != 0


class TestLabel:
    """Test distant labeling from the command line."""

    def test_labels_and_stats(self, data_dir: Path, schema_file: Path, config_file: Path) -> None:
        labels = _label(data_dir, schema_file, config_file)

        assert len(labels.read_text().splitlines()) == 10
        assert (data_dir / "labels.jsonl.manifest.json").exists()

    def test_threads_do_not_change_labels(
        self, data_dir: Path, schema_file: Path, config_file: Path
    ) -> None:
        serial = _label(data_dir, schema_file, config_file).read_text()
        parallel = data_dir / "parallel.jsonl"
        result = runner.invoke(
            app,
            [
                "label",
                "--corpus", str(data_dir / "documents.jsonl"),
                "--kb", str(data_dir / "kb.jsonl"),
                "-o", str(parallel),
                "--schema", str(schema_file),
                "-c", str(config_file),
                "--threads", "3",
            ],
        )

        assert result.exit_code == 0, result.output
        assert parallel.read_text() == serial
        manifest = json.loads((data_dir / "parallel.jsonl.manifest.json").read_text())
        assert manifest["arguments"]["threads"] == 3

    def test_quality_against_truth(self, data_dir: Path, schema_file: Path) -> None:
        result = runner.invoke(
            app,
            [
                "--json",
                "label",
                "--corpus", str(data_dir / "documents.jsonl"),
                "--kb", str(data_dir / "kb.jsonl"),
                "-o", str(data_dir / "full.jsonl"),
                "--schema", str(schema_file),
                "--truth", str(data_dir / "kb.jsonl"),
            ],
        )

        assert result.exit_code == 0, result.output
        summary = json.loads(result.stdout)
        assert summary["stats"]["documents"] == 10
        assert summary["quality"]["overall"]["f1"] == pytest.approx(1.0)

    def test_missing_corpus(self, tmp_path: Path) -> None:
        result = runner.invoke(
            app, ["label", "--corpus", str(tmp_path / "no.jsonl"), "--kb", str(tmp_path / "kb.jsonl"), "-o", str(tmp_path / "l.jsonl")]
        )

        assert result.exit_code == 1
        assert "Error (input)" in result.output


class TestConfigShow:
    def test_resolved_json(self, config_file: Path) -> None:
        result = runner.invoke(app, ["--json", "config", "show", "-c", str(config_file), "--set", "d_w=16"])

        assert result.exit_code == 0, result.output
        resolved = json.loads(result.stdout)
        assert resolved["model"]["d_w"] == 16
        assert resolved["train"]["max_epochs"] == 1

    def test_toml_output(self) -> None:
        result = runner.invoke(app, ["config", "show"])

        assert result.exit_code == 0
        assert "[model]" in result.stdout

    def test_unknown_key(self) -> None:
        result = runner.invoke(app, ["config", "show", "--set", "d_q=16"])

        assert result.exit_code == 1
        assert "did you mean 'd_w'" in result.output


class TestInspectEdag:
    """Test EDAG rendering."""

    def test_renders_tree(self, tmp_path: Path, schema_file: Path) -> None:
        spec = desk_registry().get("EU")
        record = EventRecord(
            event_type="EU",
            args={"Equity Holder": "WANG LEI", "Traded Shares": "500", "Start Date": None, "Average Price": "9.10"},
        )
        path = tmp_path / "edag.json"
        save_edag(records_to_edag([record], spec), path)

        result = runner.invoke(app, ["inspect-edag", str(path), "--schema", str(schema_file)])

        assert result.exit_code == 0, result.output
        assert "Equity Holder: WANG LEI" in result.stdout
        assert "Start Date: NA" in result.stdout

    def test_role_order_must_fit_schema(self, tmp_path: Path) -> None:
        spec = desk_registry().get("EP")
        path = tmp_path / "edag.json"
        save_edag(records_to_edag([EventRecord(event_type="EP", args={"Pledger": "A"})], spec), path)

        result = runner.invoke(app, ["inspect-edag", str(path)])

        assert result.exit_code == 1
        assert "Error (config)" in result.output

    def test_labeled_corpus_document(self, data_dir: Path, schema_file: Path, config_file: Path) -> None:
        labels = _label(data_dir, schema_file, config_file)
        doc_id = json.loads(labels.read_text().splitlines()[0])["doc_id"]

        result = runner.invoke(
            app,
            [
                "--json",
                "inspect-edag", str(labels),
                "--doc-id", doc_id,
                "--corpus", str(data_dir / "documents.jsonl"),
                "--schema", str(schema_file),
            ],
        )

        assert result.exit_code == 0, result.output
        assert all(edag["nodes"][0]["level"] == 0 for edag in json.loads(result.stdout))

    def test_labeled_corpus_needs_doc_id(self, tmp_path: Path) -> None:
        path = tmp_path / "labels.jsonl"
        path.write_text("")

        result = runner.invoke(app, ["inspect-edag", str(path)])

        assert result.exit_code == 1
        assert "--doc-id" in result.output


class TestErrors:
    """Failures exit with status 1 and a categorized message."""

    def test_missing_checkpoint(self, data_dir: Path, tmp_path: Path) -> None:
        result = runner.invoke(
            app,
            [
                "predict",
                "--checkpoint", str(tmp_path / "none.ckpt"),
                "--corpus", str(data_dir / "documents.jsonl"),
                "-o", str(tmp_path / "p.jsonl"),
            ],
        )

        assert result.exit_code == 1
        assert "Error (checkpoint)" in result.output

    def test_eval_unknown_document(
        self, data_dir: Path, schema_file: Path, config_file: Path, tmp_path: Path
    ) -> None:
        labels = _label(data_dir, schema_file, config_file)
        pred = tmp_path / "pred.jsonl"
        pred.write_text(json.dumps({"doc_id": "ghost", "tables": {}}) + "\n")

        result = runner.invoke(
            app,
            [
                "eval",
                "--pred", str(pred),
                "--gold", str(labels),
                "--corpus", str(data_dir / "documents.jsonl"),
                "--schema", str(schema_file),
            ],
        )

        assert result.exit_code == 1
        assert "Error (eval)" in result.output

    def test_version(self) -> None:
        result = runner.invoke(app, ["version"])
        assert result.exit_code == 0
        assert "doc2edag version" in result.stdout


@pytest.mark.slow
class TestPipeline:
    """gen -> label -> train -> predict -> eval on a tiny configuration."""

    def test_end_to_end(self, data_dir: Path, schema_file: Path, config_file: Path, tmp_path: Path) -> None:
        labels = _label(data_dir, schema_file, config_file)
        run_dir = tmp_path / "run"
        common = ["--schema", str(schema_file)]

        trained = runner.invoke(
            app,
            [
                "train",
                "--corpus", str(data_dir / "documents.jsonl"),
                "--labels", str(labels),
                "-o", str(run_dir),
                "-c", str(config_file),
                "--dev-fraction", "0.3",
                *common,
            ],
        )
        assert trained.exit_code == 0, trained.output
        for name in ("best.ckpt", "last.ckpt", "metrics.jsonl", "config.toml", "report.json", "manifest.train.json"):
            assert (run_dir / name).exists(), name

        for decoder in ("doc2edag", "greedy", "dcfee-o", "dcfee-m"):
            preds = tmp_path / f"{decoder}.jsonl"
            predicted = runner.invoke(
                app,
                [
                    "predict",
                    "--checkpoint", str(run_dir / "best.ckpt"),
                    "--corpus", str(data_dir / "documents.jsonl"),
                    "-o", str(preds),
                    "--decoder", decoder,
                    "--threads", "2",
                    *common,
                ],
            )
            assert predicted.exit_code == 0, predicted.output

            scored = runner.invoke(
                app,
                [
                    "--json",
                    "eval",
                    "--pred", str(preds),
                    "--gold", str(labels),
                    "--corpus", str(data_dir / "documents.jsonl"),
                    "-o", str(tmp_path / f"{decoder}.report.json"),
                    *common,
                ],
            )
            assert scored.exit_code == 0, scored.output
            result = json.loads(scored.stdout)
            assert result["decoder"] == decoder
            assert result["documents"] == 10
            assert 0.0 <= result["mean_f1"] <= 1.0
