"""Tests for run configuration loading."""

from __future__ import annotations

from pathlib import Path

import pytest

from doc2edag._config import (
    config_to_toml,
    load_config,
    parse_override,
    parse_value,
    save_config,
)
from doc2edag.exceptions import ConfigError


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(
        "[model]\nd_w = 32\nnum_heads = 2\n\n[train]\nlearning_rate = 0.001\nseed = 4\n"
    )
    return path


class TestPrecedence:
    """Overrides > file > EDAG_SEED > defaults."""

    def test_defaults(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.delenv("EDAG_SEED", raising=False)
        config = load_config()
        assert config.model.d_w == 768
        assert config.train.seed == 0

    def test_file_over_defaults(self, config_file: Path) -> None:
        config = load_config(config_file)
        assert config.model.d_w == 32
        assert config.train.learning_rate == pytest.approx(1e-3)

    def test_override_over_file(self, config_file: Path) -> None:
        config = load_config(config_file, ["model.d_w=64", "learning_rate=0.01"])
        assert config.model.d_w == 64
        assert config.train.learning_rate == pytest.approx(0.01)

    def test_env_seed_below_file(self, config_file: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("EDAG_SEED", "11")

        assert load_config().train.seed == 11
        assert load_config().generator.seed == 11
        assert load_config(config_file).train.seed == 4
        assert load_config(config_file).generator.seed == 11

    def test_bare_seed_sets_every_section(self) -> None:
        config = load_config(None, ["seed=9"])
        assert config.train.seed == 9
        assert config.generator.seed == 9


class TestErrors:
    """Unknown keys, bad values and unreadable files."""

    def test_unknown_key_suggests(self, tmp_path: Path) -> None:
        path = tmp_path / "run.toml"
        path.write_text("[model]\nd_q = 32\n")

        with pytest.raises(ConfigError) as exc_info:
            load_config(path)

        assert exc_info.value.key == "d_q"
        assert exc_info.value.suggestion == "d_w"
        assert "did you mean 'd_w'" in str(exc_info.value)

    def test_unknown_section(self, tmp_path: Path) -> None:
        path = tmp_path / "run.toml"
        path.write_text("[optimizer]\nlr = 1\n")
        with pytest.raises(ConfigError, match="unknown section"):
            load_config(path)

    def test_unknown_override(self) -> None:
        with pytest.raises(ConfigError) as exc_info:
            load_config(None, ["model.dropuot=0.2"])
        assert exc_info.value.suggestion == "dropout"

    def test_invalid_value(self) -> None:
        with pytest.raises(ConfigError) as exc_info:
            load_config(None, ["dropout=2.0"])
        assert exc_info.value.key == "dropout"

    def test_cross_field_check(self) -> None:
        with pytest.raises(ConfigError, match="divisible"):
            load_config(None, ["d_w=10", "num_heads=4"])

    def test_bad_env_seed(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("EDAG_SEED", "abc")
        with pytest.raises(ConfigError) as exc_info:
            load_config()
        assert exc_info.value.key == "EDAG_SEED"

    def test_invalid_toml(self, tmp_path: Path) -> None:
        path = tmp_path / "run.toml"
        path.write_text("[model\n")
        with pytest.raises(ConfigError, match="not valid TOML"):
            load_config(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.toml")

    def test_override_without_equals(self) -> None:
        with pytest.raises(ConfigError):
            parse_override("dropout")


class TestValues:
    def test_scalars(self) -> None:
        assert parse_value("3") == 3
        assert parse_value("1e-3") == pytest.approx(1e-3)
        assert parse_value("true") is True
        assert parse_value("ratio") == "ratio"
        assert parse_value('"quoted"') == "quoted"

    def test_save_and_reload(self, config_file: Path, tmp_path: Path) -> None:
        config = load_config(config_file, ["max_grad_norm=5.0"])
        out = tmp_path / "resolved.toml"

        save_config(config, out)

        assert load_config(out) == config
        assert "[model]" in config_to_toml(config)

    def test_none_values_dropped(self) -> None:
        assert "max_grad_norm" not in config_to_toml(load_config())
