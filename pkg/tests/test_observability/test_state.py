"""Tests for configure(), the provider singleton and config resolution."""

from __future__ import annotations

import os
from unittest.mock import patch

import pytest

from doc2edag import observability
from doc2edag.observability import ObservabilityConfig, SpanExport, track
from doc2edag.observability._noop import _NoOpTracer


@pytest.fixture(autouse=True)
def _reset():
    observability.shutdown()
    yield
    observability.shutdown()


class TestObservabilityConfig:
    def test_defaults(self) -> None:
        config = ObservabilityConfig()
        assert config.export == SpanExport.CONSOLE
        assert config.service_name == "doc2edag"
        assert config.enabled is True

    def test_from_env(self) -> None:
        env = {"DOC2EDAG_TRACE": "MEMORY", "DOC2EDAG_SERVICE_NAME": "bench"}
        with patch.dict(os.environ, env, clear=True):
            config = ObservabilityConfig._resolve_from_env()
        assert config.export == SpanExport.MEMORY
        assert config.service_name == "bench"

    def test_unknown_export_falls_back_to_console(self) -> None:
        with patch.dict(os.environ, {"DOC2EDAG_TRACE": "otlp"}, clear=True):
            assert ObservabilityConfig._resolve_from_env().export == SpanExport.CONSOLE

    def test_disabled_from_env(self) -> None:
        with patch.dict(os.environ, {"DOC2EDAG_TRACE": "disabled"}, clear=True):
            assert ObservabilityConfig._resolve_from_env().enabled is False


class TestConfigure:
    def test_unconfigured_is_noop(self) -> None:
        assert not observability.is_configured()
        assert isinstance(observability.get_tracer(), _NoOpTracer)
        assert observability.finished_spans() == []
        assert observability.flush() is True

    def test_memory_export_collects_spans(self) -> None:
        observability.configure(export="memory")

        @track(name="gen.corpus")
        def stage() -> int:
            return 1

        stage()

        assert observability.is_configured()
        assert [s.name for s in observability.finished_spans()] == ["gen.corpus"]

    def test_second_configure_is_ignored(self) -> None:
        observability.configure(export="memory")
        observability.configure(export="console")

        assert observability.finished_spans() == []
        with observability.get_tracer().start_as_current_span("x"):
            pass
        assert len(observability.finished_spans()) == 1

    def test_disabled(self) -> None:
        observability.configure(export="disabled")
        assert not observability.is_configured()

    def test_missing_sdk_warns(self) -> None:
        with (
            patch("doc2edag.observability._check_otel_available", return_value=False),
            patch("doc2edag.observability.logger") as log,
        ):
            observability.configure(export="memory")
        assert not observability.is_configured()
        assert "OpenTelemetry SDK not found" in log.warning.call_args.args[0]

    def test_shutdown_resets(self) -> None:
        observability.configure(export="memory")
        observability.shutdown()
        assert not observability.is_configured()
        assert observability.finished_spans() == []
