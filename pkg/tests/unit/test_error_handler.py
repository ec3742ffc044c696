"""
Unit tests for error handling
Service decorator wrapping and command-line exit codes
"""

import logging

import pytest

from src.utils.error_handler import (
    EXIT_INPUT_ERROR, EXIT_INTERNAL_ERROR, BiasDocError, CompetencyQuestionError, ErrorCategory, MeasureError,
    QuerySyntaxError, TurtleSyntaxError, UnsupportedFeatureError, ValidationError, exit_code_for,
    handle_cli_errors, handle_service_errors,
)


class TestExceptions:

    def test_turtle_error_message_carries_location(self):
        error = TurtleSyntaxError("expected '.'", 3, 7, token="ex:a", source="data.ttl")
        assert error.message == "data.ttl:3:7: expected '.' (at 'ex:a')"
        assert error.category == ErrorCategory.PARSE
        assert error.details == {'line': 3, 'column': 7, 'token': "ex:a"}

    def test_unsupported_feature_is_a_query_syntax_error(self):
        error = UnsupportedFeatureError("OPTIONAL", 12)
        assert isinstance(error, QuerySyntaxError)
        assert error.position == 12
        assert "OPTIONAL not supported" in error.message


class TestExitCodes:

    @pytest.mark.parametrize("error", [
        ValidationError("bad", "field"),
        MeasureError("empty input"),
        CompetencyQuestionError("unknown", "Q9"),
        FileNotFoundError("missing.ttl"),
    ])
    def test_input_errors(self, error):
        assert exit_code_for(error) == EXIT_INPUT_ERROR

    def test_internal_errors(self):
        assert exit_code_for(BiasDocError("boom", ErrorCategory.INFRASTRUCTURE)) == EXIT_INTERNAL_ERROR
        assert exit_code_for(RuntimeError("boom")) == EXIT_INTERNAL_ERROR


class TestHandleServiceErrors:

    def test_toolkit_errors_pass_through(self):
        @handle_service_errors
        def fail():
            raise MeasureError("empty input")

        with pytest.raises(MeasureError):
            fail()

    def test_unexpected_errors_are_wrapped(self):
        @handle_service_errors
        def fail():
            raise KeyError("x")

        with pytest.raises(BiasDocError) as exc_info:
            fail()
        assert exc_info.value.category == ErrorCategory.INFRASTRUCTURE
        assert exc_info.value.details['function'] == "fail"

    def test_missing_files_pass_through(self):
        @handle_service_errors
        def fail():
            raise FileNotFoundError("absent.ttl")

        with pytest.raises(FileNotFoundError):
            fail()

    @pytest.mark.parametrize("error", [
        ValidationError("bad timestamp", "timestamp"),
        TurtleSyntaxError("expected '.'", 1, 4),
        QuerySyntaxError("expected WHERE", 9),
    ])
    def test_input_errors_are_logged_below_warning(self, caplog, error):
        @handle_service_errors
        def fail():
            raise error

        caplog.set_level(logging.DEBUG, logger="src.utils.error_handler")
        with pytest.raises(type(error)):
            fail()
        assert [r.levelno for r in caplog.records if r.name == "src.utils.error_handler"] == [logging.DEBUG]

    def test_medium_severity_errors_still_logged_as_errors(self, caplog):
        @handle_service_errors
        def fail():
            raise MeasureError("empty input")

        with pytest.raises(MeasureError):
            fail()
        assert any(r.levelno == logging.ERROR and "empty input" in r.message for r in caplog.records)


class TestHandleCliErrors:

    def test_prints_error_and_exits(self, capsys):
        @handle_cli_errors
        def command():
            raise ValidationError("invalid timestamp 'soon'", "timestamp")

        with pytest.raises(SystemExit) as exc_info:
            command()
        assert exc_info.value.code == EXIT_INPUT_ERROR
        assert capsys.readouterr().err == "error: invalid timestamp 'soon'\n"

    def test_unexpected_error_is_internal(self, capsys):
        @handle_cli_errors
        def command():
            raise RuntimeError("boom")

        with pytest.raises(SystemExit) as exc_info:
            command()
        assert exc_info.value.code == EXIT_INTERNAL_ERROR
        assert "internal error: boom" in capsys.readouterr().err

    def test_explicit_exit_untouched(self):
        @handle_cli_errors
        def command():
            raise SystemExit(1)

        with pytest.raises(SystemExit) as exc_info:
            command()
        assert exc_info.value.code == 1
