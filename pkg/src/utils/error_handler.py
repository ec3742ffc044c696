"""
Error Handling for the biasdoc toolkit
Exception hierarchy, service error logging and CLI exit-code translation
"""

import logging
import sys
import traceback
from enum import Enum
from functools import wraps
from typing import Any, Callable, Dict, Optional

import click

logger = logging.getLogger(__name__)


class ErrorSeverity(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ErrorCategory(Enum):
    VALIDATION = "validation"
    PARSE = "parse"
    VOCABULARY = "vocabulary"
    QUERY = "query"
    MEASUREMENT = "measurement"
    DOCUMENTATION = "documentation"
    INFRASTRUCTURE = "infrastructure"


# Process exit codes used by the command line
EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_INPUT_ERROR = 2
EXIT_INTERNAL_ERROR = 3


# Custom Exception Classes
class BiasDocError(Exception):
    """Base exception for the toolkit"""
    def __init__(self, message: str, category: ErrorCategory = ErrorCategory.VALIDATION,
                 severity: ErrorSeverity = ErrorSeverity.MEDIUM, details: Optional[Dict] = None):
        self.message = message
        self.category = category
        self.severity = severity
        self.details = details or {}
        super().__init__(self.message)


class ValidationError(BiasDocError):
    """Invalid input value"""
    def __init__(self, message: str, field: Optional[str] = None, details: Optional[Dict] = None):
        super().__init__(message, ErrorCategory.VALIDATION, ErrorSeverity.LOW, details)
        self.field = field


class TermPositionError(ValidationError):
    """A term placed where RDF does not allow it (literal subject, blank-node predicate, ...)"""
    def __init__(self, message: str, position: str, details: Optional[Dict] = None):
        super().__init__(message, position, details)
        self.position = position


class TurtleSyntaxError(BiasDocError):
    """Turtle document could not be parsed"""
    def __init__(self, message: str, line: int, column: int, token: Optional[str] = None,
                 source: Optional[str] = None):
        location = f"{source}:" if source else ""
        text = f"{location}{line}:{column}: {message}"
        if token is not None:
            text += f" (at {token!r})"
        super().__init__(text, ErrorCategory.PARSE, ErrorSeverity.LOW,
                         {'line': line, 'column': column, 'token': token})
        self.line = line
        self.column = column
        self.token = token


class UndeclaredPrefixError(TurtleSyntaxError):
    """Prefixed name used without an @prefix declaration"""
    def __init__(self, prefix: str, line: int, column: int, source: Optional[str] = None):
        super().__init__(f"undeclared prefix '{prefix}'", line, column, f"{prefix}:", source)
        self.prefix = prefix


class QuerySyntaxError(BiasDocError):
    """Query text could not be parsed"""
    def __init__(self, message: str, position: int, token: Optional[str] = None):
        text = f"position {position}: {message}"
        if token is not None:
            text += f" (at {token!r})"
        super().__init__(text, ErrorCategory.QUERY, ErrorSeverity.LOW,
                         {'position': position, 'token': token})
        self.position = position
        self.token = token


class UnsupportedFeatureError(QuerySyntaxError):
    """Query uses a SPARQL feature outside the supported subset"""
    def __init__(self, feature: str, position: int):
        super().__init__(f"{feature} not supported", position, feature)
        self.feature = feature


class VocabularyError(BiasDocError):
    """Vocabulary registration or lookup failure"""
    def __init__(self, message: str, iri: Optional[str] = None, details: Optional[Dict] = None):
        super().__init__(message, ErrorCategory.VOCABULARY, ErrorSeverity.MEDIUM, details)
        self.iri = iri


class CompetencyQuestionError(BiasDocError):
    """Unknown competency question or missing placeholder binding"""
    def __init__(self, message: str, question_id: Optional[str] = None):
        super().__init__(message, ErrorCategory.QUERY, ErrorSeverity.LOW, {'question_id': question_id})
        self.question_id = question_id


class MeasureError(BiasDocError):
    """Bias measure computation failure"""
    def __init__(self, message: str, measure: Optional[str] = None, details: Optional[Dict] = None):
        super().__init__(message, ErrorCategory.MEASUREMENT, ErrorSeverity.MEDIUM, details)
        self.measure = measure


class QualityIndicatorError(BiasDocError):
    """Quality indicators cannot be computed for the given graph"""
    def __init__(self, message: str, details: Optional[Dict] = None):
        super().__init__(message, ErrorCategory.VALIDATION, ErrorSeverity.MEDIUM, details)


class DocumentationError(BiasDocError):
    """Documentation cannot be generated for a subject"""
    def __init__(self, message: str, subject: Optional[str] = None):
        super().__init__(message, ErrorCategory.DOCUMENTATION, ErrorSeverity.LOW, {'subject': subject})
        self.subject = subject


def handle_service_errors(func: Callable) -> Callable:
    """
    Decorator for service error handling
    Logs toolkit errors by category and wraps anything unexpected
    """
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)

        except ValidationError as e:
            # reported by the caller
            logger.debug(f"Validation error in {func.__name__}: {e.message}",
                         extra={'field': e.field, 'details': e.details})
            raise

        except (TurtleSyntaxError, QuerySyntaxError) as e:
            logger.debug(f"Parse error in {func.__name__}: {e.message}", extra={'details': e.details})
            raise

        except BiasDocError as e:
            level = logging.DEBUG if e.severity == ErrorSeverity.LOW else logging.ERROR
            logger.log(level, f"{e.category.value} error in {func.__name__}: {e.message}",
                       extra={'details': e.details})
            raise

        except (FileNotFoundError, IsADirectoryError, UnicodeDecodeError) as e:
            logger.debug(f"Unreadable input in {func.__name__}: {str(e)}")
            raise

        except Exception as e:
            logger.critical(f"Unexpected error in {func.__name__}: {str(e)}",
                            extra={'traceback': traceback.format_exc()})
            raise BiasDocError(
                "An unexpected error occurred",
                ErrorCategory.INFRASTRUCTURE,
                ErrorSeverity.CRITICAL,
                {'original_error': str(e), 'function': func.__name__}
            ) from e

    return wrapper


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the command-line exit code"""
    if isinstance(error, BiasDocError):
        if error.category == ErrorCategory.INFRASTRUCTURE:
            return EXIT_INTERNAL_ERROR
        return EXIT_INPUT_ERROR
    if isinstance(error, (FileNotFoundError, IsADirectoryError, UnicodeDecodeError)):
        return EXIT_INPUT_ERROR
    return EXIT_INTERNAL_ERROR


def handle_cli_errors(func: Callable) -> Callable:
    """
    Decorator for command handlers
    Prints a one-line error and exits with the mapped code
    """
    @wraps(func)
    def wrapper(*args, **kwargs) -> Any:
        try:
            return func(*args, **kwargs)

        except BiasDocError as e:
            print(f"error: {e.message}", file=sys.stderr)
            sys.exit(exit_code_for(e))

        except (FileNotFoundError, IsADirectoryError, UnicodeDecodeError) as e:
            print(f"error: {e}", file=sys.stderr)
            sys.exit(EXIT_INPUT_ERROR)

        except (SystemExit, click.ClickException):
            raise

        except Exception as e:
            logger.critical(f"Unhandled error in {func.__name__}: {str(e)}",
                            extra={'traceback': traceback.format_exc()})
            print(f"error: internal error: {e}", file=sys.stderr)
            sys.exit(EXIT_INTERNAL_ERROR)

    return wrapper
