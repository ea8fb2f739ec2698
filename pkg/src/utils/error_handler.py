"""
Error handling utilities for SJT Forge.
Provides the domain exception hierarchy, structured error logging and retry with backoff.
"""

import functools
import logging
import random
import time
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from typing import Any, Callable, Dict, List, Optional


class ErrorSeverity(Enum):
    """Error severity levels."""

    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


class ErrorCategory(Enum):
    """Error categories for better classification."""

    NETWORK = "network"
    API = "api"
    CONFIGURATION = "configuration"
    VALIDATION = "validation"
    DATA = "data"
    STATISTICS = "statistics"
    UNKNOWN = "unknown"


class ForgeError(Exception):
    """Base class of every error raised by SJT Forge."""

    code = "FORGE_ERROR"
    category = ErrorCategory.UNKNOWN


class InvalidChoice(ForgeError):
    code = "INVALID_CHOICE"
    category = ErrorCategory.VALIDATION


class IncompleteResponse(ForgeError):
    code = "INCOMPLETE_RESPONSE"
    category = ErrorCategory.DATA


class BankError(ForgeError):
    code = "BANK_ERROR"
    category = ErrorCategory.VALIDATION


class SpecError(ForgeError):
    code = "SPEC_ERROR"
    category = ErrorCategory.VALIDATION


class ParamError(ForgeError):
    code = "PARAM_ERROR"
    category = ErrorCategory.VALIDATION


class GatewayError(ForgeError):
    """Completion could not be obtained; ``cause`` holds the last underlying failure."""

    code = "GATEWAY_ERROR"
    category = ErrorCategory.API

    def __init__(self, message: str, cause: Optional[BaseException] = None):
        super().__init__(message)
        self.cause = cause


class TransientGatewayError(GatewayError):
    """Retryable failure: rate limiting, server errors, dropped connections."""

    code = "GATEWAY_TRANSIENT"
    category = ErrorCategory.NETWORK

    def __init__(self, message: str, status_code: Optional[int] = None, cause: Optional[BaseException] = None):
        super().__init__(message, cause)
        self.status_code = status_code


class AuthError(GatewayError):
    code = "GATEWAY_AUTH"


class PartialGeneration(ForgeError):
    """Generation budget spent before enough valid items were collected."""

    code = "PARTIAL_GENERATION"
    category = ErrorCategory.VALIDATION

    def __init__(self, message: str, items: list, diagnostics: Any):
        super().__init__(message)
        self.items = items
        self.diagnostics = diagnostics


class ScoringLineError(ForgeError):
    """Raised by the scoring-line tokenizer; ``token`` is the offending slice."""

    code = "BAD_LABEL"
    category = ErrorCategory.VALIDATION

    def __init__(self, message: str, token: str):
        super().__init__(message)
        self.token = token


class DataError(ForgeError):
    code = "DATA_ERROR"
    category = ErrorCategory.DATA


class DegenerateData(DataError):
    code = "DEGENERATE_DATA"
    category = ErrorCategory.STATISTICS


class JoinError(DataError):
    code = "JOIN_ERROR"


class MetaMissing(DataError):
    code = "META_MISSING"


class ConfigError(ForgeError):
    code = "CONFIG_ERROR"
    category = ErrorCategory.CONFIGURATION


class WorkspaceLocked(ForgeError):
    code = "WORKSPACE_LOCKED"
    category = ErrorCategory.CONFIGURATION


@dataclass
class ErrorInfo:
    """Structured error information."""

    error_code: str
    error_message: str
    error_category: ErrorCategory
    severity: ErrorSeverity
    timestamp: datetime
    context: Dict[str, Any]
    retry_count: int = 0
    original_error: Optional[Exception] = None


class ErrorHandler:
    """Unified error handling system."""

    def __init__(self, jitter: float = 0.2, rng: Optional[random.Random] = None):
        self.logger = logging.getLogger(__name__)
        self.error_history: List[ErrorInfo] = []
        self.max_history_size = 1000
        self.jitter = jitter
        self._rng = rng or random.Random()

    def retry_with_backoff(
        self,
        func: Optional[Callable] = None,
        max_retries: int = 2,
        base_delay: float = 1.0,
        max_delay: float = 60.0,
        backoff_factor: float = 2.0,
        retryable_exceptions: tuple = (TransientGatewayError,),
    ) -> Any:
        """Retry function with exponential backoff and +-jitter.

        ``max_retries`` counts retries after the first call, so a gateway with
        ``max_attempts`` passes ``max_attempts - 1``.
        """

        def decorator(f: Callable) -> Callable:
            @functools.wraps(f)
            def wrapper(*args, **kwargs):
                return self._retry_with_backoff_impl(
                    f,
                    max_retries,
                    base_delay,
                    max_delay,
                    backoff_factor,
                    retryable_exceptions,
                    *args,
                    **kwargs,
                )

            return wrapper

        if func is None:
            return decorator
        else:
            return decorator(func)

    def backoff_delay(self, attempt: int, base_delay: float, max_delay: float, backoff_factor: float) -> float:
        """Delay before retry number ``attempt + 1`` (0-based attempt index)."""
        delay = min(base_delay * (backoff_factor**attempt), max_delay)
        if self.jitter:
            delay *= 1.0 + self._rng.uniform(-self.jitter, self.jitter)
        return delay

    def _retry_with_backoff_impl(
        self,
        func,
        max_retries,
        base_delay,
        max_delay,
        backoff_factor,
        retryable_exceptions,
        *args,
        **kwargs,
    ):
        """Implementation of retry with exponential backoff."""
        last_exception = None
        func_name = getattr(func, "__name__", "unknown_function")

        for attempt in range(max_retries + 1):
            try:
                return func(*args, **kwargs)
            except retryable_exceptions as e:
                last_exception = e

                if attempt == max_retries:
                    self._log_error(
                        error_code="RETRY_EXHAUSTED",
                        error_message=f"Retry attempts exhausted for {func_name}",
                        error_category=ErrorCategory.NETWORK,
                        severity=ErrorSeverity.ERROR,
                        context={"function": func_name, "attempts": attempt + 1},
                        original_error=e,
                    )
                    raise

                delay = self.backoff_delay(attempt, base_delay, max_delay, backoff_factor)
                self._log_error(
                    error_code="RETRY_ATTEMPT",
                    error_message=f"Retry attempt {attempt + 1}/{max_retries} for {func_name}",
                    error_category=ErrorCategory.NETWORK,
                    severity=ErrorSeverity.WARNING,
                    context={
                        "function": func_name,
                        "attempt": attempt + 1,
                        "max_retries": max_retries,
                        "delay": round(delay, 3),
                    },
                    original_error=e,
                )

                time.sleep(delay)

        raise last_exception

    def handle_error(
        self,
        error: Exception,
        context: Dict[str, Any],
        severity: ErrorSeverity = ErrorSeverity.ERROR,
    ) -> ErrorInfo:
        """Log any error, using the code and category of ``ForgeError`` subclasses."""
        if isinstance(error, ForgeError):
            code, category = error.code, error.category
        else:
            code, category = "UNEXPECTED_ERROR", ErrorCategory.UNKNOWN

        return self._log_error(
            error_code=code,
            error_message=str(error),
            error_category=category,
            severity=severity,
            context=context,
            original_error=error,
        )

    def handle_api_error(
        self,
        error: Exception,
        context: Dict[str, Any],
        severity: ErrorSeverity = ErrorSeverity.ERROR,
    ) -> ErrorInfo:
        """Handle completion endpoint errors with structured logging."""

        error_code = "API_ERROR"
        text = str(error).lower()
        status = getattr(error, "status_code", None)

        if "timeout" in text or "timed out" in text:
            error_code = "API_TIMEOUT"
        elif status == 429 or "rate" in text:
            error_code = "API_RATE_LIMIT"
        elif isinstance(error, AuthError) or status in (401, 403):
            error_code = "API_UNAUTHORIZED"
        elif status == 404:
            error_code = "API_NOT_FOUND"
        elif status is not None and status >= 500:
            error_code = "API_SERVER_ERROR"

        return self._log_error(
            error_code=error_code,
            error_message=str(error),
            error_category=ErrorCategory.API,
            severity=severity,
            context=context,
            original_error=error,
        )

    def handle_config_error(
        self,
        error: Exception,
        context: Dict[str, Any],
        severity: ErrorSeverity = ErrorSeverity.ERROR,
    ) -> ErrorInfo:
        """Handle configuration errors with structured logging."""
        return self._log_error(
            error_code="CONFIG_ERROR",
            error_message=str(error),
            error_category=ErrorCategory.CONFIGURATION,
            severity=severity,
            context=context,
            original_error=error,
        )

    def _log_error(
        self,
        error_code: str,
        error_message: str,
        error_category: ErrorCategory,
        severity: ErrorSeverity,
        context: Dict[str, Any],
        original_error: Optional[Exception] = None,
    ) -> ErrorInfo:
        """Log error with structured information."""

        error_info = ErrorInfo(
            error_code=error_code,
            error_message=error_message,
            error_category=error_category,
            severity=severity,
            timestamp=datetime.now(),
            context=context,
            original_error=original_error,
        )

        self.error_history.append(error_info)
        if len(self.error_history) > self.max_history_size:
            self.error_history = self.error_history[-self.max_history_size :]

        log_message = f"[{error_code}] {error_message} | Context: {context}"

        # tracebacks only for hard failures; retries are routine
        if severity == ErrorSeverity.CRITICAL:
            self.logger.critical(log_message, exc_info=original_error)
        elif severity == ErrorSeverity.ERROR:
            self.logger.error(log_message, exc_info=original_error)
        elif severity == ErrorSeverity.WARNING:
            self.logger.warning(log_message)
        else:
            self.logger.info(log_message)

        return error_info

    def get_error_stats(self) -> Dict[str, Any]:
        """Counts of the recorded errors by category, severity and code; ``recent_errors`` covers the last hour."""
        history = self.error_history
        if not history:
            return {"total_errors": 0}
        cutoff = datetime.now() - timedelta(hours=1)
        return {
            "total_errors": len(history),
            "recent_errors": sum(1 for info in history if info.timestamp > cutoff),
            "by_category": dict(Counter(info.error_category.value for info in history)),
            "by_severity": dict(Counter(info.severity.value for info in history)),
            "by_code": dict(Counter(info.error_code for info in history)),
        }

    def clear_error_history(self):
        self.error_history.clear()
        self.logger.info("Error history cleared")


error_handler = ErrorHandler()
