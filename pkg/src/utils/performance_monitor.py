"""
Performance Monitoring for the biasdoc toolkit
Times parsing, reasoning, query, validation and measurement operations in memory
"""

import time
import logging
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import wraps
from typing import Any, Callable, Dict, Iterator, List, Optional

import numpy as np

from src.utils.config import get_settings

logger = logging.getLogger(__name__)


@dataclass
class OperationTiming:
    """One timed run of a toolkit operation"""
    operation_name: str
    execution_time_ms: float
    success: bool
    error_type: Optional[str] = None
    custom_metrics: Dict[str, Any] = field(default_factory=dict)
    timestamp: float = field(default_factory=time.time)


class PerformanceMonitor:
    """
    In-process operation timings
    Operations slower than the configured threshold are logged as warnings
    """

    def __init__(self, slow_operation_ms: Optional[float] = None):
        self.metrics: Dict[str, List[OperationTiming]] = defaultdict(list)
        self.error_counts: Dict[str, int] = defaultdict(int)
        self._slow_operation_ms = slow_operation_ms

    @property
    def slow_operation_ms(self) -> float:
        # read lazily; settings may be reloaded after import
        if self._slow_operation_ms is None:
            return get_settings().slow_operation_ms
        return self._slow_operation_ms

    def track_operation(self, operation_name: str):
        """Decorator timing every call of the wrapped function"""
        def decorator(func: Callable) -> Callable:
            @wraps(func)
            def wrapper(*args, **kwargs):
                with self.track_execution_time(operation_name):
                    return func(*args, **kwargs)
            return wrapper
        return decorator

    @contextmanager
    def track_execution_time(self, operation_name: str,
                             custom_metrics: Optional[Dict] = None) -> Iterator[Dict[str, Any]]:
        """
        Time the block; the yielded dict collects counters the block wants recorded
        (inferred triples, solutions, findings) next to custom_metrics
        """
        counters: Dict[str, Any] = dict(custom_metrics or {})
        start = time.perf_counter()
        error_type = None
        try:
            yield counters
        except Exception as e:
            error_type = type(e).__name__
            raise
        finally:
            elapsed_ms = (time.perf_counter() - start) * 1000
            self.record_operation_metric(operation_name, elapsed_ms, error_type is None, error_type, counters)

    def record_operation_metric(self, operation_name: str, execution_time_ms: float,
                                success: bool, error_type: Optional[str] = None,
                                custom_metrics: Optional[Dict] = None):
        timing = OperationTiming(operation_name, execution_time_ms, success, error_type, dict(custom_metrics or {}))
        self.metrics[operation_name].append(timing)

        if not success:
            self.error_counts[f"{operation_name}_{error_type}"] += 1

        if execution_time_ms > self.slow_operation_ms:
            details = ", ".join(f"{k}={v}" for k, v in sorted(timing.custom_metrics.items()))
            logger.warning(f"Slow operation: {operation_name} took {execution_time_ms:.2f}ms"
                           + (f" ({details})" if details else ""))

        logger.debug(f"{operation_name}: {execution_time_ms:.2f}ms {'ok' if success else error_type}")

    def get_operation_stats(self, operation_name: str) -> Dict[str, Any]:
        """count, success_rate, mean_ms, p95_ms, max_ms for one operation"""
        timings = self.metrics.get(operation_name, [])
        if not timings:
            return {'count': 0}

        times = np.array([t.execution_time_ms for t in timings])
        return {
            'count': len(timings),
            'success_rate': sum(t.success for t in timings) / len(timings),
            'mean_ms': float(times.mean()),
            'p95_ms': float(np.percentile(times, 95)),
            'max_ms': float(times.max()),
        }

    def get_metrics_summary(self) -> Dict[str, Any]:
        return {
            'operations': {name: self.get_operation_stats(name) for name in sorted(self.metrics)},
            'error_counts': dict(self.error_counts),
        }

    def reset_metrics(self):
        self.metrics.clear()
        self.error_counts.clear()


# Global performance monitor instance
performance_monitor = PerformanceMonitor()


def track_command_performance(command_name: str):
    """Decorator for CLI commands, recorded as command_<name>"""
    return performance_monitor.track_operation(f"command_{command_name}")
