# Run-time monitoring for the analysis commands
# Tracks per-command wall time and, when psutil is present, process memory

import time
from functools import wraps
from typing import Any, Dict, List

try:
    import psutil
    PSUTIL_AVAILABLE = True
except ImportError:
    PSUTIL_AVAILABLE = False


class PerformanceMonitor:
    """Tracks how long commands take and how much memory the process holds."""

    _instance = None

    def __new__(cls):
        # Singleton pattern
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return

        self.command_times: List[float] = []
        self.last_command = ""
        self.max_samples = 100
        self._initialized = True

    def get_system_stats(self) -> Dict[str, Any]:
        stats = {
            'last_command': self.last_command,
            'last_command_ms': round(self.command_times[-1], 2) if self.command_times else 0.0,
            'avg_command_ms': self._get_avg_command_time(),
            'command_samples': len(self.command_times),
        }
        if not PSUTIL_AVAILABLE:
            stats['memory_rss_mb'] = -1
            return stats

        stats['memory_rss_mb'] = round(psutil.Process().memory_info().rss / (1024 * 1024), 2)
        return stats

    def _get_avg_command_time(self) -> float:
        if not self.command_times:
            return 0.0
        return round(sum(self.command_times) / len(self.command_times), 2)

    def track_command_time(self, name: str, duration_ms: float):
        self.last_command = name
        self.command_times.append(duration_ms)
        if len(self.command_times) > self.max_samples:
            self.command_times.pop(0)

    def reset(self):
        self.command_times = []
        self.last_command = ""

    def time_function(self, func):
        """Decorator recording the wall time of each call, including failed ones."""
        @wraps(func)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                self.track_command_time(func.__name__, (time.perf_counter() - start) * 1000)
        return wrapper


# Global singleton instance
monitor = PerformanceMonitor()
