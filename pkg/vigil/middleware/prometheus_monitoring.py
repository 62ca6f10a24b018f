import time

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile
from prometheus_client.utils import INF

from . import Middleware
from ..app import get_app


DEFAULT_BUCKETS = (0.1, 1.0, 10.0, 60.0, 300.0, 1800.0, 3600.0, INF)

DEFAULT_LABELS = (
    "app_name",
    "command",
    "status",
)


class PrometheusMonitoringMiddleware(Middleware):
    def __init__(
        self,
        app=None,
        textfile_path: str = None,
        buckets: tuple = DEFAULT_BUCKETS,
        labels: tuple = DEFAULT_LABELS,
    ):
        if app is None:
            app = get_app()
        assert app is not None, "App must be initialized before this middleware"
        self.registry = CollectorRegistry()
        self.app_name = app.app_name
        self.textfile_path = textfile_path
        self.buckets = buckets
        assert set(labels).issubset(
            set(DEFAULT_LABELS)
        ), f"Labels must be in {DEFAULT_LABELS}"
        self.labels = labels
        self.command_counter = self.create_command_counter()
        self.command_latency_histogram = self.create_command_latency_histogram()

    def create_command_counter(self):
        return Counter(
            "vigil_command_total",
            "Commands run",
            registry=self.registry,
            labelnames=self.labels,
        )

    def create_command_latency_histogram(self):
        return Histogram(
            "vigil_command_duration_seconds",
            "Command duration in seconds",
            registry=self.registry,
            buckets=self.buckets,
            labelnames=self.labels,
        )

    def monitor_command(self, start_time: float, labels: dict):
        duration = time.time() - start_time
        labels = {
            label_key: label_value
            for label_key, label_value in labels.items()
            if label_key in self.labels
        }
        self.command_counter.labels(**labels).inc()
        self.command_latency_histogram.labels(**labels).observe(duration)
        if self.textfile_path:
            write_to_textfile(self.textfile_path, self.registry)

    def run_command(self, name: str, spec, handler):
        labels = {"app_name": self.app_name, "command": name}
        start_time = time.time()
        try:
            response = handler(spec)
        except Exception:
            labels["status"] = "failure"
            self.monitor_command(start_time, labels)
            raise
        failed = isinstance(response, dict) and response.get("exit_code", 0) != 0
        labels["status"] = "failure" if failed else "success"
        self.monitor_command(start_time, labels)
        return response
