"""Benchmark scenarios, suite runner and reports."""

from .config import (AlgorithmSpec, ConfigError, ScenarioConfig,
                     generate_instances, load_config)
from .report import emit_report, read_report_csv
from .suite import RunReport, run_suite
