"""Metrics, the held-out test protocol and comparison tables."""
from .metrics import EpisodeSummary, MetricsRecord, compute_metrics
from .suite import DISPLAY_NAMES, POLICIES, PolicySpec, SuiteResult, read_results, results_records, run_suite, write_results
from .table import COLUMNS, TableRow, format_table, parse_table, render_table

__all__ = [
    "COLUMNS",
    "DISPLAY_NAMES",
    "EpisodeSummary",
    "MetricsRecord",
    "POLICIES",
    "PolicySpec",
    "SuiteResult",
    "TableRow",
    "compute_metrics",
    "format_table",
    "parse_table",
    "read_results",
    "render_table",
    "results_records",
    "run_suite",
    "write_results",
]
