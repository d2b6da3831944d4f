from .bench import (DEFAULT_DEPTH, DEFAULT_HANDLE_CAP, DEFAULT_HEIGHT,
                    DEFAULT_MEASURE, DEFAULT_WARMUP, DEFAULT_WIDTH,
                    BenchReport, bench)
from .report import format_report, report_json, report_profile, write_figures

__all__ = ["DEFAULT_DEPTH", "DEFAULT_HANDLE_CAP", "DEFAULT_HEIGHT",
           "DEFAULT_MEASURE", "DEFAULT_WARMUP", "DEFAULT_WIDTH",
           "BenchReport", "bench", "format_report", "report_json",
           "report_profile", "write_figures"]
