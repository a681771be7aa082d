"""Exact-match span evaluation with micro-averaged precision, recall and F1."""

from clinical_ner.evaluation.formatters import format_percent, format_report
from clinical_ner.evaluation.metrics import EvalReport, TypeCounts, micro_prf

__all__ = [
    "EvalReport",
    "TypeCounts",
    "format_percent",
    "format_report",
    "micro_prf",
]
