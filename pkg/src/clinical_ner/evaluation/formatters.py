from __future__ import annotations

from clinical_ner.corpus.models import ENTITY_TYPES
from clinical_ner.corpus.stats import TYPE_NAMES
from clinical_ner.evaluation.metrics import EvalReport, TypeCounts


def format_percent(value: float) -> str:
    return f"{100.0 * value:.2f}"


def _row(label: str, counts: TypeCounts) -> str:
    return (
        f"{label:<10} {format_percent(counts.precision):>7} {format_percent(counts.recall):>7} "
        f"{format_percent(counts.f1):>7} {counts.true_positive:>6} {counts.predicted:>6} {counts.gold:>6}"
    )


def format_report(report: EvalReport) -> str:
    """Fixed-width table: one row per entity type plus the pooled overall row, P/R/F1 in percent."""
    lines = [f"{'type':<10} {'P':>7} {'R':>7} {'F1':>7} {'tp':>6} {'pred':>6} {'gold':>6}"]
    for etype in ENTITY_TYPES:
        lines.append(_row(TYPE_NAMES[etype], report.counts(etype)))
    lines.append(_row("overall", report.overall))
    return "\n".join(lines)
