from __future__ import annotations

import asyncio
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from clinical_ner.config.models import CorpusSettings, DecodingSettings, TrainingSettings
from clinical_ner.corpus.models import LabeledSentence
from clinical_ner.dictionary.build import subsample
from clinical_ner.dictionary.models import Dictionary
from clinical_ner.evaluation.formatters import format_percent
from clinical_ner.evaluation.metrics import EvalReport
from clinical_ner.model.config import ArchKind, ModelConfig
from clinical_ner.model.inference import DecodeOptions
from clinical_ner.model.training import evaluate_model, train

logger = logging.getLogger(__name__)


class SweepAxis(str, Enum):
    DICTIONARY = "dict"
    HIDDEN = "hidden"


@dataclass(frozen=True, slots=True)
class SweepPoint:
    axis: SweepAxis
    value: float

    @property
    def label(self) -> str:
        if self.axis is SweepAxis.HIDDEN:
            return str(int(self.value))
        return f"{self.value:g}"


@dataclass(frozen=True, slots=True)
class SweepJob:
    point: SweepPoint
    train: tuple[LabeledSentence, ...]
    test: tuple[LabeledSentence, ...]
    dictionary: Optional[Dictionary]
    config: ModelConfig
    training: TrainingSettings = TrainingSettings()
    corpus_settings: CorpusSettings = CorpusSettings()
    decoding: DecodingSettings = DecodingSettings()


@dataclass(frozen=True, slots=True)
class SweepResult:
    point: SweepPoint
    report: EvalReport
    dictionary_entries: int


def parse_sweep_values(text: str, axis: SweepAxis) -> list[SweepPoint]:
    """Comma-separated values: fractions in (0, 1] for dictionary sweeps, positive integers for hidden sizes."""
    points: list[SweepPoint] = []
    for raw in text.split(","):
        raw = raw.strip()
        if not raw:
            continue
        try:
            value = float(raw)
        except ValueError:
            raise ValueError(f"Invalid sweep value: {raw!r}") from None
        if axis is SweepAxis.DICTIONARY and not 0.0 < value <= 1.0:
            raise ValueError(f"Dictionary fraction must be in (0, 1]: {raw}")
        if axis is SweepAxis.HIDDEN and (value < 1 or value != int(value)):
            raise ValueError(f"Hidden size must be a positive integer: {raw}")
        points.append(SweepPoint(axis, value))
    if not points:
        raise ValueError("Sweep needs at least one value")
    return points


def point_config(base: ModelConfig, point: SweepPoint) -> ModelConfig:
    if point.axis is SweepAxis.DICTIONARY:
        return base
    d_h = int(point.value)
    if base.arch is ArchKind.MODEL_II:
        # CRF input width stays 2 * d_h.
        d_hx = max(1, d_h // 2)
        return base.model_copy(update={"d_h": d_h, "d_hx": d_hx, "d_hd": max(1, d_h - d_hx)})
    return base.model_copy(update={"d_h": d_h})


def run_point(job: SweepJob) -> SweepResult:
    """Train and evaluate one sweep point; deterministic for a fixed job."""
    dictionary = job.dictionary
    if job.point.axis is SweepAxis.DICTIONARY and dictionary is not None:
        dictionary = subsample(dictionary, job.point.value, np.random.default_rng(job.config.seed))
    config = point_config(job.config, job.point)
    result = train(job.train, dictionary, config, job.training, job.corpus_settings)
    options = DecodeOptions(
        split_clauses=job.corpus_settings.split_clauses,
        clause_delimiters=job.corpus_settings.clause_delimiters,
        mask_invalid_transitions=job.decoding.mask_invalid_transitions,
    )
    report = evaluate_model(result.model, job.test, dictionary, options)
    return SweepResult(
        point=job.point,
        report=report,
        dictionary_entries=len(dictionary) if dictionary is not None else 0,
    )


async def run_sweep(jobs: Sequence[SweepJob], concurrency: int = 1) -> list[SweepResult]:
    """Run sweep points, up to `concurrency` at a time in worker processes; results keep job order."""
    if concurrency <= 1:
        results: list[SweepResult] = []
        for position, job in enumerate(jobs, start=1):
            results.append(_run_logged(job, position, len(jobs)))
        return results

    loop = asyncio.get_running_loop()
    semaphore = asyncio.Semaphore(concurrency)
    with ProcessPoolExecutor(max_workers=concurrency) as executor:

        async def run_one(position: int, job: SweepJob) -> SweepResult:
            async with semaphore:
                return await loop.run_in_executor(executor, _run_logged, job, position, len(jobs))

        tasks = [asyncio.create_task(run_one(position, job)) for position, job in enumerate(jobs, start=1)]
        return list(await asyncio.gather(*tasks))


def _run_logged(job: SweepJob, position: int, total: int) -> SweepResult:
    logger.info("Sweep point %s/%s: start. axis=%s value=%s", position, total, job.point.axis.value, job.point.label)
    started = time.monotonic()
    result = run_point(job)
    logger.info(
        "Sweep point %s/%s: done. f1=%.4f elapsed_ms=%s",
        position,
        total,
        result.report.f1,
        int((time.monotonic() - started) * 1000),
    )
    return result


def format_sweep(results: Sequence[SweepResult]) -> str:
    """Plot-ready table: one row per sweep point with P/R/F1 in percent."""
    if not results:
        return ""
    axis = results[0].point.axis
    header = "fraction" if axis is SweepAxis.DICTIONARY else "hidden"
    lines = [f"{header:<10} {'entries':>8} {'P':>7} {'R':>7} {'F1':>7}"]
    for result in results:
        report = result.report
        lines.append(
            f"{result.point.label:<10} {result.dictionary_entries:>8} {format_percent(report.precision):>7} "
            f"{format_percent(report.recall):>7} {format_percent(report.f1):>7}"
        )
    return "\n".join(lines)
