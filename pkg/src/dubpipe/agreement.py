"""Inter-rater agreement statistics over 1-5 survey scores.

Three statistics per (language, criterion) slice: mean pairwise Cohen's
kappa, Fleiss' kappa over the full counts matrix, and mean pairwise Pearson
correlation. Pairwise matrices aggregate over the strict upper triangle.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .backends import SUPPORTED_LANGUAGES
from .errors import DegenerateError

CRITERIA = ("lip_sync", "translation_quality", "audio_quality")
SCORE_MIN, SCORE_MAX = 1, 5

RATINGS_CSV_HEADER = ["language", "video_id", "rater_id", "criterion", "score"]


@dataclass(frozen=True)
class RatingRecord:
    language: str
    video_id: str
    rater_id: str
    criterion: str
    score: int

    def __post_init__(self):
        if self.language not in SUPPORTED_LANGUAGES:
            raise ValueError(f"unknown language {self.language!r}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if not SCORE_MIN <= self.score <= SCORE_MAX:
            raise ValueError(f"score must be in [1, 5], got {self.score}")


@dataclass(frozen=True)
class PairwiseMatrix:
    """Square matrix of a pairwise rater statistic; diagonal fixed at 1."""

    raters: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"matrix must be square, got shape {values.shape}")
        if len(self.raters) != values.shape[0]:
            raise ValueError("rater list does not match matrix dimension")
        if not np.allclose(np.diag(values), 1.0, atol=1e-9):
            raise ValueError("diagonal entries must all be 1")
        object.__setattr__(self, "values", values)


@dataclass
class SliceReport:
    """Aggregates for one (language, criterion) slice."""

    cohen_avg: Optional[float]
    fleiss: Optional[float]
    pearson_avg: Optional[float]


@dataclass
class AgreementReport:
    # (language, criterion) -> SliceReport
    slices: dict[tuple[str, str], SliceReport] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def cohen_kappa(a: Sequence[int], b: Sequence[int]) -> float:
    """Chance-corrected agreement between two raters over the same items."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 1:
        raise ValueError("need at least one rating")
    a = np.asarray(a)
    b = np.asarray(b)
    n = len(a)
    p_observed = float(np.mean(a == b))
    categories = np.union1d(a, b)
    p_chance = sum(
        float(np.mean(a == c)) * float(np.mean(b == c)) for c in categories
    )
    if p_chance >= 1.0:
        raise DegenerateError("both raters are constant on the same value")
    return (p_observed - p_chance) / (1.0 - p_chance)


def fleiss_kappa(counts: np.ndarray) -> float:
    """Agreement among n raters from an items-by-categories count matrix."""
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 2:
        raise ValueError(f"counts must be 2-D, got shape {counts.shape}")
    row_sums = counts.sum(axis=1)
    if len(set(row_sums.tolist())) != 1:
        raise ValueError("every item must have the same number of ratings")
    n = row_sums[0]
    if n < 2:
        raise ValueError(f"need at least 2 raters per item, got {int(n)}")
    per_item = ((counts**2).sum(axis=1) - n) / (n * (n - 1))
    p_mean = float(per_item.mean())
    proportions = counts.sum(axis=0) / counts.sum()
    p_chance = float((proportions**2).sum())
    if p_chance >= 1.0:
        raise DegenerateError("all ratings fall in a single category")
    return (p_mean - p_chance) / (1.0 - p_chance)


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation: cov(x, y) / (sigma_x * sigma_y), clamped to [-1, 1]."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("need at least two paired scores")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt((dx**2).sum()))
    sy = float(np.sqrt((dy**2).sum()))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateError("zero variance in one of the score vectors")
    return float(np.clip((dx * dy).sum() / (sx * sy), -1.0, 1.0))


def mean_pairwise(matrix: PairwiseMatrix) -> float:
    """Mean of the strict upper-triangle entries (row < column)."""
    n = matrix.values.shape[0]
    if n < 2:
        raise ValueError("pairwise matrix must have dimension >= 2")
    i, j = np.triu_indices(n, k=1)
    return float(matrix.values[i, j].mean())


def build_report(ratings: Iterable[RatingRecord]) -> AgreementReport:
    """Aggregate ratings into per-(language, criterion) agreement scores.

    Pairwise statistics are computed per rater pair over the videos both
    rated and averaged; degenerate pairs are skipped with a warning. Fleiss'
    kappa uses the videos rated by every rater in the slice.
    """
    grouped: dict[tuple[str, str], dict[str, dict[str, int]]] = {}
    for record in ratings:
        slice_key = (record.language, record.criterion)
        grouped.setdefault(slice_key, {}).setdefault(record.rater_id, {})[
            record.video_id
        ] = record.score

    if not grouped:
        raise ValueError("no ratings to aggregate")

    report = AgreementReport()
    for slice_key in sorted(grouped):
        by_rater = grouped[slice_key]
        raters = sorted(by_rater)
        if len(raters) < 2:
            raise ValueError(
                f"slice {slice_key} has {len(raters)} rater(s); need at least 2"
            )
        label = "/".join(slice_key)

        cohens: list[float] = []
        pearsons: list[float] = []
        for i in range(len(raters)):
            for j in range(i + 1, len(raters)):
                va, vb = by_rater[raters[i]], by_rater[raters[j]]
                common = sorted(set(va) & set(vb))
                pair = f"{raters[i]}-{raters[j]}"
                if not common:
                    report.warnings.append(
                        f"{label}: pair {pair} has no shared videos; skipped"
                    )
                    continue
                x = [va[v] for v in common]
                y = [vb[v] for v in common]
                try:
                    cohens.append(cohen_kappa(x, y))
                except DegenerateError as exc:
                    report.warnings.append(f"{label}: Cohen pair {pair} skipped: {exc}")
                try:
                    pearsons.append(pearson_r(x, y))
                except (DegenerateError, ValueError) as exc:
                    report.warnings.append(
                        f"{label}: Pearson pair {pair} skipped: {exc}"
                    )

        complete = sorted(
            set.intersection(*(set(videos) for videos in by_rater.values()))
        )
        fleiss = None
        if complete:
            counts = np.zeros((len(complete), SCORE_MAX - SCORE_MIN + 1))
            for row, video in enumerate(complete):
                for rater in raters:
                    counts[row, by_rater[rater][video] - SCORE_MIN] += 1
            try:
                fleiss = fleiss_kappa(counts)
            except DegenerateError as exc:
                report.warnings.append(f"{label}: Fleiss skipped: {exc}")
        else:
            report.warnings.append(f"{label}: no videos rated by all raters")

        report.slices[slice_key] = SliceReport(
            cohen_avg=float(np.mean(cohens)) if cohens else None,
            fleiss=fleiss,
            pearson_avg=float(np.mean(pearsons)) if pearsons else None,
        )
    return report


def load_ratings_csv(path_or_file) -> list[RatingRecord]:
    """Parse a ratings CSV (header: language,video_id,rater_id,criterion,score).

    Raises ValueError naming the first malformed row.
    """
    if hasattr(path_or_file, "read"):
        content = path_or_file.read()
    else:
        with open(path_or_file, encoding="utf-8") as handle:
            content = handle.read()
    reader = csv.reader(io.StringIO(content))
    rows = list(reader)
    if not rows or rows[0] != RATINGS_CSV_HEADER:
        raise ValueError(
            f"expected header {','.join(RATINGS_CSV_HEADER)}, "
            f"got {','.join(rows[0]) if rows else 'empty file'}"
        )
    records = []
    for number, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ValueError(f"row {number}: expected 5 fields, got {len(row)}")
        language, video_id, rater_id, criterion, score = row
        try:
            records.append(
                RatingRecord(language, video_id, rater_id, criterion, int(score))
            )
        except ValueError as exc:
            raise ValueError(f"row {number}: {exc}") from exc
    return records


def report_to_dict(report: AgreementReport) -> dict:
    """JSON-friendly view, keyed language -> criterion -> statistics."""
    languages: dict[str, dict] = {}
    for (language, criterion), stats in sorted(report.slices.items()):
        languages.setdefault(language, {})[criterion] = {
            "cohen_avg": stats.cohen_avg,
            "fleiss": stats.fleiss,
            "pearson_avg": stats.pearson_avg,
        }
    return {"languages": languages, "warnings": list(report.warnings)}


def report_to_json(report: AgreementReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True)


_LANGUAGE_NAMES = {"bn": "Bengali", "hi": "Hindi", "ne": "Nepali", "te": "Telugu", "en": "English"}
_CRITERION_SHORT = {"lip_sync": "Lip Sync", "translation_quality": "TQ", "audio_quality": "AQ"}


def report_to_table(report: AgreementReport) -> str:
    """Aligned text table: one language per row, kappa/kappa_F/r per criterion."""
    stat_names = ("Cohen's k", "Fleiss' k", "Pearson's r")
    columns = [_CRITERION_SHORT[c] for c in CRITERIA]

    def fmt(value: Optional[float]) -> str:
        return f"{value:.3f}" if value is not None else "  -  "

    header_top = f"{'Language':<10}" + "".join(
        f"| {name:^23} " for name in stat_names
    )
    header_sub = f"{'':<10}" + "".join(
        "| " + " ".join(f"{c:>7}" for c in columns) + " " for _ in stat_names
    )
    lines = [header_top, header_sub, "-" * len(header_sub)]

    languages = sorted({language for language, _ in report.slices})
    for language in languages:
        cells = []
        for getter in (
            lambda s: s.cohen_avg,
            lambda s: s.fleiss,
            lambda s: s.pearson_avg,
        ):
            row = []
            for criterion in CRITERIA:
                stats = report.slices.get((language, criterion))
                row.append(f"{fmt(getter(stats)) if stats else '  -  ':>7}")
            cells.append("| " + " ".join(row) + " ")
        lines.append(f"{_LANGUAGE_NAMES.get(language, language):<10}" + "".join(cells))
    return "\n".join(lines)
