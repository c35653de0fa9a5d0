"""Per-class precision/recall/F1, support-weighted combined F1, accuracy.

The fake class (label 0) is the positive class of the confusion matrix; real
metrics come from swapping the roles. "Combined F1" is the support-weighted
mean of the per-class F1 scores: with the imbalanced test sets this package
targets, that weighting is what comparison tables actually print, and the
test suite pins the interpretation against its reference rows.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Iterable, Sequence

from .corpus import Label, parse_label
from .errors import CoverageError, ParameterError

FOUR_DP = "{:.4f}"  # rendered tables round half-to-even at 4 decimals


@dataclass(frozen=True)
class PredictionRecord:
    id: str
    true_label: Label
    pred_label: Label
    score: float | None = None

    def __post_init__(self):
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ParameterError(f"score must lie in [0,1], got {self.score}")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Integer tallies with Fake(0) as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def fake_support(self) -> int:
        return self.tp + self.fn

    @property
    def real_support(self) -> int:
        return self.fp + self.tn


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    config_tag: str
    fake: ClassMetrics
    real: ClassMetrics
    combined_f1: float
    accuracy: float
    supports: dict[Label, int]
    degenerate: tuple[str, ...] = ()  # metrics whose denominator was zero


def confusion(preds: Sequence[PredictionRecord],
              expected_ids: Collection[str] | None = None) -> ConfusionMatrix:
    """Tally predictions into a confusion matrix.

    When ``expected_ids`` is given (the registered test corpus), coverage is
    enforced: every id predicted exactly once, nothing extra.
    """
    seen: dict[str, int] = {}
    for p in preds:
        seen[p.id] = seen.get(p.id, 0) + 1
    dups = sorted(i for i, n in seen.items() if n > 1)
    if dups:
        raise CoverageError(f"duplicate prediction ids: {', '.join(dups)}")
    if expected_ids is not None:
        expected = set(expected_ids)
        missing = sorted(expected - seen.keys())
        extra = sorted(seen.keys() - expected)
        if missing or extra:
            parts = []
            if missing:
                parts.append(f"missing: {', '.join(missing[:20])}")
            if extra:
                parts.append(f"unexpected: {', '.join(extra[:20])}")
            raise CoverageError("prediction coverage breach - " + "; ".join(parts))

    tp = fp = fn = tn = 0
    for p in preds:
        if p.pred_label is Label.FAKE:
            if p.true_label is Label.FAKE:
                tp += 1
            else:
                fp += 1
        else:
            if p.true_label is Label.FAKE:
                fn += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def _prf(tp: int, fp: int, fn: int, flags: list[str], prefix: str) -> ClassMetrics:
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.append(f"{prefix}_precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.append(f"{prefix}_recall")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.append(f"{prefix}_f1")
    return ClassMetrics(precision=precision, recall=recall, f1=f1)


def evaluate(cm: ConfusionMatrix, config_tag: str = "") -> EvalReport:
    """Full report from a confusion matrix.

    Real-class metrics treat Real as positive (role swap of the same cells).
    Zero-denominator metrics are defined as 0 and flagged, never NaN.
    """
    if cm.fake_support == 0 or cm.real_support == 0:
        raise ParameterError("evaluate needs non-zero support for both classes")
    flags: list[str] = []
    fake = _prf(cm.tp, cm.fp, cm.fn, flags, "fake")
    real = _prf(cm.tn, cm.fn, cm.fp, flags, "real")
    total = cm.total
    combined = (cm.fake_support * fake.f1 + cm.real_support * real.f1) / total
    accuracy = (cm.tp + cm.tn) / total
    return EvalReport(
        config_tag=config_tag,
        fake=fake,
        real=real,
        combined_f1=combined,
        accuracy=accuracy,
        supports={Label.FAKE: cm.fake_support, Label.REAL: cm.real_support},
        degenerate=tuple(flags),
    )


def macro_f1(report: EvalReport) -> float:
    """Unweighted mean of per-class F1; kept for contrast with combined_f1."""
    return (report.fake.f1 + report.real.f1) / 2


def report_table(reports: Sequence[EvalReport]) -> str:
    """Aligned text table: two rows per report, shared combined/accuracy cells.

    The baseline row (config_tag 'baseline') leads if present; other rows
    keep their given order.
    """
    if not reports:
        raise ParameterError("report_table needs at least one report")
    ordered = sorted(reports, key=lambda r: 0 if r.config_tag.lower() == "baseline" else 1)

    header = ["Configuration", "Class", "P", "R", "F1", "Combined F1", "Acc."]
    rows: list[list[str]] = []
    for rep in ordered:
        rows.append([
            rep.config_tag, "Fake (0)",
            FOUR_DP.format(rep.fake.precision),
            FOUR_DP.format(rep.fake.recall),
            FOUR_DP.format(rep.fake.f1),
            FOUR_DP.format(rep.combined_f1),
            FOUR_DP.format(rep.accuracy),
        ])
        rows.append([
            "", "Real (1)",
            FOUR_DP.format(rep.real.precision),
            FOUR_DP.format(rep.real.recall),
            FOUR_DP.format(rep.real.f1),
            "", "",
        ])

    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    sep = "-+-".join("-" * w for w in widths)

    def fmt(cells: list[str]) -> str:
        return " | ".join(c.ljust(w) for c, w in zip(cells, widths))

    lines = [fmt(header), sep]
    for i, row in enumerate(rows):
        lines.append(fmt(row))
        if i % 2 == 1 and i < len(rows) - 1:
            lines.append(sep)
    return "\n".join(lines)


def reports_to_json(reports: Sequence[EvalReport]) -> str:
    """Full-precision JSON array, one object per report."""
    payload = []
    for r in reports:
        payload.append({
            "config_tag": r.config_tag,
            "fake": {"precision": r.fake.precision, "recall": r.fake.recall, "f1": r.fake.f1},
            "real": {"precision": r.real.precision, "recall": r.real.recall, "f1": r.real.f1},
            "combined_f1": r.combined_f1,
            "accuracy": r.accuracy,
            "supports": {str(int(k)): v for k, v in r.supports.items()},
            "degenerate": list(r.degenerate),
        })
    return json.dumps(payload, indent=2, sort_keys=True)


PREDICTIONS_HEADER = ("id", "true_label", "pred_label", "score")


def write_predictions_csv(preds: Iterable[PredictionRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PREDICTIONS_HEADER)
        for p in preds:
            writer.writerow([
                p.id, int(p.true_label), int(p.pred_label),
                "" if p.score is None else repr(p.score),
            ])
    return path


def read_predictions_csv(path: str | Path) -> list[PredictionRecord]:
    path = Path(path)
    out: list[PredictionRecord] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in PREDICTIONS_HEADER[:3] if c not in header]
        if missing:
            raise CoverageError(f"predictions file missing column(s): {', '.join(missing)}")
        for row in reader:
            score_raw = (row.get("score") or "").strip()
            out.append(PredictionRecord(
                id=row["id"],
                true_label=parse_label(row["true_label"]),
                pred_label=parse_label(row["pred_label"]),
                score=float(score_raw) if score_raw else None,
            ))
    return out
