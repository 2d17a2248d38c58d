"""Confusion-count metrics and evaluation report artifacts.

The cancer class is the positive class throughout (a false negative is a
missed cancer). The scalar "roc" here is balanced accuracy,
0.5 * (sensitivity + specificity), not an area under a threshold curve.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import InputDataError, UndefinedMetricError
from .ingest import Label

REPORT_SCHEMA = 1


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise InputDataError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class EvalReport:
    counts: ConfusionCounts
    accuracy: float
    roc: float
    seed: int
    config_digest: str
    per_sample: tuple[tuple[str, str, str, float], ...] = ()
    name: str = "run"


def confusion(truth: list[Label], predicted: list[Label]) -> ConfusionCounts:
    """Tally counts with cancer as the positive class."""
    if len(truth) != len(predicted):
        raise InputDataError(f"length mismatch: {len(truth)} truth vs {len(predicted)} predicted")
    if not truth:
        raise InputDataError("empty label lists")
    tp = tn = fp = fn = 0
    for t, p in zip(truth, predicted):
        if t is Label.CANCER:
            if p is Label.CANCER:
                tp += 1
            else:
                fn += 1
        else:
            if p is Label.CANCER:
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def accuracy(counts: ConfusionCounts) -> float:
    if counts.total < 1:
        raise InputDataError("accuracy undefined for zero total counts")
    return (counts.tp + counts.tn) / counts.total


def roc_score(counts: ConfusionCounts) -> float:
    """Balanced accuracy: 0.5 * (tp/(tp+fn) + tn/(tn+fp))."""
    positives = counts.tp + counts.fn
    negatives = counts.tn + counts.fp
    if positives < 1 or negatives < 1:
        raise UndefinedMetricError(
            f"roc undefined: positives={positives}, negatives={negatives} (need both classes)"
        )
    return 0.5 * (counts.tp / positives + counts.tn / negatives)


def make_report(
    truth: list[Label],
    predicted: list[Label],
    scores: list[float],
    source_ids: list[str],
    seed: int,
    config_digest: str,
    name: str = "run",
) -> EvalReport:
    counts = confusion(truth, predicted)
    per_sample = tuple(
        (sid, t.value, p.value, float(s))
        for sid, t, p, s in zip(source_ids, truth, predicted, scores)
    )
    return EvalReport(
        counts=counts,
        accuracy=accuracy(counts),
        roc=roc_score(counts),
        seed=seed,
        config_digest=config_digest,
        per_sample=per_sample,
        name=name,
    )


# ---------------------------------------------------------------------------
# artifacts


def report_to_dict(report: EvalReport) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "name": report.name,
        "counts": {
            "tp": report.counts.tp,
            "tn": report.counts.tn,
            "fp": report.counts.fp,
            "fn": report.counts.fn,
        },
        "accuracy": report.accuracy,
        "roc": report.roc,
        "seed": report.seed,
        "config_digest": report.config_digest,
        "per_sample": [list(row) for row in report.per_sample],
    }


def report_from_dict(doc: dict) -> EvalReport:
    if doc.get("schema") != REPORT_SCHEMA:
        from .errors import ArtifactFormatError

        raise ArtifactFormatError(f"unsupported report schema {doc.get('schema')!r}")
    return EvalReport(
        counts=ConfusionCounts(**doc["counts"]),
        accuracy=doc["accuracy"],
        roc=doc["roc"],
        seed=doc["seed"],
        config_digest=doc["config_digest"],
        per_sample=tuple(tuple(row) for row in doc["per_sample"]),
        name=doc.get("name", "run"),
    )


def _bar_chart_svg(reports: list[EvalReport]) -> str:
    """Self-contained SVG: accuracy and roc bars per run, 0..1 axis."""
    bar_w, gap, group_gap, chart_h, margin = 42, 8, 28, 220, 40
    n_bars = 2 * len(reports)
    width = 2 * margin + n_bars * bar_w + (n_bars - 1) * gap + (len(reports) - 1) * group_gap
    height = chart_h + 2 * margin + 20
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = margin + chart_h * (1.0 - frac)
        parts.append(
            f'<line x1="{margin}" y1="{y:.1f}" x2="{width - margin}" y2="{y:.1f}" '
            f'stroke="#cccccc" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{margin - 6}" y="{y + 4:.1f}" font-size="10" text-anchor="end" '
            f'font-family="sans-serif">{frac:.2f}</text>'
        )
    x = float(margin)
    for report in reports:
        for value, color, tag in (
            (report.accuracy, "#4878a8", "accuracy"),
            (report.roc, "#a85448", "roc"),
        ):
            bar_h = chart_h * max(0.0, min(1.0, value))
            y = margin + chart_h - bar_h
            parts.append(
                f'<rect class="bar" x="{x:.1f}" y="{y:.1f}" width="{bar_w}" '
                f'height="{bar_h:.1f}" fill="{color}"><title>{report.name} '
                f"{tag}={value:.4f}</title></rect>"
            )
            parts.append(
                f'<text x="{x + bar_w / 2:.1f}" y="{margin + chart_h + 14}" font-size="9" '
                f'text-anchor="middle" font-family="sans-serif">{tag}</text>'
            )
            x += bar_w + gap
        parts.append(
            f'<text x="{x - gap - bar_w - (bar_w + gap) / 2:.1f}" y="{margin + chart_h + 28}" '
            f'font-size="10" text-anchor="middle" font-family="sans-serif">{report.name}</text>'
        )
        x += group_gap
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(reports: EvalReport | list[EvalReport], out_dir: str | Path) -> list[Path]:
    """Write report.json, per_sample.csv, and metrics.svg into out_dir.

    A list of reports overlays all runs in the chart; the JSON and CSV
    then cover the first (primary) run plus a runs section.
    """
    runs = [reports] if isinstance(reports, EvalReport) else list(reports)
    if not runs:
        raise InputDataError("no reports to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    primary = runs[0]
    doc = report_to_dict(primary)
    if len(runs) > 1:
        doc["runs"] = [report_to_dict(r) for r in runs[1:]]
    report_path = out / "report.json"
    report_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    csv_path = out / "per_sample.csv"
    with open(csv_path, "w", newline="") as f:
        f.write("source_id,true_label,predicted_label,score\n")
        for sid, t, p, score in primary.per_sample:
            f.write(f"{sid},{t},{p},{score:.17g}\n")
    svg_path = out / "metrics.svg"
    svg_path.write_text(_bar_chart_svg(runs))
    return [report_path, csv_path, svg_path]
