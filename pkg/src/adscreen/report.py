"""CSV emission and SVG plot rendering for experiment results.

SVGs are rendered *from* the emitted CSVs, so re-rendering a report from an
output directory reproduces the original plots byte for byte.
"""

from __future__ import annotations

import csv
from pathlib import Path

METRICS_COLUMNS = ("model", "fold", "accuracy", "precision", "recall", "f1",
                   "rmse", "mae", "auc")
ROC_COLUMNS = ("model", "fpr", "tpr", "threshold")
CONFUSION_COLUMNS = ("model", "tp", "fp", "fn", "tn")

_MODEL_COLORS = {
    "disfluency": "#1f77b4",
    "acoustic": "#ff7f0e",
    "interventions": "#2ca02c",
    "ensemble_hard": "#d62728",
    "ensemble_soft": "#9467bd",
    "ensemble_learnt": "#8c564b",
    "ensemble_regression": "#e377c2",
}


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, columns, rows) -> None:
    """rows: iterable of dicts; missing keys become empty cells."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _color(model: str) -> str:
    return _MODEL_COLORS.get(model, "#7f7f7f")


def render_roc_svg(roc_rows: list[dict]) -> str:
    """One ROC polyline per model plus the chance diagonal."""
    width, height, margin = 480, 480, 50
    span = width - 2 * margin

    def sx(v: float) -> float:
        return margin + v * span

    def sy(v: float) -> float:
        return height - margin - v * span

    by_model: dict[str, list] = {}
    for row in roc_rows:
        by_model.setdefault(row["model"], []).append(
            (float(row["fpr"]), float(row["tpr"]))
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{sx(0)}" y1="{sy(0)}" x2="{sx(1)}" y2="{sy(0)}" stroke="black"/>',
        f'<line x1="{sx(0)}" y1="{sy(0)}" x2="{sx(0)}" y2="{sy(1)}" stroke="black"/>',
        f'<line x1="{sx(0)}" y1="{sy(0)}" x2="{sx(1)}" y2="{sy(1)}" '
        'stroke="#aaaaaa" stroke-dasharray="4 4"/>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" '
        'font-size="13">false positive rate</text>',
        f'<text x="14" y="{height / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 14 {height / 2})">true positive rate</text>',
    ]
    legend_y = margin
    for model in sorted(by_model):
        pts = by_model[model]
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        parts.append(
            f'<polyline points="{path}" fill="none" stroke="{_color(model)}" '
            'stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{width - margin - 150}" y="{legend_y}" font-size="12" '
            f'fill="{_color(model)}">{model}</text>'
        )
        legend_y += 16
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_confusion_svg(cm_rows: list[dict]) -> str:
    """A 2x2 count grid per model, laid out left to right."""
    cell, pad, top = 90, 40, 60
    n = len(cm_rows)
    width = pad + n * (2 * cell + pad)
    height = top + 2 * cell + 60
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for m, row in enumerate(cm_rows):
        x0 = pad + m * (2 * cell + pad)
        counts = [[int(row["tn"]), int(row["fp"])], [int(row["fn"]), int(row["tp"])]]
        biggest = max(max(r) for r in counts) or 1
        parts.append(
            f'<text x="{x0 + cell}" y="{top - 20}" text-anchor="middle" '
            f'font-size="13">{row["model"]}</text>'
        )
        for r in range(2):
            for c in range(2):
                shade = 255 - int(155 * counts[r][c] / biggest)
                fill = f"rgb({shade},{shade},255)"
                x, y = x0 + c * cell, top + r * cell
                parts.append(
                    f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                    f'fill="{fill}" stroke="black"/>'
                )
                parts.append(
                    f'<text x="{x + cell / 2}" y="{y + cell / 2 + 5}" '
                    f'text-anchor="middle" font-size="15">{counts[r][c]}</text>'
                )
        for i, name in enumerate(("non-AD", "AD")):
            parts.append(
                f'<text x="{x0 + i * cell + cell / 2}" y="{top + 2 * cell + 20}" '
                f'text-anchor="middle" font-size="11">pred {name}</text>'
            )
            parts.append(
                f'<text x="{x0 - 6}" y="{top + i * cell + cell / 2}" '
                f'text-anchor="end" font-size="11">true {name}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_report_svgs(out_dir) -> list[Path]:
    """Re-render roc.svg / confusion.svg from the CSVs in out_dir."""
    out_dir = Path(out_dir)
    written = []
    roc_csv = out_dir / "roc.csv"
    if roc_csv.exists():
        svg = out_dir / "roc.svg"
        svg.write_text(render_roc_svg(read_csv(roc_csv)), encoding="utf-8")
        written.append(svg)
    cm_csv = out_dir / "confusion.csv"
    if cm_csv.exists():
        svg = out_dir / "confusion.svg"
        svg.write_text(render_confusion_svg(read_csv(cm_csv)), encoding="utf-8")
        written.append(svg)
    return written
