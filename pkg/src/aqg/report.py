"""Comparison tables with best-value marking and significance stars, and
side-by-side sample sheets of generated questions."""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from aqg.dataset import ContextRecord
from aqg.errors import DataError

FORMATS = ("markdown", "csv", "plain")


@dataclass
class ResultsTable:
    rows: list[tuple[str, dict[str, float]]]
    columns: list[str]
    stars: dict[tuple[str, str], bool] = field(default_factory=dict)
    best: dict[str, str] = field(default_factory=dict)
    ties: dict[str, list[str]] = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.rows]

    def value(self, label: str, column: str) -> float:
        return dict(self.rows)[label][column]


def _best(rows: Sequence[tuple[str, Mapping[str, float]]], columns: Sequence[str]):
    best, ties = {}, {}
    for col in columns:
        top = max(values[col] for _, values in rows)
        winners = [label for label, values in rows if values[col] == top]
        best[col] = winners[0]
        if len(winners) > 1:
            ties[col] = winners
    return best, ties


def build_table(
    metric_results: Mapping[str, Mapping[str, float]] | Sequence[tuple[str, Mapping[str, float]]],
    significance: Mapping[tuple[str, str], bool] | None = None,
    columns: Sequence[str] | None = None,
) -> ResultsTable:
    """Rows in the given order; ``best`` and ``ties`` are derived from the values."""
    rows_in = list(metric_results.items()) if isinstance(metric_results, Mapping) else list(metric_results)
    if not rows_in:
        raise DataError("table has no rows")
    cols = list(columns) if columns is not None else list(rows_in[0][1])
    if not cols:
        raise DataError("table has no columns")
    rows = []
    for label, values in rows_in:
        if set(values) != set(cols):
            raise DataError(f"row {label!r} has columns {sorted(values)}, expected {sorted(cols)}")
        rows.append((label, {c: float(values[c]) for c in cols}))
    labels = [label for label, _ in rows]
    if len(set(labels)) != len(labels):
        raise DataError("duplicate row labels")
    stars = {k: bool(v) for k, v in (significance or {}).items() if v and k[0] in labels and k[1] in cols}
    best, ties = _best(rows, cols)
    return ResultsTable(rows=rows, columns=cols, stars=stars, best=best, ties=ties)


def _cell(table: ResultsTable, label: str, col: str, fmt: str) -> str:
    text = f"{table.value(label, col):.2f}"
    starred = table.stars.get((label, col), False)
    is_best = table.best.get(col) == label
    if fmt == "markdown":
        text += "\\*" if starred else ""
        return f"**{text}**" if is_best else text
    text += "*" if starred else ""
    return f"[{text}]" if is_best else text


def render(table: ResultsTable, format: str = "markdown") -> str:
    """Deterministic text rendering, values to 2 decimals (csv keeps full precision)."""
    if format not in FORMATS:
        raise DataError(f"unknown format {format!r}; choose from {', '.join(FORMATS)}")
    if not table.columns:
        raise DataError("table has no columns")
    if format == "csv":
        return _render_csv(table)
    if format == "markdown":
        lines = [
            "| Model | " + " | ".join(table.columns) + " |",
            "|:---|" + "---:|" * len(table.columns),
        ]
        for label, _ in table.rows:
            cells = [_cell(table, label, c, "markdown") for c in table.columns]
            lines.append(f"| {label} | " + " | ".join(cells) + " |")
    else:
        grid = [["Model", *table.columns]]
        for label, _ in table.rows:
            grid.append([label, *(_cell(table, label, c, "plain") for c in table.columns)])
        widths = [max(len(row[i]) for row in grid) for i in range(len(grid[0]))]
        lines = []
        for n, row in enumerate(grid):
            first = row[0].ljust(widths[0])
            rest = [cell.rjust(w) for cell, w in zip(row[1:], widths[1:])]
            lines.append("  ".join([first, *rest]).rstrip())
            if n == 0:
                lines.append("  ".join("-" * w for w in widths))
    if table.ties:
        lines.append("")
        for col, labels in table.ties.items():
            lines.append(f"Tie for best {col}: {', '.join(labels)} (first row marked).")
    return "\n".join(lines) + "\n"


def _render_csv(table: ResultsTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", *table.columns])
    for label, values in table.rows:
        w.writerow([label, *(repr(values[c]) + ("*" if table.stars.get((label, c)) else "") for c in table.columns)])
    return buf.getvalue()


def parse_csv(text: str, source: str = "<table>") -> ResultsTable:
    """Inverse of the csv rendering; trailing ``*`` marks a star."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not rows[0] or rows[0][0] != "model":
        raise DataError(f"{source}: row 1: expected header starting with 'model'")
    columns = rows[0][1:]
    data, stars = [], {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(rows[0]):
            raise DataError(f"{source}: row {lineno}: expected {len(rows[0])} fields, got {len(row)}")
        label, values = row[0], {}
        for col, cell in zip(columns, row[1:]):
            if cell.endswith("*"):
                stars[(label, col)] = True
                cell = cell[:-1]
            try:
                values[col] = float(cell)
            except ValueError as exc:
                raise DataError(f"{source}: row {lineno}: bad value {cell!r} in column {col}") from exc
        data.append((label, values))
    return build_table(data, stars, columns)


def report_notes(alpha: float = 0.05, human: bool = False) -> str:
    lines = [
        f"* Stars: two-sided pooled-variance Student's t-test at alpha = {alpha:g} against the "
        "baseline with the lowest mean in that column; only improvements are starred.",
        "* Bold marks the highest value per column; ties go to the first row.",
    ]
    if human:
        lines.append("* Human scores are 1-5 means over raters and items; t-tests use per-item means across raters.")
    else:
        lines += [
            "* BLEU-4 is corpus-level (pooled counts, no smoothing); its stars use smoothed sentence BLEU per item.",
            "* ROUGE-L is sentence-level F1 (beta = 1), macro-averaged.",
            "* METEOR-es: exact and Porter-stem matching only, no synonym stage.",
            "* ChRF: character 1-6 grams, beta = 2, whitespace removed.",
            "* BERTScore: greedy cosine matching F1, no idf weighting, no baseline rescaling.",
        ]
    return "\n".join(lines) + "\n"


def sample_sheet(
    records: Sequence[ContextRecord],
    questions: Mapping[str, Mapping[str, str] | Iterable],
    sample_size: int | None = None,
    seed: int = 0,
) -> str:
    """Markdown sheet: per sampled record, its context, gold question and one
    generated question per method in the mapping's order.

    ``questions`` maps a method label to either ``{record_id: text}`` or an
    iterable of objects with ``record_id`` and ``question_text``.
    """
    by_method: dict[str, dict[str, str]] = {}
    for label, qs in questions.items():
        if isinstance(qs, Mapping):
            by_method[label] = dict(qs)
        else:
            by_method[label] = {q.record_id: q.question_text for q in qs}
    chosen = list(records)
    if sample_size is not None and sample_size < len(chosen):
        idx = sorted(random.Random(seed).sample(range(len(chosen)), sample_size))
        chosen = [chosen[i] for i in idx]

    blocks = []
    for rec in chosen:
        missing = [label for label, qs in by_method.items() if rec.id not in qs]
        if missing:
            raise DataError(f"record {rec.id!r} has no output from: {', '.join(missing)}")
        lines = [
            f"### {rec.id} ({rec.subject.value})",
            "",
            f"**Context:** {rec.context}",
            "",
            f"**Gold question:** {rec.question}",
            "",
            "| Model | Generated question |",
            "|:---|:---|",
        ]
        for label, qs in by_method.items():
            text = qs[rec.id].replace("|", "\\|")
            lines.append(f"| {label} | {text} |")
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)
