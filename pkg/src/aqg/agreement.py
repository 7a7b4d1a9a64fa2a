"""Human ratings: ingestion, Fleiss's kappa, and per-model means."""

from __future__ import annotations

import csv
import enum
import io
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from aqg.errors import DataError

N_CATEGORIES = 5


class Criterion(str, enum.Enum):
    GRAMMATICALITY = "Grammaticality"
    APPROPRIATENESS = "Appropriateness"
    RELEVANCE = "Relevance"
    COMPLEXITY = "Complexity"
    ANSWERABILITY = "Answerability"

    @property
    def short(self) -> str:
        return _SHORT[self]

    @classmethod
    def parse(cls, raw: str) -> "Criterion":
        key = raw.strip().lower()
        for c in cls:
            if key in (c.value.lower(), c.short.lower()):
                return c
        raise DataError(f"unknown criterion {raw!r}")


_SHORT = {
    Criterion.GRAMMATICALITY: "Gramm",
    Criterion.APPROPRIATENESS: "Appr",
    Criterion.RELEVANCE: "Rel",
    Criterion.COMPLEXITY: "Comp",
    Criterion.ANSWERABILITY: "Answ",
}


@dataclass(frozen=True)
class RatingRecord:
    rater_id: str
    item_id: str
    criterion: Criterion
    score: int
    model: str = ""

    def __post_init__(self) -> None:
        if not 1 <= self.score <= N_CATEGORIES:
            raise DataError(f"score {self.score} for item {self.item_id!r} outside 1..{N_CATEGORIES}")


@dataclass(frozen=True)
class AgreementMatrix:
    item_ids: tuple[str, ...]
    counts: np.ndarray  # items x categories
    n_raters: int


class DegenerateDistributionError(DataError):
    """Every rating falls in one category: chance agreement is 1, kappa undefined."""


def build_matrix(ratings: Iterable[RatingRecord], criterion: Criterion) -> AgreementMatrix:
    criterion = Criterion(criterion)
    by_item: dict[str, dict[str, int]] = defaultdict(dict)
    for r in ratings:
        if r.criterion is not criterion:
            continue
        if r.rater_id in by_item[r.item_id]:
            raise DataError(f"duplicate rating: rater {r.rater_id!r}, item {r.item_id!r}, {criterion.value}")
        by_item[r.item_id][r.rater_id] = r.score
    if not by_item:
        raise DataError(f"no ratings for {criterion.value}")

    raters = sorted({rater for scores in by_item.values() for rater in scores})
    incomplete = []
    for item, scores in sorted(by_item.items()):
        missing = [rater for rater in raters if rater not in scores]
        if missing:
            incomplete.append(f"{item} (missing {', '.join(missing)})")
    if incomplete:
        raise DataError(f"unequal rater coverage for {criterion.value}: {'; '.join(incomplete)}")
    if len(raters) < 2:
        raise DataError("agreement needs at least two raters")

    item_ids = tuple(sorted(by_item))
    counts = np.zeros((len(item_ids), N_CATEGORIES), dtype=np.int64)
    for i, item in enumerate(item_ids):
        for score in by_item[item].values():
            counts[i, score - 1] += 1
    return AgreementMatrix(item_ids=item_ids, counts=counts, n_raters=len(raters))


def fleiss_kappa(matrix: AgreementMatrix | np.ndarray) -> float:
    """Fleiss's kappa for a fixed number of raters per item.

    Accepts an :class:`AgreementMatrix` or a raw items x categories count array.
    """
    counts = np.asarray(matrix.counts if isinstance(matrix, AgreementMatrix) else matrix, dtype=float)
    if counts.ndim != 2 or counts.shape[0] < 1:
        raise DataError("need at least one item")
    row_sums = counts.sum(axis=1)
    n = row_sums[0]
    if not np.all(row_sums == n):
        raise DataError("every item must have the same number of ratings")
    if n < 2:
        raise DataError("agreement needs at least two raters")
    n_items = counts.shape[0]
    p_i = ((counts**2).sum(axis=1) - n) / (n * (n - 1))
    p_bar = p_i.mean()
    p_j = counts.sum(axis=0) / (n_items * n)
    p_e = float((p_j**2).sum())
    if np.isclose(p_e, 1.0, rtol=0.0, atol=1e-15):
        raise DegenerateDistributionError(
            f"all ratings fall in one category (observed agreement {p_bar:.2f}); kappa undefined"
        )
    return float((p_bar - p_e) / (1.0 - p_e))


def kappa_label(kappa: float) -> str:
    """Landis-Koch style reading, advisory only."""
    if kappa < 0:
        return "poor"
    for upper, label in ((0.20, "slight"), (0.40, "fair"), (0.60, "moderate"), (0.80, "substantial")):
        if kappa <= upper:
            return label
    return "almost perfect"


def kappa_table(ratings: Sequence[RatingRecord]) -> dict[Criterion, float | None]:
    """Kappa per criterion present in ``ratings``; ``None`` where it is undefined."""
    out: dict[Criterion, float | None] = {}
    present = {r.criterion for r in ratings}
    for c in Criterion:
        if c not in present:
            continue
        try:
            out[c] = fleiss_kappa(build_matrix(ratings, c))
        except DegenerateDistributionError:
            out[c] = None
    return out


def model_of(r: RatingRecord) -> str:
    """Model label of a rating: explicit column, else the item-id prefix before '/'."""
    if r.model:
        return r.model
    if "/" in r.item_id:
        return r.item_id.split("/", 1)[0]
    raise DataError(f"item {r.item_id!r} has no model label (add a model column or use model/record ids)")


def mean_ratings(
    ratings: Iterable[RatingRecord],
    group_by: Mapping[str, str] | Callable[[RatingRecord], str] = model_of,
) -> dict[tuple[str, Criterion], float]:
    """Mean score per (model, criterion) over all raters and items.

    ``group_by`` maps an item id to its model, or is a function of the record.
    """
    key = group_by if callable(group_by) else (lambda r: group_by[r.item_id])
    sums: dict[tuple[str, Criterion], list[int]] = defaultdict(list)
    for r in ratings:
        sums[(key(r), r.criterion)].append(r.score)
    return {k: sum(v) / len(v) for k, v in sums.items()}


def item_means(
    ratings: Iterable[RatingRecord],
    group_by: Mapping[str, str] | Callable[[RatingRecord], str] = model_of,
) -> dict[tuple[str, Criterion], list[float]]:
    """Per-item means across raters, grouped by (model, criterion), items sorted by id."""
    key = group_by if callable(group_by) else (lambda r: group_by[r.item_id])
    cells: dict[tuple[str, Criterion], dict[str, list[int]]] = defaultdict(lambda: defaultdict(list))
    for r in ratings:
        cells[(key(r), r.criterion)][r.item_id].append(r.score)
    return {k: [sum(s) / len(s) for _, s in sorted(items.items())] for k, items in cells.items()}


RATINGS_HEADER = ["rater_id", "item_id", "criterion", "score"]


def parse_ratings_csv(text: str, source: str = "<ratings>") -> list[RatingRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DataError(f"{source}: empty ratings file")
    header = [h.strip() for h in rows[0]]
    if header[:4] != RATINGS_HEADER or header[4:] not in ([], ["model"]):
        raise DataError(f"{source}: row 1: expected header {','.join(RATINGS_HEADER)}[,model]")
    out = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"{source}: row {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            score = int(row[3])
        except ValueError as exc:
            raise DataError(f"{source}: row {lineno}: score {row[3]!r} is not an integer") from exc
        try:
            rec = RatingRecord(
                rater_id=row[0].strip(),
                item_id=row[1].strip(),
                criterion=Criterion.parse(row[2]),
                score=score,
                model=row[4].strip() if len(row) > 4 else "",
            )
        except DataError as exc:
            raise DataError(f"{source}: row {lineno}: {exc}") from exc
        triple = (rec.rater_id, rec.item_id, rec.criterion)
        if triple in seen:
            raise DataError(f"{source}: row {lineno}: duplicate rating {triple[0]}/{triple[1]}/{triple[2].value}")
        seen.add(triple)
        out.append(rec)
    return out


def load_ratings(path: str | Path) -> list[RatingRecord]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read ratings {path}: {exc.strerror}") from exc
    return parse_ratings_csv(text, str(path))


def kappa_csv(table: Mapping[Criterion, float | None]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["criterion", "kappa", "interpretation"])
    for c, k in table.items():
        w.writerow([c.value, "" if k is None else f"{k:.4f}", "undefined" if k is None else kappa_label(k)])
    return buf.getvalue()


def kappa_text(table: Mapping[Criterion, float | None]) -> str:
    width = max((len(c.value) for c in table), default=9)
    lines = [f"{'Criterion':<{width}}  Kappa   Reading"]
    for c, k in table.items():
        if k is None:
            lines.append(f"{c.value:<{width}}  n/a     undefined (single category)")
        else:
            lines.append(f"{c.value:<{width}}  {k:6.3f}  {kappa_label(k)}")
    return "\n".join(lines) + "\n"
