"""Loading and validation of passage/question records.

Files are UTF-8, one JSON object per line, with fields ``context``,
``question``, optional ``subject`` and optional ``id``. Extra fields are
ignored.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable

from aqg.errors import DataError

logger = logging.getLogger(__name__)


class Subject(str, enum.Enum):
    HISTORY = "History"
    GEOGRAPHY = "Geography"
    ECONOMICS = "Economics"
    ENVIRONMENTAL_STUDIES = "EnvironmentalStudies"
    SCIENCE = "Science"
    OTHER = "Other"

    @classmethod
    def parse(cls, raw: str | None) -> "Subject":
        """Lenient lookup: case, spaces, hyphens and underscores are ignored.

        Unknown labels map to ``OTHER`` with a warning.
        """
        if raw is None or not str(raw).strip():
            return cls.OTHER
        key = "".join(ch for ch in str(raw).lower() if ch.isalnum())
        for member in cls:
            if member.value.lower() == key:
                return member
        logger.warning("unknown subject %r mapped to Other", raw)
        return cls.OTHER


@dataclass(frozen=True)
class ContextRecord:
    id: str
    context: str
    question: str
    subject: Subject = Subject.OTHER

    def __post_init__(self) -> None:
        if not self.context.strip():
            raise DataError(f"record {self.id}: empty context")
        if not self.question.strip():
            raise DataError(f"record {self.id}: empty question")

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "context": self.context,
                "question": self.question,
                "subject": self.subject.value,
            },
            ensure_ascii=False,
            sort_keys=True,
        )


@dataclass(frozen=True)
class DatasetSplit:
    train: list[ContextRecord]
    test: list[ContextRecord]

    def __post_init__(self) -> None:
        overlap = {r.id for r in self.train} & {r.id for r in self.test}
        if overlap:
            raise DataError(f"train and test share ids: {sorted(overlap)[:5]}")


def parse_dataset(raw: bytes | BinaryIO, source_name: str) -> list[ContextRecord]:
    """Parse line-delimited JSON records.

    Ids come from an explicit ``id`` field when present, otherwise
    ``source_name:line_number`` (1-based). Blank lines are skipped but still
    count towards line numbers.
    """
    data = raw if isinstance(raw, (bytes, bytearray)) else raw.read()
    try:
        text = bytes(data).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{source_name}: not valid UTF-8 ({exc})") from exc

    records: list[ContextRecord] = []
    seen: set[str] = set()
    # split on \n only: str.splitlines also breaks on U+2028 and friends,
    # which JSON leaves unescaped inside strings
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.removesuffix("\r")
        if not line.strip():
            continue
        where = f"{source_name}:{lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{where}: malformed record ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise DataError(f"{where}: record must be an object")
        for field in ("context", "question"):
            value = obj.get(field)
            if not isinstance(value, str) or not value.strip():
                raise DataError(f"{where}: missing or empty field {field!r}")
        rid = str(obj["id"]) if obj.get("id") is not None else where
        if rid in seen:
            raise DataError(f"{where}: duplicate id {rid!r}")
        seen.add(rid)
        records.append(
            ContextRecord(
                id=rid,
                context=obj["context"],
                question=obj["question"],
                subject=Subject.parse(obj.get("subject")),
            )
        )
    return records


def load_dataset(path: str | Path) -> list[ContextRecord]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc.strerror}") from exc
    return parse_dataset(data, path.name)


def dump_dataset(records: Iterable[ContextRecord]) -> bytes:
    return "".join(r.to_json() + "\n" for r in records).encode("utf-8")


def load_split(train_path: str | Path, test_path: str | Path) -> DatasetSplit:
    return DatasetSplit(train=load_dataset(train_path), test=load_dataset(test_path))


def dataset_stats(records: Iterable[ContextRecord]) -> dict[Subject, int]:
    """Record count per subject; every subject is present, possibly as 0."""
    counts = Counter(r.subject for r in records)
    return {s: counts.get(s, 0) for s in Subject}


def dataset_hash(records: Iterable[ContextRecord]) -> str:
    return hashlib.sha256(dump_dataset(records)).hexdigest()
