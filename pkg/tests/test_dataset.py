import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from aqg.dataset import (
    ContextRecord,
    DatasetSplit,
    Subject,
    dataset_stats,
    dump_dataset,
    parse_dataset,
)
from aqg.errors import DataError


def test_single_line_maps_fields():
    recs = parse_dataset(b'{"context":"C","question":"Q","subject":"History"}\n', "f.jsonl")
    assert recs == [ContextRecord(id="f.jsonl:1", context="C", question="Q", subject=Subject.HISTORY)]


def test_empty_file():
    assert parse_dataset(b"", "f") == []


def test_missing_question_names_line_and_field():
    data = b'{"context":"C","question":"Q"}\n\n{"context":"C2"}\n'
    with pytest.raises(DataError, match=r"f:3.*'question'"):
        parse_dataset(data, "f")


def test_malformed_line_reports_line_number():
    with pytest.raises(DataError, match="f:2"):
        parse_dataset(b'{"context":"C","question":"Q"}\n{oops\n', "f")


def test_duplicate_id_rejected():
    data = b'{"id":"a","context":"C","question":"Q"}\n{"id":"a","context":"D","question":"R"}\n'
    with pytest.raises(DataError, match="duplicate"):
        parse_dataset(data, "f")


def test_explicit_id_and_extra_fields():
    line = {"id": 7, "context": "C", "question": "Q", "long_prompt": "x", "short_prompt": "y"}
    (rec,) = parse_dataset(json.dumps(line).encode(), "f")
    assert rec.id == "7"


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("Environmental Studies", Subject.ENVIRONMENTAL_STUDIES),
        ("environmental_studies", Subject.ENVIRONMENTAL_STUDIES),
        ("SCIENCE", Subject.SCIENCE),
        (None, Subject.OTHER),
    ],
)
def test_subject_parsing(raw, expected):
    assert Subject.parse(raw) is expected


def test_unknown_subject_maps_to_other_with_warning(caplog):
    (rec,) = parse_dataset(b'{"context":"C","question":"Q","subject":"Astrology"}', "f")
    assert rec.subject is Subject.OTHER
    assert "Astrology" in caplog.text


def test_whitespace_only_fields_rejected():
    with pytest.raises(DataError):
        parse_dataset(b'{"context":"   ","question":"Q"}', "f")


def test_stats_matches_published_composition():
    composition = {
        Subject.HISTORY: 858,
        Subject.GEOGRAPHY: 861,
        Subject.ECONOMICS: 802,
        Subject.ENVIRONMENTAL_STUDIES: 606,
        Subject.SCIENCE: 375,
    }
    records = [
        ContextRecord(id=f"{s.value}-{i}", context="c", question="q", subject=s)
        for s, n in composition.items()
        for i in range(n)
    ]
    counts = dataset_stats(records)
    assert {s: counts[s] for s in composition} == composition
    assert counts[Subject.OTHER] == 0
    assert sum(counts.values()) == 3502


def test_stats_empty_and_small():
    assert set(dataset_stats([]).values()) == {0}
    two = [ContextRecord(id=str(i), context="c", question="q", subject=Subject.HISTORY) for i in range(2)]
    assert dataset_stats(two)[Subject.HISTORY] == 2


def test_split_rejects_overlap():
    r = ContextRecord(id="x", context="c", question="q")
    with pytest.raises(DataError):
        DatasetSplit(train=[r], test=[r])


text = st.text(min_size=1).filter(lambda s: s.strip())
record_lists = st.lists(
    st.tuples(text, text, st.sampled_from(list(Subject))), max_size=20
).map(lambda rows: [ContextRecord(id=f"r{i}", context=c, question=q, subject=s) for i, (c, q, s) in enumerate(rows)])


@given(record_lists)
def test_roundtrip_and_determinism(records):
    raw = dump_dataset(records)
    assert parse_dataset(raw, "x") == records
    assert parse_dataset(raw, "x") == parse_dataset(raw, "x")


@given(record_lists)
def test_stats_total_equals_length(records):
    assert sum(dataset_stats(records).values()) == len(records)


def test_bundled_mini_dataset(mini_train, mini_test):
    assert len(mini_test) == 20
    assert {r.id for r in mini_train}.isdisjoint(r.id for r in mini_test)
