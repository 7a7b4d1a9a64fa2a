"""Document retrieval over an external corpus.

Two backends share one result type: a lexical Okapi BM25 index (the default,
no model needed) and exact exhaustive cosine search over caller-supplied
vectors. Both rank by score descending and break ties by ascending doc id.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from aqg.errors import ConfigError, DataError

INDEX_MAGIC = "AQG-LEXICAL-INDEX"
INDEX_VERSION = 1
MAX_DOC_TOKENS = 200

_TOKEN_RE = re.compile(r"[^\W_]+")
_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")
_BLOCK_RE = re.compile(r"\n[ \t]*\n")


def tokenize(text: str) -> list[str]:
    """Lowercased runs of Unicode letters/digits; everything else separates."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class CorpusDoc:
    doc_id: str
    text: str
    source: str = ""

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise DataError(f"corpus document {self.doc_id!r} is empty")


@dataclass(frozen=True)
class RetrievedDoc:
    doc: CorpusDoc
    score: float
    rank: int


@dataclass
class LexicalIndex:
    postings: dict[str, list[tuple[str, int]]]
    doc_lengths: dict[str, int]
    docs: dict[str, CorpusDoc]
    k1: float = 1.5
    b: float = 0.75
    _tf: dict[str, dict[str, int]] = field(default_factory=dict, repr=False)

    @property
    def doc_count(self) -> int:
        return len(self.doc_lengths)

    @property
    def avg_doc_length(self) -> float:
        if not self.doc_lengths:
            return 0.0
        return sum(self.doc_lengths.values()) / len(self.doc_lengths)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        n = self.doc_count
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def term_frequency(self, term: str, doc_id: str) -> int:
        return self._tf.get(doc_id, {}).get(term, 0)


def build_index(docs: Iterable[CorpusDoc], k1: float = 1.5, b: float = 0.75) -> LexicalIndex:
    tf_by_doc: dict[str, dict[str, int]] = {}
    by_id: dict[str, CorpusDoc] = {}
    lengths: dict[str, int] = {}
    for doc in docs:
        if doc.doc_id in by_id:
            raise DataError(f"duplicate doc_id {doc.doc_id!r}")
        tokens = tokenize(doc.text)
        by_id[doc.doc_id] = doc
        lengths[doc.doc_id] = len(tokens)
        tf_by_doc[doc.doc_id] = dict(Counter(tokens))

    postings: dict[str, list[tuple[str, int]]] = {}
    # sorted iteration makes postings independent of insertion order
    for doc_id in sorted(tf_by_doc):
        for term, tf in sorted(tf_by_doc[doc_id].items()):
            postings.setdefault(term, []).append((doc_id, tf))
    postings = dict(sorted(postings.items()))
    return LexicalIndex(
        postings=postings,
        doc_lengths=dict(sorted(lengths.items())),
        docs=dict(sorted(by_id.items())),
        k1=k1,
        b=b,
        _tf=tf_by_doc,
    )


def bm25_score(index: LexicalIndex, query_terms: Sequence[str], doc_id: str) -> float:
    """BM25 of one document; repeated query terms count once per occurrence."""
    if doc_id not in index.doc_lengths:
        raise DataError(f"unknown doc_id {doc_id!r}")
    dl = index.doc_lengths[doc_id]
    avgdl = index.avg_doc_length
    score = 0.0
    for term in query_terms:
        tf = index.term_frequency(term, doc_id)
        if tf == 0:
            continue
        norm = index.k1 * (1.0 - index.b + index.b * dl / avgdl)
        score += index.idf(term) * tf * (index.k1 + 1.0) / (tf + norm)
    return score


def _rank(scores: Mapping[str, float], docs: Mapping[str, CorpusDoc], k: int) -> list[RetrievedDoc]:
    ordered = sorted(scores.items(), key=lambda item: (-item[1], item[0]))[:k]
    return [RetrievedDoc(doc=docs[d], score=s, rank=i) for i, (d, s) in enumerate(ordered, start=1)]


def retrieve(index: LexicalIndex, passage: str, k: int) -> list[RetrievedDoc]:
    """Top-k documents for ``passage``. Documents scoring 0 are never returned."""
    if k < 1:
        raise ConfigError(f"retrieval k must be >= 1, got {k}")
    terms = tokenize(passage)
    candidates = {doc_id for term in set(terms) for doc_id, _ in index.postings.get(term, ())}
    scores = {d: bm25_score(index, terms, d) for d in candidates}
    scores = {d: s for d, s in scores.items() if s > 0.0}
    return _rank(scores, index.docs, k)


def dense_retrieve(
    doc_vectors: Mapping[str, Sequence[float]],
    query_vector: Sequence[float],
    k: int,
    docs: Mapping[str, CorpusDoc] | None = None,
) -> list[RetrievedDoc]:
    """Exact cosine-similarity search over every stored vector.

    ``docs`` supplies document payloads; when omitted, placeholder docs
    carrying only the id are returned.
    """
    if k < 1:
        raise ConfigError(f"retrieval k must be >= 1, got {k}")
    q = np.asarray(query_vector, dtype=float)
    if q.ndim != 1 or q.size == 0:
        raise DataError("query vector must be a non-empty 1-d vector")
    q_norm = np.linalg.norm(q)
    if q_norm == 0.0:
        raise DataError("query vector has zero norm")
    if not doc_vectors:
        return []
    ids = sorted(doc_vectors)
    mat = np.asarray([doc_vectors[i] for i in ids], dtype=float)
    if mat.ndim != 2 or mat.shape[1] != q.size:
        raise DataError(f"dimension mismatch: query has {q.size}, documents have {mat.shape[-1]}")
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0.0):
        bad = [ids[i] for i in np.flatnonzero(norms == 0.0)]
        raise DataError(f"zero-norm document vectors: {bad}")
    sims = (mat @ q) / (norms * q_norm)
    scores = {doc_id: float(s) for doc_id, s in zip(ids, sims)}
    payload = docs if docs is not None else {i: CorpusDoc(doc_id=i, text=i) for i in ids}
    return _rank(scores, payload, k)


def split_block(block: str, max_tokens: int = MAX_DOC_TOKENS) -> list[str]:
    """Split a text block into pieces of at most ``max_tokens`` tokens.

    Breaks fall on sentence boundaries; a single over-long sentence is cut
    at word boundaries.
    """
    pieces: list[str] = []
    current: list[str] = []
    current_len = 0
    for sentence in _SENTENCE_RE.split(block.strip()):
        n = len(tokenize(sentence))
        if n > max_tokens:
            if current:
                pieces.append(" ".join(current))
                current, current_len = [], 0
            words = sentence.split()
            chunk: list[str] = []
            chunk_len = 0
            for word in words:
                w = len(tokenize(word))
                if chunk and chunk_len + w > max_tokens:
                    pieces.append(" ".join(chunk))
                    chunk, chunk_len = [], 0
                chunk.append(word)
                chunk_len += w
            if chunk:
                pieces.append(" ".join(chunk))
            continue
        if current and current_len + n > max_tokens:
            pieces.append(" ".join(current))
            current, current_len = [], 0
        current.append(sentence)
        current_len += n
    if current:
        pieces.append(" ".join(current))
    return [p for p in pieces if tokenize(p)]


def chunk_text(text: str, source: str, max_tokens: int = MAX_DOC_TOKENS) -> list[CorpusDoc]:
    docs = []
    n = 0
    for block in _BLOCK_RE.split(text.replace("\r\n", "\n")):
        if not block.strip():
            continue
        for piece in split_block(block, max_tokens):
            n += 1
            docs.append(CorpusDoc(doc_id=f"{source}:{n:04d}", text=piece, source=source))
    return docs


def load_corpus(path: str | Path, max_tokens: int = MAX_DOC_TOKENS) -> list[CorpusDoc]:
    """Read a ``.txt`` file, or every ``*.txt`` below a directory, as documents."""
    path = Path(path)
    if path.is_file():
        files = [path]
        root = path.parent
    elif path.is_dir():
        files = sorted(path.rglob("*.txt"))
        root = path
    else:
        raise DataError(f"corpus path {path} does not exist")
    docs: list[CorpusDoc] = []
    for f in files:
        rel = f.relative_to(root).as_posix()
        try:
            text = f.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise DataError(f"cannot read corpus file {f}: {exc}") from exc
        docs.extend(chunk_text(text, rel, max_tokens))
    return docs


def save_index(index: LexicalIndex, path: str | Path) -> None:
    """Line-based format: magic header, parameter line, one JSON line per document."""
    lines = [
        f"{INDEX_MAGIC} {INDEX_VERSION}",
        json.dumps({"k1": index.k1, "b": index.b, "doc_count": index.doc_count}, sort_keys=True),
    ]
    for doc_id, doc in index.docs.items():
        lines.append(
            json.dumps(
                {
                    "doc_id": doc_id,
                    "source": doc.source,
                    "text": doc.text,
                    "tf": dict(sorted(index._tf[doc_id].items())),
                    "length": index.doc_lengths[doc_id],
                },
                ensure_ascii=False,
                sort_keys=True,
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_index(path: str | Path) -> LexicalIndex:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").rstrip("\n").split("\n")
    except OSError as exc:
        raise DataError(f"cannot read index {path}: {exc.strerror}") from exc
    if not lines or lines[0] != f"{INDEX_MAGIC} {INDEX_VERSION}":
        raise DataError(f"{path} is not a version-{INDEX_VERSION} index file")
    params = json.loads(lines[1])
    docs = []
    for line in lines[2:]:
        obj = json.loads(line)
        docs.append(CorpusDoc(doc_id=obj["doc_id"], text=obj["text"], source=obj["source"]))
    index = build_index(docs, k1=params["k1"], b=params["b"])
    if index.doc_count != params["doc_count"]:
        raise DataError(f"{path}: document count mismatch")
    return index
