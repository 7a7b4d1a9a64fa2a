"""Automatic text-generation metrics on a 0-100 scale.

BLEU-4, ROUGE-L and METEOR work on the shared retrieval tokenizer
(lowercased letter/digit runs). chrF works on characters with whitespace
removed. BERTScore implements only greedy cosine matching; token vectors come
from a pluggable embedder.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np
from nltk.stem.porter import PorterStemmer

from aqg.dataset import ContextRecord
from aqg.errors import DataError
from aqg.retrieval import tokenize

BLEU_EPSILON = 0.1
CHRF_ORDER = 6
CHRF_BETA = 2.0


class Metric(str, enum.Enum):
    BLEU4 = "BLEU-4"
    ROUGEL = "ROUGE-L"
    METEOR = "METEOR"
    CHRF = "ChRF"
    BERTSCORE = "BERTScore"


AUTOMATIC_METRICS = tuple(Metric)
SENTENCE_BLEU = "BLEU-4 (sentence)"


@dataclass(frozen=True)
class EvalPair:
    candidate: str
    reference: str


@dataclass
class MetricScore:
    metric: Metric
    value: float
    detail: dict[str, float] = field(default_factory=dict)


def _clamp(x: float) -> float:
    return min(100.0, max(0.0, x))


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _bleu_counts(cand: Sequence[str], ref: Sequence[str]) -> tuple[list[int], list[int]]:
    matches, totals = [], []
    for n in range(1, 5):
        c, r = ngrams(cand, n), ngrams(ref, n)
        matches.append(sum(min(cnt, r[g]) for g, cnt in c.items()))
        totals.append(max(len(cand) - n + 1, 0))
    return matches, totals


def _brevity_penalty(c: int, r: int) -> float:
    if c == 0:
        return 0.0
    return 1.0 if c > r else math.exp(1.0 - r / c)


def bleu4(pairs: Sequence[EvalPair]) -> MetricScore:
    """Corpus BLEU-4: clipped n-gram counts pooled over all pairs, no smoothing."""
    if not pairs:
        raise DataError("BLEU needs at least one pair")
    matches = [0] * 4
    totals = [0] * 4
    c_len = r_len = 0
    for pair in pairs:
        cand, ref = tokenize(pair.candidate), tokenize(pair.reference)
        m, t = _bleu_counts(cand, ref)
        matches = [a + b for a, b in zip(matches, m)]
        totals = [a + b for a, b in zip(totals, t)]
        c_len += len(cand)
        r_len += len(ref)
    precisions = [m / t if t else 0.0 for m, t in zip(matches, totals)]
    bp = _brevity_penalty(c_len, r_len)
    detail = {f"p{n}": p for n, p in enumerate(precisions, start=1)}
    detail.update(bp=bp, c=float(c_len), r=float(r_len))
    if min(precisions) == 0.0:
        return MetricScore(Metric.BLEU4, 0.0, detail)
    value = 100.0 * bp * math.exp(sum(0.25 * math.log(p) for p in precisions))
    return MetricScore(Metric.BLEU4, _clamp(value), detail)


def sentence_bleu4(pair: EvalPair, epsilon: float = BLEU_EPSILON) -> MetricScore:
    """Single-pair BLEU-4 with add-epsilon smoothing: a zero match count
    becomes ``epsilon``; an order with no candidate n-grams uses denominator 1.
    """
    cand, ref = tokenize(pair.candidate), tokenize(pair.reference)
    matches, totals = _bleu_counts(cand, ref)
    precisions = [(m if m > 0 else epsilon) / max(t, 1) for m, t in zip(matches, totals)]
    bp = _brevity_penalty(len(cand), len(ref))
    detail = {f"p{n}": p for n, p in enumerate(precisions, start=1)}
    detail["bp"] = bp
    value = 100.0 * bp * math.exp(sum(0.25 * math.log(p) for p in precisions))
    return MetricScore(Metric.BLEU4, _clamp(value), detail)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(pair: EvalPair) -> MetricScore:
    """Sentence-level ROUGE-L F1 (beta = 1)."""
    cand, ref = tokenize(pair.candidate), tokenize(pair.reference)
    lcs = lcs_length(cand, ref)
    p = lcs / len(cand) if cand else 0.0
    r = lcs / len(ref) if ref else 0.0
    f = 2 * p * r / (p + r) if lcs else 0.0
    return MetricScore(Metric.ROUGEL, _clamp(100.0 * f), {"lcs": float(lcs), "p": p, "r": r})


_stemmer = PorterStemmer()


@lru_cache(maxsize=65536)
def stem(word: str) -> str:
    return _stemmer.stem(word)


METEOR_EXACT_LIMIT = 12
METEOR_BEAM_WIDTH = 256


def meteor_alignment(cand: Sequence[str], ref: Sequence[str]) -> tuple[int, int, int]:
    """Return ``(matches, exact_matches, chunks)`` of the best unigram alignment.

    Pairs join tokens with equal Porter stems. Among one-to-one alignments
    the search maximises, in order: total matches, exact-form matches (so the
    exact stage is never displaced by the stem stage), then adjacent links,
    which is the same as minimising chunks.

    The search is exact while at most ``METEOR_EXACT_LIMIT`` reference
    positions can match; beyond that a beam search keeps the match counts
    exact but may settle for a few extra chunks.
    """
    cand_stems = [stem(w) for w in cand]
    ref_stems = [stem(w) for w in ref]
    options: list[tuple[tuple[int, bool], ...]] = []
    for i, w in enumerate(cand):
        options.append(
            tuple((j, ref[j] == w) for j in range(len(ref)) if ref_stems[j] == cand_stems[i])
        )
    matchable = len({j for opts in options for j, _ in opts})
    if matchable > METEOR_EXACT_LIMIT:
        m, e, links = _meteor_beam(options)
        return m, e, m - links

    @lru_cache(maxsize=None)
    def best(i: int, used: int, prev: int) -> tuple[int, int, int]:
        if i == len(cand):
            return (0, 0, 0)
        # leave cand[i] unmatched
        top = best(i + 1, used, -1)
        for j, exact in options[i]:
            if used >> j & 1:
                continue
            m, e, links = best(i + 1, used | (1 << j), j)
            cand_val = (m + 1, e + int(exact), links + int(prev >= 0 and j == prev + 1))
            if cand_val > top:
                top = cand_val
        return top

    m, e, links = best(0, 0, -1)
    best.cache_clear()
    return m, e, m - links


def _meteor_beam(options: Sequence[tuple[tuple[int, bool], ...]]) -> tuple[int, int, int]:
    # states: (used mask, prev ref position) -> best (m, exact, links) so far
    states: dict[tuple[int, int], tuple[int, int, int]] = {(0, -1): (0, 0, 0)}
    for opts in options:
        nxt: dict[tuple[int, int], tuple[int, int, int]] = {}
        for (used, prev), (m, e, links) in states.items():
            moves = [((used, -1), (m, e, links))]
            for j, exact in opts:
                if not used >> j & 1:
                    moves.append(((used | 1 << j, j), (m + 1, e + int(exact), links + int(j == prev + 1 and prev >= 0))))
            for key, val in moves:
                if val > nxt.get(key, (-1, -1, -1)):
                    nxt[key] = val
        ranked = sorted(nxt.items(), key=lambda kv: kv[1], reverse=True)
        states = dict(ranked[:METEOR_BEAM_WIDTH])
    return max(states.values())


def meteor(pair: EvalPair) -> MetricScore:
    """METEOR with exact and Porter-stem matching stages (no synonym stage)."""
    cand, ref = tokenize(pair.candidate), tokenize(pair.reference)
    m, exact, chunks = meteor_alignment(cand, ref)
    if m == 0:
        return MetricScore(Metric.METEOR, 0.0, {"m": 0.0, "chunks": 0.0, "penalty": 0.0, "exact": 0.0})
    p, r = m / len(cand), m / len(ref)
    fmean = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (chunks / m) ** 3
    detail = {"m": float(m), "exact": float(exact), "chunks": float(chunks), "penalty": penalty, "p": p, "r": r, "fmean": fmean}
    return MetricScore(Metric.METEOR, _clamp(100.0 * fmean * (1 - penalty)), detail)


def char_ngrams(text: str, n: int) -> Counter:
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def chrf(pair: EvalPair, beta: float = CHRF_BETA, order: int = CHRF_ORDER) -> MetricScore:
    """Character n-gram F-score over whitespace-stripped text.

    Precision is averaged over orders where the candidate has n-grams,
    recall over orders where the reference has n-grams.
    """
    cand = "".join(pair.candidate.split())
    ref = "".join(pair.reference.split())
    ps, rs = [], []
    detail: dict[str, float] = {}
    for n in range(1, order + 1):
        c, r = char_ngrams(cand, n), char_ngrams(ref, n)
        match = sum(min(cnt, r[g]) for g, cnt in c.items())
        tc, tr = sum(c.values()), sum(r.values())
        if tc:
            ps.append(match / tc)
            detail[f"p{n}"] = match / tc
        if tr:
            rs.append(match / tr)
            detail[f"r{n}"] = match / tr
    p = sum(ps) / len(ps) if ps else 0.0
    r = sum(rs) / len(rs) if rs else 0.0
    detail["p"], detail["r"] = p, r
    denom = beta**2 * p + r
    value = 100.0 * (1 + beta**2) * p * r / denom if denom > 0 else 0.0
    return MetricScore(Metric.CHRF, _clamp(value), detail)


def bertscore_greedy(cand_vectors, ref_vectors) -> MetricScore:
    """Greedy-matching BERTScore F1 from token vectors (no idf, no rescaling)."""
    c = np.asarray(cand_vectors, dtype=float)
    r = np.asarray(ref_vectors, dtype=float)
    if c.ndim != 2 or r.ndim != 2 or c.shape[0] == 0 or r.shape[0] == 0:
        raise DataError("BERTScore needs two non-empty 2-d matrices")
    if c.shape[1] != r.shape[1]:
        raise DataError(f"dimension mismatch: {c.shape[1]} vs {r.shape[1]}")
    cn = np.linalg.norm(c, axis=1)
    rn = np.linalg.norm(r, axis=1)
    if np.any(cn == 0) or np.any(rn == 0):
        raise DataError("zero-norm token vector")
    sim = (c / cn[:, None]) @ (r / rn[:, None]).T
    p = float(sim.max(axis=1).mean())
    rec = float(sim.max(axis=0).mean())
    f = 2 * p * rec / (p + rec) if (p + rec) != 0 else 0.0
    return MetricScore(Metric.BERTSCORE, _clamp(100.0 * f), {"p": p, "r": rec, "f": f})


class TokenEmbedder(Protocol):
    embedder_id: str

    def embed(self, text: str) -> np.ndarray: ...


class HashingEmbedder:
    """Model-free token vectors: hashed character trigrams of each token.

    A stand-in for a contextual encoder so BERTScore runs offline; values are
    not comparable with model-based BERTScore.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim
        self.embedder_id = f"hashing-char3-{dim}"

    @lru_cache(maxsize=65536)
    def _token(self, token: str) -> np.ndarray:
        v = np.zeros(self.dim)
        padded = f"<{token}>"
        for i in range(len(padded) - 2):
            digest = hashlib.blake2b(padded[i : i + 3].encode("utf-8"), digest_size=8).digest()
            h = int.from_bytes(digest, "little")
            v[h % self.dim] += 1.0 if (h >> 63) == 0 else -1.0
        if not v.any():
            # trigram signs cancelled out; fall back to one fixed coordinate
            v[0] = 1.0
        return v

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            return np.zeros((0, self.dim))
        return np.vstack([self._token(t) for t in tokens])


def bertscore(pair: EvalPair, embedder: TokenEmbedder) -> MetricScore:
    c, r = embedder.embed(pair.candidate), embedder.embed(pair.reference)
    if len(c) == 0 or len(r) == 0:
        return MetricScore(Metric.BERTSCORE, 0.0, {"p": 0.0, "r": 0.0, "f": 0.0})
    return bertscore_greedy(c, r)


@dataclass
class CorpusEvaluation:
    summary: dict[Metric, MetricScore]
    items: list[tuple[str, str, float]]

    def per_item(self, metric: str) -> dict[str, float]:
        return {rid: v for rid, m, v in self.items if m == metric}


def evaluate_corpus(
    questions: Sequence,
    gold: Sequence[ContextRecord] | Mapping[str, ContextRecord],
    embedder: TokenEmbedder | None = None,
) -> CorpusEvaluation:
    """Score generated questions against gold questions.

    BLEU-4 is pooled at corpus level; the rest are macro-averaged per item.
    Per-item rows include smoothed sentence BLEU for significance testing.
    """
    by_id = gold if isinstance(gold, Mapping) else {r.id: r for r in gold}
    embedder = embedder or HashingEmbedder()
    pairs: list[tuple[str, EvalPair]] = []
    for q in questions:
        record = by_id.get(q.record_id)
        if record is None:
            raise DataError(f"no gold record for id {q.record_id!r}")
        pairs.append((q.record_id, EvalPair(q.question_text, record.question)))
    if not pairs:
        raise DataError("nothing to evaluate")

    items: list[tuple[str, str, float]] = []
    per_metric: dict[Metric, list[float]] = {m: [] for m in (Metric.ROUGEL, Metric.METEOR, Metric.CHRF, Metric.BERTSCORE)}
    for rid, pair in pairs:
        scores = {
            Metric.ROUGEL: rouge_l(pair),
            Metric.METEOR: meteor(pair),
            Metric.CHRF: chrf(pair),
            Metric.BERTSCORE: bertscore(pair, embedder),
        }
        items.append((rid, SENTENCE_BLEU, sentence_bleu4(pair).value))
        for metric, score in scores.items():
            per_metric[metric].append(score.value)
            items.append((rid, metric.value, score.value))

    summary = {Metric.BLEU4: bleu4([p for _, p in pairs])}
    for metric, values in per_metric.items():
        summary[metric] = MetricScore(metric, sum(values) / len(values), {"n": float(len(values))})
    return CorpusEvaluation(summary=summary, items=items)


def format_value(v: float) -> str:
    return repr(float(v))


def items_to_csv(items: Iterable[tuple[str, str, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["record_id", "metric", "value"])
    for rid, metric, value in items:
        w.writerow([rid, metric, format_value(value)])
    return buf.getvalue()


def summary_to_csv(label: str, summary: Mapping[Metric, MetricScore]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "metric", "value"])
    for metric in AUTOMATIC_METRICS:
        if metric in summary:
            w.writerow([label, metric.value, format_value(summary[metric].value)])
    return buf.getvalue()


def read_items_csv(path: str | Path) -> list[tuple[str, str, float]]:
    rows = _read_csv(path, ["record_id", "metric", "value"])
    out = []
    for lineno, row in rows:
        try:
            out.append((row["record_id"], row["metric"], float(row["value"])))
        except ValueError as exc:
            raise DataError(f"{path}: row {lineno}: bad value {row['value']!r}") from exc
    return out


def read_summary_csv(path: str | Path) -> tuple[str, dict[str, float]]:
    rows = _read_csv(path, ["model", "metric", "value"])
    labels = {row["model"] for _, row in rows}
    if len(labels) != 1:
        raise DataError(f"{path}: expected exactly one model label, found {sorted(labels)}")
    values = {}
    for lineno, row in rows:
        try:
            values[row["metric"]] = float(row["value"])
        except ValueError as exc:
            raise DataError(f"{path}: row {lineno}: bad value {row['value']!r}") from exc
    return labels.pop(), values


def _read_csv(path: str | Path, header: list[str]) -> list[tuple[int, dict[str, str]]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != header:
        raise DataError(f"{path}: row 1: expected header {','.join(header)}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: row {lineno}: expected {len(header)} fields, got {len(row)}")
        out.append((lineno, dict(zip(header, row))))
    return out
