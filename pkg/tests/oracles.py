"""Independent reference implementations used to check the library.

Deliberately naive: explicit enumeration and loops, no shared helpers with
the code under test apart from the tokenizer and the Porter stemmer.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

from scipy import integrate

from aqg.metrics import stem
from aqg.retrieval import tokenize


def _grams(tokens, n):
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def _clipped_matches(cand_grams, ref_grams):
    total = 0
    for g in set(cand_grams):
        total += min(cand_grams.count(g), ref_grams.count(g))
    return total


def sentence_bleu(cand_text, ref_text, eps=0.1):
    cand, ref = tokenize(cand_text), tokenize(ref_text)
    log_sum = 0.0
    for n in (1, 2, 3, 4):
        cg, rg = _grams(cand, n), _grams(ref, n)
        m = _clipped_matches(cg, rg)
        denom = len(cg) if cg else 1
        log_sum += math.log((m if m else eps) / denom) / 4
    if not cand:
        return 0.0
    bp = 1.0 if len(cand) > len(ref) else math.exp(1 - len(ref) / len(cand))
    return 100 * bp * math.exp(log_sum)


def corpus_bleu(pairs):
    matches = [0] * 4
    totals = [0] * 4
    c = r = 0
    for cand_text, ref_text in pairs:
        cand, ref = tokenize(cand_text), tokenize(ref_text)
        c += len(cand)
        r += len(ref)
        for n in (1, 2, 3, 4):
            cg, rg = _grams(cand, n), _grams(ref, n)
            matches[n - 1] += _clipped_matches(cg, rg)
            totals[n - 1] += len(cg)
    if any(t == 0 or m == 0 for m, t in zip(matches, totals)):
        return 0.0
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return 100 * bp * math.exp(sum(math.log(m / t) for m, t in zip(matches, totals)) / 4)


def lcs(a, b):
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def rouge_l(cand_text, ref_text):
    cand, ref = tokenize(cand_text), tokenize(ref_text)
    n = lcs(cand, ref)
    if n == 0:
        return 0.0
    p, r = n / len(cand), n / len(ref)
    return 100 * 2 * p * r / (p + r)


def _count_chunks(alignment):
    pairs = sorted(alignment)
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def meteor_alignment(cand, ref):
    """Exhaustive search over maximum stem matchings.

    Within each stem class every choice of matched positions on both sides
    and every bijection between them is tried; the result keeps the maximum
    number of exact-form pairs, then the minimum chunk count.
    """
    classes = {}
    for i, w in enumerate(cand):
        classes.setdefault(stem(w), ([], []))[0].append(i)
    for j, w in enumerate(ref):
        if stem(w) in classes:
            classes[stem(w)][1].append(j)
    per_class = []
    for ci, rj in classes.values():
        k = min(len(ci), len(rj))
        if k == 0:
            continue
        options = []
        for cs in itertools.combinations(ci, k):
            for rs in itertools.permutations(rj, k):
                options.append(list(zip(cs, rs)))
        per_class.append(options)
    best = (0, 0, 0)  # (m, exact, -chunks)
    for combo in itertools.product(*per_class):
        alignment = [p for part in combo for p in part]
        m = len(alignment)
        exact = sum(cand[i] == ref[j] for i, j in alignment)
        key = (m, exact, -_count_chunks(alignment))
        if key > best:
            best = key
    return best[0], best[1], -best[2]


def meteor(cand_text, ref_text):
    cand, ref = tokenize(cand_text), tokenize(ref_text)
    m, _, chunks = meteor_alignment(cand, ref)
    if m == 0:
        return 0.0
    p, r = m / len(cand), m / len(ref)
    fmean = 10 * p * r / (r + 9 * p)
    return 100 * fmean * (1 - 0.5 * (chunks / m) ** 3)


def chrf(cand_text, ref_text, beta=2.0):
    cand = "".join(ch for ch in cand_text if not ch.isspace())
    ref = "".join(ch for ch in ref_text if not ch.isspace())
    ps, rs = [], []
    for n in range(1, 7):
        cg = [cand[i : i + n] for i in range(len(cand) - n + 1)]
        rg = [ref[i : i + n] for i in range(len(ref) - n + 1)]
        m = _clipped_matches(cg, rg)
        if cg:
            ps.append(m / len(cg))
        if rg:
            rs.append(m / len(rg))
    p = sum(ps) / len(ps) if ps else 0.0
    r = sum(rs) / len(rs) if rs else 0.0
    if beta**2 * p + r == 0:
        return 0.0
    return 100 * (1 + beta**2) * p * r / (beta**2 * p + r)


def cosine(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    return dot / (math.sqrt(sum(a * a for a in u)) * math.sqrt(sum(b * b for b in v)))


def bertscore(cand_rows, ref_rows):
    table = [[cosine(c, r) for r in ref_rows] for c in cand_rows]
    p = sum(max(row) for row in table) / len(cand_rows)
    r = sum(max(table[i][j] for i in range(len(cand_rows))) for j in range(len(ref_rows))) / len(ref_rows)
    f = 2 * p * r / (p + r)
    return min(100.0, max(0.0, 100 * f))


def bm25(docs, query_terms, doc_id, k1=1.5, b=0.75):
    """Okapi BM25 straight from the formula; ``docs`` maps id -> token list."""
    n = len(docs)
    avgdl = sum(len(t) for t in docs.values()) / n
    dl = len(docs[doc_id])
    score = 0.0
    for term in query_terms:
        tf = docs[doc_id].count(term)
        if tf == 0:
            continue
        df = sum(1 for toks in docs.values() if term in toks)
        idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
        score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
    return score


def fleiss_kappa_from_triples(triples):
    """Kappa from raw (rater, item, category) triples, categories 1..5."""
    items = sorted({t[1] for t in triples})
    raters_per_item = {}
    for rater, item, cat in triples:
        raters_per_item.setdefault(item, []).append(cat)
    n = len(raters_per_item[items[0]])
    n_items = len(items)
    p_bar = 0.0
    for item in items:
        cats = raters_per_item[item]
        agree_pairs = 0
        for a in range(n):
            for b_ in range(n):
                if a != b_ and cats[a] == cats[b_]:
                    agree_pairs += 1
        p_bar += agree_pairs / (n * (n - 1))
    p_bar /= n_items
    p_e = 0.0
    for cat in range(1, 6):
        share = sum(1 for _, _, c in triples if c == cat) / (n_items * n)
        p_e += share * share
    return (p_bar - p_e) / (1 - p_e)


def t_density(x, df):
    log_c = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(log_c - (df + 1) / 2 * math.log1p(x * x / df))


def t_cdf_quadrature(t, df):
    """P(T <= t) by adaptive quadrature of the density from 0 to |t|."""
    if t == 0:
        return 0.5
    half, _ = integrate.quad(t_density, 0.0, abs(t), args=(df,), epsabs=1e-14, epsrel=1e-13, limit=500)
    return 0.5 + half if t > 0 else 0.5 - half


def pooled_t(a, b):
    na, nb = len(a), len(b)
    ma, mb = sum(a) / na, sum(b) / nb
    ss = sum((x - ma) ** 2 for x in a) + sum((x - mb) ** 2 for x in b)
    sp2 = ss / (na + nb - 2)
    return (ma - mb) / math.sqrt(sp2 * (1 / na + 1 / nb)), na + nb - 2
