"""Few-shot example selection and prompt assembly for every method.

All rendered prompts share one layout::

    <instruction header>
    <few-shot Passage/Question blocks>      (ICL, Hybrid)
    <retrieved context blocks, rank order>  (RAG, Hybrid)
    Passage: <target passage>
    Question:

so a Hybrid prompt with no retrieved documents is exactly the ICL prompt,
and a RAG prompt with no documents is exactly the passage-only baseline.
"""

from __future__ import annotations

import enum
import hashlib
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from aqg.dataset import ContextRecord
from aqg.errors import ConfigError, DataError
from aqg.retrieval import CorpusDoc, LexicalIndex, RetrievedDoc, bm25_score, build_index, tokenize

DEFAULT_TOKEN_BUDGET = 3000


class Method(str, enum.Enum):
    BASELINE = "baseline"
    ICL = "icl"
    RAG = "rag"
    HYBRID = "hybrid"


class SelectionStrategy(str, enum.Enum):
    STRATIFIED_RANDOM = "stratified"
    SIMILARITY_TOP_M = "similarity"


@dataclass(frozen=True)
class FewShotExample:
    passage: str
    question: str
    record_id: str = ""

    def __post_init__(self) -> None:
        if not self.passage.strip() or not self.question.strip():
            raise DataError("few-shot example needs a passage and a question")


@dataclass(frozen=True)
class PipelineConfig:
    method: Method
    icl_shots: int = 0
    retrieval_k: int = 0
    hybrid_shots: int = 0
    seed: int = 0
    selection_strategy: SelectionStrategy = SelectionStrategy.STRATIFIED_RANDOM
    token_budget: int = DEFAULT_TOKEN_BUDGET

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "selection_strategy", SelectionStrategy(self.selection_strategy))
        for name in ("icl_shots", "retrieval_k", "hybrid_shots"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.method is Method.ICL and self.icl_shots < 1:
            raise ConfigError("ICL requires icl_shots >= 1")
        if self.method is Method.RAG and self.retrieval_k < 1:
            raise ConfigError("RAG requires retrieval_k >= 1")
        if self.method is Method.HYBRID and (self.retrieval_k < 1 or self.hybrid_shots < 1):
            raise ConfigError("Hybrid requires retrieval_k >= 1 and hybrid_shots >= 1")

    @property
    def shots(self) -> int:
        if self.method is Method.ICL:
            return self.icl_shots
        if self.method is Method.HYBRID:
            return self.hybrid_shots
        return 0

    @property
    def uses_retrieval(self) -> bool:
        return self.method in (Method.RAG, Method.HYBRID)

    @property
    def label(self) -> str:
        if self.method is Method.ICL:
            return f"ICL (k={self.icl_shots})"
        if self.method is Method.RAG:
            return f"RAG (k={self.retrieval_k})"
        if self.method is Method.HYBRID:
            return f"Hybrid (k={self.retrieval_k}, m={self.hybrid_shots})"
        return "Baseline"


_SECTION_RE = re.compile(r"^\[(body|example|context)\]\n", re.MULTILINE)
_PLACEHOLDER_RE = re.compile(r"\{(examples|contexts|passage)\}")


@dataclass(frozen=True)
class PromptTemplate:
    """Prompt wording. ``template_id`` is a hash of the source text."""

    body: str
    example: str
    context: str
    source_text: str = field(default="", repr=False)

    @property
    def template_id(self) -> str:
        text = self.source_text or f"[body]\n{self.body}[example]\n{self.example}[context]\n{self.context}"
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def parse(cls, text: str) -> "PromptTemplate":
        parts = _SECTION_RE.split(text)
        sections = dict(zip(parts[1::2], parts[2::2]))
        missing = {"body", "example", "context"} - sections.keys()
        if missing:
            raise ConfigError(f"template is missing sections: {sorted(missing)}")
        # the newline before the next section header is layout, not prompt text
        body = sections["body"].removesuffix("\n")
        for placeholder in ("{examples}", "{contexts}", "{passage}"):
            if placeholder not in body:
                raise ConfigError(f"template body lacks placeholder {placeholder}")
        return cls(body=body, example=sections["example"], context=sections["context"], source_text=text)

    @classmethod
    def load(cls, path: str | Path) -> "PromptTemplate":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def default(cls) -> "PromptTemplate":
        text = resources.files("aqg").joinpath("data/default_template.txt").read_text(encoding="utf-8")
        return cls.parse(text)


@dataclass(frozen=True)
class PromptBundle:
    method: Method
    target_passage: str
    examples: tuple[FewShotExample, ...]
    retrieved: tuple[RetrievedDoc, ...]
    rendered_text: str
    prompt_hash: str
    template_id: str
    record_id: str = ""


def prompt_hash(rendered_text: str, method: Method, template_id: str) -> str:
    h = hashlib.sha256()
    for part in (rendered_text, Method(method).value, template_id):
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


def render(
    template: PromptTemplate,
    target_passage: str,
    examples: Sequence[FewShotExample] = (),
    retrieved: Sequence[RetrievedDoc] = (),
) -> str:
    example_text = "".join(
        template.example.format(passage=ex.passage, question=ex.question) for ex in examples
    )
    context_text = "".join(
        template.context.format(rank=r.rank, source=r.doc.source or r.doc.doc_id, text=r.doc.text)
        for r in retrieved
    )
    values = {"examples": example_text, "contexts": context_text, "passage": target_passage}
    # single pass: substituted text is never rescanned for placeholders
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template.body)


def _bundle(method, template, target_passage, examples, retrieved, record_id="") -> PromptBundle:
    text = render(template, target_passage, examples, retrieved)
    return PromptBundle(
        method=Method(method),
        target_passage=target_passage,
        examples=tuple(examples),
        retrieved=tuple(retrieved),
        rendered_text=text,
        prompt_hash=prompt_hash(text, method, template.template_id),
        template_id=template.template_id,
        record_id=record_id,
    )


def fit_budget(
    template: PromptTemplate,
    target_passage: str,
    examples: Sequence[FewShotExample],
    retrieved: Sequence[RetrievedDoc],
    token_budget: int,
) -> list[RetrievedDoc]:
    """Drop lowest-ranked documents until the prompt fits ``token_budget`` tokens."""
    kept = list(retrieved)
    while kept and len(tokenize(render(template, target_passage, examples, kept))) > token_budget:
        kept.pop()
    return kept


def assemble_baseline_input(target_passage: str, template: PromptTemplate, record_id: str = "") -> PromptBundle:
    return _bundle(Method.BASELINE, template, target_passage, (), (), record_id)


def assemble_icl_prompt(
    examples: Sequence[FewShotExample],
    target_passage: str,
    template: PromptTemplate,
    record_id: str = "",
) -> PromptBundle:
    if not examples:
        raise ConfigError("ICL prompt needs at least one example")
    return _bundle(Method.ICL, template, target_passage, examples, (), record_id)


def assemble_rag_input(
    target_passage: str,
    retrieved: Sequence[RetrievedDoc],
    template: PromptTemplate,
    record_id: str = "",
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> PromptBundle:
    retrieved = fit_budget(template, target_passage, (), retrieved, token_budget)
    return _bundle(Method.RAG, template, target_passage, (), retrieved, record_id)


def assemble_hybrid_prompt(
    target_passage: str,
    retrieved: Sequence[RetrievedDoc],
    examples: Sequence[FewShotExample],
    template: PromptTemplate,
    record_id: str = "",
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> PromptBundle:
    if not examples:
        raise ConfigError("hybrid prompt needs at least one example")
    retrieved = fit_budget(template, target_passage, examples, retrieved, token_budget)
    return _bundle(Method.HYBRID, template, target_passage, examples, retrieved, record_id)


def build_train_index(train: Sequence[ContextRecord]) -> LexicalIndex:
    return build_index(CorpusDoc(doc_id=r.id, text=r.context, source="train") for r in train)


def select_examples(
    train: Sequence[ContextRecord],
    count: int,
    strategy: SelectionStrategy | str,
    seed: int,
    target: ContextRecord,
    train_index: LexicalIndex | None = None,
) -> list[FewShotExample]:
    """Pick ``count`` few-shot examples for ``target``; never the target itself.

    Stratified draws shuffle same-subject records first and top up from the
    remaining subjects, seeded by ``(seed, target.id)``. Similarity picks the
    highest BM25 matches of the target passage, ties and zero scores resolved
    by record id.
    """
    strategy = SelectionStrategy(strategy)
    if count < 1:
        raise ConfigError("example count must be >= 1")
    if not train:
        raise DataError("no training records to draw examples from")
    if count > len(train):
        raise ConfigError(f"requested {count} examples from {len(train)} training records")
    pool = sorted((r for r in train if r.id != target.id), key=lambda r: r.id)
    if count > len(pool):
        raise ConfigError(
            f"requested {count} examples but only {len(pool)} remain after excluding the target"
        )

    if strategy is SelectionStrategy.STRATIFIED_RANDOM:
        rng = random.Random(f"{seed}:{target.id}")
        same = [r for r in pool if r.subject == target.subject]
        other = [r for r in pool if r.subject != target.subject]
        rng.shuffle(same)
        rng.shuffle(other)
        chosen = (same + other)[:count]
    else:
        index = train_index if train_index is not None else build_train_index(pool)
        terms = tokenize(target.context)
        scored = [
            (bm25_score(index, terms, r.id) if r.id in index.doc_lengths else 0.0, r) for r in pool
        ]
        scored.sort(key=lambda item: (-item[0], item[1].id))
        chosen = [r for _, r in scored[:count]]
    return [FewShotExample(passage=r.context, question=r.question, record_id=r.id) for r in chosen]


def assemble(
    record: ContextRecord,
    config: PipelineConfig,
    template: PromptTemplate,
    train: Sequence[ContextRecord] = (),
    retrieved: Sequence[RetrievedDoc] = (),
    train_index: LexicalIndex | None = None,
) -> PromptBundle:
    """Build the prompt for one record under ``config``; retrieval happens upstream."""
    examples: list[FewShotExample] = []
    if config.shots:
        examples = select_examples(
            train, config.shots, config.selection_strategy, config.seed, record, train_index
        )
    if config.method is Method.BASELINE:
        return assemble_baseline_input(record.context, template, record.id)
    if config.method is Method.ICL:
        return assemble_icl_prompt(examples, record.context, template, record.id)
    if config.method is Method.RAG:
        return assemble_rag_input(record.context, retrieved, template, record.id, config.token_budget)
    return assemble_hybrid_prompt(
        record.context, retrieved, examples, template, record.id, config.token_budget
    )
