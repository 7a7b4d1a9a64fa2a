"""
Retrieval and prompt assembly on the bundled mini dataset
=========================================================

Builds a BM25 index over the small corpus, looks up context for one test
passage and prints the prompt each method would send.
"""

from importlib import resources
from pathlib import Path

from aqg.dataset import load_dataset
from aqg.prompting import PipelineConfig, PromptTemplate, assemble
from aqg.retrieval import build_index, load_corpus, retrieve

mini = Path(str(resources.files("aqg").joinpath("data/mini")))
train = load_dataset(mini / "train.jsonl")
test = load_dataset(mini / "test.jsonl")

# 22 corpus documents, split at blank lines
index = build_index(load_corpus(mini / "corpus"))
print(index.doc_count, "documents, mean length", round(index.avg_doc_length, 1), "tokens")

record = test[4]
hits = retrieve(index, record.context, 3)
for hit in hits:
    print(hit.rank, hit.doc.doc_id, round(hit.score, 3))

template = PromptTemplate.default()
for config in (
    PipelineConfig("baseline"),
    PipelineConfig("icl", icl_shots=3),
    PipelineConfig("hybrid", retrieval_k=3, hybrid_shots=2),
):
    bundle = assemble(record, config, template, train, hits)
    print("=" * 20, config.label, bundle.prompt_hash[:12])
    print(bundle.rendered_text)
