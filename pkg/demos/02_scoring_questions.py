"""
Scoring generated questions
===========================

Mock generation for two methods, then the automatic metrics and a
comparison table. The mock provider ignores the prompt, so both methods
score the same here; swap in an HTTP provider for real comparisons.
"""

from importlib import resources
from pathlib import Path

from aqg.dataset import load_dataset
from aqg.generation import GenerationParams, MockProvider, run_experiment
from aqg.metrics import EvalPair, chrf, evaluate_corpus, meteor, rouge_l
from aqg.prompting import PipelineConfig
from aqg.report import build_table, render

mini = Path(str(resources.files("aqg").joinpath("data/mini")))
train = load_dataset(mini / "train.jsonl")
test = load_dataset(mini / "test.jsonl")

# single pairs first
pair = EvalPair("sat the cat", "the cat sat")
print("ROUGE-L", rouge_l(pair).value)
print("METEOR ", meteor(pair).value, meteor(pair).detail)
print("ChRF   ", chrf(EvalPair("abc", "abd")).value)

rows = {}
for config in (PipelineConfig("baseline"), PipelineConfig("icl", icl_shots=5)):
    run = run_experiment(test, config, GenerationParams(), MockProvider(), train=train)
    result = evaluate_corpus(run.questions, test)
    rows[config.label] = {m.value: s.value for m, s in result.summary.items()}
    print(config.label, run.questions[0].question_text)

print(render(build_table(rows), "plain"))
