"""Benchmark toolkit for automatic question generation.

Three generation pipelines (few-shot in-context prompting, retrieval-augmented
input, and their hybrid) plus the evaluation apparatus used to compare them:
BLEU-4, ROUGE-L, METEOR, chrF and BERTScore, Fleiss's kappa over human
ratings, Student's t significance stars, and table rendering.
"""

from aqg.errors import (
    AQGError,
    ConfigError,
    ContentError,
    DataError,
    ProviderError,
    RetryableProviderError,
)

__version__ = "0.1.0"

__all__ = [
    "AQGError",
    "ConfigError",
    "ContentError",
    "DataError",
    "ProviderError",
    "RetryableProviderError",
    "__version__",
]
