"""Running prompts through a generation provider.

Providers implement ``complete(bundle, params) -> str`` and expose a
``provider_id``. Two ship here: :class:`MockProvider`, a pure function of the
target passage used for CI, and :class:`HTTPProvider`, which speaks the
chat-completions wire format. Responses from live providers are cached on
disk under a content-addressed key, so an unchanged rerun makes no requests.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Protocol, Sequence

import httpx

from aqg.dataset import ContextRecord, dataset_hash
from aqg.errors import ConfigError, ContentError, DataError, ProviderError, RetryableProviderError
from aqg.prompting import (
    Method,
    PipelineConfig,
    PromptBundle,
    PromptTemplate,
    SelectionStrategy,
    assemble,
    build_train_index,
)
from aqg.retrieval import LexicalIndex, retrieve, tokenize

logger = logging.getLogger(__name__)

API_KEY_ENV = "AQG_API_KEY"
MOCK_TIMESTAMP = "1970-01-01T00:00:00Z"
RETRY_DELAYS = (1.0, 2.0, 4.0)
MAX_ATTEMPTS = 3
_LABEL_RE = re.compile(r"^\s*question\s*\d*\s*:\s*", re.IGNORECASE)


@dataclass(frozen=True)
class GenerationParams:
    model_name: str = "mock"
    temperature: float = 0.0
    max_output_tokens: int = 128
    stop_marker: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError(f"temperature must be in [0, 2], got {self.temperature}")
        if self.max_output_tokens < 1:
            raise ConfigError("max_output_tokens must be >= 1")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GeneratedQuestion:
    record_id: str
    method: Method
    question_text: str
    prompt_hash: str
    provider_id: str
    template_id: str
    timestamp: str
    from_cache: bool = False

    def __post_init__(self) -> None:
        text = " ".join(self.question_text.split())
        if not text:
            raise ContentError(f"record {self.record_id}: empty question", record_id=self.record_id)
        object.__setattr__(self, "question_text", text)
        object.__setattr__(self, "method", Method(self.method))

    def to_json(self) -> str:
        # from_cache is run-dependent and is not serialized
        return json.dumps(
            {
                "record_id": self.record_id,
                "method": self.method.value,
                "question": self.question_text,
                "prompt_hash": self.prompt_hash,
                "provider_id": self.provider_id,
                "template_id": self.template_id,
                "timestamp": self.timestamp,
            },
            ensure_ascii=False,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "GeneratedQuestion":
        obj = json.loads(line)
        return cls(
            record_id=obj["record_id"],
            method=obj["method"],
            question_text=obj["question"],
            prompt_hash=obj["prompt_hash"],
            provider_id=obj["provider_id"],
            template_id=obj["template_id"],
            timestamp=obj["timestamp"],
        )


def extract_question(raw: str, stop_marker: str | None = None) -> str:
    """First non-empty line of a completion, minus any leading ``Question:`` label."""
    if stop_marker:
        raw = raw.split(stop_marker, 1)[0]
    for line in raw.splitlines():
        line = _LABEL_RE.sub("", line, count=1).strip()
        if line:
            return line
    return ""


class Provider(Protocol):
    provider_id: str
    cacheable: bool

    def complete(self, bundle: PromptBundle, params: GenerationParams) -> str: ...


def mock_question(passage: str) -> str:
    return "What does the passage say about " + " ".join(tokenize(passage)[:4]) + "?"


class MockProvider:
    """Deterministic stand-in: a fixed question built from the passage's first tokens."""

    provider_id = "mock"
    cacheable = False

    def complete(self, bundle: PromptBundle, params: GenerationParams) -> str:
        return mock_question(bundle.target_passage)


def mock_generate(bundle: PromptBundle) -> GeneratedQuestion:
    return GeneratedQuestion(
        record_id=bundle.record_id,
        method=bundle.method,
        question_text=mock_question(bundle.target_passage),
        prompt_hash=bundle.prompt_hash,
        provider_id=MockProvider.provider_id,
        template_id=bundle.template_id,
        timestamp=MOCK_TIMESTAMP,
    )


class HTTPProvider:
    """Chat-completions endpoint: POST {model, messages, temperature, max_tokens}.

    The bearer token comes from ``AQG_API_KEY`` only. ``transport`` and
    ``sleep`` are injectable for tests.
    """

    cacheable = True

    def __init__(
        self,
        url: str,
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        retry_delays: Sequence[float] = RETRY_DELAYS,
        max_attempts: int = MAX_ATTEMPTS,
    ):
        self.url = url
        self.provider_id = f"http:{url}"
        self._sleep = sleep
        self._delays = tuple(retry_delays)
        self._max_attempts = max_attempts
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(API_KEY_ENV)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def payload(self, bundle: PromptBundle, params: GenerationParams) -> dict:
        body = {
            "model": params.model_name,
            "messages": [{"role": "user", "content": bundle.rendered_text}],
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        }
        if params.stop_marker:
            body["stop"] = [params.stop_marker]
        return body

    def complete(self, bundle: PromptBundle, params: GenerationParams) -> str:
        body = self.payload(bundle, params)
        last_error = "no attempt made"
        status = None
        for attempt in range(1, self._max_attempts + 1):
            try:
                resp = self._client.post(self.url, json=body, headers=self._headers())
            except httpx.TransportError as exc:
                last_error, status = f"transport error: {exc}", None
            else:
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error, status = f"HTTP {resp.status_code}", resp.status_code
                elif resp.status_code >= 400 or not resp.is_success:
                    raise ProviderError(
                        f"HTTP {resp.status_code}: {resp.text[:200]}",
                        status=resp.status_code,
                        body=resp.text[:200],
                    )
                else:
                    return _completion_text(resp)
            if attempt < self._max_attempts:
                delay = self._delays[min(attempt - 1, len(self._delays) - 1)]
                logger.info("attempt %d failed (%s); retrying in %.1fs", attempt, last_error, delay)
                self._sleep(delay)
        raise RetryableProviderError(
            f"giving up after {self._max_attempts} attempts: {last_error}",
            attempts=self._max_attempts,
            status=status,
        )

    def close(self) -> None:
        self._client.close()


def _completion_text(resp: httpx.Response) -> str:
    try:
        data = resp.json()
        content = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ProviderError(f"unexpected response shape: {resp.text[:200]}", status=resp.status_code) from exc
    return content or ""


@dataclass
class CacheEntry:
    key: str
    value: str
    created: str


class ResponseCache:
    """Content-addressed store at ``<root>/gen/<key[:2]>/<key>``.

    Reads are lock-free; writes are serialized and atomic (temp file + rename).
    """

    def __init__(self, root: str | Path):
        self.root = Path(root) / "gen"
        self._lock = threading.Lock()

    @staticmethod
    def key(bundle: PromptBundle, params: GenerationParams, provider_id: str) -> str:
        h = hashlib.sha256()
        for part in (bundle.prompt_hash, params.digest(), provider_id):
            h.update(part.encode("utf-8"))
            h.update(b"\x00")
        return h.hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / key

    def get(self, key: str) -> CacheEntry | None:
        path = self._path(key)
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except (OSError, ValueError):
            logger.warning("ignoring unreadable cache entry %s", path)
            return None
        return CacheEntry(key=obj["key"], value=obj["value"], created=obj["created"])

    def put(self, key: str, value: str) -> CacheEntry:
        entry = CacheEntry(key=key, value=value, created=_utc_now())
        path = self._path(key)
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(asdict(entry), fh, ensure_ascii=False, sort_keys=True)
            os.replace(tmp, path)
        return entry


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def generate(
    bundle: PromptBundle,
    params: GenerationParams,
    provider: Provider,
    cache: ResponseCache | None = None,
) -> GeneratedQuestion:
    """Run one prompt. Cache hits return the stored response without a provider call."""
    entry = None
    key = None
    if cache is not None and provider.cacheable:
        key = ResponseCache.key(bundle, params, provider.provider_id)
        entry = cache.get(key)
    from_cache = entry is not None
    if entry is None:
        raw = provider.complete(bundle, params)
        if key is not None and cache is not None and raw.strip():
            entry = cache.put(key, raw)
        created = entry.created if entry else (MOCK_TIMESTAMP if not provider.cacheable else _utc_now())
    else:
        raw, created = entry.value, entry.created
    text = extract_question(raw, params.stop_marker)
    if not text:
        raise ContentError(f"record {bundle.record_id}: blank completion", record_id=bundle.record_id)
    return GeneratedQuestion(
        record_id=bundle.record_id,
        method=bundle.method,
        question_text=text,
        prompt_hash=bundle.prompt_hash,
        provider_id=provider.provider_id,
        template_id=bundle.template_id,
        timestamp=created,
        from_cache=from_cache,
    )


@dataclass
class RunResult:
    questions: list[GeneratedQuestion]
    failures: dict[str, str]
    manifest: dict = field(default_factory=dict)


def run_experiment(
    test: Sequence[ContextRecord],
    config: PipelineConfig,
    params: GenerationParams,
    provider: Provider,
    *,
    train: Sequence[ContextRecord] = (),
    index: LexicalIndex | None = None,
    template: PromptTemplate | None = None,
    cache: ResponseCache | None = None,
    max_in_flight: int = 4,
    max_failure_fraction: float = 0.05,
) -> RunResult:
    """Generate one question per test record, in input order.

    Per-record failures are logged and skipped; the run raises only when the
    failed fraction exceeds ``max_failure_fraction``.
    """
    if config.uses_retrieval and index is None:
        raise ConfigError(f"method {config.method.value} needs a retrieval index")
    if config.shots and len(train) == 0:
        raise ConfigError(f"method {config.method.value} needs training records for examples")
    if max_in_flight < 1:
        raise ConfigError("max_in_flight must be >= 1")
    template = template or PromptTemplate.default()
    train_index = None
    if config.shots and config.selection_strategy is SelectionStrategy.SIMILARITY_TOP_M:
        train_index = build_train_index(train)

    def one(record: ContextRecord) -> GeneratedQuestion:
        retrieved = retrieve(index, record.context, config.retrieval_k) if config.uses_retrieval else ()
        bundle = assemble(record, config, template, train, retrieved, train_index)
        return generate(bundle, params, provider, cache)

    results: list[GeneratedQuestion | None] = [None] * len(test)
    failures: dict[str, str] = {}
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        futures = [pool.submit(one, r) for r in test]
        for i, (record, fut) in enumerate(zip(test, futures)):
            try:
                results[i] = fut.result()
            except (ProviderError, ContentError) as exc:
                logger.warning("record %s failed: %s", record.id, exc)
                failures[record.id] = str(exc)

    if test and len(failures) / len(test) > max_failure_fraction:
        raise ProviderError(
            f"{len(failures)} of {len(test)} records failed "
            f"(threshold {max_failure_fraction:.0%}); first: {next(iter(failures.values()))}"
        )
    questions = [q for q in results if q is not None]
    manifest = {
        "method": config.method.value,
        "label": config.label,
        "icl_shots": config.icl_shots,
        "retrieval_k": config.retrieval_k,
        "hybrid_shots": config.hybrid_shots,
        "seed": config.seed,
        "selection_strategy": config.selection_strategy.value,
        "token_budget": config.token_budget,
        "template_id": template.template_id,
        "provider_id": provider.provider_id,
        "params": asdict(params),
        "params_note": "temperature and max_output_tokens are tool defaults unless overridden",
        "test_records": len(test),
        "train_records": len(train),
        "test_hash": dataset_hash(test),
        "train_hash": dataset_hash(train),
        "index_docs": index.doc_count if index is not None else 0,
        "generated": len(questions),
        "failed": sorted(failures),
    }
    return RunResult(questions=questions, failures=failures, manifest=manifest)


def write_questions(questions: Sequence[GeneratedQuestion], path: str | Path, manifest: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(q.to_json() + "\n" for q in questions), encoding="utf-8")
    if manifest is not None:
        manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def manifest_path(questions_path: str | Path) -> Path:
    p = Path(questions_path)
    return p.with_name(p.name + ".manifest.json")


def read_questions(path: str | Path) -> list[GeneratedQuestion]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        try:
            out.append(GeneratedQuestion.from_json(line))
        except (ValueError, KeyError, ContentError) as exc:
            raise DataError(f"{path}:{lineno}: malformed question record ({exc})") from exc
    return out
