import json
import threading
import time

import httpx
import pytest

from aqg.dataset import ContextRecord, Subject
from aqg.errors import ConfigError, ContentError, ProviderError, RetryableProviderError
from aqg.generation import (
    API_KEY_ENV,
    MOCK_TIMESTAMP,
    GeneratedQuestion,
    GenerationParams,
    HTTPProvider,
    MockProvider,
    ResponseCache,
    extract_question,
    generate,
    mock_generate,
    read_questions,
    run_experiment,
    write_questions,
)
from aqg.prompting import PipelineConfig, assemble_baseline_input

URL = "https://llm.invalid/v1/chat/completions"


def ok(text):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


class Recorder:
    """Mock transport that replays a script of responses and records requests."""

    def __init__(self, *responses):
        self.script = list(responses)
        self.requests = []

    def __call__(self, request):
        self.requests.append(request)
        item = self.script.pop(0) if len(self.script) > 1 else self.script[0]
        if isinstance(item, Exception):
            raise item
        return item


def provider(recorder, sleeps=None):
    return HTTPProvider(
        URL,
        transport=httpx.MockTransport(recorder),
        sleep=(sleeps.append if sleeps is not None else lambda s: None),
    )


@pytest.fixture
def bundle(template):
    return assemble_baseline_input("Purchasing power parity (PPP) compares what money buys.", template, "r1")


def test_mock_question_shape(bundle):
    q = mock_generate(bundle)
    assert q.question_text == "What does the passage say about purchasing power parity ppp?"
    assert q.timestamp == MOCK_TIMESTAMP and q.provider_id == "mock"
    assert q.prompt_hash == bundle.prompt_hash


def test_mock_provider_via_generate(bundle, tmp_path):
    cache = ResponseCache(tmp_path)
    q = generate(bundle, GenerationParams(), MockProvider(), cache)
    assert q == mock_generate(bundle)
    assert not (tmp_path / "gen").exists()


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("Question: Why do rivers flood?\nExtra", "Why do rivers flood?"),
        ("\n\n  What is silt?  ", "What is silt?"),
        ("question 2: How?", "How?"),
        ("Questions about soil: what is loam?", "Questions about soil: what is loam?"),
        ("What is X? STOP junk", "What is X? STOP junk"),
    ],
)
def test_extract_question(raw, expected):
    assert extract_question(raw) == expected


def test_extract_with_stop_marker():
    assert extract_question("What is X?###more", "###") == "What is X?"
    assert extract_question("   \n ") == ""


def test_whitespace_normalized():
    q = GeneratedQuestion("r", "icl", "What  is\n it?", "h", "p", "t", MOCK_TIMESTAMP)
    assert q.question_text == "What is it?"
    with pytest.raises(ContentError):
        GeneratedQuestion("r", "icl", "  \n", "h", "p", "t", MOCK_TIMESTAMP)


def test_params_validation():
    with pytest.raises(ConfigError):
        GenerationParams(temperature=-0.1)
    with pytest.raises(ConfigError):
        GenerationParams(max_output_tokens=0)


def test_http_success_and_payload(bundle, monkeypatch):
    monkeypatch.setenv(API_KEY_ENV, "sk-test")
    rec = Recorder(ok("Question: What is PPP?"))
    q = generate(bundle, GenerationParams(model_name="m1", temperature=0.3, max_output_tokens=40), provider(rec))
    assert q.question_text == "What is PPP?"
    assert len(rec.requests) == 1
    req = rec.requests[0]
    assert req.headers["authorization"] == "Bearer sk-test"
    body = json.loads(req.content)
    assert body == {
        "model": "m1",
        "messages": [{"role": "user", "content": bundle.rendered_text}],
        "temperature": 0.3,
        "max_tokens": 40,
    }


def test_http_without_key_sends_no_auth(bundle, monkeypatch):
    monkeypatch.delenv(API_KEY_ENV, raising=False)
    rec = Recorder(ok("Why?"))
    generate(bundle, GenerationParams(), provider(rec))
    assert "authorization" not in rec.requests[0].headers


def test_retries_then_success(bundle):
    sleeps = []
    rec = Recorder(httpx.Response(503), httpx.ConnectError("boom"), ok("Why?"))
    q = generate(bundle, GenerationParams(), provider(rec, sleeps))
    assert q.question_text == "Why?"
    assert len(rec.requests) == 3
    assert sleeps == [1.0, 2.0]


def test_retries_exhausted(bundle):
    sleeps = []
    rec = Recorder(httpx.Response(429))
    with pytest.raises(RetryableProviderError) as info:
        generate(bundle, GenerationParams(), provider(rec, sleeps))
    assert info.value.attempts == 3 and info.value.status == 429
    assert len(rec.requests) == 3


def test_client_error_not_retried(bundle):
    rec = Recorder(httpx.Response(401, text="bad key"))
    with pytest.raises(ProviderError) as info:
        generate(bundle, GenerationParams(), provider(rec))
    assert not isinstance(info.value, RetryableProviderError)
    assert info.value.status == 401
    assert len(rec.requests) == 1


def test_bad_response_shape(bundle):
    rec = Recorder(httpx.Response(200, json={"nope": 1}))
    with pytest.raises(ProviderError):
        generate(bundle, GenerationParams(), provider(rec))


def test_blank_completion_is_content_error(bundle):
    with pytest.raises(ContentError) as info:
        generate(bundle, GenerationParams(), provider(Recorder(ok("  \n"))))
    assert info.value.record_id == "r1"


def test_cache_hit_skips_provider(bundle, tmp_path):
    cache = ResponseCache(tmp_path)
    params = GenerationParams(model_name="m1")
    first_rec = Recorder(ok("What is PPP?"))
    first = generate(bundle, params, provider(first_rec), cache)
    assert not first.from_cache
    files = list((tmp_path / "gen").rglob("*"))
    assert any(f.is_file() for f in files)

    second_rec = Recorder(ok("something else"))
    second = generate(bundle, params, provider(second_rec), cache)
    assert second.from_cache and second_rec.requests == []
    assert second.question_text == first.question_text
    assert second.to_json() == first.to_json()

    # other params are a different key
    third_rec = Recorder(ok("Different?"))
    third = generate(bundle, GenerationParams(model_name="m1", temperature=0.5), provider(third_rec), cache)
    assert not third.from_cache and len(third_rec.requests) == 1


def test_cache_layout(bundle, tmp_path):
    cache = ResponseCache(tmp_path)
    key = ResponseCache.key(bundle, GenerationParams(), "p")
    cache.put(key, "value")
    assert (tmp_path / "gen" / key[:2] / key).is_file()
    assert cache.get(key).value == "value"
    assert cache.get("0" * 64) is None


def test_questions_roundtrip(tmp_path, bundle):
    q = mock_generate(bundle)
    path = tmp_path / "out" / "q.jsonl"
    write_questions([q, q], path, {"method": "baseline"})
    assert read_questions(path) == [q, q]
    assert json.loads((tmp_path / "out" / "q.jsonl.manifest.json").read_text()) == {"method": "baseline"}


def records(n):
    return [ContextRecord(f"t{i:02d}", f"Passage number {i} about soils.", "Q?", Subject.GEOGRAPHY) for i in range(n)]


class FlakyProvider:
    provider_id = "flaky"
    cacheable = False

    def __init__(self, bad_ids):
        self.bad = set(bad_ids)

    def complete(self, bundle, params):
        if bundle.record_id in self.bad:
            raise ProviderError("down", status=500)
        return f"Question about {bundle.record_id}?"


def test_run_experiment_order_and_failures():
    test = records(40)
    res = run_experiment(test, PipelineConfig("baseline"), GenerationParams(), FlakyProvider({"t05", "t17"}))
    assert [q.record_id for q in res.questions] == [r.id for r in test if r.id not in {"t05", "t17"}]
    assert set(res.failures) == {"t05", "t17"}
    assert res.manifest["failed"] == ["t05", "t17"]


def test_run_experiment_failure_threshold():
    test = records(40)
    with pytest.raises(ProviderError):
        run_experiment(test, PipelineConfig("baseline"), GenerationParams(), FlakyProvider({"t01", "t02", "t03"}))


def test_run_experiment_needs_index_and_train(mini_test):
    with pytest.raises(ConfigError):
        run_experiment(mini_test, PipelineConfig("hybrid", retrieval_k=5, hybrid_shots=5), GenerationParams(), MockProvider(), train=mini_test)
    with pytest.raises(ConfigError):
        run_experiment(mini_test, PipelineConfig("icl", icl_shots=3), GenerationParams(), MockProvider())


class SlowProvider:
    provider_id = "slow"
    cacheable = False

    def __init__(self):
        self.active = 0
        self.peak = 0
        self.lock = threading.Lock()

    def complete(self, bundle, params):
        with self.lock:
            self.active += 1
            self.peak = max(self.peak, self.active)
        time.sleep(0.01)
        with self.lock:
            self.active -= 1
        return "Why?"


def test_bounded_concurrency():
    prov = SlowProvider()
    run_experiment(records(24), PipelineConfig("baseline"), GenerationParams(), prov, max_in_flight=3)
    assert 1 <= prov.peak <= 3


def test_run_experiment_deterministic(mini_train, mini_test, mini_index):
    cfg = PipelineConfig("hybrid", retrieval_k=5, hybrid_shots=5, seed=7)
    a = run_experiment(mini_test, cfg, GenerationParams(), MockProvider(), train=mini_train, index=mini_index)
    b = run_experiment(mini_test, cfg, GenerationParams(), MockProvider(), train=mini_train, index=mini_index, max_in_flight=1)
    assert [q.to_json() for q in a.questions] == [q.to_json() for q in b.questions]
    assert a.manifest == b.manifest
    assert len(a.questions) == len(mini_test)
