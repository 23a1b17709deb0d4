import json
import threading

import pytest
from hypothesis import given
from hypothesis import strategies as st

from transec.translator import (
    PARSE_MALFORMED_JSON,
    PARSE_MISSING_FIELD,
    PARSE_OK,
    PARSE_REFUSAL,
    PARSE_TRANSPORT_ERROR,
    ModelProfile,
    RateLimiter,
    ScriptedClient,
    TranslationTask,
    TransportError,
    build_translation_prompt,
    extract_translation,
    run_batch,
    run_translation,
)

from conftest import golden, golden_fixtures


class FakeClient:
    """Scripted double: a list of responses; TransportError entries raise."""

    def __init__(self, responses, profile=None):
        self.responses = list(responses)
        self.profile = profile or ModelProfile(model_id="fake")
        self._lock = threading.Lock()
        self.request_log = []
        self.in_flight = 0
        self.max_in_flight = 0

    def send(self, prompt, params):
        with self._lock:
            self.request_log.append((prompt, dict(params)))
            self.in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)
            response = self.responses.pop(0)
        try:
            if isinstance(response, Exception):
                raise response
            return response
        finally:
            with self._lock:
                self.in_flight -= 1


def no_sleep(_):
    pass


class TestPromptAssembly:
    @pytest.mark.parametrize("name", ["basic", "braces", "multiline"])
    def test_matches_golden(self, name):
        fix = golden_fixtures()["translate"][name]
        out = build_translation_prompt(
            fix["source_code"], fix["source_lang"], fix["target_lang"]
        )
        assert out == golden(f"translate_{name}.txt")

    def test_contains_constraint_line(self):
        out = build_translation_prompt("X", "PHP", "Python")
        assert "Only provide the translated code." in out

    def test_deterministic(self):
        a = build_translation_prompt("X", "PHP", "Python")
        b = build_translation_prompt("X", "PHP", "Python")
        assert a == b

    def test_braces_preserved_verbatim(self):
        code = "if (x) { return {}; }"
        out = build_translation_prompt(code, "Java", "Go")
        assert code in out

    def test_empty_code_rejected(self):
        with pytest.raises(ValueError):
            build_translation_prompt("", "PHP", "Python")


class TestExtractTranslation:
    def test_exact_schema(self):
        code, status = extract_translation('{"trans_code": "print(1)"}')
        assert (code, status) == ("print(1)", PARSE_OK)

    WRAPPERS = [
        '```json\n{"trans_code": "x"}\n```\nHope this helps!',
        'Sure! Here you go:\n```\n{"trans_code": "x"}\n```',
        'Result: {"trans_code": "x"} -- done.',
        '{"trans_code": "x"}\n\nLet me know if you need anything else.',
        '```json\n{\n  "trans_code": "x"\n}\n```',
        'The JSON is {"trans_code": "x"} as requested',
        '> {"trans_code": "x"}',
        'prose with stray { brace then {"trans_code": "x"}',
        '```JSON\n{"trans_code": "x"}```',
        '\n\n   {"trans_code": "x"}   \n',
    ]

    @pytest.mark.parametrize("raw", WRAPPERS)
    def test_real_world_wrappers(self, raw):
        assert extract_translation(raw) == ("x", PARSE_OK)

    def test_missing_field(self):
        assert extract_translation('{"code": "x"}') == (None, PARSE_MISSING_FIELD)

    def test_refusal_no_json(self):
        assert extract_translation("I cannot help with that.") == (
            None, PARSE_REFUSAL,
        )

    def test_malformed(self):
        assert extract_translation('{"trans_code": "x"') == (
            None, PARSE_MALFORMED_JSON,
        )

    def test_non_string_field_is_missing_field(self):
        assert extract_translation('{"trans_code": 42}') == (
            None, PARSE_MISSING_FIELD,
        )

    @given(st.text())
    def test_round_trip_over_generated_payloads(self, code):
        raw = json.dumps({"trans_code": code})
        extracted, status = extract_translation(raw)
        assert status == PARSE_OK
        assert extracted == code


class TestRunTranslation:
    def _task(self):
        return TranslationTask("s1", "PHP", "Python", "fake")

    def test_success_first_try(self):
        client = FakeClient(['{"trans_code": "ok"}'])
        result = run_translation(self._task(), "code", client, sleep=no_sleep)
        assert result.parse_status == PARSE_OK
        assert result.translated_code == "ok"
        assert result.attempt_count == 1

    def test_retry_then_success(self):
        client = FakeClient(
            [TransportError("x"), TransportError("x"), '{"trans_code": "ok"}'],
            ModelProfile(model_id="fake", max_retries=3),
        )
        result = run_translation(self._task(), "code", client, sleep=no_sleep)
        assert result.parse_status == PARSE_OK
        assert result.attempt_count == 3

    def test_exhausted_retries(self):
        client = FakeClient(
            [TransportError("x")] * 3,
            ModelProfile(model_id="fake", max_retries=2),
        )
        result = run_translation(self._task(), "code", client, sleep=no_sleep)
        assert result.parse_status == PARSE_TRANSPORT_ERROR
        assert result.translated_code is None
        assert result.attempt_count == 3

    def test_sampling_params_sent(self):
        client = FakeClient(['{"trans_code": "ok"}'])
        run_translation(self._task(), "code", client, sleep=no_sleep)
        _, params = client.request_log[0]
        assert params == {"temperature": 0.0, "top_p": 1.0, "max_tokens": 8192}


class TestRunBatch:
    def _items(self, n):
        return [
            (TranslationTask(f"s{i}", "PHP", "Python", "fake"), f"code{i}")
            for i in range(n)
        ]

    def test_sequential_with_limit_one(self):
        client = FakeClient([f'{{"trans_code": "t{i}"}}' for i in range(5)])
        results = run_batch(self._items(5), client, 1, sleep=no_sleep)
        assert len(results) == 5
        assert client.max_in_flight == 1

    def test_order_preserved_with_wide_limit(self):
        client = FakeClient([f'{{"trans_code": "t{i}"}}' for i in range(5)])
        results = run_batch(self._items(5), client, 8, sleep=no_sleep)
        assert [r.task.sample_id for r in results] == [f"s{i}" for i in range(5)]
        assert all(r.parse_status == PARSE_OK for r in results)

    def test_mixed_failures_do_not_abort_others(self):
        responses = [
            '{"trans_code": "a"}',
            TransportError("boom"),
            '{"nope": 1}',
            "refusing",
            '{"trans_code": "e"}',
        ]
        client = FakeClient(responses, ModelProfile(model_id="fake", max_retries=0))
        results = run_batch(self._items(5), client, 1, sleep=no_sleep)
        assert [r.parse_status for r in results] == [
            PARSE_OK, PARSE_TRANSPORT_ERROR, PARSE_MISSING_FIELD,
            PARSE_REFUSAL, PARSE_OK,
        ]

    def test_concurrency_never_exceeds_limit(self):
        client = FakeClient([f'{{"trans_code": "t{i}"}}' for i in range(20)])
        run_batch(self._items(20), client, 3, sleep=no_sleep)
        assert client.max_in_flight <= 3

    def test_invalid_limit(self):
        with pytest.raises(ValueError):
            run_batch(self._items(1), FakeClient(["x"]), 0)


class TestScriptedClient:
    def test_replays_by_prompt_hash(self):
        prompt = build_translation_prompt("x = 1", "PHP", "Python")
        key = ScriptedClient.prompt_key(prompt)
        client = ScriptedClient({key: '{"trans_code": "x = 1"}'},
                                ModelProfile(model_id="scripted"))
        assert client.send(prompt, {}) == '{"trans_code": "x = 1"}'

    def test_unknown_prompt_raises_transport_error(self):
        client = ScriptedClient({}, ModelProfile(model_id="scripted"))
        with pytest.raises(TransportError):
            client.send("unscripted", {})


class TestRateLimiter:
    def test_blocks_when_bucket_empty(self):
        now = [0.0]
        slept = []
        limiter = RateLimiter(60, clock=lambda: now[0],
                              sleep=lambda s: (slept.append(s), now.__setitem__(0, now[0] + s)))
        limiter.tokens = 1.0
        limiter.capacity = 1.0
        limiter.acquire()
        limiter.acquire()  # must wait ~1s at 60 rpm
        assert slept and abs(sum(slept) - 1.0) < 1e-6
