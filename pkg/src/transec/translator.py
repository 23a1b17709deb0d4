"""Translation prompt assembly, model-endpoint orchestration, and output parsing.

Translation requests are zero-shot, single-turn chat completions with fixed
sampling parameters (temperature 0, top_p 1, max_tokens 8192 by default).
The model is asked to answer with a JSON object holding the translated code
under ``trans_code``; extraction tolerates fences and surrounding prose.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import httpx

from transec.prompts import load_template, render

TRANSLATION_TEMPLATE = "translate.txt"

PARSE_OK = "ok"
PARSE_MALFORMED_JSON = "malformed_json"
PARSE_MISSING_FIELD = "missing_field"
PARSE_REFUSAL = "refusal"
PARSE_TRANSPORT_ERROR = "transport_error"

DEFAULT_LANGUAGE_PAIRS = (
    ("Java", "Python"),
    ("Java", "Go"),
    ("PHP", "Python"),
    ("PHP", "Go"),
    ("C/C++", "Rust"),
)


class TransportError(Exception):
    """A transient transport-level failure (timeout, 5xx, connection reset)."""


@dataclass(frozen=True)
class ModelProfile:
    model_id: str
    endpoint: str = ""
    temperature: float = 0.0
    max_tokens: int = 8192
    top_p: float = 1.0
    request_timeout: float = 120.0
    max_retries: int = 3
    api_key_env: str = ""
    requests_per_minute: float | None = None

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def sampling_params(self) -> dict:
        return {
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
        }


@dataclass(frozen=True)
class TranslationTask:
    sample_id: str
    source_lang: str
    target_lang: str
    model_id: str


@dataclass
class TranslationResult:
    task: TranslationTask
    raw_output: str
    parse_status: str
    translated_code: str | None = None
    attempt_count: int = 1
    started_at: float = 0.0
    finished_at: float = 0.0

    def to_record(self) -> dict:
        return {
            "sample_id": self.task.sample_id,
            "source_lang": self.task.source_lang,
            "target_lang": self.task.target_lang,
            "model_id": self.task.model_id,
            "raw_output": self.raw_output,
            "parse_status": self.parse_status,
            "translated_code": self.translated_code,
            "attempt_count": self.attempt_count,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "TranslationResult":
        return cls(
            task=TranslationTask(
                sample_id=rec["sample_id"],
                source_lang=rec["source_lang"],
                target_lang=rec["target_lang"],
                model_id=rec["model_id"],
            ),
            raw_output=rec["raw_output"],
            parse_status=rec["parse_status"],
            translated_code=rec.get("translated_code"),
            attempt_count=rec.get("attempt_count", 1),
            started_at=rec.get("started_at", 0.0),
            finished_at=rec.get("finished_at", 0.0),
        )


def build_translation_prompt(code: str, source_lang: str, target_lang: str) -> str:
    """Fill the translation template; pure in (template, code, language names)."""
    if not code:
        raise ValueError("source code is empty")
    return render(
        load_template(TRANSLATION_TEMPLATE),
        {"source_lang": source_lang, "target_lang": target_lang, "source_code": code},
    )


def extract_translation(raw_output: str) -> tuple[str | None, str]:
    """Pull "trans_code" out of model output.

    Returns (translated_code, parse_status).  The outermost JSON object is
    located by scanning brace positions, so code fences and prose around the
    payload are tolerated; field reading is strict.
    """
    obj, had_brace = _first_json_object(raw_output)
    if obj is None:
        return None, PARSE_MALFORMED_JSON if had_brace else PARSE_REFUSAL
    code = obj.get("trans_code")
    if not isinstance(code, str):
        return None, PARSE_MISSING_FIELD
    return code, PARSE_OK


def _first_json_object(text: str) -> tuple[dict | None, bool]:
    decoder = json.JSONDecoder()
    had_brace = False
    pos = text.find("{")
    while pos != -1:
        had_brace = True
        try:
            obj, _ = decoder.raw_decode(text, pos)
        except json.JSONDecodeError:
            pos = text.find("{", pos + 1)
            continue
        if isinstance(obj, dict):
            return obj, had_brace
        pos = text.find("{", pos + 1)
    return None, had_brace


class ModelClient(Protocol):
    """One request/response primitive against a chat-completion endpoint."""

    profile: ModelProfile

    def send(self, prompt: str, params: dict) -> str: ...


class RateLimiter:
    """Token bucket, thread-safe; `acquire` blocks until a slot is free."""

    def __init__(self, requests_per_minute: float, clock=time.monotonic, sleep=time.sleep):
        self.capacity = max(1.0, requests_per_minute)
        self.rate = requests_per_minute / 60.0
        self.tokens = self.capacity
        self.updated = clock()
        self.clock = clock
        self.sleep = sleep
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            self.sleep(wait)


class HttpChatClient:
    """Chat-completion wire adapter.

    The bearer token is read from the environment variable named in the
    profile, never from config values.  Safe for concurrent use.
    """

    def __init__(self, profile: ModelProfile, limiter: RateLimiter | None = None):
        self.profile = profile
        if limiter is None and profile.requests_per_minute:
            limiter = RateLimiter(profile.requests_per_minute)
        self.limiter = limiter

    def send(self, prompt: str, params: dict) -> str:
        if self.limiter is not None:
            self.limiter.acquire()
        headers = {}
        if self.profile.api_key_env:
            token = os.environ.get(self.profile.api_key_env)
            if not token:
                raise RuntimeError(
                    f"environment variable {self.profile.api_key_env} not set"
                )
            headers["Authorization"] = f"Bearer {token}"
        payload = {
            "model": self.profile.model_id,
            "messages": [{"role": "user", "content": prompt}],
            **params,
        }
        try:
            resp = httpx.post(
                self.profile.endpoint,
                json=payload,
                headers=headers,
                timeout=self.profile.request_timeout,
            )
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code >= 500 or resp.status_code == 429:
            raise TransportError(f"HTTP {resp.status_code}")
        resp.raise_for_status()
        body = resp.json()
        return body["choices"][0]["message"]["content"]


class ScriptedClient:
    """Replay double keyed by prompt hash; used by tests and offline reruns.

    The script maps sha256(prompt) -> response text.  Unknown prompts raise,
    so a drifting prompt template is caught instead of silently answered.
    """

    def __init__(self, script: dict[str, str], profile: ModelProfile):
        self.script = script
        self.profile = profile
        self._lock = threading.Lock()
        self.request_log: list[str] = []

    @staticmethod
    def prompt_key(prompt: str) -> str:
        import hashlib

        return hashlib.sha256(prompt.encode("utf-8")).hexdigest()

    def send(self, prompt: str, params: dict) -> str:
        key = self.prompt_key(prompt)
        with self._lock:
            self.request_log.append(key)
        try:
            return self.script[key]
        except KeyError:
            raise TransportError(f"no scripted response for prompt {key[:12]}...")


def run_translation(
    task: TranslationTask,
    code: str,
    client: ModelClient,
    *,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.time,
) -> TranslationResult:
    """Translate one sample, retrying transport errors with backoff.

    Never raises past the result: exhausted retries produce a result with
    a transport-error status.
    """
    prompt = build_translation_prompt(code, task.source_lang, task.target_lang)
    profile = client.profile
    started = clock()
    attempts = 0
    last_error = ""
    while attempts <= profile.max_retries:
        attempts += 1
        try:
            raw = client.send(prompt, profile.sampling_params())
        except TransportError as exc:
            last_error = str(exc)
            if attempts <= profile.max_retries:
                sleep(0.5 * 2 ** (attempts - 1))
            continue
        translated, status = extract_translation(raw)
        return TranslationResult(
            task=task,
            raw_output=raw,
            parse_status=status,
            translated_code=translated,
            attempt_count=attempts,
            started_at=started,
            finished_at=clock(),
        )
    return TranslationResult(
        task=task,
        raw_output=last_error,
        parse_status=PARSE_TRANSPORT_ERROR,
        translated_code=None,
        attempt_count=attempts,
        started_at=started,
        finished_at=clock(),
    )


def run_batch(
    items: Sequence[tuple[TranslationTask, str]],
    client: ModelClient,
    concurrency_limit: int,
    *,
    sleep: Callable[[float], None] = time.sleep,
) -> list[TranslationResult]:
    """Run tasks with bounded parallelism; output order matches input order."""
    from concurrent.futures import ThreadPoolExecutor

    if concurrency_limit < 1:
        raise ValueError("concurrency_limit must be >= 1")
    if not items:
        return []

    def one(item: tuple[TranslationTask, str]) -> TranslationResult:
        task, code = item
        return run_translation(task, code, client, sleep=sleep)

    with ThreadPoolExecutor(max_workers=concurrency_limit) as pool:
        return list(pool.map(one, items))
