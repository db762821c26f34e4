"""Parallel-corpus generation: prompt construction, chat-completion calls,
refusal/short-output filtering, and complete-case manifest assembly.

Only raw text is stored here; generated outputs must be re-parsed before
tagging. Endpoints speak the chat-completions wire format; ``mock://`` URLs
are served in-process for offline smoke tests.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .corpus_io import AnnotatedDocument, ChunkPair, chunk_text
from .errors import ApiError, ConfigError

log = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "STYLO_API_KEY"

DEFAULT_SYSTEM_TEXT = (
    "You are a writing assistant. Continue the text you are given, matching "
    "its style, tone, and diction as closely as possible."
)
DEFAULT_USER_TEXT = (
    "Here is the beginning of a text:\n\n{chunk1}\n\n"
    "Continue this text for about {word_target} more words in the same "
    "style, tone, and diction. Respond with the continuation only."
)

DEFAULT_REFUSAL_PHRASES = [
    "i can't",
    "i cannot",
    "i'm sorry, but",
    "i am sorry, but",
    "as an ai",
    "i'm unable to",
    "i am unable to",
    "i won't be able to",
]

# A leading boilerplate line/prefix such as "Here is the continuation of the
# text:" is stripped before filtering.
DEFAULT_PREAMBLE_PATTERNS = [
    r"(?is)\A\s*(?:sure|certainly|of course)?[,.!]?\s*here(?:'s| is| are)?\b[^:\n]{0,120}?\b(?:continuation|text|words)\b[^:\n]{0,60}?:\s*",
]


@dataclass(frozen=True, slots=True)
class PromptTemplate:
    system_text: str = DEFAULT_SYSTEM_TEXT
    user_text: str = DEFAULT_USER_TEXT

    def __post_init__(self):
        for slot in ("{chunk1}", "{word_target}"):
            if self.user_text.count(slot) != 1:
                raise ConfigError(f"user_text must contain {slot} exactly once")


@dataclass(frozen=True, slots=True)
class ProviderConfig:
    endpoint: str
    model: str
    temperature: float = 0.7
    max_tokens: int = 1024
    timeout: float = 120.0
    max_concurrent: int = 4
    max_attempts: int = 3
    backoff_base: float = 1.0
    api_key_env: str = DEFAULT_API_KEY_ENV

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.max_concurrent < 1:
            raise ConfigError("max_concurrent must be >= 1")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "ProviderConfig":
        return cls(**raw)


@dataclass(frozen=True, slots=True)
class FilterPolicy:
    min_words: int = 100
    refusal_phrases: tuple[str, ...] = tuple(DEFAULT_REFUSAL_PHRASES)
    strip_preamble: bool = True
    preamble_patterns: tuple[str, ...] = tuple(DEFAULT_PREAMBLE_PATTERNS)

    def __post_init__(self):
        if self.min_words < 1:
            raise ConfigError("min_words must be >= 1")


@dataclass(frozen=True, slots=True)
class FilterOutcome:
    accepted: bool
    text: str
    reason: str | None = None       # refusal | too_short


@dataclass(frozen=True, slots=True)
class GenerationResult:
    doc_id: str
    model: str
    raw_text: str
    status: str                     # accepted | rejected
    reject_reason: str | None       # refusal | too_short | api_error
    word_count: int
    prompt_hash: str
    requested_at: float
    responded_at: float

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "model": self.model,
            "status": self.status,
            "reject_reason": self.reject_reason,
            "word_count": self.word_count,
            "prompt_hash": self.prompt_hash,
            "requested_at": self.requested_at,
            "responded_at": self.responded_at,
        }


def build_prompt(
    chunk1: AnnotatedDocument | str,
    template: PromptTemplate,
    word_target: int = 500,
) -> tuple[str, str]:
    """Render (system message, user message) from the first chunk."""
    text = chunk_text(chunk1) if isinstance(chunk1, AnnotatedDocument) else chunk1
    if not text.strip():
        raise ConfigError("chunk text is empty")
    user = template.user_text.replace("{chunk1}", text).replace(
        "{word_target}", str(word_target)
    )
    return template.system_text, user


def prompt_hash(system: str, user: str) -> str:
    digest = hashlib.sha256()
    digest.update(system.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(user.encode("utf-8"))
    return digest.hexdigest()


def _mock_response(provider: ProviderConfig, user: str) -> str:
    """Deterministic in-process endpoints for offline testing."""
    kind = provider.endpoint[len("mock://"):]
    if kind == "refuse":
        return "I'm sorry, but I can't continue this text."
    if kind == "short":
        return "Too short."
    seed = prompt_hash("", user)[:8]
    words = [f"w{seed}{i % 7}" for i in range(520)]
    return f"Here is the continuation of the text: {' '.join(words)}"


class ChatClient:
    """Minimal chat-completions client with retry and exponential backoff."""

    def __init__(self, session: requests.Session | None = None, sleep=time.sleep):
        self.session = session or requests.Session()
        self.sleep = sleep

    def complete(self, provider: ProviderConfig, system: str, user: str) -> str:
        if provider.endpoint.startswith("mock://"):
            return _mock_response(provider, user)

        api_key = os.environ.get(provider.api_key_env) or os.environ.get(DEFAULT_API_KEY_ENV)
        if not api_key:
            raise ConfigError(
                f"no API credential found: set {provider.api_key_env} "
                f"(or {DEFAULT_API_KEY_ENV}) in the environment"
            )
        payload = {
            "model": provider.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": provider.temperature,
            "max_tokens": provider.max_tokens,
        }
        headers = {"Authorization": f"Bearer {api_key}"}
        last_status: int | None = None
        started = time.monotonic()
        for attempt in range(1, provider.max_attempts + 1):
            try:
                response = self.session.post(
                    provider.endpoint, json=payload, headers=headers,
                    timeout=provider.timeout,
                )
            except requests.Timeout:
                raise ApiError("timeout", status=None, attempts=attempt) from None
            except requests.RequestException as exc:
                log.warning("request to %s failed (%s), attempt %d/%d",
                            provider.endpoint, exc, attempt, provider.max_attempts)
                last_status = None
            else:
                if response.status_code == 200:
                    body = response.json()
                    log.info("completion from %s in %.2fs (attempt %d)",
                             provider.model, time.monotonic() - started, attempt)
                    return body["choices"][0]["message"]["content"]
                last_status = response.status_code
                log.warning("HTTP %d from %s, attempt %d/%d",
                            response.status_code, provider.endpoint,
                            attempt, provider.max_attempts)
                if response.status_code not in (429, 500, 502, 503, 504):
                    break
            if attempt < provider.max_attempts:
                self.sleep(provider.backoff_base * (2 ** (attempt - 1)))
        raise ApiError(
            f"request failed after {min(attempt, provider.max_attempts)} attempt(s)"
            + (f" (last status {last_status})" if last_status else ""),
            status=last_status,
            attempts=attempt,
        )


def generate(provider: ProviderConfig, prompt: tuple[str, str],
             client: ChatClient | None = None) -> str:
    """One completion for a (system, user) prompt; raises ApiError on failure."""
    client = client or ChatClient()
    return client.complete(provider, prompt[0], prompt[1])


def _strip_preamble(text: str, patterns: tuple[str, ...]) -> str:
    # applied to a fixpoint so filtering an accepted output is a no-op
    while True:
        stripped = text
        for pattern in patterns:
            stripped = re.sub(pattern, "", stripped, count=1)
        if stripped == text:
            return text
        text = stripped


def filter_output(raw_text: str, policy: FilterPolicy) -> FilterOutcome:
    """Accept or reject one completion; rejection is a value, not an error."""
    text = raw_text
    if policy.strip_preamble:
        text = _strip_preamble(text, policy.preamble_patterns)
    text = text.strip()
    head = text[:200].lower()
    for phrase in policy.refusal_phrases:
        if phrase in head:
            return FilterOutcome(False, text, "refusal")
    if len(text.split()) < policy.min_words:
        return FilterOutcome(False, text, "too_short")
    return FilterOutcome(True, text)


def _safe_name(value: str) -> str:
    return re.sub(r"[^A-Za-z0-9._#-]", "_", value)


def assemble_parallel_corpus(
    chunk_pairs: list[ChunkPair],
    providers: list[ProviderConfig],
    template: PromptTemplate,
    policy: FilterPolicy,
    out_dir: str | Path,
    word_target: int = 500,
    client: ChatClient | None = None,
    metadata: dict[str, str] | None = None,
) -> dict:
    """Generate one output per (document, provider) and write the manifest.

    A document enters the complete-case list only when every provider
    produced an accepted output; rejected and failed requests stay in the
    raw results for the acceptance bookkeeping.
    """
    if not chunk_pairs or not providers:
        raise ConfigError("need at least one chunk pair and one provider")
    client = client or ChatClient()
    out_dir = Path(out_dir)
    texts_dir = out_dir / "texts"
    texts_dir.mkdir(parents=True, exist_ok=True)

    def run_one(pair: ChunkPair, provider: ProviderConfig) -> GenerationResult:
        system, user = build_prompt(pair.chunk1, template, word_target)
        digest = prompt_hash(system, user)
        requested_at = time.time()
        try:
            raw = client.complete(provider, system, user)
        except ApiError as exc:
            log.warning("generation failed for %s/%s: %s", pair.doc_id, provider.model, exc)
            return GenerationResult(
                doc_id=pair.doc_id, model=provider.model, raw_text="",
                status="rejected", reject_reason="api_error", word_count=0,
                prompt_hash=digest, requested_at=requested_at, responded_at=time.time(),
            )
        outcome = filter_output(raw, policy)
        words = len(outcome.text.split())
        if outcome.accepted:
            path = texts_dir / f"{_safe_name(pair.doc_id)}#{_safe_name(provider.model)}.txt"
            path.write_text(outcome.text, encoding="utf-8")
        return GenerationResult(
            doc_id=pair.doc_id, model=provider.model, raw_text=outcome.text,
            status="accepted" if outcome.accepted else "rejected",
            reject_reason=outcome.reason, word_count=words,
            prompt_hash=digest, requested_at=requested_at, responded_at=time.time(),
        )

    results: list[GenerationResult] = []
    for provider in providers:
        with ThreadPoolExecutor(max_workers=provider.max_concurrent) as pool:
            results.extend(pool.map(lambda pair: run_one(pair, provider), chunk_pairs))
    results.sort(key=lambda r: (r.doc_id, r.model))

    accepted: dict[str, set[str]] = {}
    for r in results:
        if r.status == "accepted":
            accepted.setdefault(r.doc_id, set()).add(r.model)
    all_models = {p.model for p in providers}
    complete = sorted(d for d, models in accepted.items() if models == all_models)

    provider_stats = []
    for provider in providers:
        own = [r for r in results if r.model == provider.model]
        provider_stats.append({
            "model": provider.model,
            "endpoint": provider.endpoint,
            "attempted": len(own),
            "accepted": sum(1 for r in own if r.status == "accepted"),
            "rejected_refusal": sum(1 for r in own if r.reject_reason == "refusal"),
            "rejected_too_short": sum(1 for r in own if r.reject_reason == "too_short"),
            "rejected_api_error": sum(1 for r in own if r.reject_reason == "api_error"),
        })

    manifest = {
        **({"metadata": metadata} if metadata else {}),
        "word_target": word_target,
        "providers": provider_stats,
        "complete_doc_ids": complete,
        "results": [r.to_dict() for r in results],
    }
    (out_dir / "generation_manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return manifest
