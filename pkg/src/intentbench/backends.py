"""LLM backend clients: one OpenAI-compatible remote client plus a seeded local mock.

Every client returns a CompletionResult carrying the response text, token
usage (provider-reported when available, estimated otherwise), and the
wall-clock latency we measured ourselves. Per-token pricing lives on the
descriptor; open-source backends always cost 0.
"""

from __future__ import annotations

import json
import logging
import os
import random
import re
import time
from enum import Enum
from pathlib import Path
from typing import Protocol

import httpx
import yaml
from pydantic import BaseModel, Field, model_validator

from .errors import BackendConfigError, BackendError, EmptyResponseError, SchemaError
from .model import ReferenceSet, Scalar, iter_leaves, serialize_config, set_leaf
from .prompts import PromptMessages

logger = logging.getLogger(__name__)

RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})
#: Crude usage fallback when a provider omits token counts.
TOKENS_PER_WORD = 1.3


class BackendKind(str, Enum):
    REMOTE = "remote"
    MOCK = "mock"


class SamplingParams(BaseModel):
    temperature: float = Field(default=0.2, ge=0)
    top_p: float = Field(default=0.9, gt=0, le=1)


class MockPolicy(BaseModel):
    """Deterministic failure/degradation knobs for the mock backend."""

    p_format_break: float = Field(default=0.0, ge=0, le=1)
    leaf_perturb_rate: float = Field(default=0.0, ge=0, le=1)
    p_omit_explanation: float = Field(default=0.0, ge=0, le=1)
    synthetic_latency_s: float = Field(default=0.0, ge=0)
    seed: int = 0


class BackendDescriptor(BaseModel):
    """One registry row: endpoint, pricing, sampling, and (for mocks) the policy."""

    name: str = Field(pattern=r"^[A-Za-z0-9._-]+$")
    kind: BackendKind
    model_id: str
    endpoint_url: str = ""
    api_key_env: str = ""
    price_in_usd_per_1m: float = Field(default=0.0, ge=0)
    price_out_usd_per_1m: float = Field(default=0.0, ge=0)
    open_source: bool = False
    sampling: SamplingParams = Field(default_factory=SamplingParams)
    mock_policy: MockPolicy | None = None
    meta: dict[str, Scalar] = Field(default_factory=dict)  # descriptive only, never computed on

    @model_validator(mode="after")
    def _check(self) -> "BackendDescriptor":
        if self.kind is BackendKind.REMOTE and not self.endpoint_url:
            raise ValueError(f"backend {self.name}: remote backends need an endpoint_url")
        if self.open_source and (self.price_in_usd_per_1m or self.price_out_usd_per_1m):
            raise ValueError(f"backend {self.name}: open-source backends must have zero pricing")
        return self


class Usage(BaseModel):
    prompt_tokens: int = Field(ge=0)
    completion_tokens: int = Field(ge=0)
    estimated: bool = False


class CompletionResult(BaseModel):
    text: str
    usage: Usage
    latency_s: float = Field(ge=0)
    backend: str
    attempt_count: int = Field(default=1, ge=1)


def trial_cost(usage: Usage, backend: BackendDescriptor) -> float:
    """USD cost of one completion: tokens times the per-1M rates; 0 for open source."""
    if backend.open_source:
        return 0.0
    return (
        usage.prompt_tokens * backend.price_in_usd_per_1m
        + usage.completion_tokens * backend.price_out_usd_per_1m
    ) / 1_000_000


def estimate_tokens(text: str) -> int:
    return int(round(len(text.split()) * TOKENS_PER_WORD))


def estimate_usage(messages: PromptMessages, completion: str) -> Usage:
    return Usage(
        prompt_tokens=estimate_tokens(messages.system + "\n" + messages.user),
        completion_tokens=estimate_tokens(completion),
        estimated=True,
    )


def load_backends(path: str | Path) -> list[BackendDescriptor]:
    """Load a backend registry file (a list, or a mapping with a `backends` list)."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"backend registry not found: {path}")
    raw = yaml.safe_load(path.read_text())
    if isinstance(raw, dict):
        raw = raw.get("backends", [])
    if not isinstance(raw, list) or not raw:
        raise SchemaError(f"{path}: expected a non-empty list of backend descriptors")
    descriptors = [BackendDescriptor.model_validate(entry) for entry in raw]
    names = [d.name for d in descriptors]
    if len(set(names)) != len(names):
        raise SchemaError(f"{path}: backend names must be unique")
    return descriptors


class LLMClient(Protocol):
    descriptor: BackendDescriptor

    def complete(self, messages: PromptMessages, seed: int | None = None) -> CompletionResult: ...


# --- mock backend ------------------------------------------------------------

_JSON_BLOCK = re.compile(r"```json\s*\n(.*?)```", re.DOTALL)


def _perturb(value: Scalar) -> Scalar:
    # Must change the value while keeping the config schema-valid.
    if isinstance(value, bool):
        return not value
    if isinstance(value, (int, float)):
        return value + 1
    return f"{value}-alt"


class MockLLMClient:
    """Replays the expert reference for the target order, degraded per policy.

    Fully reproducible: all randomness comes from one PRNG seeded with the
    policy seed and the per-trial seed, so identical trials give bitwise
    identical text.
    """

    def __init__(self, descriptor: BackendDescriptor, references: ReferenceSet):
        self.descriptor = descriptor
        self.references = references

    def _target_order(self, messages: PromptMessages) -> dict:
        blocks = _JSON_BLOCK.findall(messages.user)
        if not blocks:
            raise BackendError("mock backend: no JSON order block in the prompt")
        try:
            return json.loads(blocks[-1])
        except json.JSONDecodeError as exc:
            raise BackendError(f"mock backend: target order is not valid JSON: {exc}") from exc

    def complete(self, messages: PromptMessages, seed: int | None = None) -> CompletionResult:
        policy = self.descriptor.mock_policy or MockPolicy()
        rng = random.Random(f"{policy.seed}:{seed if seed is not None else 0}")
        order = self._target_order(messages)
        order_id = str(order.get("order_id", ""))
        reference = self.references.reference_for(order_id)

        # Fixed draw order keeps the stream stable across policy settings.
        format_break = rng.random() < policy.p_format_break
        omit_explanation = rng.random() < policy.p_omit_explanation

        if format_break:
            block = "```yaml\nran: [RU, {DU: unbalanced\n```"
        else:
            dump = reference.model_dump(mode="json")
            leaves = list(iter_leaves(dump))
            n_perturb = round(policy.leaf_perturb_rate * len(leaves))
            for index in sorted(rng.sample(range(len(leaves)), n_perturb)):
                path, value = leaves[index]
                set_leaf(dump, path, _perturb(value))
            block = f"```yaml\n{yaml.safe_dump(dump, sort_keys=True, default_flow_style=False)}```"

        if omit_explanation:
            text = block
        else:
            budget = reference.slice.latency_budget_ms
            segments = " + ".join(str(budget[k]) for k in sorted(budget))
            total = sum(budget.values())
            intents = ", ".join(f"{k} {v}" for k, v in order.get("intents", {}).items())
            prose = (
                f"Translating order {order_id}: {intents}. "
                f"The latency budget splits as {segments} = {total:g} ms across the slice segments."
            )
            text = f"{prose}\n\n{block}"

        return CompletionResult(
            text=text,
            usage=estimate_usage(messages, text),
            latency_s=policy.synthetic_latency_s,
            backend=self.descriptor.name,
            attempt_count=1,
        )


# --- remote backend ----------------------------------------------------------

class RemoteLLMClient:
    """OpenAI-compatible chat-completions client with bounded retries.

    Request body: model, messages[{role,content}], temperature, top_p.
    Response: choices[0].message.content plus usage token counts. Latency is
    measured here, dispatch to final byte of the successful attempt.
    """

    def __init__(
        self,
        descriptor: BackendDescriptor,
        transport: httpx.BaseTransport | None = None,
        timeout_s: float = 120.0,
        backoff_s: tuple[float, ...] = (1.0, 2.0, 4.0),
        sleep=time.sleep,
    ):
        self.descriptor = descriptor
        self.backoff_s = backoff_s
        self._sleep = sleep
        self._http = httpx.Client(transport=transport, timeout=timeout_s)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.descriptor.api_key_env:
            key = os.environ.get(self.descriptor.api_key_env)
            if not key:
                raise BackendConfigError(
                    f"backend {self.descriptor.name}: credential env var "
                    f"{self.descriptor.api_key_env} is not set"
                )
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, messages: PromptMessages, seed: int | None = None) -> CompletionResult:
        headers = self._headers()
        body = {
            "model": self.descriptor.model_id,
            "messages": [
                {"role": "system", "content": messages.system},
                {"role": "user", "content": messages.user},
            ],
            "temperature": self.descriptor.sampling.temperature,
            "top_p": self.descriptor.sampling.top_p,
        }

        attempts = len(self.backoff_s)
        last_error: str = "no attempt made"
        last_status: int | None = None
        for attempt in range(1, attempts + 1):
            started = time.perf_counter()
            try:
                response = self._http.post(self.descriptor.endpoint_url, json=body, headers=headers)
            except httpx.HTTPError as exc:
                last_error = f"transport error: {exc}"
                logger.warning("backend %s attempt %d: %s", self.descriptor.name, attempt, last_error)
                if attempt < attempts:
                    self._sleep(self.backoff_s[attempt - 1])
                continue
            if response.status_code in RETRYABLE_STATUSES:
                last_error = f"HTTP {response.status_code}"
                last_status = response.status_code
                logger.warning("backend %s attempt %d: %s", self.descriptor.name, attempt, last_error)
                if attempt < attempts:
                    self._sleep(self.backoff_s[attempt - 1])
                continue
            if response.status_code != 200:
                raise BackendError(
                    f"backend {self.descriptor.name}: HTTP {response.status_code}",
                    status=response.status_code,
                    attempts=attempt,
                )
            latency_s = time.perf_counter() - started
            return self._parse(response, latency_s, attempt, messages)

        raise BackendError(
            f"backend {self.descriptor.name}: giving up after {attempts} attempts ({last_error})",
            status=last_status,
            attempts=attempts,
        )

    def _parse(
        self, response: httpx.Response, latency_s: float, attempt: int, messages: PromptMessages
    ) -> CompletionResult:
        try:
            payload = response.json()
            text = payload["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise BackendError(
                f"backend {self.descriptor.name}: malformed response body: {exc}",
                status=response.status_code,
                attempts=attempt,
            ) from exc
        if not text:
            raise EmptyResponseError(
                f"backend {self.descriptor.name}: provider returned no text", attempts=attempt
            )
        usage = payload.get("usage") or {}
        if "prompt_tokens" in usage and "completion_tokens" in usage:
            parsed = Usage(
                prompt_tokens=usage["prompt_tokens"],
                completion_tokens=usage["completion_tokens"],
            )
        else:
            parsed = estimate_usage(messages, text)
        return CompletionResult(
            text=text,
            usage=parsed,
            latency_s=latency_s,
            backend=self.descriptor.name,
            attempt_count=attempt,
        )


def build_client(
    descriptor: BackendDescriptor,
    references: ReferenceSet | None = None,
    transport: httpx.BaseTransport | None = None,
    timeout_s: float = 120.0,
    backoff_s: tuple[float, ...] = (1.0, 2.0, 4.0),
) -> LLMClient:
    if descriptor.kind is BackendKind.MOCK:
        if references is None:
            raise BackendConfigError(f"backend {descriptor.name}: mock backends need a reference set")
        return MockLLMClient(descriptor, references)
    return RemoteLLMClient(descriptor, transport=transport, timeout_s=timeout_s, backoff_s=backoff_s)


def complete(
    backend: BackendDescriptor,
    messages: PromptMessages,
    references: ReferenceSet | None = None,
    seed: int | None = None,
    **client_kwargs,
) -> CompletionResult:
    """One-shot completion against a descriptor (builds a throwaway client)."""
    return build_client(backend, references=references, **client_kwargs).complete(messages, seed=seed)
