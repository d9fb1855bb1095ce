"""ZERO/ONE/FEW prompt construction.

ZERO sends only the target order; ONE prepends a single worked
question/answer pair; FEW prepends every exemplar including its reasoning
steps. Rendering is deterministic: identical inputs give byte-identical
messages.
"""

from __future__ import annotations

import json
from enum import Enum
from pathlib import Path
from typing import Sequence

import yaml
from pydantic import BaseModel, ConfigDict

from .errors import ExemplarError, LeakageError, SchemaError
from .model import ServiceOrder, parse_config, serialize_order

EXAMPLE_MARKER = "### Example"
TARGET_MARKER = "### Target service order"

SYSTEM_TEXT = (
    "You are the service intent resolver of a 5G network operator. "
    "Translate the customer-facing service order (CFS, given as JSON) into the "
    "resource-facing configuration (RFS) that the network resource orchestrator will deploy. "
    "The RFS must configure the RAN network functions RU, DU and CU and the core network "
    "functions UPF, AMF, PCF, SMF, AUSF and NSSF, each with cpu_cores, ram_mb, storage_gb, "
    "replicas and any extra parameters, plus a slice section with sst, latency_budget_ms per "
    "segment and guaranteed_throughput_mbps. "
    "Answer with exactly one fenced YAML code block containing the full configuration; "
    "keep any explanation outside the block."
)


class PromptMode(str, Enum):
    ZERO = "zero"
    ONE = "one"
    FEW = "few"


class Exemplar(BaseModel):
    """A worked translation: serialized order (Q), optional reasoning (CoT), serialized RFS (A)."""

    model_config = ConfigDict(frozen=True)

    question: str
    chain_of_thought: str | None = None
    answer: str

    @property
    def order_id(self) -> str | None:
        try:
            return json.loads(self.question).get("order_id")
        except (json.JSONDecodeError, AttributeError):
            return None


class PromptMessages(BaseModel):
    """System/user message pair ready for a chat-completions endpoint."""

    model_config = ConfigDict(frozen=True)

    system: str
    user: str

    def rendered_length(self) -> int:
        return len(self.system) + len(self.user)


def load_exemplars(path: str | Path) -> list[Exemplar]:
    """Load `*.yaml` exemplars (fields question / cot / answer) in sorted order.

    Each answer must parse and validate as a ResourceConfig.
    """
    path = Path(path)
    files = sorted(path.glob("*.yaml")) if path.is_dir() else []
    if not files:
        raise SchemaError(f"no exemplars found under {path}")
    exemplars = []
    for file in files:
        raw = yaml.safe_load(file.read_text())
        if not isinstance(raw, dict) or "question" not in raw or "answer" not in raw:
            raise SchemaError(f"exemplar {file.name}: needs question and answer fields", doc_id=file.stem)
        try:
            parse_config(yaml.safe_load(raw["answer"]))
        except (SchemaError, yaml.YAMLError) as exc:
            raise SchemaError(f"exemplar {file.name}: answer is not a valid RFS: {exc}", doc_id=file.stem) from exc
        exemplars.append(
            Exemplar(question=raw["question"], chain_of_thought=raw.get("cot"), answer=raw["answer"])
        )
    return exemplars


def _exemplar_block(index: int, exemplar: Exemplar, with_cot: bool) -> str:
    parts = [
        f"{EXAMPLE_MARKER} {index}",
        "Service order:",
        f"```json\n{exemplar.question}\n```",
    ]
    if with_cot:
        parts += ["Reasoning:", exemplar.chain_of_thought.rstrip()]  # type: ignore[union-attr]
    parts += ["Expected configuration:", f"```yaml\n{exemplar.answer.rstrip()}\n```"]
    return "\n".join(parts)


def build_prompt(mode: PromptMode, order: ServiceOrder, exemplars: Sequence[Exemplar] = ()) -> PromptMessages:
    """Render the prompt for one order under the given regime.

    ONE uses the first exemplar's question/answer pair without its reasoning;
    FEW embeds all exemplars and requires each to carry reasoning steps.
    """
    mode = PromptMode(mode)
    if mode is PromptMode.ZERO:
        used: list[Exemplar] = []
    elif mode is PromptMode.ONE:
        if len(exemplars) < 1:
            raise ExemplarError("ONE requires at least 1 exemplar")
        used = [exemplars[0]]
    else:
        if len(exemplars) < 2:
            raise ExemplarError("FEW requires at least 2 exemplars")
        missing = [e.order_id or "?" for e in exemplars if not (e.chain_of_thought or "").strip()]
        if missing:
            raise ExemplarError(f"FEW requires CoT on every exemplar (missing: {', '.join(missing)})")
        used = list(exemplars)

    for exemplar in used:
        if exemplar.order_id == order.order_id:
            raise LeakageError(f"exemplar shares the target order id {order.order_id!r}")

    sections = []
    if used:
        sections.append(
            "Worked examples of the expected translation:"
            if len(used) > 1
            else "A worked example of the expected translation:"
        )
        sections += [_exemplar_block(i + 1, e, with_cot=mode is PromptMode.FEW) for i, e in enumerate(used)]
    sections.append(TARGET_MARKER)
    sections.append(f"```json\n{serialize_order(order)}\n```")
    sections.append("Produce the resource configuration for this order as one fenced YAML block.")

    return PromptMessages(system=SYSTEM_TEXT, user="\n\n".join(sections))
