"""FEACI scoring: format, explanation, accuracy, cost, and inference time.

Format is the gate: a translation only counts if a schema-valid RFS can be
extracted from the response. Cost and inference time are normalized against
configurable thresholds (defaults 0.1 USD and 60 s) and clamped to [0, 1].
The composite evaluation score is the signed weighted sum

    e_serv = w1*F + w2*E + w3*A - w4*C - w5*I
"""

from __future__ import annotations

import csv
import math
import re
from collections.abc import Mapping
from pathlib import Path

import yaml
from pydantic import BaseModel, Field, model_validator

from .backends import BackendDescriptor, Usage, trial_cost
from .errors import AnnotationError, SchemaError
from .model import ResourceConfig, Scalar, ServiceOrder, flatten_config, parse_config, serialize_config
from .prompts import PromptMode
from .textmetrics import RougeVariant, bleu, rouge

FENCED_BLOCK = re.compile(r"```[A-Za-z0-9_-]*[ \t]*\n(.*?)```", re.DOTALL)
ARITHMETIC_PATTERN = re.compile(r"\d+(?:\.\d+)?\s*[-+*/x×]\s*\d+(?:\.\d+)?\s*=\s*\d+(?:\.\d+)?")

NO_BLOCK = "no-block"
PARSE_ERROR = "parse-error"
SCHEMA_ERROR = "schema-error"


class Weights(BaseModel):
    """Per-component weights for the composite score (defaults: evenly 0.2)."""

    w1: float = Field(default=0.2, ge=0, le=1)
    w2: float = Field(default=0.2, ge=0, le=1)
    w3: float = Field(default=0.2, ge=0, le=1)
    w4: float = Field(default=0.2, ge=0, le=1)
    w5: float = Field(default=0.2, ge=0, le=1)

    @classmethod
    def from_csv(cls, text: str) -> "Weights":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 5:
            raise ValueError(f"expected 5 comma-separated weights, got {len(parts)}")
        values = [float(p) for p in parts]
        return cls(w1=values[0], w2=values[1], w3=values[2], w4=values[3], w5=values[4])


class Thresholds(BaseModel):
    """Normalization references: cost threshold in USD, inference threshold in seconds."""

    c0_usd: float = Field(default=0.1, gt=0)
    i0_s: float = Field(default=60.0, gt=0)


class TrialScore(BaseModel):
    """All per-trial scores; accuracy is forced to 0 when the format gate fails."""

    format_ok: bool
    explanation_ok: bool
    accuracy: float = Field(ge=0, le=1)
    cost_usd: float = Field(ge=0)
    cost_norm: float = Field(ge=0, le=1)
    latency_s: float = Field(ge=0)
    latency_norm: float = Field(ge=0, le=1)
    bleu: float = Field(default=0.0, ge=0, le=1)
    rouge1: float = Field(default=0.0, ge=0, le=1)
    rouge2: float = Field(default=0.0, ge=0, le=1)
    rougeL: float = Field(default=0.0, ge=0, le=1)

    @model_validator(mode="after")
    def _gate(self) -> "TrialScore":
        if not self.format_ok and self.accuracy != 0.0:
            raise ValueError("format_ok=false forces accuracy=0")
        return self


class AggregateScore(BaseModel):
    """FEACI means for one (backend, prompt mode) cell, plus the composite."""

    backend: str
    mode: PromptMode
    F: float = Field(ge=0, le=1)
    E: float = Field(ge=0, le=1)
    A: float = Field(ge=0, le=1)
    C: float = Field(ge=0, le=1)
    I: float = Field(ge=0, le=1)
    e_serv: float = 0.0
    n_trials: int = Field(gt=0)
    mean_tokens_in: float = 0.0
    mean_tokens_out: float = 0.0
    bleu: float = Field(default=0.0, ge=0, le=1)
    rouge1: float = Field(default=0.0, ge=0, le=1)
    rouge2: float = Field(default=0.0, ge=0, le=1)
    rougeL: float = Field(default=0.0, ge=0, le=1)


class ExtractionResult(BaseModel):
    """Outcome of trying to pull an RFS out of a response; failure is a value."""

    config: ResourceConfig | None = None
    format_ok: bool = False
    diagnostic: str | None = None


def extract_config(response_text: str) -> ExtractionResult:
    """Find the first fenced block (then the whole body) that parses and validates.

    Diagnostics on failure: no-block (nothing structured found), parse-error
    (structured-looking text that does not parse), schema-error (parsed but
    not a valid RFS).
    """
    chunks = FENCED_BLOCK.findall(response_text)
    chunks.append(response_text)

    saw_parse_error = False
    saw_schema_error = False
    for chunk in chunks:
        try:
            data = yaml.safe_load(chunk)
        except yaml.YAMLError:
            saw_parse_error = True
            continue
        if not isinstance(data, Mapping):
            continue
        try:
            return ExtractionResult(config=parse_config(data), format_ok=True)
        except SchemaError:
            saw_schema_error = True
            continue
    if saw_schema_error:
        diagnostic = SCHEMA_ERROR
    elif saw_parse_error and chunks[:-1]:
        diagnostic = PARSE_ERROR
    else:
        diagnostic = NO_BLOCK
    return ExtractionResult(config=None, format_ok=False, diagnostic=diagnostic)


def _values_match(candidate: Scalar, reference: Scalar) -> bool:
    if isinstance(reference, bool) or isinstance(candidate, bool):
        return isinstance(candidate, bool) and isinstance(reference, bool) and candidate == reference
    if isinstance(reference, (int, float)) and isinstance(candidate, (int, float)):
        return math.isclose(candidate, reference, rel_tol=1e-6)
    if isinstance(reference, str) and isinstance(candidate, str):
        return candidate.strip() == reference.strip()
    return candidate == reference


def accuracy_score(candidate: ResourceConfig | Mapping | None, reference: ResourceConfig | Mapping) -> float:
    """Fraction of reference leaves the candidate reproduces.

    Numbers match within relative tolerance 1e-6, strings exactly after
    trimming; extra candidate paths neither help nor hurt.
    """
    ref_flat = flatten_config(reference)
    if not ref_flat:
        return 0.0
    cand_flat = flatten_config(candidate) if candidate is not None else {}
    matched = sum(
        1 for path, ref_value in ref_flat.items()
        if path in cand_flat and _values_match(cand_flat[path], ref_value)
    )
    return matched / len(ref_flat)


def _render_value(value: Scalar) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def prose_outside_blocks(response_text: str) -> str:
    return FENCED_BLOCK.sub(" ", response_text).strip()


def explanation_judge(
    response_text: str,
    order: ServiceOrder,
    mode: PromptMode,
    annotations: Mapping[str, bool] | None = None,
    trial_id: str | None = None,
) -> bool:
    """Deterministic explanation rubric, overridden by a human annotation when present.

    Rubric: there is prose outside the config block, it mentions at least one
    intent name or value from the order, and (in FEW mode) it shows at least
    one arithmetic derivation like "0.4 * 10 = 4".
    """
    if annotations is not None and trial_id is not None and trial_id in annotations:
        return annotations[trial_id]

    prose = prose_outside_blocks(response_text)
    if not prose:
        return False
    low = prose.lower()
    mentioned = False
    for name, value in order.intents.items():
        terms = {name.lower(), name.replace("_", " ").lower(), _render_value(value).lower()}
        if any(term and term in low for term in terms):
            mentioned = True
            break
    if not mentioned:
        return False
    if PromptMode(mode) is PromptMode.FEW and not ARITHMETIC_PATTERN.search(prose):
        return False
    return True


def normalize_cost(cost_usd: float, thresholds: Thresholds) -> float:
    """min(cost / C0, 1): proportional below the threshold, clamped above."""
    if cost_usd < 0:
        raise ValueError("cost_usd must be non-negative")
    return min(cost_usd / thresholds.c0_usd, 1.0)


def normalize_inference(latency_s: float, thresholds: Thresholds) -> float:
    """min(latency / I0, 1)."""
    if latency_s < 0:
        raise ValueError("latency_s must be non-negative")
    return min(latency_s / thresholds.i0_s, 1.0)


def eval_score(agg: AggregateScore, weights: Weights) -> float:
    """Signed weighted sum: rewards F/E/A, penalizes normalized cost and latency."""
    return (
        weights.w1 * agg.F
        + weights.w2 * agg.E
        + weights.w3 * agg.A
        - weights.w4 * agg.C
        - weights.w5 * agg.I
    )


def score_trial(
    *,
    response_text: str,
    usage: Usage,
    latency_s: float,
    order: ServiceOrder,
    reference: ResourceConfig,
    backend: BackendDescriptor,
    mode: PromptMode,
    thresholds: Thresholds,
    annotations: Mapping[str, bool] | None = None,
    trial_id: str | None = None,
    gate_text_metrics_on_format: bool = True,
) -> TrialScore:
    """Score one completed trial end to end."""
    extraction = extract_config(response_text)
    accuracy = accuracy_score(extraction.config, reference) if extraction.format_ok else 0.0
    explanation = explanation_judge(response_text, order, mode, annotations=annotations, trial_id=trial_id)
    cost_usd = trial_cost(usage, backend)

    if extraction.format_ok or not gate_text_metrics_on_format:
        reference_text = serialize_config(reference)
        bleu_score = bleu(response_text, reference_text)
        rouge_scores = {v: rouge(response_text, reference_text, v) for v in RougeVariant}
    else:
        bleu_score = 0.0
        rouge_scores = {v: 0.0 for v in RougeVariant}

    return TrialScore(
        format_ok=extraction.format_ok,
        explanation_ok=explanation,
        accuracy=accuracy,
        cost_usd=cost_usd,
        cost_norm=normalize_cost(cost_usd, thresholds),
        latency_s=latency_s,
        latency_norm=normalize_inference(latency_s, thresholds),
        bleu=bleu_score,
        rouge1=rouge_scores[RougeVariant.R1],
        rouge2=rouge_scores[RougeVariant.R2],
        rougeL=rouge_scores[RougeVariant.RL],
    )


# --- annotation store ---------------------------------------------------------

ANNOTATION_FIELDS = ("trial_id", "explanation_ok", "annotator", "note")


def load_annotations(path: str | Path) -> dict[str, bool]:
    """Read the annotation CSV into trial_id -> verdict (later rows win)."""
    path = Path(path)
    if not path.is_file():
        return {}
    verdicts: dict[str, bool] = {}
    try:
        with path.open(newline="") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None or "trial_id" not in reader.fieldnames or "explanation_ok" not in reader.fieldnames:
                raise AnnotationError(f"{path}: expected columns {', '.join(ANNOTATION_FIELDS)}")
            for row in reader:
                raw = (row.get("explanation_ok") or "").strip()
                if raw not in {"0", "1"}:
                    raise AnnotationError(f"{path}: explanation_ok must be 0 or 1, got {raw!r}")
                verdicts[row["trial_id"]] = raw == "1"
    except csv.Error as exc:
        raise AnnotationError(f"{path}: malformed CSV: {exc}") from exc
    return verdicts


def save_annotation(
    path: str | Path, trial_id: str, explanation_ok: bool, annotator: str = "", note: str = ""
) -> None:
    """Append one verdict (creates the file with a header on first use)."""
    path = Path(path)
    new_file = not path.is_file()
    with path.open("a", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=ANNOTATION_FIELDS)
        if new_file:
            writer.writeheader()
        writer.writerow(
            {
                "trial_id": trial_id,
                "explanation_ok": "1" if explanation_ok else "0",
                "annotator": annotator,
                "note": note,
            }
        )
