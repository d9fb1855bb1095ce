"""Request/response models for the HTTP surface.

The service is a desk-scale wrapper over the core package: requests carry
filesystem paths on the host running the service, responses echo the core
models.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..runner import RunManifest


class CatalogValidateRequest(BaseModel):
    path: str


class CatalogSummary(BaseModel):
    path: str
    products: int
    orders: int
    references: int
    intent_vocabulary: list[str]


class RunRequest(BaseModel):
    catalog: str
    backends: str
    out: str
    modes: list[str] = ["zero", "one", "few"]
    reps: int = 10
    seed: int = 0
    run_id: str | None = None
    max_in_flight_per_backend: int = Field(default=2, ge=1)


class RunResponse(BaseModel):
    store: str
    manifest: RunManifest


class ScoreRequest(BaseModel):
    run: str
    refs: str
    weights: list[float] | None = None
    c0: float = Field(default=0.1, gt=0)
    i0: float = Field(default=60.0, gt=0)
    gate_text_metrics_on_format: bool = True


class ScoreResponse(BaseModel):
    run: str
    cells: int
    trials: int
    scores_path: str


class AnnotateRequest(BaseModel):
    run: str
    trial: str
    explanation: int = Field(ge=0, le=1)
    annotator: str = ""
    note: str = ""


class AnnotateResponse(BaseModel):
    run: str
    trial: str
    explanation_ok: bool
    annotations_path: str


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str
