"""FastAPI service wrapping the benchmark core.

Endpoints mirror the CLI one to one: validate a catalog, execute a run,
score it, fetch a report, and record explanation annotations. All state
lives on disk in the catalog and run directories named by the requests.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from pydantic import ValidationError as PydanticValidationError

from .. import __version__
from ..backends import load_backends
from ..catalog import load_catalog
from ..errors import IntentBenchError, UsageError, ValidationError
from ..prompts import PromptMode, load_exemplars
from ..report import ANNOTATIONS_FILENAME, aggregate, load_bundle, render, save_bundle
from ..runner import content_checksum, execute, plan_trials
from ..scoring import Thresholds, Weights, save_annotation
from .schemas import (
    AnnotateRequest,
    AnnotateResponse,
    CatalogSummary,
    CatalogValidateRequest,
    HealthResponse,
    RunRequest,
    RunResponse,
    ScoreRequest,
    ScoreResponse,
)

_STATUS_BY_EXIT_CODE = {1: 400, 2: 422, 3: 502}


def _parse_modes(names: list[str]) -> list[PromptMode]:
    modes = []
    for name in names:
        try:
            modes.append(PromptMode(name.strip().lower()))
        except ValueError:
            raise UsageError(f"unknown prompt mode {name!r}; expected zero, one, few") from None
    if not modes:
        raise UsageError("at least one prompt mode is required")
    return modes


def _parse_weights(values: list[float] | None) -> Weights:
    if values is None:
        return Weights()
    if len(values) != 5:
        raise UsageError(f"expected 5 weights, got {len(values)}")
    try:
        return Weights(w1=values[0], w2=values[1], w3=values[2], w4=values[3], w5=values[4])
    except PydanticValidationError:
        raise UsageError(f"weights must each lie in [0, 1], got {values}") from None


def create_app() -> FastAPI:
    app = FastAPI(title="intent-bench", version=__version__)

    @app.exception_handler(IntentBenchError)
    def _intentbench_error(request: Request, exc: IntentBenchError) -> JSONResponse:
        return JSONResponse(
            status_code=_STATUS_BY_EXIT_CODE.get(exc.exit_code, 400),
            content={"detail": str(exc), "kind": type(exc).__name__, "exit_code": exc.exit_code},
        )

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(version=__version__)

    @app.post("/catalog/validate", response_model=CatalogSummary)
    def catalog_validate(request: CatalogValidateRequest) -> CatalogSummary:
        catalog, references = load_catalog(request.path)
        return CatalogSummary(
            path=request.path,
            products=len(catalog.products),
            orders=len(catalog.orders),
            references=len(references.pairs),
            intent_vocabulary=list(catalog.intent_vocabulary),
        )

    @app.post("/runs", response_model=RunResponse)
    def run_benchmark(request: RunRequest) -> RunResponse:
        catalog, references = load_catalog(request.catalog)
        backends = load_backends(request.backends)
        modes = _parse_modes(request.modes)
        exemplar_dir = Path(request.catalog) / "exemplars"
        exemplars = load_exemplars(exemplar_dir) if exemplar_dir.is_dir() else []

        plan = plan_trials(catalog, backends, modes, request.reps, request.seed)
        run_id = request.run_id or _derived_run_id(catalog, backends, modes, request.reps, request.seed)
        store = Path(request.out) / run_id
        manifest = execute(
            plan,
            store,
            catalog=catalog,
            references=references,
            backends=backends,
            exemplars=exemplars,
            max_in_flight_per_backend=request.max_in_flight_per_backend,
        )
        return RunResponse(store=str(store), manifest=manifest)

    @app.post("/score", response_model=ScoreResponse)
    def score_run(request: ScoreRequest) -> ScoreResponse:
        catalog, references = load_catalog(request.refs)
        bundle = aggregate(
            request.run,
            catalog,
            references,
            weights=_parse_weights(request.weights),
            thresholds=Thresholds(c0_usd=request.c0, i0_s=request.i0),
            gate_text_metrics_on_format=request.gate_text_metrics_on_format,
        )
        path = save_bundle(bundle, request.run)
        return ScoreResponse(
            run=bundle.run_id,
            cells=len(bundle.cells),
            trials=sum(cell.n_trials for cell in bundle.cells),
            scores_path=str(path),
        )

    @app.get("/report")
    def report(run: str = Query(...), format: str = Query("table")) -> Response:
        document = render(load_bundle(run), format)
        if format == "json":
            return Response(content=document, media_type="application/json")
        return PlainTextResponse(document)

    @app.post("/annotations", response_model=AnnotateResponse)
    def annotate(request: AnnotateRequest) -> AnnotateResponse:
        run = Path(request.run)
        trial_path = run / "trials" / f"{request.trial}.json"
        if not trial_path.is_file():
            raise ValidationError(f"trial {request.trial!r} not found under {run}")
        path = run / ANNOTATIONS_FILENAME
        save_annotation(path, request.trial, bool(request.explanation), request.annotator, request.note)
        return AnnotateResponse(
            run=str(run),
            trial=request.trial,
            explanation_ok=bool(request.explanation),
            annotations_path=str(path),
        )

    return app


def _derived_run_id(catalog, backends, modes, reps: int, seed: int) -> str:
    # Same inputs -> same run id, so re-issuing a run command resumes it.
    key = "|".join(
        [
            content_checksum(catalog),
            content_checksum(list(backends)),
            ",".join(m.value for m in modes),
            str(reps),
            str(seed),
        ]
    )
    return f"run-{hashlib.sha256(key.encode()).hexdigest()[:12]}"


app = create_app()
