"""Benchmark execution: plan the trial matrix, run it, persist every trial.

Store layout (one directory per run):

    <run>/manifest.json     counts + config echo, checkpointed every 10 trials
    <run>/backends.yaml     snapshot of the backend registry (pricing for scoring)
    <run>/trials/<id>.json  one TrialRecord per trial, written atomically

Records are append-only; re-executing skips trials whose records exist, so a
run can be resumed (or re-run as a no-op) safely.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterator, Sequence

import yaml
from pydantic import BaseModel, Field

from .backends import BackendDescriptor, CompletionResult, LLMClient, Usage, build_client
from .catalog import Catalog
from .errors import IntentBenchError, PlanError, StoreError
from .model import ReferenceSet
from .prompts import Exemplar, PromptMessages, PromptMode, build_prompt
from .scoring import Thresholds, Weights

logger = logging.getLogger(__name__)


class TrialSpec(BaseModel):
    order_id: str
    backend_name: str
    mode: PromptMode
    rep_index: int = Field(ge=0)
    seed: int

    @property
    def trial_id(self) -> str:
        return f"{self.order_id}.{self.backend_name}.{self.mode.value}.r{self.rep_index:02d}"


class TrialPlan(BaseModel):
    trials: list[TrialSpec]

    def __len__(self) -> int:
        return len(self.trials)


class TrialRecord(BaseModel):
    """Everything needed to re-score one trial without re-calling the backend."""

    trial_id: str
    order_id: str
    backend_name: str
    mode: PromptMode
    rep_index: int
    seed: int
    prompt: PromptMessages
    response_text: str = ""
    usage: Usage = Field(default_factory=lambda: Usage(prompt_tokens=0, completion_tokens=0))
    latency_s: float = 0.0
    started_at: datetime
    finished_at: datetime
    attempt_count: int = 1
    error: str | None = None


class RunManifest(BaseModel):
    run_id: str
    catalog_checksum: str
    backends_checksum: str
    thresholds: Thresholds
    weights: Weights
    planned: int
    completed: int = 0
    failed: int = 0


def trial_seed(master_seed: int, order_id: str, backend_name: str, mode: PromptMode, rep_index: int) -> int:
    """Per-trial seed: first 8 bytes of sha256 over the plan tuple (replayable anywhere)."""
    key = f"{master_seed}|{order_id}|{backend_name}|{mode.value}|{rep_index}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def content_checksum(obj: BaseModel | list[BaseModel]) -> str:
    if isinstance(obj, list):
        payload = json.dumps([item.model_dump(mode="json") for item in obj], sort_keys=True)
    else:
        payload = json.dumps(obj.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def plan_trials(
    catalog: Catalog,
    backends: Sequence[BackendDescriptor],
    modes: Sequence[PromptMode],
    reps: int,
    master_seed: int,
) -> TrialPlan:
    """Full cross product: orders x backends x modes x repetitions, deterministically seeded."""
    if reps < 1:
        raise PlanError(f"reps must be >= 1, got {reps}")
    if not catalog.orders:
        raise PlanError("cannot plan: catalog has no orders")
    if not backends:
        raise PlanError("cannot plan: no backends")
    if not modes:
        raise PlanError("cannot plan: no prompt modes")
    modes = [PromptMode(m) for m in modes]
    trials = [
        TrialSpec(
            order_id=order.order_id,
            backend_name=backend.name,
            mode=mode,
            rep_index=rep,
            seed=trial_seed(master_seed, order.order_id, backend.name, mode, rep),
        )
        for order in catalog.orders
        for backend in backends
        for mode in modes
        for rep in range(reps)
    ]
    return TrialPlan(trials=trials)


def _write_atomic(path: Path, payload: str) -> None:
    tmp = path.with_name(f"{path.name}.tmp-{os.getpid()}-{threading.get_ident()}")
    tmp.write_text(payload)
    os.replace(tmp, path)


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


ClientFactory = Callable[[BackendDescriptor], LLMClient]


def execute(
    plan: TrialPlan,
    store: str | Path,
    *,
    catalog: Catalog,
    references: ReferenceSet,
    backends: Sequence[BackendDescriptor],
    exemplars: Sequence[Exemplar] = (),
    thresholds: Thresholds | None = None,
    weights: Weights | None = None,
    client_factory: ClientFactory | None = None,
    max_in_flight_per_backend: int = 2,
    heartbeat_every: int = 10,
) -> RunManifest:
    """Run every planned trial once, resuming past completed ones.

    Per-trial failures are recorded in the trial file and never abort the
    run. At most `max_in_flight_per_backend` requests are outstanding against
    any single backend.
    """
    store = Path(store)
    trials_dir = store / "trials"
    try:
        trials_dir.mkdir(parents=True, exist_ok=True)
        probe = store / ".writable"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise StoreError(f"run store {store} is not writable: {exc}") from exc

    by_name = {d.name: d for d in backends}
    missing = sorted({t.backend_name for t in plan.trials} - set(by_name))
    if missing:
        raise PlanError(f"plan references unknown backend(s): {', '.join(missing)}")

    if client_factory is None:
        def client_factory(descriptor: BackendDescriptor) -> LLMClient:  # noqa: F811
            return build_client(descriptor, references=references)

    clients = {name: client_factory(desc) for name, desc in by_name.items()}
    orders = {order.order_id: order for order in catalog.orders}
    missing_orders = sorted({t.order_id for t in plan.trials} - set(orders))
    if missing_orders:
        raise PlanError(f"plan references order(s) not in the catalog: {', '.join(missing_orders)}")

    # Fail fast on setup problems; per-trial error capture is for backend failures only.
    planned_modes = sorted({t.mode for t in plan.trials}, key=list(PromptMode).index)
    for mode in planned_modes:
        build_prompt(mode, catalog.orders[0], exemplars)
    leaked = sorted({e.order_id for e in exemplars} & set(orders))
    if leaked:
        raise PlanError(f"exemplar(s) reuse catalog order id(s): {', '.join(leaked)}")

    manifest = RunManifest(
        run_id=store.name,
        catalog_checksum=content_checksum(catalog),
        backends_checksum=content_checksum(list(backends)),
        thresholds=thresholds or Thresholds(),
        weights=weights or Weights(),
        planned=len(plan.trials),
    )
    _write_atomic(
        store / "backends.yaml",
        yaml.safe_dump([d.model_dump(mode="json") for d in backends], sort_keys=False),
    )

    gates = {name: threading.BoundedSemaphore(max_in_flight_per_backend) for name in by_name}
    progress_lock = threading.Lock()
    # Seed the counters from whatever a previous (resumed) execution left behind.
    manifest.completed, manifest.failed = _count_records(trials_dir)
    done_since_heartbeat = 0

    def checkpoint() -> None:
        _write_atomic(store / "manifest.json", manifest.model_dump_json(indent=2))
        logger.info(
            "run %s: %d/%d completed, %d failed",
            manifest.run_id, manifest.completed, manifest.planned, manifest.failed,
        )

    def run_one(spec: TrialSpec) -> None:
        nonlocal done_since_heartbeat
        record_path = trials_dir / f"{spec.trial_id}.json"
        if record_path.exists():
            return
        prompt = build_prompt(spec.mode, orders[spec.order_id], exemplars)
        started = _utcnow()
        wall_start = time.perf_counter()
        result: CompletionResult | None = None
        error: str | None = None
        with gates[spec.backend_name]:
            try:
                result = clients[spec.backend_name].complete(prompt, seed=spec.seed)
            except IntentBenchError as exc:
                error = str(exc)
                logger.warning("trial %s failed: %s", spec.trial_id, exc)
        wall = time.perf_counter() - wall_start
        record = TrialRecord(
            trial_id=spec.trial_id,
            order_id=spec.order_id,
            backend_name=spec.backend_name,
            mode=spec.mode,
            rep_index=spec.rep_index,
            seed=spec.seed,
            prompt=prompt,
            response_text=result.text if result else "",
            usage=result.usage if result else Usage(prompt_tokens=0, completion_tokens=0),
            latency_s=result.latency_s if result else wall,
            started_at=started,
            finished_at=_utcnow(),
            attempt_count=result.attempt_count if result else 1,
            error=error,
        )
        _write_atomic(record_path, record.model_dump_json(indent=2))
        with progress_lock:
            if error is None:
                manifest.completed += 1
            else:
                manifest.failed += 1
            done_since_heartbeat += 1
            if done_since_heartbeat >= heartbeat_every:
                done_since_heartbeat = 0
                checkpoint()

    workers = max(1, min(len(by_name) * max_in_flight_per_backend, 16))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_one, spec) for spec in plan.trials]
        for future in futures:
            future.result()

    checkpoint()
    return read_manifest(store)


def _count_records(trials_dir: Path) -> tuple[int, int]:
    completed = failed = 0
    for path in trials_dir.glob("*.json"):
        record = TrialRecord.model_validate_json(path.read_text())
        if record.error is None:
            completed += 1
        else:
            failed += 1
    return completed, failed


def read_manifest(store: str | Path) -> RunManifest:
    path = Path(store) / "manifest.json"
    if not path.is_file():
        raise StoreError(f"no manifest found under {store}")
    return RunManifest.model_validate_json(path.read_text())


def read_backends_snapshot(store: str | Path) -> list[BackendDescriptor]:
    path = Path(store) / "backends.yaml"
    if not path.is_file():
        raise StoreError(f"no backend snapshot found under {store}")
    raw = yaml.safe_load(path.read_text())
    return [BackendDescriptor.model_validate(entry) for entry in raw]


def iter_trial_records(store: str | Path) -> Iterator[TrialRecord]:
    trials_dir = Path(store) / "trials"
    for path in sorted(trials_dir.glob("*.json")) if trials_dir.is_dir() else []:
        yield TrialRecord.model_validate_json(path.read_text())
