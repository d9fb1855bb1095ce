from __future__ import annotations

import threading

import pytest

from intentbench.backends import build_client
from intentbench.errors import BackendError, PlanError, StoreError
from intentbench.prompts import PromptMode
from intentbench.runner import (
    TrialRecord,
    execute,
    iter_trial_records,
    plan_trials,
    read_manifest,
    trial_seed,
)

from conftest import make_mock_backend


class CountingFactory:
    """Wraps real clients and counts complete() calls per backend."""

    def __init__(self, references):
        self.references = references
        self.calls = 0
        self._lock = threading.Lock()

    def __call__(self, descriptor):
        inner = build_client(descriptor, references=self.references)
        factory = self

        class Counting:
            descriptor = inner.descriptor

            def complete(self, messages, seed=None):
                with factory._lock:
                    factory.calls += 1
                return inner.complete(messages, seed=seed)

        return Counting()


class FailingFactory:
    def __call__(self, descriptor):
        class Failing:
            def complete(self, messages, seed=None):
                raise BackendError("synthetic outage", status=503)

        return Failing()


@pytest.fixture()
def mock_backend():
    return make_mock_backend("mock-a", leaf_perturb_rate=0.2, p_omit_explanation=0.1, synthetic_latency_s=12.0)


class TestPlanTrials:
    def test_protocol_arithmetic(self, catalog, mock_backend):
        # 10 orders x 1 backend x 3 modes x 10 reps
        plan = plan_trials(catalog, [mock_backend], list(PromptMode), reps=10, master_seed=5)
        assert len(plan) == 300

    def test_reps_zero_rejected(self, catalog, mock_backend):
        with pytest.raises(PlanError, match="reps"):
            plan_trials(catalog, [mock_backend], list(PromptMode), reps=0, master_seed=5)

    def test_empty_dimensions_rejected(self, catalog, mock_backend):
        with pytest.raises(PlanError):
            plan_trials(catalog, [], list(PromptMode), reps=1, master_seed=5)
        with pytest.raises(PlanError):
            plan_trials(catalog, [mock_backend], [], reps=1, master_seed=5)

    def test_deterministic(self, catalog, mock_backend):
        first = plan_trials(catalog, [mock_backend], list(PromptMode), reps=3, master_seed=11)
        second = plan_trials(catalog, [mock_backend], list(PromptMode), reps=3, master_seed=11)
        assert first.model_dump() == second.model_dump()

    def test_tuples_unique(self, catalog, mock_backend, backend_registry):
        plan = plan_trials(catalog, backend_registry, list(PromptMode), reps=2, master_seed=0)
        keys = {(t.order_id, t.backend_name, t.mode, t.rep_index) for t in plan.trials}
        assert len(keys) == len(plan)

    def test_seed_is_stated_hash(self, catalog, mock_backend):
        plan = plan_trials(catalog, [mock_backend], [PromptMode.ZERO], reps=2, master_seed=9)
        for trial in plan.trials:
            assert trial.seed == trial_seed(9, trial.order_id, trial.backend_name, trial.mode, trial.rep_index)

    def test_master_seed_changes_trial_seeds(self, catalog, mock_backend):
        one = plan_trials(catalog, [mock_backend], [PromptMode.ZERO], reps=1, master_seed=1)
        two = plan_trials(catalog, [mock_backend], [PromptMode.ZERO], reps=1, master_seed=2)
        assert [t.seed for t in one.trials] != [t.seed for t in two.trials]


def _run(catalog, references, exemplars, backends, store, reps=1, **kwargs):
    plan = plan_trials(catalog, backends, list(PromptMode), reps=reps, master_seed=77)
    manifest = execute(
        plan,
        store,
        catalog=catalog,
        references=references,
        backends=backends,
        exemplars=exemplars,
        **kwargs,
    )
    return plan, manifest


class TestExecute:
    def test_mock_run_completes(self, catalog, references, exemplars, mock_backend, tmp_path):
        plan, manifest = _run(catalog, references, exemplars, [mock_backend], tmp_path / "run-a")
        assert manifest.planned == len(plan) == 30
        assert manifest.completed == 30
        assert manifest.failed == 0
        records = list(iter_trial_records(tmp_path / "run-a"))
        assert len(records) == 30
        assert all(r.error is None and r.response_text for r in records)

    def test_store_layout(self, catalog, references, exemplars, mock_backend, tmp_path):
        store = tmp_path / "run-b"
        plan, _ = _run(catalog, references, exemplars, [mock_backend], store)
        assert (store / "manifest.json").is_file()
        assert (store / "backends.yaml").is_file()
        expected = {f"{t.trial_id}.json" for t in plan.trials}
        assert {p.name for p in (store / "trials").glob("*.json")} == expected
        assert not list(store.glob("trials/*.tmp*"))

    def test_resume_skips_existing(self, catalog, references, exemplars, mock_backend, tmp_path):
        store = tmp_path / "run-c"
        factory = CountingFactory(references)
        plan, _ = _run(catalog, references, exemplars, [mock_backend], store, client_factory=factory)
        assert factory.calls == 30

        removed = sorted((store / "trials").glob("*.json"))[:5]
        for path in removed:
            path.unlink()
        factory.calls = 0
        _, manifest = _run(catalog, references, exemplars, [mock_backend], store, client_factory=factory)
        assert factory.calls == 5  # exactly the deleted trials are re-run
        assert manifest.completed == 30

    def test_idempotent_rerun_makes_no_calls(self, catalog, references, exemplars, mock_backend, tmp_path):
        store = tmp_path / "run-d"
        factory = CountingFactory(references)
        _run(catalog, references, exemplars, [mock_backend], store, client_factory=factory)
        before = {p.name: p.read_text() for p in (store / "trials").glob("*.json")}
        factory.calls = 0
        _, manifest = _run(catalog, references, exemplars, [mock_backend], store, client_factory=factory)
        assert factory.calls == 0
        after = {p.name: p.read_text() for p in (store / "trials").glob("*.json")}
        assert before == after  # append-only: no record rewritten
        assert manifest.completed == 30 and manifest.failed == 0

    def test_failing_backend_records_everything(self, catalog, references, exemplars, mock_backend, tmp_path):
        store = tmp_path / "run-e"
        _, manifest = _run(
            catalog, references, exemplars, [mock_backend], store, client_factory=FailingFactory()
        )
        assert manifest.completed == 0
        assert manifest.failed == manifest.planned == 30
        records = list(iter_trial_records(store))
        assert all("synthetic outage" in r.error for r in records)
        assert read_manifest(store).failed == 30

    def test_mock_run_reproducible_across_stores(self, catalog, references, exemplars, mock_backend, tmp_path):
        _run(catalog, references, exemplars, [mock_backend], tmp_path / "r1")
        _run(catalog, references, exemplars, [mock_backend], tmp_path / "r2")
        first = {r.trial_id: r.response_text for r in iter_trial_records(tmp_path / "r1")}
        second = {r.trial_id: r.response_text for r in iter_trial_records(tmp_path / "r2")}
        assert first == second

    def test_parallelism_does_not_change_results(self, catalog, references, exemplars, mock_backend, tmp_path):
        _run(catalog, references, exemplars, [mock_backend], tmp_path / "p1", max_in_flight_per_backend=1)
        _run(catalog, references, exemplars, [mock_backend], tmp_path / "p4", max_in_flight_per_backend=4)
        first = {r.trial_id: r.response_text for r in iter_trial_records(tmp_path / "p1")}
        second = {r.trial_id: r.response_text for r in iter_trial_records(tmp_path / "p4")}
        assert first == second

    def test_latency_taken_from_completion(self, catalog, references, exemplars, mock_backend, tmp_path):
        _run(catalog, references, exemplars, [mock_backend], tmp_path / "run-lat")
        for record in iter_trial_records(tmp_path / "run-lat"):
            assert record.latency_s == 12.0
            assert record.finished_at >= record.started_at

    def test_unknown_backend_in_plan(self, catalog, references, exemplars, mock_backend, tmp_path):
        plan = plan_trials(catalog, [mock_backend], [PromptMode.ZERO], reps=1, master_seed=1)
        other = make_mock_backend("mock-z")
        with pytest.raises(PlanError, match="unknown backend"):
            execute(plan, tmp_path / "x", catalog=catalog, references=references, backends=[other])

    def test_unwritable_store(self, catalog, references, exemplars, mock_backend, tmp_path):
        blocker = tmp_path / "blocked"
        blocker.write_text("a file, not a directory")
        plan = plan_trials(catalog, [mock_backend], [PromptMode.ZERO], reps=1, master_seed=1)
        with pytest.raises(StoreError):
            execute(
                plan,
                blocker / "store",
                catalog=catalog,
                references=references,
                backends=[mock_backend],
            )

    def test_trial_id_deterministic_function_of_tuple(self, catalog, mock_backend):
        plan = plan_trials(catalog, [mock_backend], [PromptMode.FEW], reps=2, master_seed=3)
        spec = plan.trials[0]
        assert spec.trial_id == f"{spec.order_id}.{spec.backend_name}.few.r00"


class TestHeartbeat:
    def test_manifest_checkpointed_during_run(self, catalog, references, exemplars, tmp_path):
        store = tmp_path / "hb"
        observed: list[int] = []

        class Probing:
            def __init__(self, inner):
                self.inner = inner
                self.calls = 0

            def complete(self, messages, seed=None):
                self.calls += 1
                if self.calls == 18:  # well past the first checkpoint
                    observed.append(read_manifest(store).completed)
                return self.inner.complete(messages, seed=seed)

        backend = make_mock_backend("hb")
        plan = plan_trials(catalog, [backend], [PromptMode.ZERO, PromptMode.ONE], reps=1, master_seed=4)
        execute(
            plan,
            store,
            catalog=catalog,
            references=references,
            backends=[backend],
            exemplars=exemplars,
            client_factory=lambda d: Probing(build_client(d, references=references)),
            max_in_flight_per_backend=1,
            heartbeat_every=10,
        )
        assert observed and observed[0] >= 10


def test_record_roundtrip(catalog, references, exemplars, tmp_path):
    backend = make_mock_backend("mock-rt")
    _, _ = _run(catalog, references, exemplars, [backend], tmp_path / "rt")
    path = next((tmp_path / "rt" / "trials").glob("*.json"))
    record = TrialRecord.model_validate_json(path.read_text())
    assert record.prompt.user
    assert record.usage.prompt_tokens > 0
