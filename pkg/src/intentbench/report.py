"""Aggregation of trial records into the benchmark's three tables.

For each (backend, prompt mode) cell: F and E are the fraction of trials
whose boolean passed, A/C/I are means of the per-trial values, and e_serv is
the weighted composite. Rendering mirrors the familiar table shapes: the
FEACI grid, the token-usage grid, and the BLEU/ROUGE grid.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from statistics import fmean

from pydantic import BaseModel, Field

from .catalog import Catalog
from .errors import AggregationError, UsageError
from .model import ReferenceSet
from .prompts import PromptMode
from .runner import TrialRecord, iter_trial_records, read_backends_snapshot
from .scoring import (
    AggregateScore,
    Thresholds,
    TrialScore,
    Weights,
    eval_score,
    load_annotations,
    score_trial,
)

CSV_HEADER = ["backend", "mode", "F", "E", "A", "C", "I", "e_serv", "n_trials"]
RENDER_FORMATS = ("table", "csv", "json")

SCORES_FILENAME = "scores.json"
ANNOTATIONS_FILENAME = "annotations.csv"


class ReportBundle(BaseModel):
    run_id: str
    cells: list[AggregateScore]
    weights: Weights = Field(default_factory=Weights)
    thresholds: Thresholds = Field(default_factory=Thresholds)
    gate_text_metrics_on_format: bool = True


def _mode_order(mode: PromptMode) -> int:
    return list(PromptMode).index(mode)


def aggregate(
    store: str | Path,
    catalog: Catalog,
    references: ReferenceSet,
    weights: Weights | None = None,
    thresholds: Thresholds | None = None,
    gate_text_metrics_on_format: bool = True,
) -> ReportBundle:
    """Score every persisted trial and fold the results into per-cell means.

    Trials that errored out still count (as format/explanation/accuracy
    zeros), so a flaky backend drags its own cell down rather than vanishing.
    """
    store = Path(store)
    weights = weights or Weights()
    thresholds = thresholds or Thresholds()

    records = list(iter_trial_records(store))
    if not records:
        raise AggregationError(f"no trial records under {store}")

    missing_refs = sorted({r.order_id for r in records} - set(references.pairs))
    if missing_refs:
        raise AggregationError(f"missing reference(s) for order(s): {', '.join(missing_refs)}")
    orders = {order.order_id: order for order in catalog.orders}
    missing_orders = sorted({r.order_id for r in records} - set(orders))
    if missing_orders:
        raise AggregationError(f"order(s) not in catalog: {', '.join(missing_orders)}")

    descriptors = {d.name: d for d in read_backends_snapshot(store)}
    missing_backends = sorted({r.backend_name for r in records} - set(descriptors))
    if missing_backends:
        raise AggregationError(f"backend(s) missing from snapshot: {', '.join(missing_backends)}")

    annotations = load_annotations(store / ANNOTATIONS_FILENAME)

    grouped: dict[tuple[str, PromptMode], list[tuple[TrialRecord, TrialScore]]] = {}
    for record in records:
        score = score_trial(
            response_text=record.response_text,
            usage=record.usage,
            latency_s=record.latency_s,
            order=orders[record.order_id],
            reference=references.pairs[record.order_id],
            backend=descriptors[record.backend_name],
            mode=record.mode,
            thresholds=thresholds,
            annotations=annotations,
            trial_id=record.trial_id,
            gate_text_metrics_on_format=gate_text_metrics_on_format,
        )
        grouped.setdefault((record.backend_name, record.mode), []).append((record, score))

    cells = []
    for (backend_name, mode), pairs in sorted(grouped.items(), key=lambda kv: (kv[0][0], _mode_order(kv[0][1]))):
        scores = [score for _, score in pairs]
        cell = AggregateScore(
            backend=backend_name,
            mode=mode,
            F=fmean(1.0 if s.format_ok else 0.0 for s in scores),
            E=fmean(1.0 if s.explanation_ok else 0.0 for s in scores),
            A=fmean(s.accuracy for s in scores),
            C=fmean(s.cost_norm for s in scores),
            I=fmean(s.latency_norm for s in scores),
            n_trials=len(scores),
            mean_tokens_in=fmean(r.usage.prompt_tokens for r, _ in pairs),
            mean_tokens_out=fmean(r.usage.completion_tokens for r, _ in pairs),
            bleu=fmean(s.bleu for s in scores),
            rouge1=fmean(s.rouge1 for s in scores),
            rouge2=fmean(s.rouge2 for s in scores),
            rougeL=fmean(s.rougeL for s in scores),
        )
        cell.e_serv = eval_score(cell, weights)
        cells.append(cell)

    run_id = store.name
    return ReportBundle(
        run_id=run_id,
        cells=cells,
        weights=weights,
        thresholds=thresholds,
        gate_text_metrics_on_format=gate_text_metrics_on_format,
    )


# --- rendering ----------------------------------------------------------------

def _grid(rows: list[list[str]]) -> str:
    widths = [max(len(row[col]) for row in rows) for col in range(len(rows[0]))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[col]) for col, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[col] for col in range(len(row))))
    return "\n".join(lines)


def _cell_map(bundle: ReportBundle) -> tuple[list[str], list[PromptMode], dict[tuple[str, PromptMode], AggregateScore]]:
    backends = sorted({cell.backend for cell in bundle.cells})
    modes = sorted({cell.mode for cell in bundle.cells}, key=_mode_order)
    return backends, modes, {(c.backend, c.mode): c for c in bundle.cells}


def _render_table(bundle: ReportBundle) -> str:
    backends, modes, cells = _cell_map(bundle)

    def fmt(value: float) -> str:
        return f"{value:.2f}"

    feaci_rows = [["Metric", "Prompt", *backends]]
    metric_fields = [
        ("Format", "F"),
        ("Explain", "E"),
        ("Accuracy", "A"),
        ("Normalized Cost", "C"),
        ("Normalized Inference", "I"),
        ("E_serv", "e_serv"),
    ]
    for label, field in metric_fields:
        for mode in modes:
            feaci_rows.append(
                [label, mode.value.upper()]
                + [
                    fmt(getattr(cells[(b, mode)], field)) if (b, mode) in cells else "-"
                    for b in backends
                ]
            )

    token_rows = [["Prompt", *backends]]
    for mode in modes:
        token_rows.append(
            [mode.value.upper()]
            + [
                (
                    f"{cells[(b, mode)].mean_tokens_in:.0f}/{cells[(b, mode)].mean_tokens_out:.0f}"
                    if (b, mode) in cells
                    else "-"
                )
                for b in backends
            ]
        )

    text_rows = [["Prompt", "Metric", *backends]]
    for mode in modes:
        for label, field in (("BLEU", "bleu"), ("ROUGE-1", "rouge1"), ("ROUGE-2", "rouge2"), ("ROUGE-L", "rougeL")):
            text_rows.append(
                [mode.value.upper(), label]
                + [
                    fmt(getattr(cells[(b, mode)], field)) if (b, mode) in cells else "-"
                    for b in backends
                ]
            )

    w = bundle.weights
    params = (
        f"run: {bundle.run_id}   weights: {w.w1},{w.w2},{w.w3},{w.w4},{w.w5}   "
        f"C0: {bundle.thresholds.c0_usd} USD   I0: {bundle.thresholds.i0_s} s   "
        f"text metrics gated on format: {'on' if bundle.gate_text_metrics_on_format else 'off'}"
    )
    return "\n".join(
        [
            "FEACI scores",
            _grid(feaci_rows),
            "",
            "Mean tokens in/out",
            _grid(token_rows),
            "",
            "Text metrics (BLEU/ROUGE)",
            _grid(text_rows),
            "",
            params,
            "",
        ]
    )


def _render_csv(bundle: ReportBundle) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for cell in bundle.cells:
        writer.writerow(
            [
                cell.backend,
                cell.mode.value,
                repr(cell.F),
                repr(cell.E),
                repr(cell.A),
                repr(cell.C),
                repr(cell.I),
                repr(cell.e_serv),
                cell.n_trials,
            ]
        )
    return buffer.getvalue()


def render(bundle: ReportBundle, format: str = "table") -> str:
    """Render the bundle as an aligned table, CSV (full precision), or JSON."""
    if format not in RENDER_FORMATS:
        raise UsageError(f"unknown report format {format!r}; expected one of {', '.join(RENDER_FORMATS)}")
    if format == "table":
        return _render_table(bundle)
    if format == "csv":
        return _render_csv(bundle)
    return bundle.model_dump_json(indent=2) + "\n"


def save_bundle(bundle: ReportBundle, store: str | Path) -> Path:
    path = Path(store) / SCORES_FILENAME
    path.write_text(bundle.model_dump_json(indent=2))
    return path


def load_bundle(store: str | Path) -> ReportBundle:
    path = Path(store) / SCORES_FILENAME
    if not path.is_file():
        raise UsageError(f"run {Path(store).name} has no {SCORES_FILENAME}; run `intent-bench score` first")
    return ReportBundle.model_validate_json(path.read_text())
