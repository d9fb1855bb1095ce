"""intent-bench: thin HTTP client over the service.

Every subcommand talks to the FastAPI app. Without --server (or
INTENT_BENCH_URL) the app is mounted in-process over ASGI, so the tool works
stand-alone; pointing --server at a running `intent-bench serve` instance
drives a shared deployment instead.

Exit codes: 0 success, 1 usage, 2 validation, 3 backend failure.
"""

from __future__ import annotations

import click
import httpx

from .errors import IntentBenchError
from .scoring import Weights

SERVER_ENVVAR = "INTENT_BENCH_URL"
_EXIT_BY_STATUS = {400: 1, 422: 2, 502: 3, 504: 3}


def _open_client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        # starlette's TestClient import warns about its httpx pin; harmless here
        warnings.filterwarnings("ignore", message="Using `httpx` with `starlette.testclient`")
        from fastapi.testclient import TestClient  # in-process ASGI transport

    from .service.app import create_app

    return TestClient(create_app())


def _check(response: httpx.Response) -> dict:
    if response.status_code == 200:
        return response.json()
    try:
        payload = response.json()
        detail = payload.get("detail", response.text)
        code = payload.get("exit_code")
    except (ValueError, AttributeError):
        detail, code = response.text, None
    if isinstance(detail, list):  # FastAPI request-validation errors
        detail = "; ".join(e.get("msg", str(e)) for e in detail)
        code = 1
    click.echo(f"error: {detail}", err=True)
    raise SystemExit(code if code is not None else _EXIT_BY_STATUS.get(response.status_code, 1))


server_option = click.option(
    "--server",
    envvar=SERVER_ENVVAR,
    default=None,
    help="Base URL of a running intent-bench service (default: in-process).",
)


@click.group()
@click.option("--verbose", is_flag=True, help="Log per-trial progress and retries to stderr.")
def cli(verbose: bool) -> None:
    """Benchmark LLM intent translation (CFS -> RFS) and score it with FEACI."""
    if verbose:
        import logging

        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@cli.group()
def builtin() -> None:
    """Print paths of the assets shipped with the package."""


@builtin.command("catalog")
def builtin_catalog() -> None:
    """Golden catalog directory (10 orders with expert references)."""
    from .catalog import builtin_catalog_dir

    click.echo(str(builtin_catalog_dir()))


@builtin.command("backends")
def builtin_backends() -> None:
    """All-mock backend registry mirroring the benchmark's model lineup."""
    from .catalog import builtin_backends_path

    click.echo(str(builtin_backends_path()))


@cli.group()
def catalog() -> None:
    """Catalog inspection commands."""


@catalog.command("validate")
@click.argument("directory", type=click.Path())
@server_option
def catalog_validate(directory: str, server: str | None) -> None:
    """Validate a catalog directory (products, orders, references)."""
    with _open_client(server) as client:
        data = _check(client.post("/catalog/validate", json={"path": directory}))
    click.echo(
        f"catalog OK: {data['products']} products, {data['orders']} orders, "
        f"{data['references']} references (intents: {', '.join(data['intent_vocabulary'])})"
    )


@cli.command()
@click.option("--catalog", "catalog_dir", required=True, type=click.Path(), help="Catalog directory.")
@click.option("--backends", "backends_path", required=True, type=click.Path(), help="Backend registry YAML.")
@click.option("--modes", default="zero,one,few", show_default=True, help="Comma-separated prompt modes.")
@click.option("--reps", default=10, show_default=True, type=int, help="Repetitions per (order, backend, mode).")
@click.option("--seed", default=0, show_default=True, type=int, help="Master seed for per-trial seeds.")
@click.option("--out", default="runs", show_default=True, type=click.Path(), help="Parent directory for run stores.")
@click.option("--run-id", default=None, help="Run id (default: derived from the inputs, so re-runs resume).")
@click.option("--max-in-flight", default=2, show_default=True, type=int, help="In-flight requests per backend.")
@server_option
def run(
    catalog_dir: str,
    backends_path: str,
    modes: str,
    reps: int,
    seed: int,
    out: str,
    run_id: str | None,
    max_in_flight: int,
    server: str | None,
) -> None:
    """Execute the benchmark matrix and persist every trial."""
    body = {
        "catalog": catalog_dir,
        "backends": backends_path,
        "modes": [m for m in modes.split(",") if m.strip()],
        "reps": reps,
        "seed": seed,
        "out": out,
        "run_id": run_id,
        "max_in_flight_per_backend": max_in_flight,
    }
    with _open_client(server) as client:
        data = _check(client.post("/runs", json=body))
    manifest = data["manifest"]
    click.echo(
        f"run {manifest['run_id']}: {manifest['completed']}/{manifest['planned']} completed, "
        f"{manifest['failed']} failed -> {data['store']}"
    )
    if manifest["failed"] and not manifest["completed"]:
        raise SystemExit(3)


@cli.command()
@click.option("--run", "run_dir", required=True, type=click.Path(), help="Run store directory.")
@click.option("--refs", required=True, type=click.Path(), help="Catalog directory holding orders/ and references/.")
@click.option("--weights", default="0.2,0.2,0.2,0.2,0.2", show_default=True, help="Five comma-separated weights.")
@click.option("--c0", default=0.1, show_default=True, type=float, help="Cost normalization threshold (USD).")
@click.option("--i0", default=60.0, show_default=True, type=float, help="Inference normalization threshold (s).")
@click.option(
    "--gate-text-metrics-on-format/--no-gate-text-metrics-on-format",
    default=True,
    show_default=True,
    help="Zero BLEU/ROUGE for trials that fail the format gate.",
)
@server_option
def score(
    run_dir: str,
    refs: str,
    weights: str,
    c0: float,
    i0: float,
    gate_text_metrics_on_format: bool,
    server: str | None,
) -> None:
    """Score a run with FEACI + BLEU/ROUGE and persist scores.json."""
    try:
        parsed = Weights.from_csv(weights)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    body = {
        "run": run_dir,
        "refs": refs,
        "weights": [parsed.w1, parsed.w2, parsed.w3, parsed.w4, parsed.w5],
        "c0": c0,
        "i0": i0,
        "gate_text_metrics_on_format": gate_text_metrics_on_format,
    }
    with _open_client(server) as client:
        data = _check(client.post("/score", json=body))
    click.echo(f"scored {data['trials']} trials into {data['cells']} cells -> {data['scores_path']}")


@cli.command()
@click.option("--run", "run_dir", required=True, type=click.Path(), help="Run store directory.")
@click.option("--format", "format_", default="table", show_default=True, type=click.Choice(["table", "csv", "json"]))
@server_option
def report(run_dir: str, format_: str, server: str | None) -> None:
    """Render the FEACI / token / text-metric tables of a scored run."""
    with _open_client(server) as client:
        response = client.get("/report", params={"run": run_dir, "format": format_})
        if response.status_code != 200:
            _check(response)
        click.echo(response.text, nl=False)


@cli.command()
@click.option("--run", "run_dir", required=True, type=click.Path(), help="Run store directory.")
@click.option("--trial", required=True, help="Trial id to annotate.")
@click.option("--explanation", required=True, type=click.Choice(["0", "1"]), help="Human verdict on E.")
@click.option("--annotator", default="", help="Annotator name for the audit trail.")
@click.option("--note", default="", help="Free-form note.")
@server_option
def annotate(run_dir: str, trial: str, explanation: str, annotator: str, note: str, server: str | None) -> None:
    """Record a human explanation verdict (overrides the rubric on re-score)."""
    body = {
        "run": run_dir,
        "trial": trial,
        "explanation": int(explanation),
        "annotator": annotator,
        "note": note,
    }
    with _open_client(server) as client:
        data = _check(client.post("/annotations", json=body))
    click.echo(
        f"annotated {data['trial']}: explanation_ok={int(data['explanation_ok'])} "
        f"-> {data['annotations_path']} (re-run `intent-bench score` to apply)"
    )


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8420, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Start the intent-bench service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except IntentBenchError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
