from __future__ import annotations

import pytest

from intentbench.catalog import builtin_backends_path, builtin_catalog_dir
from intentbench.cli import main

CATALOG = str(builtin_catalog_dir())
BACKENDS = str(builtin_backends_path())


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory) -> str:
    out = tmp_path_factory.mktemp("cli-runs")
    code = main(
        [
            "run",
            "--catalog", CATALOG,
            "--backends", BACKENDS,
            "--modes", "zero,few",
            "--reps", "1",
            "--seed", "11",
            "--out", str(out),
            "--run-id", "cli-test-run",
        ]
    )
    assert code == 0
    return str(out / "cli-test-run")


class TestCatalogCommand:
    def test_validate_ok(self, capsys):
        assert main(["catalog", "validate", CATALOG]) == 0
        out = capsys.readouterr().out
        assert "10 products, 10 orders, 10 references" in out

    def test_validate_missing_dir_exits_2(self, tmp_path, capsys):
        assert main(["catalog", "validate", str(tmp_path / "ghost")]) == 2
        assert "error:" in capsys.readouterr().err

    def test_validate_broken_catalog_exits_2(self, catalog_copy, capsys):
        (catalog_copy / "references" / "ord-001.yaml").unlink()
        assert main(["catalog", "validate", str(catalog_copy)]) == 2


class TestRunCommand:
    def test_run_and_outputs(self, run_dir, capsys):
        from intentbench.runner import read_manifest

        manifest = read_manifest(run_dir)
        assert manifest.planned == manifest.completed == 120

    def test_unknown_mode_exits_1(self, tmp_path, capsys):
        code = main(
            [
                "run",
                "--catalog", CATALOG,
                "--backends", BACKENDS,
                "--modes", "zero,many",
                "--reps", "1",
                "--out", str(tmp_path),
            ]
        )
        assert code == 1

    def test_missing_required_option_exits_1(self, capsys):
        assert main(["run", "--catalog", CATALOG]) == 1

    def test_all_failures_exit_3(self, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv("IB_NO_SUCH_KEY", raising=False)
        registry = tmp_path / "backends.yaml"
        registry.write_text(
            "backends:\n"
            "  - name: dead\n"
            "    kind: remote\n"
            "    model_id: m\n"
            "    endpoint_url: https://unreachable.invalid/v1\n"
            "    api_key_env: IB_NO_SUCH_KEY\n"
        )
        code = main(
            [
                "run",
                "--catalog", CATALOG,
                "--backends", str(registry),
                "--modes", "zero",
                "--reps", "1",
                "--out", str(tmp_path / "runs"),
            ]
        )
        assert code == 3


class TestScoreAndReport:
    def test_score_writes_bundle(self, run_dir, capsys):
        assert main(["score", "--run", run_dir, "--refs", CATALOG]) == 0
        out = capsys.readouterr().out
        assert "scores.json" in out

    def test_report_table(self, run_dir, capsys):
        main(["score", "--run", run_dir, "--refs", CATALOG])
        capsys.readouterr()
        assert main(["report", "--run", run_dir, "--format", "table"]) == 0
        out = capsys.readouterr().out
        assert "FEACI scores" in out and "E_serv" in out

    def test_report_csv_header(self, run_dir, capsys):
        main(["score", "--run", run_dir, "--refs", CATALOG])
        capsys.readouterr()
        assert main(["report", "--run", run_dir, "--format", "csv"]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "backend,mode,F,E,A,C,I,e_serv,n_trials"

    def test_report_before_score_exits_1(self, tmp_path, capsys):
        (tmp_path / "r" / "trials").mkdir(parents=True)
        assert main(["report", "--run", str(tmp_path / "r")]) == 1

    def test_bad_weights_exit_1(self, run_dir, capsys):
        assert main(["score", "--run", run_dir, "--refs", CATALOG, "--weights", "0.2,0.2"]) == 1

    def test_custom_weights_and_thresholds(self, run_dir, capsys):
        code = main(
            [
                "score",
                "--run", run_dir,
                "--refs", CATALOG,
                "--weights", "0.4,0.1,0.3,0.1,0.1",
                "--c0", "0.2",
                "--i0", "120",
                "--no-gate-text-metrics-on-format",
            ]
        )
        assert code == 0


class TestAnnotateCommand:
    def test_annotate_and_rescore(self, run_dir, capsys):
        trial = "ord-002.gpt-4.zero.r00"
        assert main(["annotate", "--run", run_dir, "--trial", trial, "--explanation", "1"]) == 0
        out = capsys.readouterr().out
        assert "explanation_ok=1" in out
        assert main(["score", "--run", run_dir, "--refs", CATALOG]) == 0

    def test_unknown_trial_exits_2(self, run_dir, capsys):
        assert main(["annotate", "--run", run_dir, "--trial", "ghost", "--explanation", "0"]) == 2

    def test_bad_explanation_value_exits_1(self, run_dir):
        assert main(["annotate", "--run", run_dir, "--trial", "x", "--explanation", "2"]) == 1


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0
    assert "intent" in capsys.readouterr().out.lower()
