"""Command-line surface: exit codes, artifact schemas, reproducibility."""

import json

import numpy as np
import pytest

from koopbound import cli, weightio
from koopbound.network import GaussianHead
from koopbound.trainer import build_network


@pytest.fixture
def weightfile(tmp_path):
    net = build_network([3, 3, 6], GaussianHead(), seed=2)
    path = tmp_path / "net.json"
    weightio.save_weights(net, path)
    return str(path)


def run_cli(*argv):
    return cli.main(list(argv))


class TestUsageErrors:
    def test_no_command(self, capsys):
        assert run_cli() == cli.EXIT_USAGE
        capsys.readouterr()

    def test_help_exits_zero(self, capsys):
        assert run_cli("--help") == 0
        capsys.readouterr()

    def test_missing_weight_file(self, tmp_path, capsys):
        code = run_cli("bound", str(tmp_path / "nope.json"), "--n", "100")
        assert code == cli.EXIT_USAGE
        assert "error:" in capsys.readouterr().err

    def test_corrupt_weight_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run_cli("inspect", str(bad)) == cli.EXIT_USAGE
        capsys.readouterr()

    def test_unknown_variant(self, weightfile, capsys):
        code = run_cli("bound", weightfile, "--n", "100", "--variants", "spectral")
        assert code == cli.EXIT_USAGE
        assert "unknown variant" in capsys.readouterr().err

    def test_bad_sigma_norms(self, weightfile, capsys):
        code = run_cli("bound", weightfile, "--n", "100", "--sigma-norms", "1.0,x")
        assert code == cli.EXIT_USAGE
        capsys.readouterr()


class TestBoundCommand:
    def test_json_report_totals(self, weightfile, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = run_cli("bound", weightfile, "--n", "100", "--output", str(out))
        assert code == 0
        doc = json.loads(out.read_text())
        assert "graph" in doc["totals"]
        assert doc["totals"]["graph"] > 0
        capsys.readouterr()

    def test_variant_filter(self, weightfile, tmp_path, capsys):
        out = tmp_path / "report.json"
        run_cli(
            "bound", weightfile, "--n", "100",
            "--variants", "graph,neyshabur15", "--output", str(out),
        )
        doc = json.loads(out.read_text())
        present = set(doc["totals"]) | set(doc.get("inapplicable", {}))
        assert present == {"graph", "neyshabur15"}
        capsys.readouterr()

    def test_csv_output(self, weightfile, tmp_path, capsys):
        out = tmp_path / "report.csv"
        code = run_cli("bound", weightfile, "--n", "100", "--out", "csv",
                       "--output", str(out))
        assert code == 0
        header = out.read_text().splitlines()[0]
        assert header.startswith("layer,variant,factor")
        capsys.readouterr()

    def test_byte_identical_reruns(self, weightfile, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run_cli("bound", weightfile, "--n", "100", "--output", str(a))
        run_cli("bound", weightfile, "--n", "100", "--output", str(b))
        assert a.read_bytes() == b.read_bytes()
        capsys.readouterr()


class TestInspectCommand:
    def test_table_and_csv(self, weightfile, tmp_path, capsys):
        out = tmp_path / "table.csv"
        assert run_cli("inspect", weightfile, "--csv", str(out)) == 0
        printed = capsys.readouterr().out
        assert "sigma_max" in printed
        lines = out.read_text().splitlines()
        assert lines[0] == "layer,sigma_max,sigma_min,cond,stable_rank,koopman_factor"
        assert len(lines) == 3  # header + two layers

    def test_rank_deficient_note(self, tmp_path, capsys):
        net = build_network([3, 3, 6], GaussianHead(), seed=2)
        net.layers[0].weight = np.zeros((3, 3))
        path = tmp_path / "net.json"
        weightio.save_weights(net, path)
        assert run_cli("inspect", str(path)) == 0
        assert "rank deficient" in capsys.readouterr().out


class TestTrainCommand:
    def test_artifacts_and_byte_identity(self, tmp_path, capsys):
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        for d in (d1, d2):
            code = run_cli(
                "train", "--task", "synthetic", "--seed", "0",
                "--epochs", "3", "--outdir", str(d),
            )
            assert code == 0
        for name in ("metrics.csv", "weights.json", "spectrum.csv",
                     "bound_vs_generror.svg"):
            assert (d1 / name).exists()
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
        capsys.readouterr()

    def test_seed_sweep_writes_correlation_summary(self, tmp_path, capsys):
        code = run_cli(
            "train", "--task", "synthetic", "--seeds", "0,1",
            "--epochs", "3", "--outdir", str(tmp_path / "sweep"),
        )
        assert code == 0
        summary = (tmp_path / "sweep" / "correlation_summary.csv").read_text()
        lines = summary.splitlines()
        assert lines[0] == "seed,pearson_bound_generror"
        assert len(lines) == 3
        assert (tmp_path / "sweep" / "seed0" / "metrics.csv").exists()
        capsys.readouterr()

    def test_config_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epochs": 2, "learning_rate": 0.01}))
        code = run_cli(
            "train", "--task", "synthetic", "--config", str(cfg),
            "--outdir", str(tmp_path / "run"),
        )
        assert code == 0
        metrics = (tmp_path / "run" / "metrics.csv").read_text().splitlines()
        assert len(metrics) == 3  # header + 2 epochs
        capsys.readouterr()

    def test_unknown_config_field(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"momentum": 0.9}))
        code = run_cli(
            "train", "--task", "synthetic", "--config", str(cfg),
            "--outdir", str(tmp_path / "run"),
        )
        assert code == cli.EXIT_USAGE
        capsys.readouterr()

    def test_divergence_exit_code_with_artifacts(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(
            {"learning_rate": 1e160, "epochs": 5, "regularizer": "none"}
        ))
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            code = run_cli(
                "train", "--task", "synthetic", "--config", str(cfg),
                "--outdir", str(tmp_path / "run"),
            )
        assert code == cli.EXIT_DIVERGED
        assert (tmp_path / "run" / "weights.json").exists()
        capsys.readouterr()

    def test_no_regularizer_flag_changes_result(self, tmp_path, capsys):
        base, noreg = tmp_path / "base", tmp_path / "noreg"
        run_cli("train", "--task", "synthetic", "--epochs", "3",
                "--outdir", str(base))
        run_cli("train", "--task", "synthetic", "--epochs", "3",
                "--no-regularizer", "--outdir", str(noreg))
        assert (base / "weights.json").read_bytes() != (noreg / "weights.json").read_bytes()
        capsys.readouterr()


class TestVerifyCommand:
    def test_single_suite_json_verdict(self, tmp_path, capsys):
        out = tmp_path / "verdict.json"
        code = run_cli("verify", "--suite", "kernels", "--json", str(out))
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["passed"] is True
        capsys.readouterr()

    def test_unknown_suite_is_usage_error(self, capsys):
        assert run_cli("verify", "--suite", "spectral") == cli.EXIT_USAGE
        capsys.readouterr()


class TestSvgArtifact:
    def test_svg_is_timestamp_free_scatter(self, tmp_path, capsys):
        run_cli("train", "--task", "synthetic", "--epochs", "3",
                "--outdir", str(tmp_path / "run"))
        svg = (tmp_path / "run" / "bound_vs_generror.svg").read_text()
        assert svg.startswith("<svg") or svg.startswith("<?xml")
        assert "circle" in svg
        assert "date" not in svg.lower() and "time" not in svg.lower()
        capsys.readouterr()
