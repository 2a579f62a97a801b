import json

import numpy as np
import pytest

from mvgcn.cli import main
from mvgcn.data import make_synthetic, save_dataset


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    save_dataset(root, make_synthetic(m=24, num_views=2, classes=2, noise=0.2, seed=3))
    return root


@pytest.fixture(scope="module")
def config_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "run.json"
    path.write_text(
        json.dumps(
            {"k": 3, "hidden_dim": 8, "epochs": 4, "label_ratio": 0.25, "repeats": 2}
        )
    )
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestTrain:
    def test_writes_all_artifacts(self, data_dir, config_file, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("train", "--config", config_file, "--data", data_dir, "--out", out) == 0
        for name in (
            "metrics.json",
            "history_0.csv",
            "history_1.csv",
            "checkpoint.json",
            "fusion_weights.json",
        ):
            assert (out / name).exists()
        assert "mean accuracy" in capsys.readouterr().out

    def test_metrics_shape(self, data_dir, config_file, tmp_path):
        out = tmp_path / "run"
        run_cli("train", "--config", config_file, "--data", data_dir, "--out", out)
        metrics = json.loads((out / "metrics.json").read_text())
        assert len(metrics["accuracies"]) == 2
        assert 0.0 <= metrics["mean_accuracy"] <= 1.0
        assert metrics["config"]["epochs"] == 4
        assert metrics["dataset"]

    def test_history_rows_cover_every_iteration(self, data_dir, config_file, tmp_path):
        out = tmp_path / "run"
        run_cli("train", "--config", config_file, "--data", data_dir, "--out", out)
        lines = (out / "history_0.csv").read_text().splitlines()
        assert lines[0] == "iteration,loss,train_accuracy,test_accuracy"
        assert len(lines) == 1 + 4

    def test_same_seed_is_byte_identical(self, data_dir, config_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("train", "--config", config_file, "--data", data_dir, "--out", a)
        run_cli("train", "--config", config_file, "--data", data_dir, "--out", b)
        assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()
        assert (a / "history_0.csv").read_bytes() == (b / "history_0.csv").read_bytes()

    def test_env_var_overrides_seed(self, data_dir, config_file, tmp_path, monkeypatch):
        out = tmp_path / "run"
        monkeypatch.setenv("MGCN_SEED", "77")
        run_cli("train", "--config", config_file, "--data", data_dir, "--out", out)
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["config"]["seed"] == 77

    def test_garbled_env_seed_is_a_config_error(self, data_dir, config_file, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("MGCN_SEED", "many")
        code = run_cli("train", "--config", config_file, "--data", data_dir, "--out", tmp_path / "x")
        assert code == 2
        assert "MGCN_SEED" in capsys.readouterr().err

    def test_invalid_config_exits_2_naming_field(self, data_dir, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"epochs": 0}))
        code = run_cli("train", "--config", bad, "--data", data_dir, "--out", tmp_path / "x")
        assert code == 2
        assert "epochs" in capsys.readouterr().err

    def test_missing_data_exits_1(self, config_file, tmp_path, capsys):
        code = run_cli(
            "train", "--config", config_file, "--data", tmp_path / "nowhere", "--out", tmp_path / "x"
        )
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_fusion_weights_are_row_stochastic(self, data_dir, config_file, tmp_path):
        out = tmp_path / "run"
        run_cli("train", "--config", config_file, "--data", data_dir, "--out", out)
        fusion = json.loads((out / "fusion_weights.json").read_text())
        W = np.array(fusion["weights"])
        assert np.allclose(W.sum(axis=1), 1.0, atol=1e-12)
        assert np.isclose(sum(fusion["importance"]), 1.0, atol=1e-12)


class TestPrepare:
    def test_writes_graphs_and_manifest(self, data_dir, tmp_path):
        out = tmp_path / "graphs"
        assert run_cli("prepare", "--data", data_dir, "--k", 3, "--out", out) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["k"] == 3
        assert manifest["num_views"] == 2
        assert set(manifest["files"]) == {"view_0.csv", "view_1.csv"}

    def test_prepared_training_matches_direct(self, data_dir, config_file, tmp_path):
        graphs = tmp_path / "graphs"
        run_cli("prepare", "--data", data_dir, "--k", 3, "--out", graphs)
        a, b = tmp_path / "direct", tmp_path / "cached"
        run_cli("train", "--config", config_file, "--data", data_dir, "--out", a)
        run_cli(
            "train", "--config", config_file, "--data", data_dir, "--out", b,
            "--graphs", graphs,
        )
        assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()

    def test_tampered_graph_refused(self, data_dir, config_file, tmp_path, capsys):
        graphs = tmp_path / "graphs"
        run_cli("prepare", "--data", data_dir, "--k", 3, "--out", graphs)
        target = graphs / "view_0.csv"
        target.write_text(target.read_text().replace("0", "1", 1))
        code = run_cli(
            "train", "--config", config_file, "--data", data_dir, "--out", tmp_path / "x",
            "--graphs", graphs,
        )
        assert code == 1
        assert "checksum" in capsys.readouterr().err

    def test_k_mismatch_is_a_config_error(self, data_dir, config_file, tmp_path, capsys):
        graphs = tmp_path / "graphs"
        run_cli("prepare", "--data", data_dir, "--k", 4, "--out", graphs)
        code = run_cli(
            "train", "--config", config_file, "--data", data_dir, "--out", tmp_path / "x",
            "--graphs", graphs,
        )
        assert code == 2
        assert "k=4" in capsys.readouterr().err


class TestEval:
    def test_scores_a_checkpoint(self, data_dir, config_file, tmp_path, capsys):
        out = tmp_path / "run"
        run_cli("train", "--config", config_file, "--data", data_dir, "--out", out)
        capsys.readouterr()
        assert run_cli("eval", "--checkpoint", out / "checkpoint.json", "--data", data_dir) == 0
        report = json.loads(capsys.readouterr().out)
        assert 0.0 <= report["accuracy"] <= 1.0
        assert report["samples"] == 24

    def test_missing_checkpoint_exits_1(self, data_dir, tmp_path):
        assert run_cli("eval", "--checkpoint", tmp_path / "none.json", "--data", data_dir) == 1


class TestSweep:
    def test_grid_csv(self, data_dir, config_file, tmp_path):
        out = tmp_path / "sweep"
        code = run_cli(
            "sweep", "--param", "tau", "--values", "0.3,0.7",
            "--config", config_file, "--data", data_dir, "--out", out,
        )
        assert code == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "value,mean_accuracy,std_accuracy"
        assert len(lines) == 3
        assert lines[1].startswith("0.3,")

    def test_unknown_param_is_usage_error(self, data_dir, config_file, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli(
                "sweep", "--param", "momentum", "--values", "0.9",
                "--config", config_file, "--data", data_dir, "--out", tmp_path / "x",
            )
        assert err.value.code == 2

    def test_unparseable_value_exits_2(self, data_dir, config_file, tmp_path, capsys):
        code = run_cli(
            "sweep", "--param", "k", "--values", "2,huge",
            "--config", config_file, "--data", data_dir, "--out", tmp_path / "x",
        )
        assert code == 2
        assert "huge" in capsys.readouterr().err


class TestAblate:
    def test_four_row_table(self, data_dir, config_file, tmp_path):
        out = tmp_path / "ablation"
        assert run_cli("ablate", "--config", config_file, "--data", data_dir, "--out", out) == 0
        lines = (out / "ablation.csv").read_text().splitlines()
        assert lines[0] == "variant,glm,dns,mean_accuracy,std_accuracy"
        assert [ln.split(",")[0] for ln in lines[1:]] == [
            "full", "glm-only", "dns-only", "neither",
        ]
