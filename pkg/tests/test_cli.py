import json

import pytest
from click.testing import CliRunner

from greyguide.cli import main, parse_config_file
from greyguide.hts import load_records
from greyguide.pipeline import load_guidance_cache


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def corpus(tmp_path_factory, runner):
    root = tmp_path_factory.mktemp("cli")
    spec = {
        "n": 30, "classes": 3, "p": [12, 14], "d_emb": 6,
        "motif_strength": 1.0, "noise_std": 0.5,
    }
    spec_path = root / "spec.json"
    spec_path.write_text(json.dumps(spec))
    data_path = root / "data.ndjson"
    result = runner.invoke(main, ["synth", "--spec", str(spec_path), "--seed", "7",
                                  "--out", str(data_path)])
    assert result.exit_code == 0, result.output
    return root, data_path


class TestConfigFile:
    def test_parse_and_defaults(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("lr = 0.001   # step size\nepochs = 5\nbatch_size = 8\n\nseed = 3\n")
        assert parse_config_file(path) == {"lr": 0.001, "epochs": 5, "batch_size": 8,
                                           "seed": 3}

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("learning_rate = 0.1\n")
        with pytest.raises(ValueError, match="unknown config key"):
            parse_config_file(path)


class TestSynthCommand:
    def test_output_loads(self, corpus):
        _, data_path = corpus
        records = load_records(data_path)
        assert len(records) == 30

    def test_reruns_are_byte_identical(self, corpus, runner, tmp_path):
        root, data_path = corpus
        again = tmp_path / "again.ndjson"
        result = runner.invoke(main, ["synth", "--spec", str(root / "spec.json"),
                                      "--seed", "7", "--out", str(again)])
        assert result.exit_code == 0
        assert again.read_bytes() == data_path.read_bytes()


class TestExtractGg:
    def test_cache_file(self, corpus, runner, tmp_path):
        _, data_path = corpus
        cache = tmp_path / "gg.ndjson"
        result = runner.invoke(main, ["extract-gg", "--input", str(data_path),
                                      "--order", "3", "--out", str(cache)])
        assert result.exit_code == 0, result.output
        loaded = load_guidance_cache(cache)
        assert len(loaded) == 30
        assert all(len(v) == 9 for v, _ in loaded.values())

    def test_gm_model_zeroes_fourier_slots(self, corpus, runner, tmp_path):
        _, data_path = corpus
        cache = tmp_path / "gg_gm.ndjson"
        result = runner.invoke(main, ["extract-gg", "--input", str(data_path),
                                      "--order", "3", "--out", str(cache),
                                      "--model", "gm"])
        assert result.exit_code == 0
        for values, _ in load_guidance_cache(cache).values():
            assert list(values[3:]) == [0.0] * 6


class TestTrainEvalSplit:
    def test_full_flow(self, corpus, runner, tmp_path):
        root, data_path = corpus
        cfg = tmp_path / "run.cfg"
        cfg.write_text("lr = 0.005\nepochs = 2\nbatch_size = 8\nd_model = 4\n"
                       "filters_per_kernel = 1\nseed = 1\nrepeats = 1\n")
        prefix = tmp_path / "part"
        result = runner.invoke(main, ["split", "--input", str(data_path),
                                      "--seed", "5", "--out-prefix", str(prefix)])
        assert result.exit_code == 0, result.output
        train_file = f"{prefix}.train.ndjson"
        test_file = f"{prefix}.test.ndjson"
        assert len(load_records(train_file)) == 24
        assert len(load_records(test_file)) == 3
        assert len(load_records(f"{prefix}.val.ndjson")) == 3

        ckpt = tmp_path / "model.json"
        result = runner.invoke(main, ["train", "--input", train_file,
                                      "--theme", "severity", "--variant", "dlgm4",
                                      "--config", str(cfg), "--out", str(ckpt)])
        assert result.exit_code == 0, result.output

        report = tmp_path / "report.json"
        result = runner.invoke(main, ["eval", "--ckpt", str(ckpt),
                                      "--input", test_file, "--theme", "severity",
                                      "--report", str(report)])
        assert result.exit_code == 0, result.output
        data = json.loads(report.read_text())
        assert data["variant"] == "dlgm4"
        assert "macro" in data["metrics"]

    def test_split_is_deterministic(self, corpus, runner, tmp_path):
        _, data_path = corpus
        p1, p2 = tmp_path / "s1", tmp_path / "s2"
        for prefix in (p1, p2):
            result = runner.invoke(main, ["split", "--input", str(data_path),
                                          "--seed", "11", "--out-prefix", str(prefix)])
            assert result.exit_code == 0
        for name in ("train", "test", "val"):
            a = open(f"{p1}.{name}.ndjson", "rb").read()
            b = open(f"{p2}.{name}.ndjson", "rb").read()
            assert a == b


class TestSweepCommand:
    def test_report_rows(self, runner, tmp_path):
        spec = {"n": 20, "classes": 2, "p": [26, 28], "d_emb": 4}
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        data_path = tmp_path / "sweep.ndjson"
        result = runner.invoke(main, ["synth", "--spec", str(spec_path), "--seed", "3",
                                      "--out", str(data_path)])
        assert result.exit_code == 0
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epochs = 1\nrepeats = 1\nd_model = 4\nfilters_per_kernel = 1\n")
        report = tmp_path / "sweep.json"
        result = runner.invoke(main, ["sweep-n", "--input", str(data_path),
                                      "--theme", "severity", "--min", "1", "--max", "3",
                                      "--config", str(cfg), "--report", str(report)])
        assert result.exit_code == 0, result.output
        rows = json.loads(report.read_text())["rows"]
        assert [r["order"] for r in rows] == [1, 2, 3]
        assert [r["guidance_width"] for r in rows] == [5, 7, 9]
