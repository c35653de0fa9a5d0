import json

import pytest

from trainer import TrainSpec, train_and_predict
from trainer.cli import main
from trainer.finetune import DEFAULTS, SchemaMismatch, read_corpus_csv
from conftest import make_rows, write_corpus


class TestDefaults:
    def test_spec_defaults_are_the_published_settings(self):
        assert DEFAULTS.model_id == "sagorsarker/bangla-bert-base"
        assert DEFAULTS.epochs == 3
        assert DEFAULTS.learning_rate == 2e-5
        assert DEFAULTS.batch_size == 8
        assert DEFAULTS.max_sequence_length == 512


class TestCorpusCsv:
    def test_reads_corpus_dialect(self, tmp_path):
        path = write_corpus(tmp_path / "c.csv", make_rows(10))
        rows = read_corpus_csv(path)
        assert len(rows) == 10
        assert {r["label"] for r in rows} == {0, 1}

    def test_missing_column_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("id,content,label\nx,text,1\n")
        with pytest.raises(SchemaMismatch, match="headline"):
            read_corpus_csv(p)

    def test_invalid_label_names_row(self, tmp_path):
        rows = make_rows(4)
        rows[2]["label"] = "maybe"
        path = write_corpus(tmp_path / "c.csv", rows)
        with pytest.raises(SchemaMismatch, match="row 4"):
            read_corpus_csv(path)


@pytest.fixture(scope="session")
def smoke(tiny_model_dir, tmp_path_factory):
    """100-article subset, one epoch, tiny offline encoder."""
    tmp = tmp_path_factory.mktemp("smoke")
    rows = make_rows(100)
    train_csv = write_corpus(tmp / "train.csv", rows[:70])
    test_csv = write_corpus(tmp / "test.csv", rows[70:])
    out_csv = tmp / "predictions.csv"
    spec = TrainSpec(model_id=str(tiny_model_dir), epochs=1,
                     max_sequence_length=64, seed=7)
    train_and_predict(train_csv, test_csv, out_csv, spec)
    return tmp, out_csv


class TestSmokeRun:

    def test_emits_thirty_prediction_rows(self, smoke):
        _tmp, out_csv = smoke
        lines = out_csv.read_text().strip().splitlines()
        assert lines[0] == "id,true_label,pred_label,score"
        assert len(lines) - 1 == 30

    def test_passes_evaluation_coverage_check(self, smoke):
        # the evaluation side of the pipeline must accept this file unmodified
        from banaug.metrics import confusion, read_predictions_csv

        tmp, out_csv = smoke
        preds = read_predictions_csv(out_csv)
        expected_ids = {f"d{i}" for i in range(70, 100)}
        cm = confusion(preds, expected_ids=expected_ids)
        assert cm.total == 30
        assert all(p.score is not None and 0.0 <= p.score <= 1.0 for p in preds)

    def test_sidecar_records_spec_defaults_and_versions(self, smoke):
        _tmp, out_csv = smoke
        sidecar = json.loads((out_csv.parent / "predictions.csv.meta.json").read_text())
        assert sidecar["defaults"]["epochs"] == 3
        assert sidecar["defaults"]["learning_rate"] == 2e-5
        assert sidecar["defaults"]["batch_size"] == 8
        assert sidecar["defaults"]["model_id"] == "sagorsarker/bangla-bert-base"
        assert sidecar["spec"]["epochs"] == 1
        assert sidecar["spec"]["seed"] == 7
        assert "torch" in sidecar["library_versions"]
        assert "transformers" in sidecar["library_versions"]
        assert "determinism" in sidecar["determinism_note"]


class TestCli:
    def test_full_cli_run(self, tiny_model_dir, tmp_path, capsys):
        rows = make_rows(40)
        train_csv = write_corpus(tmp_path / "train.csv", rows[:28])
        test_csv = write_corpus(tmp_path / "test.csv", rows[28:])
        out_csv = tmp_path / "preds.csv"
        code = main([
            "--train", str(train_csv), "--test", str(test_csv),
            "--out", str(out_csv), "--model", str(tiny_model_dir),
            "--epochs", "1", "--seq-len", "64", "--batch", "8", "--seed", "1",
        ])
        assert code == 0
        assert out_csv.exists()
        assert "predictions written" in capsys.readouterr().out

    def test_invalid_label_exits_2_with_row(self, tiny_model_dir, tmp_path, capsys):
        rows = make_rows(10)
        rows[5]["label"] = "7"
        train_csv = write_corpus(tmp_path / "train.csv", rows)
        test_csv = write_corpus(tmp_path / "test.csv", make_rows(4, start=50))
        code = main([
            "--train", str(train_csv), "--test", str(test_csv),
            "--out", str(tmp_path / "p.csv"), "--model", str(tiny_model_dir),
        ])
        assert code == 2
        assert "row 7" in capsys.readouterr().err

    def test_missing_train_file_exits_2(self, tiny_model_dir, tmp_path):
        code = main([
            "--train", str(tmp_path / "nope.csv"),
            "--test", str(tmp_path / "nope2.csv"),
            "--out", str(tmp_path / "p.csv"), "--model", str(tiny_model_dir),
        ])
        assert code == 2
