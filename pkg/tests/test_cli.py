import json

import numpy as np
import pytest

from rankcal.cli import main
from rankcal.model_io import load_model, save_model
from rankcal.calibration import CalibratedModel, CalibrationMap
from rankcal.learners import LinearModel, LossKind


@pytest.fixture(scope="module")
def csv_data(tmp_path_factory):
    """A 300-row linearly rankable problem with truth and donation columns."""
    root = tmp_path_factory.mktemp("clidata")
    rng = np.random.default_rng(17)

    def write(path, n, seed):
        r = np.random.default_rng(seed)
        x = r.standard_normal((n, 3))
        eta = np.where(x @ np.array([1.2, -0.8, 0.3]) >= 0, 0.85, 0.1)
        y = (r.random(n) < eta).astype(int)
        don = np.round(np.maximum(r.normal(2, 3, n), 0) * y, 2)
        with open(path, "w") as fh:
            fh.write("f1,f2,f3,y,eta,don\n")
            for i in range(n):
                fh.write(
                    f"{float(x[i,0])!r},{float(x[i,1])!r},{float(x[i,2])!r},"
                    f"{int(y[i])},{float(eta[i])!r},{float(don[i])!r}\n"
                )

    train_path = root / "train.csv"
    test_path = root / "test.csv"
    write(train_path, 300, 101)
    write(test_path, 120, 202)
    return root, str(train_path), str(test_path)


def _data_flags(path):
    return ["--data", path, "--label", "y", "--features", "f1,f2,f3"]


class TestTrain:
    def test_writes_deterministic_model(self, csv_data, tmp_path):
        root, train_path, _ = csv_data
        out1, out2 = tmp_path / "a.model", tmp_path / "b.model"
        argv = ["train", *_data_flags(train_path), "--method", "rank",
                "--seed", "7", "--steps", "800"]
        assert main(argv + ["--out", str(out1)]) == 0
        assert main(argv + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_grid_metadata_records_choice(self, csv_data, tmp_path):
        _, train_path, _ = csv_data
        out = tmp_path / "g.model"
        argv = ["train", *_data_flags(train_path), "--method", "logreg",
                "--out", str(out), "--seed", "1", "--steps", "500",
                "--grid-lambda", "0.001,0.01,0.1", "--select-by", "auc"]
        assert main(argv) == 0
        meta = json.loads(out.read_text())["metadata"]
        assert meta["lambda"] in (0.001, 0.01, 0.1)
        assert meta["selected_by"] == "auc"

    def test_missing_label_column_errors(self, csv_data, tmp_path, capsys):
        _, train_path, _ = csv_data
        argv = ["train", "--data", train_path, "--label", "nope",
                "--method", "logreg", "--out", str(tmp_path / "x.model")]
        assert main(argv) == 1
        assert "label column" in capsys.readouterr().err

    def test_standardize_fold(self, csv_data, tmp_path):
        _, train_path, _ = csv_data
        out = tmp_path / "s.model"
        argv = ["train", *_data_flags(train_path), "--method", "logreg",
                "--out", str(out), "--seed", "2", "--steps", "400",
                "--standardize", "full"]
        assert main(argv) == 0
        model, meta = load_model(out)
        assert meta["standardize"] == "full"
        assert model.dimension == 3


@pytest.fixture(scope="module")
def rank_model(csv_data, tmp_path_factory):
    _, train_path, _ = csv_data
    out = tmp_path_factory.mktemp("models") / "rank.model"
    main(["train", *_data_flags(train_path), "--method", "rank",
          "--out", str(out), "--seed", "5", "--steps", "1500"])
    return str(out)


@pytest.fixture(scope="module")
def logreg_model(csv_data, tmp_path_factory):
    _, train_path, _ = csv_data
    out = tmp_path_factory.mktemp("models") / "lr.model"
    main(["train", *_data_flags(train_path), "--method", "logreg",
          "--out", str(out), "--seed", "3", "--steps", "1200"])
    return str(out)


class TestCalibrateAndPredict:
    def test_calibrated_outputs_are_probabilities(self, csv_data, rank_model,
                                                  tmp_path, capsys):
        _, train_path, test_path = csv_data
        cal = tmp_path / "cal.model"
        assert main(["calibrate", "--model", rank_model, *_data_flags(train_path),
                     "--out", str(cal), "--paper-faithful"]) == 0
        assert main(["predict", "--model", str(cal), *_data_flags(test_path)]) == 0
        probs = [float(v) for v in capsys.readouterr().out.split()]
        assert len(probs) == 120
        assert all(0.0 <= p <= 1.0 for p in probs)

    def test_paper_faithful_keeps_training_auc(self, csv_data, rank_model,
                                               tmp_path, capsys):
        _, train_path, _ = csv_data
        cal = tmp_path / "cal2.model"
        main(["calibrate", "--model", rank_model, *_data_flags(train_path),
              "--out", str(cal), "--paper-faithful"])
        main(["eval", "--model", str(cal), *_data_flags(train_path)])
        out = capsys.readouterr().out
        auc_cal = [l for l in out.splitlines() if l.startswith("auc=")][0]

        raw_model, _ = load_model(rank_model)
        from rankcal.data import load_dense
        from rankcal.evaluation import auc as auc_fn
        from rankcal.learners import predict_score

        d = load_dense(train_path, "y", feature_columns=["f1", "f2", "f3"])
        raw_auc = auc_fn([predict_score(raw_model, r) for r in d.rows], d.labels)
        assert auc_cal == f"auc={raw_auc!r}"

    def test_double_calibration_rejected(self, csv_data, rank_model, tmp_path, capsys):
        _, train_path, _ = csv_data
        cal = tmp_path / "cal3.model"
        main(["calibrate", "--model", rank_model, *_data_flags(train_path),
              "--out", str(cal)])
        assert main(["calibrate", "--model", str(cal), *_data_flags(train_path),
                     "--out", str(tmp_path / "cal4.model")]) == 1
        assert "already calibrated" in capsys.readouterr().err

    def test_uncalibrated_rank_predict_needs_raw(self, csv_data, rank_model, capsys):
        _, _, test_path = csv_data
        assert main(["predict", "--model", rank_model, *_data_flags(test_path)]) == 1
        assert "calibrate" in capsys.readouterr().err
        assert main(["predict", "--model", rank_model, *_data_flags(test_path),
                     "--raw"]) == 0

    def test_pu_adjustment_arithmetic(self, tmp_path, csv_data, capsys):
        _, _, test_path = csv_data
        # constant 0.3 map: adjusted by c=0.6 every output becomes 0.5
        ranker = LinearModel(np.zeros(3), 0.0, LossKind.PAIRWISE_LOGISTIC)
        cal = CalibratedModel(
            ranker, CalibrationMap(np.array([0.0]), np.array([0.3]))
        )
        path = tmp_path / "const.model"
        save_model(path, cal)
        assert main(["predict", "--model", str(path), *_data_flags(test_path),
                     "--pu-c", "0.6"]) == 0
        values = {line for line in capsys.readouterr().out.split()}
        assert values == {"0.5"}

    def test_pu_estimate_from_positives(self, csv_data, rank_model, tmp_path, capsys):
        _, train_path, test_path = csv_data
        cal = tmp_path / "cal5.model"
        main(["calibrate", "--model", rank_model, *_data_flags(train_path),
              "--out", str(cal), "--paper-faithful"])
        assert main(["predict", "--model", str(cal), *_data_flags(test_path),
                     "--pu-estimate-from", train_path]) == 0
        probs = [float(v) for v in capsys.readouterr().out.split()]
        assert all(0.0 <= p <= 1.0 for p in probs)


class TestEval:
    def test_report_fields(self, csv_data, logreg_model, capsys):
        _, _, test_path = csv_data
        assert main(["eval", "--model", logreg_model, *_data_flags(test_path),
                     "--truth-column", "eta"]) == 0
        out = capsys.readouterr().out
        for key in ("auc=", "mse=", "mse_to_truth=", "prop2_bound=", "base_rate="):
            assert key in out
        assert "profit=" not in out

    def test_profit_needs_cost(self, csv_data, logreg_model, capsys):
        _, _, test_path = csv_data
        assert main(["eval", "--model", logreg_model, *_data_flags(test_path),
                     "--donation-column", "don"]) == 1
        assert "--cost" in capsys.readouterr().err

    def test_profit_with_cost(self, csv_data, logreg_model, capsys):
        _, _, test_path = csv_data
        assert main(["eval", "--model", logreg_model, *_data_flags(test_path),
                     "--donation-column", "don", "--cost", "0.68"]) == 0
        assert "profit=" in capsys.readouterr().out

    def test_splits_summary(self, csv_data, logreg_model, capsys):
        _, train_path, _ = csv_data
        argv = ["eval", "--model", logreg_model, *_data_flags(train_path),
                "--splits", "5", "--seed", "9", "--stratified"]
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert "splits=5" in first
        assert "auc_mean=" in first and "auc_std=" in first
        assert main(argv) == 0
        assert capsys.readouterr().out == first  # deterministic

    def test_predictions_file_input(self, csv_data, tmp_path, capsys):
        _, _, test_path = csv_data
        n = 120
        preds = tmp_path / "p.txt"
        preds.write_text("\n".join(["0.5"] * n) + "\n")
        assert main(["eval", "--predictions", str(preds),
                     *_data_flags(test_path)]) == 0
        out = capsys.readouterr().out
        assert "mse=0.25" in out

    def test_model_xor_predictions(self, csv_data, logreg_model, capsys):
        _, _, test_path = csv_data
        assert main(["eval", *_data_flags(test_path)]) == 1
        assert "exactly one" in capsys.readouterr().err

    def test_tie_mode_flag(self, csv_data, tmp_path, capsys):
        _, _, test_path = csv_data
        preds = tmp_path / "p2.txt"
        preds.write_text("\n".join(["0.5"] * 120) + "\n")
        main(["eval", "--predictions", str(preds), *_data_flags(test_path),
              "--tie-mode", "geq"])
        out = capsys.readouterr().out
        assert "auc=1.0" in out


class TestSynth:
    def test_default_grid_row_count(self, capsys):
        assert main(["synth", "--n", "40", "--trials", "1", "--steps", "40",
                     "--seed", "3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "a\tmethod\tmean\tdeviation"
        assert len(lines) == 1 + 5 * 6

    def test_method_subset_and_caret_values(self, capsys):
        assert main(["synth", "--a-values", "2^-3,0.5", "--methods",
                     "logreg,rank+ir", "--n", "40", "--trials", "1",
                     "--steps", "40"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 1 + 2 * 2
        assert lines[1].startswith("0.125\tLogReg")

    def test_deterministic_output(self, capsys):
        argv = ["synth", "--a-values", "0.25", "--methods", "crr", "--n", "50",
                "--trials", "2", "--steps", "60", "--seed", "11"]
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        assert capsys.readouterr().out == first

    def test_invalid_a_rejected(self, capsys):
        assert main(["synth", "--a-values", "0.7"]) == 1
        assert "outside" in capsys.readouterr().err

    def test_plot_written(self, tmp_path, capsys):
        fig = tmp_path / "sweep.png"
        table = tmp_path / "sweep.tsv"
        assert main(["synth", "--a-values", "0.25", "--methods", "logreg",
                     "--n", "40", "--trials", "1", "--steps", "40",
                     "--out", str(table), "--plot", str(fig)]) == 0
        assert fig.stat().st_size > 0
        assert table.read_text().startswith("a\tmethod")


class TestSparseFormat:
    def test_svmlight_train_eval(self, tmp_path, capsys):
        rng = np.random.default_rng(33)
        path = tmp_path / "train.svm"
        with open(path, "w") as fh:
            for _ in range(150):
                x1, x2 = (float(v) for v in rng.standard_normal(2))
                y = 1 if x1 - x2 + 0.2 * rng.standard_normal() >= 0 else 0
                label = "+1" if y else "-1"
                fh.write(f"{label} 1:{x1!r} 2:{x2!r}\n")
        model = tmp_path / "m.model"
        assert main(["train", "--data", str(path), "--format", "svmlight",
                     "--method", "logreg", "--out", str(model),
                     "--seed", "4", "--steps", "600"]) == 0
        assert main(["eval", "--model", str(model), "--data", str(path),
                     "--format", "svmlight"]) == 0
        out = capsys.readouterr().out
        auc_line = [l for l in out.splitlines() if l.startswith("auc=")][0]
        assert float(auc_line.split("=")[1]) > 0.8
