import csv
import json
import math

import numpy as np
import pytest

from viewfinder import cli
from viewfinder.cli import main
from viewfinder.io import LOG_COLUMNS, rows_to_csv
from viewfinder.metrics import TLX_SUBSCALES
from viewfinder.motorsim import MotorParams, save_params
from viewfinder.taskgen import TechniqueKind, layout_targets, target_order


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def hand_written_log(path, outlier_at=(0, 4)):
    """Two Raycasting sequences of 11 selections, written without the simulator."""
    W, D = 0.2619, 1.0
    c = layout_targets(11, D, W).centers_2d()
    order = target_order(11)
    rng = np.random.default_rng(0)
    rows = []
    for seq in range(2):
        prev = c[order[-1]]
        for k, idx in enumerate(order):
            sel = c[idx] + rng.normal(0, 0.03, 2)
            if (seq, k) == outlier_at:
                sel = c[idx] + [2.0 * W, 0.0]
            d = np.linalg.norm(sel - c[idx])
            outcome = "hit" if d <= W / 2 else ("outlier" if d > 1.5 * W else "miss")
            rows.append([0, "Raycasting", W, D, 5.0, seq, k, idx, *prev, *c[idx], *sel,
                         1.2 + 0.1 * rng.random(), 1.0, 0.2, 5.0, 3.0, outcome])
            prev = sel
    path.write_text(rows_to_csv(LOG_COLUMNS, rows))
    return rows


def quiet_params(path):
    zooms = {"Large/Short": 2.0, "Large/Long": 1.5, "Small/Short": 2.0, "Small/Long": 1.5}
    save_params({k: MotorParams(k, fitts_a=0.4, fitts_b=0.2, mt_sigma=0.0, config_zoom=zooms)
                 for k in TechniqueKind}, path)


class TestSimulate:
    def test_default_row_count(self, default_run):
        with open(default_run / "log.csv") as fh:
            assert sum(1 for _ in fh) - 1 == 7920

    def test_manifest(self, default_run):
        m = json.loads((default_run / "log.csv.manifest.json").read_text())
        assert m["seed"] == 20220101 and m["rows"] == 7920 and len(m["config_hash"]) == 64

    def test_byte_identical_reruns(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"participants": 2}))
        for name in ("a.csv", "b.csv"):
            assert main(["simulate", "--config", str(cfg), "--seed", "5", "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.csv.manifest.json").read_bytes() == (tmp_path / "b.csv.manifest.json").read_bytes()

    def test_seed_changes_output(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"participants": 1}))
        main(["simulate", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "a.csv")])
        main(["simulate", "--config", str(cfg), "--seed", "2", "--out", str(tmp_path / "b.csv")])
        assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()

    def test_single_participant_single_technique(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"participants": 1, "techniques": ["ViewfinderTouch"]}))
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "log.csv")]) == 0
        assert len(read_csv(tmp_path / "log.csv")) == 132

    def test_missing_config(self, tmp_path, capsys):
        code = main(["simulate", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x.csv")])
        assert code == 2
        out = capsys.readouterr()
        assert "nope.json" in out.err and out.out == ""

    def test_unwritable_output(self, tmp_path):
        (tmp_path / "file").write_text("")
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"participants": 1, "techniques": ["Raycasting"]}))
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "file" / "x.csv")]) == 2

    def test_bad_arguments(self):
        assert main(["simulate"]) == 2
        assert main(["frobnicate"]) == 2


class TestAnalyze:
    def test_outputs(self, default_run):
        an = default_run / "analysis"
        for name in ("sequences.csv", "table2.csv", "table3.csv", "fitts.csv", "scatter.csv", "report.json"):
            assert (an / name).exists()
        assert len(read_csv(an / "sequences.csv")) == 720
        assert len(read_csv(an / "scatter.csv")) == 7920

    def test_zero_noise_log_has_no_errors(self, tmp_path):
        quiet_params(tmp_path / "p.json")
        (tmp_path / "c.json").write_text(json.dumps({"participants": 1, "params": "p.json"}))
        assert main(["simulate", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "log.csv")]) == 0
        assert main(["analyze", "--log", str(tmp_path / "log.csv"), "--out", str(tmp_path / "an")]) == 0
        rows = read_csv(tmp_path / "an" / "sequences.csv")
        assert rows and all(float(r["error_rate_pct"]) == 0.0 for r in rows)

    def test_hand_written_log_with_outlier(self, tmp_path):
        rows = hand_written_log(tmp_path / "log.csv")
        assert len(rows) == 22
        assert main(["analyze", "--log", str(tmp_path / "log.csv"), "--out", str(tmp_path / "an")]) == 0
        report = json.loads((tmp_path / "an" / "report.json").read_text())
        assert report["outliers_excluded"] == sum(r[-1] == "outlier" for r in rows) == 1
        seqs = read_csv(tmp_path / "an" / "sequences.csv")
        assert [int(s["n_outliers"]) for s in seqs] == [1, 0]

    def test_malformed_log(self, tmp_path, capsys):
        hand_written_log(tmp_path / "log.csv")
        lines = (tmp_path / "log.csv").read_text().splitlines()
        lines[7] = lines[7].replace("Raycasting,", "Raycasting,abc,", 1)
        (tmp_path / "log.csv").write_text("\n".join(lines) + "\n")
        assert main(["analyze", "--log", str(tmp_path / "log.csv"), "--out", str(tmp_path / "an")]) == 2
        assert "row 8" in capsys.readouterr().err

    def test_idempotent(self, tmp_path):
        hand_written_log(tmp_path / "log.csv")
        main(["analyze", "--log", str(tmp_path / "log.csv"), "--out", str(tmp_path / "a")])
        main(["analyze", "--log", str(tmp_path / "log.csv"), "--out", str(tmp_path / "b")])
        for name in ("sequences.csv", "table2.csv", "scatter.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestAnova:
    @pytest.mark.parametrize("measure", ["mt_mean_s", "error_rate_pct", "throughput_bps",
                                         "hand_movement_m", "head_movement_m"])
    def test_error_df(self, default_run, tmp_path, measure):
        out = tmp_path / "anova.csv"
        assert main(["anova", "--summaries", str(default_run / "analysis" / "sequences.csv"),
                     "--measure", measure, "--out", str(out)]) == 0
        rows = read_csv(out)
        assert [r["value"] for r in rows] == ["df", "F", "p", "eta_squared"]
        assert all(r["df_error"] == "689" for r in rows)
        assert rows[0]["TQ"] == "2" and rows[0]["TQ×TS×TD"] == "2"

    def test_condition_aggregate(self, default_run, tmp_path):
        out = tmp_path / "anova.csv"
        assert main(["anova", "--summaries", str(default_run / "analysis" / "sequences.csv"),
                     "--measure", "mt_mean_s", "--aggregate", "condition", "--out", str(out)]) == 0
        assert read_csv(out)[0]["df_error"] == "209"

    def test_unknown_measure(self, default_run, tmp_path):
        assert main(["anova", "--summaries", str(default_run / "analysis" / "sequences.csv"),
                     "--measure", "nope", "--out", str(tmp_path / "a.csv")]) == 2

    def test_unbalanced(self, tmp_path):
        hand_written_log(tmp_path / "log.csv")
        main(["analyze", "--log", str(tmp_path / "log.csv"), "--out", str(tmp_path / "an")])
        assert main(["anova", "--summaries", str(tmp_path / "an" / "sequences.csv"),
                     "--measure", "mt_mean_s", "--out", str(tmp_path / "a.csv")]) == 2


class TestTlx:
    def write(self, path, ratings, weights, n=3):
        header = ["participant_id", "technique", *TLX_SUBSCALES, *(f"{s}_weight" for s in TLX_SUBSCALES)]
        path.write_text(rows_to_csv(header, [[p, "Raycasting", *ratings, *weights] for p in range(n)]))

    def test_all_fifty(self, tmp_path):
        self.write(tmp_path / "r.csv", [50] * 6, [5, 4, 3, 2, 1, 0])
        assert main(["tlx", "--responses", str(tmp_path / "r.csv"), "--out", str(tmp_path / "o.csv")]) == 0
        rows = read_csv(tmp_path / "o.csv")
        assert len(rows) == 3 and all(r["weighted"] == "50.00" and r["raw"] == "50.00" for r in rows)
        assert rows[0]["participant_id"] == "0" and rows[0]["technique"] == "Raycasting"

    def test_weighted_arithmetic(self, tmp_path):
        self.write(tmp_path / "r.csv", [100, 0, 0, 0, 0, 0], [5, 4, 3, 2, 1, 0], n=1)
        main(["tlx", "--responses", str(tmp_path / "r.csv"), "--out", str(tmp_path / "o.csv")])
        assert read_csv(tmp_path / "o.csv")[0]["weighted"] == "33.33"

    def test_invalid_weights(self, tmp_path, capsys):
        self.write(tmp_path / "r.csv", [50] * 6, [0, 0, 0, 0, 0, 15])
        assert main(["tlx", "--responses", str(tmp_path / "r.csv"), "--out", str(tmp_path / "o.csv")]) == 2
        assert "row 2" in capsys.readouterr().err

    def test_missing_columns(self, tmp_path):
        (tmp_path / "r.csv").write_text("participant_id,mental\n1,50\n")
        assert main(["tlx", "--responses", str(tmp_path / "r.csv"), "--out", str(tmp_path / "o.csv")]) == 2


class TestCalibrateCli:
    def test_missing_conditions(self, tmp_path, capsys):
        (tmp_path / "t.csv").write_text(
            "technique,size_deg,distance_m,mt_s,error_rate_pct,hand_m,head_m,adj_visual_angle_deg\n"
            "Raycasting,3,1,1.45,4.7,1.07,0.21,2.99\n")
        assert main(["calibrate", "--targets", str(tmp_path / "t.csv"), "--out", str(tmp_path / "p.json")]) == 2
        assert "missing" in capsys.readouterr().err


def test_numeric_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise FloatingPointError("overflow in objective")
    monkeypatch.setattr(cli, "calibrate", boom)
    monkeypatch.setattr(cli, "read_targets", lambda path: None)
    assert main(["calibrate", "--targets", "t.csv", "--out", str(tmp_path / "p.json")]) == 3
    assert "numeric failure" in capsys.readouterr().err
