from __future__ import annotations

import csv
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from ssvepamp.cli import main
from ssvepamp.dsp import TimeSeries
from ssvepamp.io import write_recording

SMALL = {"n_subjects": 2, "conditions": [1, 2], "duration_s": 10.0, "window_lengths": [1.0, 3.0],
         "models": ["lr"]}


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "small.json"
    p.write_text(json.dumps(SMALL))
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def synth(out, config, *extra):
    assert main(["synth", "--config", str(config), "--out", str(out), "--create", *extra]) == 0


def test_synth_writes_recordings_and_manifest(tmp_path, small_config):
    out = tmp_path / "data"
    synth(out, small_config)
    csvs = sorted(out.glob("sub-*.csv"))
    assert [p.name for p in csvs] == ["sub-01_cond-1.csv", "sub-01_cond-2.csv", "sub-02_cond-1.csv",
                                      "sub-02_cond-2.csv"]
    assert all(len(p.read_text().splitlines()) == 2501 for p in csvs)
    m = json.loads((out / "manifest.json").read_text())
    assert m["command"] == "synth" and m["seed"] == 0 and len(m["config_hash"]) == 64


def test_default_synth_file_counts(tmp_path):
    out = tmp_path / "full"
    assert main(["synth", "--out", str(out), "--create"]) == 0
    csvs = sorted(out.glob("sub-*.csv"))
    assert len(csvs) == 64
    assert {len(p.read_text().splitlines()) - 1 for p in csvs} == {15000}


def test_synth_is_byte_identical_for_same_seed(tmp_path, small_config):
    synth(tmp_path / "a", small_config, "--seed", "3")
    synth(tmp_path / "b", small_config, "--seed", "3")
    synth(tmp_path / "c", small_config, "--seed", "4")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes(), n
    assert (tmp_path / "a" / "sub-01_cond-1.csv").read_bytes() != (tmp_path / "c" / "sub-01_cond-1.csv").read_bytes()


def test_missing_output_dir_without_create(tmp_path, small_config, capsys):
    assert main(["synth", "--config", str(small_config), "--out", str(tmp_path / "nope")]) == 3
    assert "--create" in capsys.readouterr().err
    assert not (tmp_path / "nope").exists()


def test_noise_free_fbcca_is_perfect(tmp_path, small_config):
    synth(tmp_path / "d", small_config, "--noise-free")
    assert main(["recognize", "--config", str(small_config), "--data", str(tmp_path / "d"), "--out",
                 str(tmp_path / "r"), "--create", "--method", "fbcca"]) == 0
    rows = read_csv(tmp_path / "r" / "accuracy_fbcca.csv")
    assert len(rows) == 2
    assert all(float(r[k]) == 1.0 for r in rows for k in ("cond_1", "cond_2"))


def test_recognize_is_repeatable(tmp_path, small_config):
    synth(tmp_path / "d", small_config)
    for method in ("cca", "fbcca"):
        for run in ("r1", "r2"):
            assert main(["recognize", "--config", str(small_config), "--data", str(tmp_path / "d"),
                         "--out", str(tmp_path / run), "--create", "--method", method]) == 0
        name = f"accuracy_{method}.csv"
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_malformed_recording_reports_file_and_line(tmp_path, small_config, capsys):
    synth(tmp_path / "d", small_config)
    p = tmp_path / "d" / "sub-02_cond-1.csv"
    lines = p.read_text().splitlines()
    lines[41] = "40,not-a-number"
    p.write_text("\n".join(lines) + "\n")
    code = main(["recognize", "--config", str(small_config), "--data", str(tmp_path / "d"), "--out",
                 str(tmp_path / "r"), "--create"])
    assert code == 3
    assert "sub-02_cond-1.csv:42" in capsys.readouterr().err


def test_degenerate_recordings_exit_numeric(tmp_path, small_config):
    d = tmp_path / "zeros"
    d.mkdir()
    for s in (1, 2):
        for c in (1, 2):
            write_recording(d, s, c, TimeSeries(np.zeros(2500), 250.0))
    code = main(["recognize", "--config", str(small_config), "--data", str(d), "--out", str(tmp_path / "r"),
                 "--create", "--method", "cca"])
    assert code == 4


def test_incomplete_recordings_exit_data_error(tmp_path, small_config):
    synth(tmp_path / "d", small_config)
    (tmp_path / "d" / "sub-02_cond-2.csv").unlink()
    assert main(["recognize", "--config", str(small_config), "--data", str(tmp_path / "d"), "--out",
                 str(tmp_path / "r"), "--create"]) == 3


def test_window_study_and_amplitude(tmp_path, small_config):
    synth(tmp_path / "d", small_config)
    assert main(["window-study", "--config", str(small_config), "--data", str(tmp_path / "d"),
                 "--out", str(tmp_path / "w"), "--create"]) == 0
    table = read_csv(tmp_path / "w" / "table_window_length.csv")
    assert list(table[0]) == ["condition", "cca_1s", "cca_3s", "fbcca_1s", "fbcca_3s"]
    assert main(["amplitude", "--config", str(small_config), "--data", str(tmp_path / "d"),
                 "--out", str(tmp_path / "a"), "--create"]) == 0
    meta = read_csv(tmp_path / "a" / "windows_meta.csv")
    assert len(meta) == 2 * 2 * 8


def test_evaluate_toy_lr_is_fast(tmp_path, small_config):
    synth(tmp_path / "d", small_config)
    assert main(["amplitude", "--config", str(small_config), "--data", str(tmp_path / "d"),
                 "--out", str(tmp_path / "a"), "--create"]) == 0
    t0 = time.perf_counter()
    assert main(["evaluate", "--config", str(small_config), "--data", str(tmp_path / "a"), "--model", "lr",
                 "--out", str(tmp_path / "e"), "--create"]) == 0
    assert time.perf_counter() - t0 < 10
    report = json.loads((tmp_path / "e" / "report.json").read_text())
    assert [f["held_out_subject"] for f in report["folds"]["lr"]] == [1, 2]
    assert {"table_mae.csv", "aae_curve.csv", "predicted_vs_truth.csv", "manifest.json"} <= \
        {p.name for p in (tmp_path / "e").iterdir()}


def test_equal_manifests_give_equal_reports(tmp_path, small_config):
    synth(tmp_path / "d", small_config)
    for run in ("e1", "e2"):
        assert main(["evaluate", "--config", str(small_config), "--data", str(tmp_path / "d"), "--model", "knn",
                     "--out", str(tmp_path / run), "--create"]) == 0
    m1 = json.loads((tmp_path / "e1" / "manifest.json").read_text())
    m2 = json.loads((tmp_path / "e2" / "manifest.json").read_text())
    assert m1 == m2
    assert (tmp_path / "e1" / "report.json").read_bytes() == (tmp_path / "e2" / "report.json").read_bytes()


def test_unknown_model_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["evaluate", "--model", "mlp", "--out", str(tmp_path)])
    assert e.value.code == 2


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"windw_s": 3}))
    assert main(["synth", "--config", str(bad), "--out", str(tmp_path), "--create"]) == 2
    assert main(["recognize", "--out", str(tmp_path)]) == 2  # --data missing


def test_itr_command(capsys):
    assert main(["itr", "--accuracy", "0.9925"]) == 0
    assert capsys.readouterr().out.strip() == "56.1767"
    assert main(["itr", "--accuracy", "0.9", "--seconds", "0"]) == 2


def test_dump_filters(tmp_path, capsys):
    assert main(["itr", "--accuracy", "1", "--dump-filters", "-"]) == 0
    out = capsys.readouterr().out
    designs = json.loads(out[: out.rindex("}") + 1])
    assert set(designs) == {"notch", "bandpass", "filter_bank", "narrowband"}
    path = tmp_path / "filters.json"
    assert main(["itr", "--accuracy", "1", "--dump-filters", str(path)]) == 0
    assert json.loads(path.read_text()) == designs


def test_report_on_small_config(tmp_path, small_config):
    assert main(["report", "--config", str(small_config), "--out", str(tmp_path / "rep"), "--create"]) == 0
    names = {p.name for p in (tmp_path / "rep").iterdir()}
    assert {"table_recognition_accuracy.csv", "table_itr.csv", "table_window_length.csv", "table_mae.csv",
            "aae_curve.csv", "predicted_vs_truth.csv", "report.json", "manifest.json"} <= names
    report = json.loads((tmp_path / "rep" / "report.json").read_text())
    fold = report["folds"]["lr"][0]
    assert set(fold["accuracy"]) == {"cca", "fbcca"} and set(fold["itr"]) == {"cca", "fbcca"}


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ssvepamp", "itr", "--accuracy", "0.5"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "0.0000"
