import json
import os

import pytest

from errors import ConfigError, OutputError
from storage.db import RunLedger, RunRecord
from storage.results import (
    emit_results,
    ensure_output_dir,
    read_results,
    resolve_output,
    summary_text,
    write_summary,
)


def test_empty_rows_give_header_only(tmp_path):
    path = emit_results([], ["r", "p_hat"], str(tmp_path / "empty.csv"))
    with open(path, "rb") as f:
        assert f.read() == b"r,p_hat\r\n"


def test_csv_round_trip(tmp_path):
    rows = [
        {"r": 0.1, "trials": 10, "p_hat": 1 / 3, "label": "i"},
        {"r": 0.30000000000000004, "trials": 10, "p_hat": 2 / 3, "label": "j"},
    ]
    path = emit_results(rows, ["r", "trials", "p_hat", "label"], str(tmp_path / "rows.csv"))
    frame = read_results(path)
    assert list(frame.columns) == ["r", "trials", "p_hat", "label"]
    assert frame.to_dict("records") == rows


def test_rows_must_match_schema(tmp_path):
    with pytest.raises(ConfigError):
        emit_results([{"r": 0.1}], ["r", "p_hat"], str(tmp_path / "bad.csv"))


def test_resolve_output_stays_inside(tmp_path):
    out = ensure_output_dir(str(tmp_path / "out"))
    assert resolve_output(out, "sweep.csv") == os.path.join(os.path.realpath(out), "sweep.csv")
    with pytest.raises(OutputError):
        resolve_output(out, "../escape.csv")
    with pytest.raises(OutputError):
        resolve_output(out, "/etc/passwd")


def test_summary_shape(tmp_path):
    path = write_summary(str(tmp_path / "s.json"), "balls", {"n": 10}, 7, {"mean_z": 1.5})
    with open(path, encoding="utf-8") as f:
        text = f.read()
    assert text.endswith("}\n")
    assert json.loads(text) == {"experiment": "balls", "params": {"n": 10}, "seed": 7, "outputs": {"mean_z": 1.5}}
    assert text == summary_text("balls", {"n": 10}, 7, {"mean_z": 1.5})


def test_summary_rejects_nan(tmp_path):
    with pytest.raises(OutputError):
        write_summary(str(tmp_path / "s.json"), "x", {}, 0, {"v": float("nan")})
    assert not any(name.startswith(".tmp-") for name in os.listdir(tmp_path))


def test_ledger_records_runs(tmp_path):
    ledger = RunLedger.for_output_dir(str(tmp_path))
    try:
        run_id = ledger.record_run("check", {"fixture": True}, None, {"connected": False}, str(tmp_path))
        runs = ledger.runs("check")
        assert [r.id for r in runs] == [run_id]
        assert json.loads(runs[0].outputs) == {"connected": False}
        assert isinstance(runs[0], RunRecord)
    finally:
        ledger.close()
    assert os.path.exists(tmp_path / "runs.db")
