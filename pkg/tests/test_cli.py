import json
from pathlib import Path

import _bootstrap  # noqa: F401
import pytest
from conftest import SAMPLE_EVENTS

from spread_seasonality import cli
from spread_seasonality.config import OUTPUT_ENV_VAR


def _synth(output, capsys, *extra):
    assert cli.main(["synth", "--n-changes", "3000", "--output", str(output), *extra]) == cli.EXIT_OK
    return Path(capsys.readouterr().out.strip().splitlines()[-1])


def test_ingest_reports_clean_file(sample_events_file, capsys):
    assert cli.main(["ingest", str(sample_events_file)]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("10 events, 0 errors")
    assert "execute_hidden" in out


def test_ingest_rejects_backwards_time(tmp_path):
    path = tmp_path / "BACK_2016-03-01.csv"
    path.write_text("34200000,1,1,100,1000000,1\n34199000,1,2,100,1000100,-1\n")
    assert cli.main(["ingest", str(path)]) == cli.EXIT_PROBLEMS


def test_ingest_lists_integrity_errors(tmp_path, capsys):
    path = tmp_path / "BAD_2016-03-01.csv"
    path.write_text(SAMPLE_EVENTS + "34208000,3,99,100,1001000,1\n")
    assert cli.main(["ingest", str(path)]) == cli.EXIT_PROBLEMS
    out = capsys.readouterr().out
    assert out.startswith("11 events, 1 errors")
    assert "unknown order id 99" in out


def test_ingest_accepts_output_option_in_any_position(sample_events_file, tmp_path):
    for argv in (
        ["--output", str(tmp_path / "a"), "ingest", str(sample_events_file), "--snapshot-at", "34207000"],
        ["ingest", str(sample_events_file), "--snapshot-at", "34207000", "--output", str(tmp_path / "b")],
    ):
        assert cli.main(argv) == cli.EXIT_OK
    for name in ("a", "b"):
        snapshot = tmp_path / name / "snapshots" / "TEST_2016-03-01_34207000.json"
        assert json.loads(snapshot.read_text())["best_bid"] == 1000900


def test_synthetic_file_ingests_cleanly(tmp_path, capsys):
    path = _synth(tmp_path, capsys, "--kind", "planted-opening", "--seed", "3")
    assert path == (tmp_path / "synthetic" / "SYN_2016-03-01_planted-opening_seed3.csv").resolve()
    assert path.with_suffix(".truth.json").exists()
    assert cli.main(["ingest", str(path)]) == cli.EXIT_OK
    assert ", 0 errors" in capsys.readouterr().out.splitlines()[0]


def test_invalid_scenario_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        cli.main(["synth", "--alpha", "1.5", "--output", str(tmp_path)])
    assert excinfo.value.code == 2


def test_default_output_prefers_env_override(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv(OUTPUT_ENV_VAR, str(tmp_path / "env"))
    assert cli.main(["synth", "--n-changes", "500"]) == cli.EXIT_OK
    printed = Path(capsys.readouterr().out.strip())
    assert printed.parent == (tmp_path / "env" / "synthetic").resolve()


def _analyze(files, output):
    return cli.main(["analyze", *map(str, files), "--no-progress", "--output", str(output)])


def test_analyze_then_summarize(tmp_path, capsys):
    files = [
        _synth(tmp_path / "synth", capsys, "--ticker", "AAA", "--seed", "1"),
        _synth(tmp_path / "synth", capsys, "--ticker", "BBB", "--seed", "2", "--kind", "planted-opening"),
    ]
    output = tmp_path / "out"
    assert _analyze(files, output) == cli.EXIT_OK
    table = (output / "stock_days.csv").read_text().splitlines()
    assert table[0].startswith("ticker,day,mean_spread")
    assert [line.split(",")[0] for line in table[1:]] == ["AAA", "BBB"]
    assert sorted(p.name for p in (output / "reports").iterdir()) == ["AAA_2016-03-01.json", "BBB_2016-03-01.json"]
    collapse = (output / "collapse.csv").read_text().splitlines()
    assert collapse[0] == "elapsed_ms,mean_normalized,cv"
    assert len(collapse) == 21

    assert cli.main(["summarize", "--output", str(output)]) == cli.EXIT_OK
    summary = (output / "summary.csv").read_text().splitlines()
    assert summary[0] == "ticker,n_days,mean_duration_minutes,quotient,tick_class,mean_spread,small_spread,flags"
    assert len(summary) == 3
    daily = (output / "duration_pdf_daily.csv").read_text().splitlines()
    assert daily[0] == "bin_left,bin_right,density,group"


def test_window_weighting_option(tmp_path, capsys):
    files = [_synth(tmp_path / "synth", capsys, "--seed", "3")]
    output = tmp_path / "out"
    args = ["analyze", str(files[0]), "--no-progress", "--window-weighting", "per-change", "--output", str(output)]
    assert cli.main(args) == cli.EXIT_OK
    report = json.loads((output / "reports" / "SYN_2016-03-01.json").read_text())
    assert report["window_weighting"] == "per-change"
    assert report["mean_method"] == "time-weighted"
    assert not (output / "collapse.csv").exists()


def test_analyze_output_is_reproducible(tmp_path, capsys):
    files = [_synth(tmp_path / "synth", capsys, "--seed", "5")]
    first, second = tmp_path / "first", tmp_path / "second"
    assert _analyze(files, first) == cli.EXIT_OK
    assert _analyze(files, second) == cli.EXIT_OK
    for relative in ("stock_days.csv", "reports/SYN_2016-03-01.json", "smoothed/SYN_2016-03-01_doubling.csv"):
        assert (first / relative).read_bytes() == (second / relative).read_bytes()


def test_analyze_reports_failed_files(tmp_path, sample_events_file):
    missing = tmp_path / "GONE_2016-03-01.csv"
    assert _analyze([sample_events_file, missing], tmp_path / "out") == cli.EXIT_PROBLEMS
    report = json.loads((tmp_path / "out" / "reports" / "GONE_2016-03-01.json").read_text())
    assert report["flags"] == ["failed"]


def test_summarize_without_reports(tmp_path):
    assert cli.main(["summarize", str(tmp_path / "empty"), "--output", str(tmp_path)]) == cli.EXIT_PROBLEMS
