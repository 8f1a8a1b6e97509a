import json
import pathlib

import pytest

from cdnsim.cli import main

CONFIG_DIR = pathlib.Path(__file__).resolve().parent.parent / "configs"


def write_config(tmp_path, body):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(body))
    return str(p)


def test_list_experiments(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out
    for exp in "ABCDEF":
        assert out.splitlines()[ord(exp) - ord("A")].startswith(exp)


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIG_DIR.glob("*.json")))
def test_shipped_configs_validate(name, capsys):
    assert main(["validate-config", str(CONFIG_DIR / name)]) == 0
    assert "valid" in capsys.readouterr().out


def test_shipped_configs_cover_all_experiments():
    assert len(list(CONFIG_DIR.glob("*.json"))) == 6


def test_validate_bad_config_exits_2(tmp_path, capsys):
    path = write_config(tmp_path, {"experiment": "A", "bogus_key": 1})
    assert main(["validate-config", path]) == 2
    assert "bogus_key" in capsys.readouterr().err


def test_validate_malformed_json_exits_2(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["validate-config", str(p)]) == 2
    assert "line" in capsys.readouterr().err


def test_run_requires_config_or_experiment(capsys):
    assert main(["run"]) == 2


def test_run_writes_outputs(tmp_path, capsys):
    cfg = write_config(tmp_path, {"experiment": "A", "file_sizes": ["1MB"],
                                  "repetitions": 2})
    out_dir = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out_dir)]) == 0
    records = (out_dir / "records.csv").read_text()
    assert records.startswith("experiment,plane,size_bytes")
    assert len(records.splitlines()) == 1 + 2 * 2 * 2
    assert (out_dir / "summary.csv").exists()
    assert (out_dir / "fig_A.dat").exists()
    assert "8 runs, 0 failed" in capsys.readouterr().out


def test_run_overrides_reps_seed_and_plane(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "A", "file_sizes": ["1MB"]})
    out_dir = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out_dir),
                 "--reps", "1", "--seed", "9", "--plane", "ndn"]) == 0
    lines = (out_dir / "records.csv").read_text().splitlines()
    assert len(lines) == 1 + 2
    assert all(line.split(",")[1] == "ndn" for line in lines[1:])


def test_run_twice_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "A", "file_sizes": ["1MB"],
                                  "repetitions": 2, "lossy_access": "1%"})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o1")]) == 0
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o2")]) == 0
    for name in ("records.csv", "summary.csv", "fig_A.dat"):
        assert (tmp_path / "o1" / name).read_bytes() == \
            (tmp_path / "o2" / name).read_bytes()


def test_parallel_jobs_match_sequential(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "A", "file_sizes": ["1MB"],
                                  "repetitions": 3, "lossy_access": "1%"})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "seq")]) == 0
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "par"),
                 "--jobs", "3"]) == 0
    assert (tmp_path / "seq" / "records.csv").read_bytes() == \
        (tmp_path / "par" / "records.csv").read_bytes()


def test_run_with_trace_flag_writes_trace(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "B"})
    out_dir = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out_dir),
                 "--trace"]) == 0
    lines = (out_dir / "trace.txt").read_text().splitlines()
    assert lines and all(len(line.split("\t")) == 4 for line in lines)


def test_run_experiment_flag_without_config(tmp_path):
    assert main(["run", "--experiment", "B",
                 "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "fig_B.dat").exists()


def test_trace_writes_tab_separated_events(tmp_path, capsys):
    out = tmp_path / "trace.txt"
    assert main(["trace", "--experiment", "B", "--size", "8800",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines
    assert all(len(line.split("\t")) == 4 for line in lines)
    t0 = [float(line.split("\t")[0]) for line in lines]
    assert t0 == sorted(t0)


def test_trace_runtime_error_exits_1(capsys):
    assert main(["trace", "--experiment", "B", "--size", "-5"]) == 1
    assert "error" in capsys.readouterr().err


def test_bad_reps_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, {"experiment": "A"})
    assert main(["run", "--config", cfg, "--reps", "0",
                 "--out", str(tmp_path / "out")]) == 2
