import subprocess
import sys

import numpy as np
import pytest

from kinetic_rknn import cli
from kinetic_rknn.dataset import (
    format_dataset,
    generate_dataset,
    load_dataset,
    parse_dataset,
    parse_queries,
)
from kinetic_rknn.errors import ParseError
from kinetic_rknn.trajectories import projected_difference


def run_cli(args):
    return cli.main([str(a) for a in args])


def test_dataset_round_trip(tmp_path):
    ds = generate_dataset(17, 2, 2, seed=5, k=4)
    text = format_dataset(ds)
    back = parse_dataset(text)
    assert back == ds
    assert format_dataset(back) == text


def test_dataset_parse_errors():
    with pytest.raises(ParseError):
        parse_dataset("")
    with pytest.raises(ParseError):
        parse_dataset("2 1 1\n0 1.0 ; 2.0\n")  # short header
    with pytest.raises(ParseError) as err:
        parse_dataset("2 1 1 1\n0 1.0 zap ; 2.0\n")
    assert "line 2" in str(err.value)
    with pytest.raises(ParseError):
        parse_dataset("2 1 2 1\n0 1.0 ; 2.0\n0 1.0 ; 2.0\n")  # duplicate id
    with pytest.raises(ParseError):
        parse_dataset("2 0 1 1\n0 1.0 0.5 ; 2.0\n")  # degree above header
    with pytest.raises(ParseError):
        parse_queries("0.0 1.0 2\n", dimension=2)  # missing a field


def test_gen_build_round_trip(tmp_path, capsys):
    ds_path = tmp_path / "ds.txt"
    assert run_cli(["gen", "--n", 12, "--d", 2, "--s", 1, "--seed", 3,
                    "--k", 2, "--out", ds_path]) == 0
    first = ds_path.read_text()
    assert run_cli(["gen", "--n", 12, "--d", 2, "--s", 1, "--seed", 3,
                    "--k", 2, "--out", ds_path]) == 0
    assert ds_path.read_text() == first  # same seed, identical bytes
    out = tmp_path / "build.tsv"
    assert run_cli(["build", "--input", ds_path, "--k", 2, "--time", 0.5,
                    "--out", out]) == 0
    text1 = out.read_text()
    assert run_cli(["build", "--input", ds_path, "--k", 2, "--time", 0.5,
                    "--out", out]) == 0
    assert out.read_text() == text1  # deterministic result file
    stats = dict(
        line.split("\t")[:2] for line in capsys.readouterr().out.splitlines()
        if "\t" in line
    )
    assert int(stats["edges"]) <= 6 * 2 * 12


def test_build_large_generated_edge_bound(tmp_path, capsys):
    ds_path = tmp_path / "big.txt"
    assert run_cli(["gen", "--n", 1000, "--d", 2, "--s", 1, "--seed", 1,
                    "--k", 3, "--out", ds_path]) == 0
    out = tmp_path / "big_build.tsv"
    assert run_cli(["build", "--input", ds_path, "--k", 3, "--out", out]) == 0
    stats = dict(
        line.split("\t")[:2] for line in capsys.readouterr().out.splitlines()
        if "\t" in line
    )
    assert int(stats["edges"]) <= 6 * 3 * 1000


def test_query_static_k_out_of_range(tmp_path, capsys):
    ds_path = tmp_path / "d.txt"
    ds_path.write_text("2 0 3 1\n0 0.0 ; 0.0\n1 1.0 ; 0.0\n2 2.0 ; 0.0\n")
    q_path = tmp_path / "q.txt"
    q_path.write_text("0.0 0.5 0.5 9\n")
    assert run_cli(["query", "--input", ds_path, "--queries", q_path]) == 1


def test_build_two_point_static(tmp_path):
    ds_path = tmp_path / "two.txt"
    ds_path.write_text("2 0 2 1\n0 0.0 ; 0.0\n1 1.0 ; 0.0\n")
    out = tmp_path / "g.tsv"
    assert run_cli(["build", "--input", ds_path, "--k", 1, "--out", out]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "edge\t0\t1"
    assert sum(1 for l in lines if l.startswith("knn\t")) == 2


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 1 1 1\n0 1.0 oops ; 0.0\n")
    assert run_cli(["build", "--input", bad, "--k", 1, "--out", tmp_path / "x"]) == 2
    assert "line 2" in capsys.readouterr().err


def test_usage_error_exit_code(tmp_path, capsys):
    assert run_cli(["build", "--input", "nope"]) == 1  # --out missing
    ds_path = tmp_path / "d.txt"
    ds_path.write_text("2 0 3 1\n0 0.0 ; 0.0\n1 1.0 ; 0.0\n2 2.0 ; 0.0\n")
    assert run_cli(["build", "--input", ds_path, "--k", 5,
                    "--out", tmp_path / "x"]) == 1
    assert "k must be" in capsys.readouterr().err


def test_query_two_point_example(tmp_path, capsys):
    ds_path = tmp_path / "two.txt"
    ds_path.write_text("2 0 2 1\n0 0.0 ; 0.0\n1 1.0 ; 0.0\n")
    q_path = tmp_path / "q.txt"
    q_path.write_text("0.0 -0.5 0.0 1\n")
    assert run_cli(["query", "--input", ds_path, "--queries", q_path]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 1
    fields = out[0].split("\t")
    assert fields[3] == "0"  # members: just point 0


def test_query_empty_file(tmp_path, capsys):
    ds_path = tmp_path / "two.txt"
    ds_path.write_text("2 0 2 1\n0 0.0 ; 0.0\n1 1.0 ; 0.0\n")
    q_path = tmp_path / "q.txt"
    q_path.write_text("")
    assert run_cli(["query", "--input", ds_path, "--queries", q_path]) == 0
    assert capsys.readouterr().out == ""


def test_query_random_validated(tmp_path):
    ds_path = tmp_path / "ds.txt"
    run_cli(["gen", "--n", 32, "--d", 2, "--s", 1, "--seed", 11, "--k", 3,
             "--out", ds_path])
    rng = np.random.default_rng(0)
    q_path = tmp_path / "q.txt"
    lines = [
        f"{t} {x} {y} 3"
        for t, x, y in zip(
            np.sort(rng.uniform(0, 1, size=50)),
            rng.uniform(-1.5, 1.5, size=50),
            rng.uniform(-1.5, 1.5, size=50),
        )
    ]
    q_path.write_text("\n".join(lines) + "\n")
    assert run_cli(["query", "--input", ds_path, "--k", 3, "--queries", q_path,
                    "--validate", "--out", tmp_path / "static.tsv"]) == 0
    assert run_cli(["query", "--input", ds_path, "--k", 3, "--queries", q_path,
                    "--kinetic", "--validate", "--out", tmp_path / "kin.tsv"]) == 0
    static = (tmp_path / "static.tsv").read_text()
    kinetic = (tmp_path / "kin.tsv").read_text()
    assert static == kinetic


def test_query_time_travel_exit(tmp_path, capsys):
    ds_path = tmp_path / "ds.txt"
    run_cli(["gen", "--n", 8, "--d", 2, "--s", 1, "--seed", 2, "--k", 1,
             "--out", ds_path])
    q_path = tmp_path / "q.txt"
    q_path.write_text("0.5 0.0 0.0 1\n0.1 0.0 0.0 1\n")
    assert run_cli(["query", "--input", ds_path, "--k", 1, "--queries", q_path,
                    "--kinetic"]) == 4
    assert "behind" in capsys.readouterr().err


def test_simulate_stationary(tmp_path, capsys):
    ds_path = tmp_path / "s.txt"
    ds_path.write_text("2 0 3 1\n0 0.0 ; 0.0\n1 1.0 ; 0.2\n2 -0.4 ; 0.7\n")
    assert run_cli(["simulate", "--input", ds_path, "--k", 1,
                    "--from", 0, "--to", 2]) == 0
    stats = dict(
        line.split("\t") for line in capsys.readouterr().out.splitlines()
    )
    assert stats["events"] == "0" and stats["chi_k"] == "0"


def test_simulate_linear_crossings_report_and_figure(tmp_path, capsys):
    ds_path = tmp_path / "lin.txt"
    ds_path.write_text(
        "2 1 3 1\n"
        "0 0.0 1.0 ; 0.0\n"
        "1 1.0 -1.0 ; 0.01\n"
        "2 0.4 ; 0.02\n"
    )
    report = tmp_path / "events.tsv"
    assert run_cli(["simulate", "--input", ds_path, "--k", 1, "--from", 0,
                    "--to", 1, "--report", report]) == 0
    assert report.exists() and report.with_suffix(".png").exists()
    ds = load_dataset(ds_path)
    swap_rows = [
        line.split("\t")
        for line in report.read_text().splitlines()
        if line.split("\t")[1] == "swap"
    ]
    # hand-solved linear roots per projection line must match the report
    from kinetic_rknn.cone_geometry import build_cone_family
    from kinetic_rknn.kinetic_engine import initialize

    state = initialize(ds.trajectories, 1, build_cone_family(2), 0.0)
    expected = []
    for line in state.lines:
        for a in range(3):
            for b in range(a + 1, 3):
                g = projected_difference(ds.trajectories[a], ds.trajectories[b],
                                         line.direction)
                if len(g) == 2:
                    root = -g[0] / g[1]
                    if 0.0 < root <= 1.0:
                        expected.append(root)
    expected.sort()
    got = sorted(float(row[0]) for row in swap_rows)
    assert len(got) == len(expected)
    assert all(abs(a - b) <= 1e-9 for a, b in zip(got, expected))


def test_simulate_sampled_oracle_sweep(tmp_path, capsys):
    ds_path = tmp_path / "r.txt"
    run_cli(["gen", "--n", 24, "--d", 2, "--s", 2, "--seed", 9, "--k", 3,
             "--out", ds_path])
    assert run_cli(["simulate", "--input", ds_path, "--k", 3, "--from", 0,
                    "--to", 1, "--sample", 25]) == 0
    stats = dict(
        line.split("\t") for line in capsys.readouterr().out.splitlines()
    )
    assert stats["mismatches"] == "0"
    assert int(stats["events"]) > 0


def test_validate_pass_and_fail_paths(tmp_path, capsys, monkeypatch):
    ds_path = tmp_path / "v.txt"
    run_cli(["gen", "--n", 20, "--d", 2, "--s", 1, "--seed", 4, "--k", 2,
             "--out", ds_path])
    assert run_cli(["validate", "--input", ds_path, "--k", 2, "--seeds", 1]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "pass" in out
    # a corrupted comparison must surface as exit 3 naming the check
    monkeypatch.setattr(cli, "knng_subgraph_check", lambda *a, **kw: False)
    assert run_cli(["validate", "--input", ds_path, "--k", 2]) == 3
    captured = capsys.readouterr()
    assert "knng_subgraph" in captured.out
    assert "first failure" in captured.err


def test_bench_rows_and_outputs(tmp_path, capsys):
    ds_path = tmp_path / "b.txt"
    run_cli(["gen", "--n", 24, "--d", 2, "--s", 1, "--seed", 5, "--k", 3,
             "--out", ds_path])
    out = tmp_path / "bench.tsv"
    assert run_cli(["bench", "--input", ds_path, "--k", 3, "--repeat", 1,
                    "--events", 200, "--out", out]) == 0
    phases = {line.split("\t")[0] for line in capsys.readouterr().out.splitlines()}
    assert {"static_build", "brute_ksyg", "static_query", "kinetic_events"} <= phases
    assert out.exists() and out.with_suffix(".png").exists()


def test_console_script_entry_point(tmp_path):
    ds_path = tmp_path / "c.txt"
    proc = subprocess.run(
        [sys.executable, "-m", "kinetic_rknn.cli", "gen", "--n", "6", "--d", "2",
         "--s", "0", "--seed", "1", "--out", str(ds_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and ds_path.exists()
