import csv
import json
import subprocess
import sys

import pytest

from ddpmine import cli

TINY = "1 3\n2 3\n1 2 3\n3 4\n3 4\n"


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.txt"
    p.write_text(TINY)
    return p


@pytest.fixture
def items(tmp_path):
    # 2000 single-item owners: item 0 at 0.5, 1 at 0.3, 2 at 0.2
    p = tmp_path / "items.txt"
    p.write_text("".join(f"{0 if i % 10 < 5 else 1 if i % 10 < 8 else 2}\n" for i in range(2000)))
    return p


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_oracle_hand_enumerated(tiny, capsys):
    assert cli.main(["oracle", str(tiny), "--f", "0.4"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["1\t2", "2\t2", "3\t5", "4\t2", "1 3\t2", "2 3\t2", "3 4\t2"]


def test_oracle_edge_cases(tiny, tmp_path, capsys):
    assert cli.main(["oracle", str(tiny), "--f", "1.01"]) == cli.EXIT_CONFIG
    assert cli.main(["oracle", str(tiny), "--f", "0.99"]) == 0
    assert capsys.readouterr().out == "3\t5\n"
    (tmp_path / "two.txt").write_text("1\n2\n")
    assert cli.main(["oracle", str(tmp_path / "two.txt"), "--f", "0.6"]) == 0
    assert capsys.readouterr().out == ""
    assert cli.main(["oracle", str(tmp_path / "missing.txt"), "--f", "0.5"]) == cli.EXIT_IO
    (tmp_path / "bad.txt").write_bytes(b"1\n\xff\n")
    assert cli.main(["oracle", str(tmp_path / "bad.txt"), "--f", "0.5"]) == cli.EXIT_IO
    assert "line 2" in capsys.readouterr().err


def test_oracle_sequence(tmp_path, capsys):
    (tmp_path / "s.txt").write_text("a b c\nb c\nc b\n")
    assert cli.main(["oracle", str(tmp_path / "s.txt"), "--f", "0.6", "--kind", "sequence"]) == 0
    assert capsys.readouterr().out.splitlines() == ["b\t3", "c\t3", "b c\t2"]


def test_run_exhaustive_matches_oracle(tiny, tmp_path, capsys):
    out = tmp_path / "o"
    args = ["run", "--dataset", str(tiny), "--f", "0.4", "--noise", "off", "--exhaustive", "--out", str(out)]
    assert cli.main(args) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["schema_version"] == cli.SCHEMA_VERSION
    assert rep["status"] == "ok"
    assert rep["result"]["f1"] == 1.0
    assert sorted(rep["result"]["mined"]) == sorted(rep["result"]["truth"])
    assert len(rep["result"]["truth"]) == 7
    assert rep["dataset"]["sha256"]
    row = _rows(out / "results.csv")[0]
    assert list(row) == cli.CSV_COLUMNS
    assert float(row["f1"]) == 1.0


def test_defaults_in_report(tiny, tmp_path):
    cli.main(["run", "--dataset", str(tiny), "--f", "0.4", "--noise", "off", "--exhaustive", "--out", str(tmp_path)])
    p = json.loads((tmp_path / "report.json").read_text())["params"]
    assert (p["P"], p["K"], p["epsilon"], p["eta_g"], p["eta_s"]) == (1000, 50, 2.0, 0.01, 0.01)
    assert p["tau"] == 20_000
    assert set(cli.PARAMS) <= set(p)


def test_run_is_byte_identical(items, tmp_path):
    outs = []
    for name in ("a", "b"):
        args = ["run", "--dataset", str(items), "--kind", "item", "--f", "0.25", "--P", "100", "--tau", "500",
                "--seed", "3", "--out", str(tmp_path / name)]
        assert cli.main(args) == 0
        outs.append(((tmp_path / name / "report.json").read_bytes(), (tmp_path / name / "results.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_csv_numbers_round_trip(items, tmp_path):
    cli.main(["run", "--dataset", str(items), "--kind", "item", "--f", "0.25", "--P", "100", "--tau", "500",
              "--out", str(tmp_path)])
    row = _rows(tmp_path / "results.csv")[0]
    rep = json.loads((tmp_path / "report.json").read_text())
    for k in ("f1", "precision", "recall"):
        assert float(row[k]) == rep["result"][k]
    assert int(row["owners"]) == rep["result"]["owners_used"]
    assert float(row["epsilon"]) == 2.0 and int(row["K"]) == 50


def test_report_command(items, tmp_path, capsys):
    cli.main(["run", "--dataset", str(items), "--kind", "item", "--f", "0.25", "--P", "100", "--tau", "500",
              "--out", str(tmp_path)])
    capsys.readouterr()
    assert cli.main(["report", str(tmp_path / "report.json")]) == 0
    assert "f1=" in capsys.readouterr().out
    assert cli.main(["report", str(tmp_path / "report.json"), "--csv"]) == 0
    assert capsys.readouterr().out == (tmp_path / "results.csv").read_text()
    (tmp_path / "junk.json").write_text("nope")
    assert cli.main(["report", str(tmp_path / "junk.json")]) == cli.EXIT_CONFIG


def test_exit_codes(items, tmp_path):
    base = ["run", "--dataset", str(items), "--kind", "item", "--out", str(tmp_path)]
    assert cli.main(base + ["--f", "1.5"]) == cli.EXIT_CONFIG
    assert cli.main(base + ["--f", "0.2", "--P", "100", "--tau", "50"]) == cli.EXIT_CONFIG
    assert cli.main(base + ["--strategy", "greedy"]) == cli.EXIT_CONFIG
    assert cli.main(["run", "--workload", "nope", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert cli.main(base + ["--f", "0.25", "--P", "100", "--owner-cap", "150"]) == cli.EXIT_EXHAUSTED
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["status"] == "exhausted" and rep["result"]["exhausted"]
    assert cli.main(["run", "--dataset", str(tmp_path / "absent.txt"), "--out", str(tmp_path)]) == cli.EXIT_IO


def test_config_file_and_precedence(items, tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"dataset": str(items), "kind": "item", "f": 0.25, "P": 100,
                                                  "tau": 500, "seed": 4}))
    (tmp_path / "c.conf").write_text(f"# comment\ndataset = {items}\nkind = item\nf = 0.25\nP = 100\ntau = 500\n")
    p = cli.resolve(cli.read_config(tmp_path / "c.json"), {"seed": 9, "P": None})
    assert p["seed"] == 9 and p["P"] == 100 and p["tau"] == 500
    q = cli.resolve(cli.read_config(tmp_path / "c.conf"), {})
    assert q["f"] == 0.25 and q["kind"] == "item" and q["seed"] == 0
    assert cli.main(["run", "--config", str(tmp_path / "c.conf"), "--seed", "2", "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["params"]["seed"] == 2
    (tmp_path / "bad.conf").write_text("f 0.2\n")
    assert cli.main(["run", "--config", str(tmp_path / "bad.conf")]) == cli.EXIT_CONFIG
    (tmp_path / "unk.json").write_text('{"colour": 1}')
    assert cli.main(["run", "--config", str(tmp_path / "unk.json")]) == cli.EXIT_CONFIG


def test_preset_then_overrides():
    p = cli.resolve({}, {"workload": "desk", "epsilon": 4.0})
    assert p["workload"] == "desk" and p["epsilon"] == 4.0 and p["f"] == 0.05 and p["n_owners"] == 50_000


def test_output_dir_env(items, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["run", "--dataset", str(items), "--kind", "item", "--f", "0.25", "--P", "100",
                     "--tau", "500"]) == 0
    assert (tmp_path / "envout" / "report.json").exists()


def test_sweep_grid_row_count(items, tmp_path):
    args = ["sweep", "--dataset", str(items), "--kind", "item", "--f", "0.05", "--epsilon", "1,2,4",
            "--K", "25,50", "--P", "100", "--tau", "100", "--jobs", "1", "--out", str(tmp_path / "a")]
    assert cli.main(args) == 0
    rows = _rows(tmp_path / "a" / "sweep.csv")
    assert len(rows) == 30
    assert list(rows[0]) == cli.CSV_COLUMNS
    assert {(r["epsilon"], r["K"]) for r in rows} == {(e, k) for e in ("1.0", "2.0", "4.0") for k in ("25", "50")}
    assert len({r["seed"] for r in rows}) == 5
    assert not any(r["error"] for r in rows)
    # the pool path yields the same file
    args[-3:] = ["2", "--out", str(tmp_path / "b")]
    assert cli.main(args) == 0
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_sweep_records_failures(items, tmp_path):
    args = ["sweep", "--dataset", str(items), "--kind", "item", "--f", "0.25", "--P", "100", "--tau", "500",
            "--owner-cap", "150", "--seeds", "2", "--jobs", "1", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    rows = _rows(tmp_path / "sweep.csv")
    assert len(rows) == 2 and all(r["exhausted"] == "1" and not r["error"] for r in rows)


def test_sweep_empty_grid(items, tmp_path):
    (tmp_path / "g.json").write_text(json.dumps({"dataset": str(items), "kind": "item", "epsilon": []}))
    assert cli.main(["sweep", "--config", str(tmp_path / "g.json"), "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_console_script(tiny):
    res = subprocess.run([sys.executable, "-m", "ddpmine.cli", "oracle", str(tiny), "--f", "0.9"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout == "3\t5\n"
