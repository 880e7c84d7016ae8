import csv
import json
import os
import subprocess
import sys

import pytest
from click.testing import CliRunner

from barebones.cli import main
from barebones.engine import run
from barebones.harness import write_network
from barebones.phys import PhysicalConfig, build_comm_graph


@pytest.fixture
def runner():
    return CliRunner()


def write_scenario(path, **kw):
    obj = {"schema": 1, "name": "path3_dfs", "generator": {"kind": "path", "n": 3},
           "protocol": "wireless_dfs", "seeds": [0, 1], "record": "full", **kw}
    path.write_text(json.dumps(obj))
    return path


def test_run_writes_metrics(runner, tmp_path):
    sc = write_scenario(tmp_path / "path3_dfs.json")
    res = runner.invoke(main, ["run", "--scenario", str(sc), "--out", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output
    rows = list(csv.DictReader(open(tmp_path / "out" / "path3_dfs-metrics.csv")))
    assert [r["seed"] for r in rows] == ["0", "1"] and all(r["success"] == "1" for r in rows)
    assert (tmp_path / "out" / "path3_dfs-seed0.trace.jsonl").exists()


def test_missing_and_malformed_scenario(runner, tmp_path):
    assert runner.invoke(main, ["run", "--scenario", str(tmp_path / "nope.json")]).exit_code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert runner.invoke(main, ["run", "--scenario", str(bad)]).exit_code == 2
    typo = write_scenario(tmp_path / "typo.json", sedes=3)
    res = runner.invoke(main, ["run", "--scenario", str(typo)])
    assert res.exit_code == 2 and "sedes" in res.output


def test_round_limit_exit(runner, tmp_path):
    sc = write_scenario(tmp_path / "s.json")
    res = runner.invoke(main, ["run", "--scenario", str(sc), "--out", str(tmp_path / "o"),
                               "--round-limit", "20"])
    assert res.exit_code == 1


def test_parallel_matches_serial(runner, tmp_path):
    sc = write_scenario(tmp_path / "s.json", record="summary",
                        generator={"kind": "uniform_square", "n": 12})
    for par, out in (("1", "a"), ("3", "b")):
        res = runner.invoke(main, ["run", "--scenario", str(sc), "--out", str(tmp_path / out),
                                   "--seeds", "6", "--parallel", par])
        assert res.exit_code == 0, res.output
    a = sorted((tmp_path / "a" / "path3_dfs-metrics.csv").read_text().splitlines())
    b = sorted((tmp_path / "b" / "path3_dfs-metrics.csv").read_text().splitlines())
    assert a == b and len(a) == 7
    for s in range(6):
        name = f"path3_dfs-seed{s}.trace.jsonl"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_verify_family(runner, tmp_path):
    res = runner.invoke(main, ["verify-family", "--N", "8", "--ssf", "2"])
    assert res.exit_code == 0 and "valid" in res.output and "length" in res.output
    assert runner.invoke(main, ["verify-family", "--N", "30", "--ssf", "6"]).exit_code == 3
    fam = tmp_path / "fam.json"
    fam.write_text("[[1, 2]]")
    res = runner.invoke(main, ["verify-family", "--N", "2", "--ssf", "2", "--family", str(fam)])
    assert res.exit_code == 1 and "INVALID" in res.output
    assert runner.invoke(main, ["verify-family", "--N", "6", "--selector", "3", "2"]).exit_code == 0
    assert runner.invoke(main, ["verify-family", "--N", "6"]).exit_code == 2
    assert runner.invoke(main, ["verify-family", "--N", "6", "--selector", "2", "3"]).exit_code == 2


def test_check_trace(runner, tmp_path):
    sc = write_scenario(tmp_path / "s.json")
    out = tmp_path / "o"
    assert runner.invoke(main, ["run", "--scenario", str(sc), "--out", str(out)]).exit_code == 0
    trace, net = out / "path3_dfs-seed0.trace.jsonl", out / "path3_dfs-seed0.net"
    assert runner.invoke(main, ["check-trace", str(trace), "--network", str(net)]).exit_code == 0
    lines = trace.read_text().splitlines()
    for i, line in enumerate(lines):
        rec = json.loads(line)
        if rec.get("rx"):
            rec["rx"][0][1] = 3 - rec["rx"][0][1] if rec["rx"][0][1] != 2 else 1
            lines[i] = json.dumps(rec)
            bad_round = rec["round"]
            break
    edited = tmp_path / "edited.jsonl"
    edited.write_text("\n".join(lines) + "\n")
    res = runner.invoke(main, ["check-trace", str(edited), "--network", str(net)])
    assert res.exit_code == 1 and f"round {bad_round}" in res.output
    garbage = tmp_path / "g.jsonl"
    garbage.write_text('{"round": 1}\n')
    assert runner.invoke(main, ["check-trace", str(garbage), "--network", str(net)]).exit_code == 2


def test_check_empty_trace(runner, tmp_path):
    net = build_comm_graph([(1, 0.0, 0.0)], 1, PhysicalConfig())

    class Idle:
        def execute(self, sim):
            return None

    trace = run(Idle(), net, "synchronized")
    (tmp_path / "t.jsonl").write_text(trace.dumps())
    write_network(net, tmp_path / "n.net")
    res = runner.invoke(main, ["check-trace", str(tmp_path / "t.jsonl"),
                               "--network", str(tmp_path / "n.net")])
    assert res.exit_code == 0, res.output


def test_stats(runner, tmp_path):
    sc = write_scenario(tmp_path / "s.json")
    res = runner.invoke(main, ["stats", "--scenario", str(sc)])
    assert res.exit_code == 0 and "0,3,12,2,2,1" in res.output
    out = tmp_path / "o"
    runner.invoke(main, ["run", "--scenario", str(sc), "--out", str(out)])
    res = runner.invoke(main, ["stats", str(out / "path3_dfs-metrics.csv")])
    assert res.exit_code == 0 and res.output.splitlines()[1].startswith("3,2,1.000")
    assert runner.invoke(main, ["stats"]).exit_code == 2


def test_cache_dir_env(tmp_path):
    env = {**os.environ, "BAREBONES_CACHE_DIR": str(tmp_path / "cache")}
    res = subprocess.run([sys.executable, "-m", "barebones.cli", "verify-family", "--N", "6",
                          "--ssf", "2"], env=env, capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    sc = write_scenario(tmp_path / "s.json", seeds=[0])
    res = subprocess.run([sys.executable, "-m", "barebones.cli", "run", "--scenario", str(sc),
                          "--out", str(tmp_path / "o")], env=env, capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert list((tmp_path / "cache").glob("family-ssf-6-2-*.json"))
    assert list((tmp_path / "cache").glob("family-*-12-*.json"))
