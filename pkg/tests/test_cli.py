import json
import os
import subprocess
import sys

import pytest

import rgcost
from rgcost import cycle_graph, format_graph, save_graph, torus_graph
from rgcost.cli import main


@pytest.fixture
def workdir(tmp_path):
    save_graph(cycle_graph(12), tmp_path / "c12.elist")
    save_graph(cycle_graph(14), tmp_path / "c14.elist")
    save_graph(torus_graph(4, 4), tmp_path / "t4.elist")
    (tmp_path / "z5.pres").write_text("gens: a\nrel: aaaaa\n")
    (tmp_path / "z2.pres").write_text("gens: a b\nrel: abAB\n")
    (tmp_path / "sub33.sub").write_text("sub: aaa\nsub: bbb\n")
    return tmp_path


def run_cli(args):
    return main([str(a) for a in args])


class TestStatsAndDistances:
    def test_stats_writes_distribution(self, workdir, capsys):
        out = workdir / "d.json"
        assert run_cli(["stats", "--graph", workdir / "c12.elist", "--r", 1,
                        "--out", out]) == 0
        data = json.loads(out.read_text())
        assert data["r"] == 1 and len(data["entries"]) == 1
        assert data["entries"][0]["p"] == 1.0

    def test_stats_with_coloring(self, workdir, capsys):
        col = workdir / "col.json"
        col.write_text(json.dumps([1, 2] * 6))
        assert run_cli(["stats", "--graph", workdir / "c12.elist", "--r", 0,
                        "--coloring", col]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["k"] == 2 and len(data["entries"]) == 2

    def test_bsdist(self, workdir, capsys):
        assert run_cli(["bsdist", "--graphs", workdir / "c12.elist",
                        workdir / "c14.elist", "--rmax", 2]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("graph_i")
        assert lines[1].endswith("0.0")

    def test_lgdist(self, workdir, capsys):
        assert run_cli(["lgdist", "--g1", workdir / "c12.elist", "--g2",
                        workdir / "c14.elist", "--r", 1, "--k", 2,
                        "--budget", 500, "--seed", 1]) == 0
        data = json.loads(capsys.readouterr().out)
        assert 0 <= data["heuristic_lower"] <= 1


class TestRewireCommands:
    def test_rewire_round_trip(self, workdir):
        out = workdir / "h.elist"
        report = workdir / "r.json"
        assert run_cli(["rewire", "--graph", workdir / "t4.elist", "--L", 3,
                        "--budget", 3000, "--seed", 7, "--out", out,
                        "--report", report]) == 0
        data = json.loads(report.read_text())
        assert data["valid"] is True
        assert data["density_out"] <= data["density_in"]
        h = rgcost.load_graph(out)
        assert rgcost.is_rewiring(rgcost.load_graph(workdir / "t4.elist"), h, 3).valid

    def test_ccost_csv(self, workdir, capsys):
        assert run_cli(["ccost", "--graphs", workdir / "c12.elist",
                        workdir / "c14.elist", "--L", 3, "--budget", 1500,
                        "--seed", 3]) == 0
        out = capsys.readouterr().out
        assert "liminf_proxy" in out
        assert "1.0" in out

    def test_transfer(self, workdir, capsys):
        assert run_cli(["transfer", "--from",
                        f"{workdir}/c12.elist,{workdir}/c12.elist",
                        "--to", workdir / "c14.elist", "--L", 1,
                        "--budget", 400, "--seed", 5]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["valid"] is True


class TestGroupCommands:
    def test_enumerate_and_rs(self, workdir, capsys):
        sch_path = workdir / "t3.json"
        assert run_cli(["enumerate", "--presentation", workdir / "z2.pres",
                        "--subgroup", workdir / "sub33.sub",
                        "--out", sch_path]) == 0
        data = json.loads(sch_path.read_text())
        assert data["n"] == 9
        assert run_cli(["rs-presentation", "--presentation", workdir / "z2.pres",
                        "--schreier", sch_path]) == 0
        rs = json.loads(capsys.readouterr().out)
        assert rs["generator_count"] == 10
        assert rs["abelianized_rank"] == 2

    def test_rankgrad_family(self, capsys):
        assert run_cli(["rankgrad", "--family", "Z2-torus", "--params", "2,3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].split(",")[0] == "index"
        assert lines[1].split(",")[3] == "0.25"
        assert lines[2].split(",")[3] == str(1 / 9)

    def test_farber(self, workdir, capsys, tmp_path):
        sch_path = tmp_path / "c8.json"
        fam = rgcost.builtin_family("Z-cycle", (8,))
        sch_path.write_text(fam.graphs[0].to_json())
        assert run_cli(["farber", "--schreier", sch_path, "--words", "a",
                        "--radius", "2", "--cayley", "free"]) == 0
        out = capsys.readouterr().out
        assert "fixed,a,0.0" in out
        assert "ball,r=2,1.0" in out

    def test_family_emits_files(self, tmp_path, capsys):
        assert run_cli(["family", "--family", "Z-cycle", "--params", "6,8",
                        "--out-dir", tmp_path / "fam"]) == 0
        files = sorted(os.listdir(tmp_path / "fam"))
        assert "Z-cycle.pres" in files
        assert any(name.endswith(".schreier.json") for name in files)
        assert any(name.endswith(".elist") for name in files)


class TestPartitionAndTrichotomy:
    def test_partition(self, workdir, capsys):
        assert run_cli(["partition", "--graph", workdir / "t4.elist", "--k", 2,
                        "--eps", 0.3, "--budget", 4000, "--seed", 0]) == 0
        data = json.loads(capsys.readouterr().out)
        assert sorted(data["block_sizes"]) == [8, 8]

    def test_trichotomy_family(self, capsys):
        assert run_cli(["trichotomy", "--family", "Z2-torus", "--params", "4",
                        "--c", 0.5, "--budget", 4000, "--seed", 0]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data[0]["branch"] == "vanishing-quotient"


class TestErrorsAndDeterminism:
    def test_malformed_graph_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.elist"
        bad.write_text("graph 3 1 2\n0 9\n")
        code = run_cli(["stats", "--graph", bad, "--r", 1])
        assert code == 2
        err = capsys.readouterr().err
        assert "line 2" in err

    def test_missing_file_exit_2(self, tmp_path):
        assert run_cli(["stats", "--graph", tmp_path / "absent.elist",
                        "--r", 1]) == 2

    def test_coset_cap_exit_1(self, tmp_path):
        free = tmp_path / "free.pres"
        free.write_text("gens: a b\n")
        assert run_cli(["enumerate", "--presentation", free,
                        "--max-cosets", 40]) == 1

    def test_deterministic_outputs(self, workdir):
        out1 = workdir / "h1.elist"
        out2 = workdir / "h2.elist"
        for out in (out1, out2):
            assert run_cli(["rewire", "--graph", workdir / "t4.elist", "--L", 2,
                            "--budget", 2000, "--seed", 11, "--out", out]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_graph_format_bit_exact_round_trip(self, workdir):
        text = (workdir / "t4.elist").read_text()
        assert format_graph(rgcost.parse_graph(text)) == text


class TestRunSpec:
    def test_run_writes_manifest(self, workdir, tmp_path):
        out_dir = tmp_path / "exp"
        spec = {
            "seed": 9,
            "out_dir": str(out_dir),
            "analyses": [
                {"kind": "stats", "graph": str(workdir / "c12.elist"), "r": 1},
                {"kind": "ccost",
                 "graphs": [str(workdir / "c12.elist"), str(workdir / "c14.elist")],
                 "L": 2, "budget": 800},
            ],
        }
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        assert run_cli(["run", "--spec", spec_path]) == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert str(workdir / "c12.elist") in manifest["inputs"]
        digest = manifest["inputs"][str(workdir / "c12.elist")]
        assert len(digest) == 64
        assert len(manifest["outputs"]) == 2

    def test_run_records_errors(self, tmp_path):
        out_dir = tmp_path / "exp2"
        spec = {
            "seed": 1,
            "out_dir": str(out_dir),
            "analyses": [
                {"kind": "stats", "graph": str(tmp_path / "missing.elist"), "r": 1},
            ],
        }
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        assert run_cli(["run", "--spec", spec_path]) == 1
        errors = json.loads((out_dir / "errors.json").read_text())
        assert errors and errors[0]["kind"] == "stats"

    def test_console_script_entry(self):
        proc = subprocess.run(
            [sys.executable, "-m", "rgcost.cli", "rankgrad", "--family",
             "Z-cycle", "--params", "5"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith("index")
