"""The command-line harness, end to end on small instances."""

import json

import pytest

from conftest import example_instance
from odtomo.cli import main
from odtomo.datasets import fixture_path
from odtomo.simulator import measure, write_csv

TRIANGLE = {
    "name": "triangle",
    "nodes": ["a", "b", "c"],
    "edges": [
        {"from": "a", "to": "b", "time": 1.0},
        {"from": "b", "to": "c", "time": 1.0},
        {"from": "a", "to": "c", "time": 3.0},
    ],
}


@pytest.fixture
def triangle_file(tmp_path):
    p = tmp_path / "triangle.json"
    p.write_text(json.dumps(TRIANGLE))
    return str(p)


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestSimulate:
    def test_shapes_and_reruns_identical(self, triangle_file, tmp_path):
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        for out in (out1, out2):
            rc = run_cli(
                "simulate", "--network", triangle_file, "--k", 3,
                "--samples", "1000", "--trials", 1, "--seed", 5, "--out", out,
            )
            assert rc == 0
        csv1 = out1 / "trial_000" / "measurements_n1000.csv"
        csv2 = out2 / "trial_000" / "measurements_n1000.csv"
        lines = csv1.read_text().splitlines()
        assert lines[0] == "edge_0,edge_1,edge_2"
        assert len(lines) == 1001
        assert csv1.read_bytes() == csv2.read_bytes()
        truth1 = (out1 / "trial_000" / "truth.json").read_bytes()
        truth2 = (out2 / "trial_000" / "truth.json").read_bytes()
        assert truth1 == truth2

    def test_sioux_falls_truth_paths_distinct(self, tmp_path):
        rc = run_cli(
            "simulate", "--network", fixture_path("siouxfalls_net.tntp"),
            "--k", 5, "--samples", "10", "--trials", 1, "--seed", 1,
            "--out", tmp_path / "sf",
        )
        assert rc == 0
        truth = json.loads((tmp_path / "sf" / "trial_000" / "truth.json").read_text())
        assert truth["schema"] == "odtomo.truth/1"
        assert truth["k"] == 5
        paths = [tuple(p) for p in truth["paths"]]
        assert len(set(paths)) == 5

    def test_infeasible_k_fails_cleanly(self, triangle_file, tmp_path):
        rc = run_cli(
            "simulate", "--network", triangle_file, "--k", 10,
            "--samples", "10", "--trials", 1, "--out", tmp_path / "x",
        )
        assert rc == 1

    def test_partial_observation_plan_file(self, triangle_file, tmp_path):
        plan = tmp_path / "sensors.txt"
        plan.write_text("0 1\n")
        rc = run_cli(
            "simulate", "--network", triangle_file, "--k", 3,
            "--samples", "50", "--trials", 1, "--seed", 3,
            "--observe", plan, "--out", tmp_path / "partial",
        )
        assert rc == 0
        csv = tmp_path / "partial" / "trial_000" / "measurements_n50.csv"
        assert csv.read_text().splitlines()[0] == "edge_0,edge_1"
        truth = json.loads(
            (tmp_path / "partial" / "trial_000" / "truth.json").read_text()
        )
        assert truth["observed"] == [0, 1]
        # indicators are projected onto the two observed edges
        assert all(len(c["indicator"]) == 2 for c in truth["classes"])


class TestEstimate:
    def test_example_model_large_sample(self, triangle, tmp_path):
        # the worked example sampled at scale: all four footprints found and
        # rates within 5 percent
        inst = example_instance(triangle)
        ms = measure(inst, 3_000_000)
        csv = tmp_path / "m.csv"
        write_csv(ms, str(csv))
        out = tmp_path / "result.json"
        rc = run_cli("estimate", "--measurements", csv, "--out", out)
        assert rc == 0
        doc = json.loads(out.read_text())
        got = dict(zip(doc["support"], doc["means"]))
        expected = {"100": 1.0, "010": 3.0, "001": 2.0, "110": 1.0}
        assert set(got) == set(expected)
        for key, lam in expected.items():
            assert abs(got[key] - lam) <= 0.05 * lam

    def test_empty_traffic(self, tmp_path):
        csv = tmp_path / "zero.csv"
        csv.write_text("edge_0,edge_1\n" + "0,0\n" * 50)
        out = tmp_path / "r.json"
        rc = run_cli("estimate", "--measurements", csv, "--out", out)
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["support"] == []

    def test_exact_mode_recovers_truth(self, triangle_file, tmp_path):
        rc = run_cli(
            "simulate", "--network", triangle_file, "--k", 3,
            "--samples", "10", "--trials", 1, "--seed", 9, "--out", tmp_path / "sim",
        )
        assert rc == 0
        truth_file = tmp_path / "sim" / "trial_000" / "truth.json"
        out = tmp_path / "exact.json"
        rc = run_cli("estimate", "--exact", "--truth", truth_file, "--out", out)
        assert rc == 0
        doc = json.loads(out.read_text())
        truth = json.loads(truth_file.read_text())
        expected = {c["indicator"]: c["mean"] for c in truth["classes"]}
        got = dict(zip(doc["support"], doc["means"]))
        assert set(got) == set(expected)
        for key, lam in expected.items():
            assert got[key] == pytest.approx(lam, abs=1e-9)

    def test_requires_inputs(self, capsys):
        assert run_cli("estimate") == 2
        assert run_cli("estimate", "--exact") == 2

    def test_malformed_csv(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("edge_0\n1\nnot-a-number\n")
        assert run_cli("estimate", "--measurements", bad) == 1


class TestBenchmark:
    def test_report_schema_and_summaries(self, triangle_file, tmp_path):
        out = tmp_path / "report.csv"
        rc = run_cli(
            "benchmark", "--network", triangle_file, "--k", 3,
            "--samples", "200,2000", "--trials", 3, "--seed", 2, "--out", out,
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == (
            "kind,network,k,n_samples,trial,rel_total_flow_error,"
            "support_precision,support_recall,truncated"
        )
        trial_rows = [l for l in lines if l.startswith("trial,")]
        assert len(trial_rows) == 6  # 3 trials x 2 sample counts
        means = [l for l in lines if l.startswith("mean,")]
        medians = [l for l in lines if l.startswith("median,")]
        assert len(means) == len(medians) == 2
        # summary mean is recomputable from the trial rows
        for mean_line in means:
            fields = mean_line.split(",")
            n = fields[3]
            errs = [
                float(l.split(",")[5]) for l in trial_rows if l.split(",")[3] == n
            ]
            assert float(fields[5]) == pytest.approx(sum(errs) / len(errs))
        timing = out.with_name("report_timings.csv")
        assert timing.exists()
        assert timing.read_text().splitlines()[0] == "k,trial,n_samples,runtime_ms"

    def test_exact_mode_zero_error(self, triangle_file, tmp_path):
        out = tmp_path / "exact.csv"
        rc = run_cli(
            "benchmark", "--network", triangle_file, "--k", 3,
            "--samples", "100", "--trials", 1, "--seed", 4, "--exact", "--out", out,
        )
        assert rc == 0
        row = [l for l in out.read_text().splitlines() if l.startswith("trial,")][0]
        fields = row.split(",")
        assert float(fields[5]) == 0.0
        assert float(fields[6]) == 1.0 and float(fields[7]) == 1.0

    def test_multi_k_summary_blocks(self, tmp_path):
        out = tmp_path / "multi.csv"
        rc = run_cli(
            "benchmark", "--network", fixture_path("nsfnet.json"),
            "--k", "2,4", "--samples", "200", "--trials", 2, "--seed", 6,
            "--exact", "--out", out,
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        ks = {l.split(",")[2] for l in lines if l.startswith("mean,")}
        assert ks == {"2", "4"}

    def test_determinism_byte_identical(self, triangle_file, tmp_path):
        outs = []
        for name in ("r1.csv", "r2.csv"):
            out = tmp_path / name
            rc = run_cli(
                "benchmark", "--network", triangle_file, "--k", 3,
                "--samples", "100,500", "--trials", 2, "--seed", 11,
                "--jobs", 2, "--out", out,
            )
            assert rc == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
