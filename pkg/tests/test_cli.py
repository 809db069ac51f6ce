import csv
import subprocess
import sys

import pytest

from rarecause import simulate_scenario
from rarecause.cli import main, parse_seeds
from rarecause.ingest import make_fixture, read_trajectory_csv, write_trajectory_csv


def run(argv, capsys=None):
    try:
        code = main([str(a) for a in argv])
    except SystemExit as exc:
        code = exc.code
    if capsys is not None:
        out = capsys.readouterr()
        return code, out.out, out.err
    return code


def kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines())


class TestSimulate:
    def test_writes_dataset(self, tmp_path):
        out = tmp_path / "d.csv"
        assert run(["simulate", "--scenario", "single-link-H1", "--n", 20, "--seed", 7,
                    "--out", out]) == 0
        ds = read_trajectory_csv(out)
        assert len(ds) == 20 and ds.max_horizon == 500

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run(["simulate", "--scenario", "multi-link-H1", "--links", 3, "--n", 5,
                 "--seed", 7, "--out", path])
        assert a.read_bytes() == b.read_bytes()

    @pytest.mark.parametrize("argv", [
        ["--n", 0], ["--scenario", "nope"], ["--mu0", 2.0], ["--p", 1.5],
    ])
    def test_usage_errors(self, tmp_path, argv, capsys):
        code, _, err = run(["simulate", "--out", tmp_path / "x.csv"] + argv, capsys)
        assert code == 2 and "error" in err

    def test_missing_out(self, capsys):
        assert run(["simulate", "--n", 5], capsys)[0] == 2

    def test_flag_overrides(self, tmp_path):
        out = tmp_path / "d.csv"
        run(["simulate", "--n", 3, "--horizon", 12, "--noise-half-width", 0, "--burn-in", 0,
             "--p", 0, "--out", out])
        ds = read_trajectory_csv(out)
        assert ds.max_horizon == 12 and (ds.states == 100.0).all()

    def test_config_file_and_flag_precedence(self, tmp_path):
        cfg = tmp_path / "sim.cfg"
        cfg.write_text("# experiment\nscenario = multi-link-H0\nn = 4\nlinks = 3\n"
                       "horizon = 9\nnoise_half_width = 2.5\n")
        out = tmp_path / "d.csv"
        assert run(["simulate", "--config", cfg, "--out", out, "--horizon", 7]) == 0
        ds = read_trajectory_csv(out)
        assert (len(ds), ds.dimension, ds.max_horizon) == (4, 3, 7)

    @pytest.mark.parametrize("body", ["scenario = bogus\n", "colour = red\n", "no equals sign\n",
                                      "method = bayes\n"])
    def test_bad_config(self, tmp_path, body):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text(body)
        assert run(["simulate", "--config", cfg, "--out", tmp_path / "d.csv"]) == 2


class TestTest:
    def test_fixture(self, two_traj_csv, capsys):
        code, out, err = run(["test", "--input", two_traj_csv, "--method", "dkw"], capsys)
        rep = kv(out)
        assert code == 0
        assert float(rep["statistic"]) == pytest.approx(0.25, abs=1e-12)
        assert rep["argmax_point"] == "1.0" and rep["grid_size"] == "3"
        assert rep["threshold_method"] == "dkw-conservative" and rep["p_value"] == ""
        assert "fail-to-reject" in err

    def test_mc_writes_out_file(self, tmp_path, two_traj_csv):
        out = tmp_path / "r.txt"
        assert run(["test", "--input", two_traj_csv, "--n-null", 100, "--seed", 3,
                    "--out", out]) == 0
        first = out.read_text()
        run(["test", "--input", two_traj_csv, "--n-null", 100, "--seed", 3, "--out", out])
        assert out.read_text() == first
        rep = kv(first)
        assert rep["threshold_method"] == "monte-carlo-null" and rep["n_null"] == "100"
        assert 0 < float(rep["p_value"]) <= 1

    def test_h1_rejects(self, tmp_path, capsys):
        path = tmp_path / "h1.csv"
        write_trajectory_csv(simulate_scenario("single-link-H1", 2000, seed=7), path)
        code, out, _ = run(["test", "--input", path, "--method", "dkw"], capsys)
        assert code == 0 and kv(out)["decision"] == "reject-H0"

    def test_event_free(self, tmp_path, capsys):
        path = tmp_path / "none.csv"
        path.write_text("traj_id,t,x_1,event\na,0,1.0,\na,1,2.0,0\n")
        code, _, err = run(["test", "--input", path, "--method", "dkw"], capsys)
        assert code == 3 and "no event-bearing trajectories" in err

    def test_keep_no_event(self, tmp_path, capsys):
        path = tmp_path / "mixed.csv"
        path.write_text("traj_id,t,x_1,event\na,0,1.0,\na,1,2.0,0\nb,0,3.0,\nb,1,4.0,1\n")
        _, out, _ = run(["test", "--input", path, "--method", "dkw"], capsys)
        assert kv(out)["n_trajectories"] == "1" and float(kv(out)["statistic"]) == 0.0
        _, out, _ = run(["test", "--input", path, "--method", "dkw", "--keep-no-event"], capsys)
        assert float(kv(out)["statistic"]) == 0.5

    def test_malformed_input(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("traj_id,t,x_1,event\na,0,nan,\n")
        code, _, err = run(["test", "--input", path], capsys)
        assert code == 3 and "line 2" in err

    def test_missing_file(self, tmp_path):
        assert run(["test", "--input", tmp_path / "nope.csv"]) == 3

    @pytest.mark.parametrize("argv", [["--alpha", 1.5], ["--n-null", 10], ["--method", "x"]])
    def test_usage(self, two_traj_csv, argv):
        assert run(["test", "--input", two_traj_csv] + argv) == 2


class TestBaseline:
    def test_fixture(self, two_traj_csv, capsys):
        code, out, _ = run(["baseline", "--input", two_traj_csv], capsys)
        rep = kv(out)
        assert code == 0 and float(rep["statistic"]) == 0.5 and rep["argmax_point"] == "1.0"
        assert rep["n_conditional"] == "1" and rep["n_total"] == "2"

    def test_empty_conditional(self, tmp_path, capsys):
        path = tmp_path / "late.csv"
        path.write_text("traj_id,t,x_1,event\na,0,1.0,\na,1,2.0,0\na,2,2.0,1\n")
        code, _, err = run(["baseline", "--input", path], capsys)
        assert code == 3 and "conditional sample empty" in err

    def test_all_at_one(self, tmp_path, capsys):
        path = tmp_path / "ones.csv"
        path.write_text("traj_id,t,x_1,event\na,0,1.0,\na,1,2.0,1\nb,0,5.0,\nb,1,2.0,1\n")
        _, out, _ = run(["baseline", "--input", path], capsys)
        assert float(kv(out)["statistic"]) == 0.0


class TestCdf:
    def test_fixture_dump(self, two_traj_csv, tmp_path):
        out = tmp_path / "cdf.csv"
        assert run(["cdf", "--input", two_traj_csv, "--out", out, "--baseline"]) == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["x_1", "b1", "b2", "baseline_conditional_t1", "baseline_unconditional_t1"]
        vals = [[float(v) for v in r] for r in rows[1:]]
        assert [r[0] for r in vals] == [1.0, 2.0, 3.0]
        assert [r[1] for r in vals] == [0.0, 0.5, 1.0]
        assert [r[2] for r in vals] == pytest.approx([0.25, 0.75, 1.0], abs=1e-12)
        assert [r[3] for r in vals] == [0.0, 0.0, 1.0]
        assert [r[4] for r in vals] == [0.5, 0.5, 1.0]

    def test_single_trajectory(self, tmp_path, capsys):
        path = tmp_path / "one.csv"
        path.write_text("traj_id,t,x_1,event\na,0,5.0,\na,1,5.0,1\n")
        code, out, _ = run(["cdf", "--input", path], capsys)
        assert code == 0
        assert out.splitlines() == ["x_1,b1,b2", "5.0,1.0,1.0"]


class TestCurves:
    def test_one_cell(self, tmp_path):
        out = tmp_path / "c.csv"
        assert run(["curves", "--scenario", "single-link-H0", "--n", 50, "--seeds", 1,
                    "--methods", "ours", "--out", out]) == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["scenario", "N", "seed", "method", "statistic"]
        assert len(rows) == 2 and rows[1][:4] == ["single-link-H0", "50", "1", "ours"]

    def test_append_only_and_workers(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = ["curves", "--scenario", "single-link-H0", "multi-link-H1", "--n", 30, 60,
                "--seeds", "1-2"]
        run(base + ["--out", a])
        run(base[:-2] + ["--seeds", "1"] + ["--out", b])
        run(base + ["--out", b, "--workers", 2])
        assert a.read_bytes() == b.read_bytes()
        before = a.read_bytes()
        run(base + ["--out", a])
        assert a.read_bytes() == before
        labels = {r[0] for r in csv.reader(a.open())}
        assert "multi-link-H1:R2" in labels

    def test_baseline_na_cells(self, tmp_path):
        out = tmp_path / "c.csv"
        run(["curves", "--scenario", "single-link-H0", "--n", 30, "--seeds", "1-6",
             "--methods", "baseline", "--out", out])
        stats = [r[4] for r in csv.reader(out.open())][1:]
        assert "NA" in stats and len(stats) == 6

    def test_from_csv(self, tmp_path):
        src = tmp_path / "src.csv"
        write_trajectory_csv(simulate_scenario("single-link-H1", 40, seed=1), src)
        out = tmp_path / "c.csv"
        assert run(["curves", "--scenario", "from-csv", "--input", src, "--n", 20, 1000,
                    "--seeds", "1", "--methods", "ours", "--out", out]) == 0
        rows = list(csv.reader(out.open()))[1:]
        assert [r[4] == "NA" for r in rows] == [False, True]

    def test_bad_existing_file(self, tmp_path):
        out = tmp_path / "c.csv"
        out.write_text("a,b\n")
        assert run(["curves", "--n", 10, "--seeds", 1, "--out", out]) == 3

    @pytest.mark.parametrize("argv", [["--seeds", "x"], ["--n", 0], ["--scenario", "from-csv"]])
    def test_usage(self, tmp_path, argv):
        assert run(["curves", "--out", tmp_path / "c.csv"] + argv) == 2

    def test_parse_seeds(self):
        assert parse_seeds("1-3") == [1, 2, 3]
        assert parse_seeds("4,7 9") == [4, 7, 9]


class TestIngest:
    def test_single_link_and_pipeline(self, tmp_path, capsys):
        paths = make_fixture(tmp_path / "raw", days=10, seed=2)
        out = tmp_path / "e.csv"
        code = run(["ingest", "--detectors", paths["detectors"], "--incidents", paths["incidents"],
                    "--links", paths["links"], "--link", "BRIDGE-E", "--window", "06:00-14:00",
                    "--bin", "5m", "--out", out])
        assert code == 0
        ds = read_trajectory_csv(out)
        assert ds.max_horizon == 95 and ds.n_event_bearing == len(ds)
        code, rep, _ = run(["test", "--input", out, "--method", "dkw"], capsys)
        assert code == 0 and int(kv(rep)["n_trajectories"]) == len(ds)

    def test_all_links(self, tmp_path):
        paths = make_fixture(tmp_path / "raw", days=10, seed=2)
        out = tmp_path / "links"
        assert run(["ingest", "--detectors", paths["detectors"], "--incidents", paths["incidents"],
                    "--links", paths["links"], "--out", out]) == 0
        assert sorted(p.name for p in out.iterdir()) == ["BRIDGE-E.csv", "BRIDGE-W.csv"]

    def test_interpolate_keeps_outage_day(self, tmp_path):
        paths = make_fixture(tmp_path / "raw", days=4, seed=5)
        argv = ["ingest", "--detectors", paths["detectors"], "--incidents", paths["incidents"],
                "--links", paths["links"], "--link", "BRIDGE-E", "--keep-no-event"]
        run(argv + ["--out", tmp_path / "drop.csv"])
        run(argv + ["--out", tmp_path / "fill.csv", "--missing", "interpolate"])
        drop = read_trajectory_csv(tmp_path / "drop.csv")
        fill = read_trajectory_csv(tmp_path / "fill.csv")
        assert len(drop) == 3 and len(fill) == 4

    @pytest.mark.parametrize("extra", [["--window", "14:00-06:00"], ["--bin", "7m"],
                                       ["--link", "NOPE"]])
    def test_usage(self, tmp_path, extra):
        paths = make_fixture(tmp_path / "raw", days=2, seed=0)
        argv = ["ingest", "--detectors", paths["detectors"], "--incidents", paths["incidents"],
                "--links", paths["links"], "--out", tmp_path / "o.csv"]
        assert run(argv + extra) == 2

    def test_bad_detector_file(self, tmp_path, capsys):
        paths = make_fixture(tmp_path / "raw", days=2, seed=0)
        paths["detectors"].write_text("date,time,detector_id,flow\n2022-01-03,06:00,x,-1\n")
        code, _, err = run(["ingest", "--detectors", paths["detectors"],
                            "--incidents", paths["incidents"], "--links", paths["links"],
                            "--out", tmp_path / "o"], capsys)
        assert code == 3 and "line 2" in err


def test_module_entry_point(two_traj_csv):
    res = subprocess.run([sys.executable, "-m", "rarecause", "test", "--input", str(two_traj_csv),
                          "--method", "dkw"], capture_output=True, text=True)
    assert res.returncode == 0 and "statistic=0.25" in res.stdout


def test_no_subcommand():
    assert run([]) == 2
