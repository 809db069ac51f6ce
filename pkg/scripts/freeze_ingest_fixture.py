"""Regenerate the raw ingest fixture and freeze its pipeline statistics.

Writes ``tests/fixtures/ingest/{detectors,incidents,links}.csv`` with the
fixture generator, runs ``rarecause ingest`` and ``rarecause test`` on every
link through the CLI, checks each statistic against the brute-force oracle in
``tests/oracle.py``, and records the outputs in ``expected.json``.
"""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
FIXTURE = ROOT / "tests" / "fixtures" / "ingest"
sys.path.insert(0, str(ROOT / "tests"))

import oracle  # noqa: E402
from rarecause.ingest import make_fixture, read_trajectory_csv  # noqa: E402

SEED, DAYS = 0, 30
N_NULL, TEST_SEED = 200, 0


def cli(*args):
    res = subprocess.run([sys.executable, "-m", "rarecause", *map(str, args)],
                         capture_output=True, text=True, check=True)
    return dict(line.split("=", 1) for line in res.stdout.strip().splitlines())


def main():
    paths = make_fixture(FIXTURE, days=DAYS, seed=SEED)
    expected = {"generator": {"days": DAYS, "seed": SEED}, "links": {}}
    with tempfile.TemporaryDirectory() as tmp:
        for link in ("BRIDGE-E", "BRIDGE-W"):
            out = Path(tmp) / f"{link}.csv"
            subprocess.run([sys.executable, "-m", "rarecause", "ingest",
                            "--detectors", paths["detectors"], "--incidents", paths["incidents"],
                            "--links", paths["links"], "--link", link,
                            "--window", "06:00-14:00", "--bin", "5m", "--out", out], check=True)
            ds = read_trajectory_csv(out)
            value, _ = oracle.sup_gap(ds)
            dkw = cli("test", "--input", out, "--method", "dkw")
            mc = cli("test", "--input", out, "--method", "mc", "--n-null", N_NULL,
                     "--seed", TEST_SEED)
            assert abs(float(dkw["statistic"]) - value) < 1e-12, (link, dkw["statistic"], value)
            expected["links"][link] = {
                "n_trajectories": len(ds),
                "first_day": ds.ids[0],
                "dkw": dkw,
                "mc": {"n_null": N_NULL, "seed": TEST_SEED, **mc},
            }
            print(link, len(ds), dkw["statistic"], mc["p_value"], dkw["decision"], mc["decision"])
    (FIXTURE / "expected.json").write_text(json.dumps(expected, indent=2) + "\n")


if __name__ == "__main__":
    main()
