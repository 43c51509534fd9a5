import csv
import json
from pathlib import Path

import numpy as np
import pytest

from lyfq import cli, polycore
from lyfq.polycore import MultiPoly

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_verify_pass_and_fail(capsys, tmp_path):
    code, doc = run(capsys, "verify", "--poly", "running", "--trials", 30)
    assert code == 0 and doc["result"]["verdict"] == "pass"
    bad = tmp_path / "bad.json"
    polycore.save(MultiPoly.from_dict({(0,): 1, (1,): -2}), bad)
    code, doc = run(capsys, "verify", "--poly", bad, "--trials", 5)
    assert code == 3 and doc["result"]["verdict"] == "fail" and doc["result"]["witnesses"]


def test_zeros_csv_matches_locked_list(capsys, tmp_path):
    out = tmp_path / "z.csv"
    code, doc = run(capsys, "zeros", "--poly", "running", "--ell", "5pi/22,1", "--from", 0,
                    "--to", 6 * np.pi, "--out", out, "--cross-validate")
    assert code == 0
    got, ref = rows(out), rows(DATA / "running_zeros_6pi.csv")
    assert got[0] == ["x", "mult"] and len(got) == len(ref)
    assert doc["result"]["cross_validation"]["matched"]
    assert doc["result"]["max_gap"] <= doc["result"]["max_gap_bound"]
    # 17 significant digits round-trip
    assert [float(r[0]) for r in got[1:]] == pytest.approx([float(r[0]) for r in ref[1:]], abs=1e-9)


def test_replay_is_bit_exact(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    a = tmp_path / "a.csv"
    code, first = run(capsys, "nu1", "--poly", "running", "--count", 300, "--seed", 7,
                      "--samples", a, "--echo", cfg)
    assert code == 0
    data_a = a.read_bytes()
    a.unlink()
    code, second = run(capsys, "replay", cfg)
    assert code == 0 and second == first and a.read_bytes() == data_a


def test_distribution_outputs_and_compare(capsys, tmp_path):
    s, h, c, at = (tmp_path / n for n in ("s.csv", "h.csv", "c.csv", "a.csv"))
    code, doc = run(capsys, "nuq", "--poly", "binomial:1,1", "--k", "1,2", "--m", 1, "--count", 200,
                    "--samples", s, "--hist", h, "--cdf", c, "--atoms", at)
    assert code == 0
    assert rows(s)[0] == ["gap", "weight"]
    assert rows(h)[0] == ["bin_left", "bin_right", "mass"]
    assert rows(at)[0] == ["location", "mass"]
    (loc, mass), = [(float(r[0]), float(r[1])) for r in rows(at)[1:]]
    assert loc == pytest.approx(2 * np.pi / 3) and mass == pytest.approx(1.0)
    code, doc = run(capsys, "compare", s, s)
    assert code == 0 and doc["result"] == {"ks": 0.0, "w1": 0.0}
    code, doc = run(capsys, "compare", s, h)
    assert code == 0 and doc["result"]["ks"] <= 1


def test_gaps_subcommand(capsys, tmp_path):
    code, doc = run(capsys, "gaps", "--poly", "running", "--ell", "5pi/22, 1", "--to", 500,
                    "--hist", tmp_path / "h.csv")
    assert code == 0
    r = doc["result"]
    assert r["max_gap"] <= r["max_gap_bound"] and r["atoms"] == []


def test_perturb_roundtrip(capsys, tmp_path):
    out = tmp_path / "p.json"
    code, doc = run(capsys, "perturb", "--poly", "running", "--lambda", 0.2, "--out", out)
    assert code == 0 and doc["result"]["steps"] == 4
    q = polycore.load(out)
    code, doc = run(capsys, "verify", "--poly", out, "--trials", 30)
    assert code == 0
    code, doc = run(capsys, "perturb", "--poly", "binomial:1,1", "--lambda", 0.3, "--anchor", "pi,pi")
    assert code == 4 and "AnchorOnZeroSet" in doc["error"]


def test_ergodic(capsys):
    code, doc = run(capsys, "ergodic", "--poly", "binomial:1,1", "--ell", "1,sqrt(2)",
                    "--N", 2000, "--count", 2000)
    assert code == 0
    r = doc["result"]
    assert set(r) >= {"orbit_avg", "space_avg", "mc_stderr"}
    assert abs(r["orbit_avg"] - 0.5) < 0.05 and abs(r["space_avg"] - 0.5) < 0.05


def test_config_errors(capsys, tmp_path):
    code, doc = run(capsys, "zeros", "--poly", "running", "--ell", "5pi/,1", "--to", 3)
    assert code == 2 and "column 5" in doc["error"]
    code, doc = run(capsys, "zeros", "--poly", "running", "--ell", "1,2,3", "--to", 3)
    assert code == 2
    code, doc = run(capsys, "verify", "--poly", tmp_path / "missing.json")
    assert code == 2
    broken = tmp_path / "broken.json"
    broken.write_text('{"n": 1}')
    code, _ = run(capsys, "verify", "--poly", broken)
    assert code == 2


def test_numerical_failure_exit(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    polycore.save(MultiPoly.from_dict({(0, 0): 1, (1, 1): -2}), bad)
    code, doc = run(capsys, "zeros", "--poly", bad, "--ell", "1,1", "--to", 3)
    assert code == 4 and doc["error"].startswith("numerical")


@pytest.mark.parametrize("fig, expect", [
    (1, ["fig1_zeros.csv", "fig1_secular.csv", "fig1_zero_set.csv"]),
    (4, ["fig4_layers.csv"]),
])
def test_demo(capsys, tmp_path, fig, expect):
    code, doc = run(capsys, "demo", "--figure", fig, "--outdir", tmp_path)
    assert code == 0
    for name in expect:
        assert (tmp_path / name).exists()


def test_demo_figure_3_small(capsys, tmp_path):
    code, doc = run(capsys, "demo", "--figure", 3, "--seed", 7, "--outdir", tmp_path,
                    "--count", 1000, "--gaps", 1000)
    assert code == 0
    head = rows(tmp_path / "fig3_cdf.csv")[0]
    assert head == ["x", "nu_one", "rho_m1", "rho_m2", "rho_m3"]
