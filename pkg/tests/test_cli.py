import json
import subprocess
import sys

import numpy as np

from otbench.cli import main
from otbench.formats import read_instance, write_pnm


def test_gen_and_solve(tmp_path, capsys):
    out = tmp_path / "cs.txt"
    assert main(["gen", "circlesquare", "--k", "16", "--out", str(out)]) == 0
    inst = read_instance(out)
    assert inst.n == 16 and inst.meta["scale"] == 10_000
    capsys.readouterr()
    main(["solve", str(out), "--solver", "network_simplex"])
    ns = json.loads(capsys.readouterr().out)
    main(["solve", str(out), "--solver", "km"])
    km = json.loads(capsys.readouterr().out)
    assert ns["objective"] == km["objective"] and ns["exact"]
    main(["solve", str(out), "--solver", "sinkhorn", "--eta", "80",
          "--round"])
    sk = json.loads(capsys.readouterr().out)
    assert sk["residue"] < 1e-6 and sk["objective"] >= ns["objective"] - 1e-6


def test_gen_image_pair(tmp_path):
    rng = np.random.default_rng(0)
    a = np.zeros((6, 6), int)
    b = np.zeros((6, 6), int)
    a[1:3, 1:4] = rng.integers(1, 255, size=(2, 3))
    b[3:5, 2:4] = rng.integers(1, 255, size=(2, 2))
    write_pnm(a, tmp_path / "a.pgm")
    write_pnm(b, tmp_path / "b.pgm")
    out = tmp_path / "img.txt"
    main(["gen", "image", "--a", str(tmp_path / "a.pgm"), "--b",
          str(tmp_path / "b.pgm"), "--scale", "6", "--total-mass", "1000",
          "--out", str(out)])
    inst = read_instance(out)
    assert (inst.n, inst.m) == (6, 4)
    assert inst.supplies.sum() == inst.demands.sum()


def test_gen_cloud(tmp_path):
    (tmp_path / "a.txt").write_text("2 0 0\n1 1 0\n")
    (tmp_path / "b.txt").write_text("3 0 1\n")
    out = tmp_path / "cloud.txt"
    main(["gen", "cloud", "--a", str(tmp_path / "a.txt"), "--b",
          str(tmp_path / "b.txt"), "--scale", "100", "--out", str(out)])
    assert read_instance(out).cost.tolist() == [[100], [141]]


def test_bench_profile_sweep_calibrate(tmp_path):
    suite = tmp_path / "suite"
    main(["gen", "suite", "--families", "cs", "--count", "1",
          "--out", str(suite)])
    params = tmp_path / "params.csv"
    main(["calibrate", "--suite", str(suite), "--out", str(params)])
    assert "CS100" in params.read_text()
    rec = tmp_path / "rec.csv"
    main(["bench", "--suite", str(suite), "--solvers",
          "network_simplex,batched_km", "--params", str(params),
          "--repeats", "1", "--out", str(rec)])
    prof = tmp_path / "prof.csv"
    main(["profile", "--in", str(rec), "--out", str(prof)])
    assert prof.read_text().startswith("solver,factor,count")
    sweep = tmp_path / "sweep.csv"
    main(["sweep", "--instance", str(suite / "CS100.txt"), "--etas",
          "50,100", "--out", str(sweep)])
    assert sweep.read_text().count("sinkhorn") == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "otbench", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "solve" in out.stdout
