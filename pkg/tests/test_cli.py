import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from qfsnet.cli import main
from qfsnet.imaging import read_mask
from qfsnet.metrics import evaluate


@pytest.fixture
def corpus(tmp_path):
    d = tmp_path / "corpus"
    assert main(["phantom", "--out", str(d), "--seed", "3", "--count", "2", "--size", "48", "--lesions", "1"]) == 0
    return d


def _segment(corpus, out, *extra):
    return main(["segment", "--input", str(corpus / "phantom_003.pgm"), "--out", str(out), *extra])


def test_phantom_writes_triplets(corpus):
    names = sorted(p.name for p in corpus.iterdir())
    assert names == [
        "phantom_003.json", "phantom_003.pgm", "phantom_003_gt.pgm",
        "phantom_004.json", "phantom_004.pgm", "phantom_004_gt.pgm",
    ]


def test_phantom_is_reproducible(tmp_path):
    for d in ("a", "b"):
        assert main(["phantom", "--out", str(tmp_path / d), "--seed", "7"]) == 0
    for name in ("phantom_007.pgm", "phantom_007_gt.pgm", "phantom_007.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_segment_happy_path(corpus, tmp_path):
    rc = _segment(corpus, tmp_path / "m.pgm", "--levels", "8", "--lambda", "0.239", "--scheme", "xi",
                  "--set", "S2", "--trace", str(tmp_path / "t.csv"), "--gnuplot", str(tmp_path / "t.dat"))
    assert rc == 0
    assert read_mask(tmp_path / "m.pgm").shape == (48, 48)
    assert (tmp_path / "t.csv").read_text().startswith("epoch,loss,max_delta,ms\n")
    assert (tmp_path / "t.dat").exists()


def test_segment_metrics_match_library(corpus, tmp_path):
    out = tmp_path / "m.pgm"
    assert _segment(corpus, out, "--gt", str(corpus / "phantom_003_gt.pgm")) == 0
    doc = json.loads((tmp_path / "m.json").read_text())
    ref = evaluate(read_mask(out), read_mask(corpus / "phantom_003_gt.pgm"))
    assert doc["ds"] == ref.ds
    assert doc["status"] == "converged"


def test_segment_rejects_bad_lambda(corpus, tmp_path, capsys):
    assert _segment(corpus, tmp_path / "m.pgm", "--lambda", "1.5") == 1
    assert "(0, 1)" in capsys.readouterr().err


@pytest.mark.parametrize("flags", [["--levels", "1"], ["--scheme", "gamma"], ["--set", "S7"], ["--thresh", "0"]])
def test_segment_rejects_bad_flags(corpus, tmp_path, flags):
    assert _segment(corpus, tmp_path / "m.pgm", *flags) == 1


def test_segment_io_errors(tmp_path):
    assert main(["segment", "--input", str(tmp_path / "nope.pgm"), "--out", str(tmp_path / "m.pgm")]) == 1
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P5\n4 4\n255\n")
    assert main(["segment", "--input", str(bad), "--out", str(tmp_path / "m.pgm")]) == 1


def test_strict_non_convergence_exit_code(corpus, tmp_path):
    args = ("--max-iters", "1", "--tol", "1e-30")
    assert _segment(corpus, tmp_path / "m.pgm", *args) == 0
    assert _segment(corpus, tmp_path / "m.pgm", *args, "--strict") == 2


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_sweep_rows_and_mean(corpus, tmp_path):
    out = tmp_path / "s.csv"
    rc = main(["sweep", "--input", str(corpus), "--out", str(out), "--levels", "8",
               "--lambda", "0.238,0.239", "--scheme", "xi", "--set", "S2", "--report", str(tmp_path / "s.json")])
    assert rc == 0
    rows = _rows(out)
    assert list(rows[0]) == ["image", "levels", "lambda", "scheme", "set", "acc", "ds", "ppv", "ss", "iterations"]
    body, mean = rows[:-1], rows[-1]
    assert len(body) == 4 and mean["image"] == "mean"
    for col in ("acc", "ds", "ppv", "ss", "iterations"):
        assert float(mean[col]) == pytest.approx(np.mean([float(r[col]) for r in body]), abs=1e-12)
    doc = json.loads((tmp_path / "s.json").read_text())
    assert len(doc["images"]) == 4


def test_sweep_is_reproducible(corpus, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        p = tmp_path / name
        main(["sweep", "--input", str(corpus), "--out", str(p), "--levels", "4,8", "--lambda", "0.239", "--seed", "1"])
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_sweep_empty_corpus(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["sweep", "--input", str(tmp_path / "empty"), "--out", str(tmp_path / "s.csv")]) == 1


def test_eval_and_compare(corpus, tmp_path, capsys):
    gt = str(corpus / "phantom_003_gt.pgm")
    assert main(["eval", "--input", gt, "--gt", gt]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert (doc["acc"], doc["ds"], doc["ppv"], doc["ss"]) == (1.0, 1.0, 1.0, 1.0)

    s = tmp_path / "s.csv"
    main(["sweep", "--input", str(corpus), "--out", str(s), "--levels", "8", "--lambda", "0.239"])
    capsys.readouterr()
    assert main(["compare", str(s), str(s)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc == {"D": 0.0, "reject": False, "alpha": 0.05}
    assert main(["compare", str(s), str(s), "--column", "dice"]) == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "qfsnet", "phantom", "--out", str(tmp_path), "--size", "32",
                        "--lesions", "1", "--radii", "4,8"], capture_output=True)
    assert r.returncode == 0
    r = subprocess.run([sys.executable, "-m", "qfsnet", "nonsense"], capture_output=True, text=True)
    assert r.returncode == 1 and "invalid choice" in r.stderr
