import csv
import json

import numpy as np
import pytest

from greyvcs import netpbm
from greyvcs.cli import main


@pytest.fixture
def secret(tmp_path):
    raster = np.random.default_rng(0).integers(0, 256, (6, 5)).astype(np.uint8)
    path = tmp_path / "secret.pgm"
    netpbm.write_pgm(path, raster)
    return path, raster


def levels_of(path, g):
    return (netpbm.read_pgm(path).astype(int) * (g - 1) + 254) // 255


@pytest.mark.parametrize("scheme, files", [("A", 9), ("B", 9), ("C", 6), ("baseline", 3)])
def test_share_then_reconstruct(tmp_path, secret, capsys, scheme, files):
    path, raster = secret
    out = tmp_path / "shares"
    assert main(["share", "--scheme", scheme, "--seed", "7", str(path), str(out)]) == 0
    assert len(list(out.glob("*.pbm"))) == files
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scheme"] == scheme and len(manifest["files"]) == files

    rec = tmp_path / "rec.pgm"
    assert main(["reconstruct", str(out), str(rec), "--participants", "1,3"]) == 0
    expected = np.minimum(raster.astype(int) * 3 // 256, 2)
    assert np.array_equal(levels_of(rec, 3), expected)
    assert (tmp_path / "rec_raw.pbm").is_file()
    assert "measured contrast" in capsys.readouterr().out


def test_aliases_and_ascii(tmp_path, secret):
    path, _ = secret
    out = tmp_path / "s"
    assert main(["encode", "--scheme", "schemeB", "--ascii-pbm", str(path), str(out)]) == 0
    assert (out / "p1_r1.pbm").read_bytes().startswith(b"P1")
    assert main(["decode", str(out), str(tmp_path / "r.pgm"), "--ascii-pbm"]) == 0
    assert (tmp_path / "r.pgm").read_bytes().startswith(b"P2")


def test_workers_byte_identical(tmp_path, secret):
    path, _ = secret
    for w in ("1", "3"):
        assert main(["share", "--scheme", "C", "--workers", w, str(path), str(tmp_path / w)]) == 0
    for f in (tmp_path / "1").iterdir():
        assert f.read_bytes() == (tmp_path / "3" / f.name).read_bytes()


def test_stack_only(tmp_path, secret, capsys):
    path, _ = secret
    out = tmp_path / "s"
    main(["share", "--scheme", "C", str(path), str(out)])
    capsys.readouterr()
    assert main(["reconstruct", str(out), str(tmp_path / "r.pgm"), "--stack-only",
                 "--participants", "2,3"]) == 0
    assert "stacking only" in capsys.readouterr().out


def test_custom_base(tmp_path, secret):
    path, _ = secret
    base = tmp_path / "base.txt"
    base.write_text("3 3\n110\n110\n110\n\n3 3\n110\n101\n011\n")
    assert main(["share", "--base", str(base), str(path), str(tmp_path / "s")]) == 0


@pytest.mark.parametrize("argv", [
    ["share", "-g", "1", "IN", "OUT"],
    ["share", "-k", "4", "IN", "OUT"],
    ["share", "--scheme", "A", "--base", "DOT", "IN", "OUT"],
    ["share", "--workers", "0", "IN", "OUT"],
    ["share", "--scheme", "Z", "IN", "OUT"],
    ["report", "-k", "4", "-n", "3"],
    [],
])
def test_usage_errors(tmp_path, secret, argv):
    path, _ = secret
    dot = tmp_path / "dot.txt"
    dot.write_text("3 3\n100\n100\n100\n\n3 3\n100\n010\n001\n")
    argv = [str(path) if a == "IN" else str(tmp_path / "out") if a == "OUT" else
            str(dot) if a == "DOT" else a for a in argv]
    assert main(argv) == 2
    assert not (tmp_path / "out").exists()


def test_runtime_failures(tmp_path, secret, capsys):
    path, _ = secret
    out = tmp_path / "s"
    assert main(["share", str(tmp_path / "missing.pgm"), str(out)]) == 1
    main(["share", str(path), str(out)])
    (out / "p2_r3.pbm").unlink()
    capsys.readouterr()
    assert main(["reconstruct", str(out), str(tmp_path / "r.pgm"), "--participants", "1,2"]) == 1
    assert "(participant 2, run 3)" in capsys.readouterr().err
    assert main(["reconstruct", str(out), str(tmp_path / "r.pgm"), "--participants", "1"]) == 2
    assert main(["reconstruct", str(tmp_path), str(tmp_path / "r.pgm")]) == 1


def test_verify_subsets(capsys):
    assert main(["verify", "--list"]) == 0
    listing = capsys.readouterr().out
    assert "aux-scheme-c" in listing and "method1" in listing
    assert main(["verify", "--only", "method1", "--only", "cyclic-scheme-b"]) == 0
    out = capsys.readouterr().out
    assert "P(00)=3/5" in out and "all checks passed" in out
    assert main(["verify", "--only", "nope"]) == 2


def test_report_outputs(tmp_path, capsys):
    assert main(["report", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert {r["scheme"] for r in data["rows"]} == {"baseline", "A", "B", "C"}
    out = tmp_path / "rep"
    assert main(["report", "-k", "2", "-n", "3", "-g", "4", "--out", str(out)]) == 0
    for name in ("report.txt", "report.json", "report.csv", "expansion.png", "levels.png"):
        assert (out / name).stat().st_size > 0
    assert (out / "expansion.png").read_bytes()[:4] == b"\x89PNG"
    rows = list(csv.reader((out / "report.csv").open()))
    assert rows[0][0] == "scheme" and len(rows) == 9
