import csv
import io
import json
import subprocess
import sys

import pytest

from ekedahl.cli import EXIT_INDETERMINATE, EXIT_INVALID, EXIT_OK, run, verify_dirs, write_atomic


def invoke(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def h5_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("h5")
    assert run(["resolve", "1/5(1,2,3,4)", "-o", str(d / "record.json"), "--fan-output", str(d / "fan.json")]) == 0
    return d


def test_resolve_reports_counts(h5_files):
    rec = json.loads((h5_files / "record.json").read_text())
    fan = json.loads((h5_files / "fan.json").read_text())
    assert len(rec["exceptional_rays"]) == 6
    assert len(fan["rays"]) == 10 and len(fan["maximal_cones"]) == 21


def test_fan_check_and_betti(capsys, h5_files, tmp_path):
    code, out, _ = invoke(capsys, "fan-check", str(h5_files / "fan.json"))
    rep = json.loads(out)
    assert code == 0 and rep["smooth"] and not rep["complete"]
    p2 = tmp_path / "p2.json"
    p2.write_text(json.dumps({"dim": 2, "rays": [[1, 0], [0, 1], [-1, -1]], "maximal_cones": [[0, 1], [1, 2], [0, 2]]}))
    code, out, _ = invoke(capsys, "betti", str(p2))
    assert code == 0 and json.loads(out) == {"0": 1, "2": 1, "4": 1}
    code, _, err = invoke(capsys, "betti", str(h5_files / "fan.json"))
    assert code == EXIT_INVALID


def test_d1_matrix_csv(capsys, h5_files):
    code, out, _ = invoke(capsys, "d1-matrix", str(h5_files / "record.json"), "--position", "-2,6")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) == 17 and all(len(r) == 13 for r in rows)
    assert rows[0][0].startswith("tau_")
    code, out, _ = invoke(capsys, "d1-matrix", "--type", "1/5(1,2,3,4)", "--position=-2,6", "--format", "json")
    data = json.loads(out)
    assert len(data["matrix"]) == 16 and len(data["domain"]) == 13
    assert invoke(capsys, "d1-matrix", "--type", "1/5(1,2,3,4)", "--position=-7,2")[0] == EXIT_INVALID
    assert invoke(capsys, "d1-matrix", "--type", "1/5(1,2,3,4)", "--position", "x")[0] == EXIT_INVALID


def test_spectral_command(capsys, h5_files, tmp_path):
    out_file = tmp_path / "page.json"
    code = run(["spectral", str(h5_files / "record.json"), "--copies", "6", "-o", str(out_file), "--csv-dir", str(tmp_path / "csv")])
    assert code == 0
    data = json.loads(out_file.read_text())
    conv = {r["degree"]: r for r in data["convergence"]}
    assert conv[5]["status"] == "determined" and conv[5]["group"] == {"rank": 0, "torsion": []}
    assert (tmp_path / "csv" / "d1_-2_6.csv").exists()
    assert all("csv" in d for d in data["E1"]["differentials"])


def test_cartan_leray_command(capsys):
    code, out, _ = invoke(capsys, "cartan-leray", "--p", "5", "--max-k", "7")
    assert code == 0
    table = json.loads(out)["table"]
    assert len(table) == 8
    assert table[2]["group"] == {"rank": 1, "torsion": [5, 5]}
    assert all(row["rational_rank"] == row["group"]["rank"] for row in table)


@pytest.mark.parametrize("p", ["4", "2", "1", "-3"])
def test_bad_prime(capsys, p):
    assert invoke(capsys, "cartan-leray", "--p", p)[0] == EXIT_INVALID
    assert invoke(capsys, "heisenberg", "--p", p)[0] == EXIT_INVALID


def test_cartan_leray_range(capsys):
    assert invoke(capsys, "cartan-leray", "--p", "5", "--max-k", "8")[0] == EXIT_INVALID


def test_heisenberg_command(capsys, tmp_path):
    code, out, _ = invoke(capsys, "heisenberg", "--p", "5", "--singular-locus", str(tmp_path / "locus.json"))
    assert code == 0
    rep = json.loads(out)
    assert rep["group"] == "H_5"
    assert rep["invariants"]["0"] == [["Z", 1]]
    assert all(v == [] for k, v in rep["invariants"].items() if k != "0")
    assert len(json.loads((tmp_path / "locus.json").read_text())["singular_points"]) == 6


def test_malformed_json(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim": 2,\n  "rays": [1, 2,\n')
    code, _, err = invoke(capsys, "fan-check", str(bad))
    assert code == EXIT_INVALID
    assert "bad.json:3:" in err
    missing = tmp_path / "rec.json"
    missing.write_text("{}")
    code, _, err = invoke(capsys, "spectral", str(missing))
    assert code == EXIT_INVALID and "missing field" in err
    assert invoke(capsys, "fan-check", str(tmp_path / "nope.json"))[0] == EXIT_INVALID
    assert invoke(capsys, "resolve", "1/5(1,2")[0] == EXIT_INVALID
    assert invoke(capsys, "no-such-command")[0] == EXIT_INVALID


def test_determinism(tmp_path):
    for name in ("a", "b"):
        d = tmp_path / name
        assert run(["resolve", "1/5(1,2,3,4)", "-o", str(d / "rec.json")]) == 0
        assert run(["spectral", str(d / "rec.json"), "-o", str(d / "page.json"), "--csv-dir", str(d / "csv")]) == 0
        assert run(["heisenberg", "--p", "3", "-o", str(d / "h3.json")]) == EXIT_OK
    for rel in ("rec.json", "page.json", "h3.json", "csv/d1_-2_6.csv"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
    assert verify_dirs(tmp_path / "a", tmp_path / "b") == {"missing": [], "extra": [], "different": [], "equivalent": []}


def test_write_atomic_leaves_no_temp(tmp_path):
    target = tmp_path / "x" / "out.json"
    write_atomic(target, "one\n")
    write_atomic(target, "two\n")
    assert target.read_text() == "two\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.json"]


def _write_matrix_dir(d, rows, header=("a", "b", "c")):
    d.mkdir()
    text = ",".join(header) + "\n" + "".join(",".join(map(str, r)) + "\n" for r in rows)
    (d / "m.csv").write_text(text)
    (d / "r.json").write_text('{"k": 1}')


def test_verify(capsys, tmp_path):
    rows = [[1, 0, 2], [0, 1, 3]]
    _write_matrix_dir(tmp_path / "gold", rows)
    _write_matrix_dir(tmp_path / "same", rows)
    perm = [[r[2], r[0], r[1]] for r in rows]
    _write_matrix_dir(tmp_path / "perm", perm, header=("c", "a", "b"))
    mutated = [[1, 0, 2], [0, 1, 3]]
    mutated[1][1] = 0
    mutated[1][2] = 0  # rank drops, kernel grows
    _write_matrix_dir(tmp_path / "mut", mutated)

    code, out, _ = invoke(capsys, "verify", str(tmp_path / "gold"), str(tmp_path / "same"))
    assert code == 0 and json.loads(out)["different"] == []
    code, out, _ = invoke(capsys, "verify", str(tmp_path / "gold"), str(tmp_path / "perm"))
    rep = json.loads(out)
    assert code == 0 and rep["different"] == [] and rep["equivalent"] == ["m.csv"]
    code, out, _ = invoke(capsys, "verify", str(tmp_path / "gold"), str(tmp_path / "mut"))
    rep = json.loads(out)
    assert code == EXIT_INVALID
    assert rep["different"][0]["golden"]["kernel_rank"] == 1 and rep["different"][0]["fresh"]["kernel_rank"] == 2

    (tmp_path / "same" / "r.json").unlink()
    code, out, _ = invoke(capsys, "verify", str(tmp_path / "gold"), str(tmp_path / "same"))
    assert code == EXIT_INVALID and json.loads(out)["missing"] == ["r.json"]
    assert invoke(capsys, "verify", str(tmp_path / "gold"), str(tmp_path / "absent"))[0] == EXIT_INVALID


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ekedahl", "cartan-leray", "--p", "3"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["p"] == 3
    res = subprocess.run([sys.executable, "-m", "ekedahl", "cartan-leray"], capture_output=True, text=True)
    assert res.returncode == EXIT_INVALID


def test_indeterminate_exit_code(monkeypatch, capsys):
    from ekedahl import spectral

    def fake(*a, **k):
        return spectral.ConvergenceReport(0, "indeterminate", None)

    monkeypatch.setattr(spectral, "supported_cohomology_of_exceptional_locus", fake)
    code, _, err = invoke(capsys, "spectral", "--type", "1/3(1,2)")
    assert code == EXIT_INDETERMINATE
