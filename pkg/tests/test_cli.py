import csv
import io
import json
import math
import subprocess
import sys

import pytest

from circleflow.cli import main, parse_config, RunConfig, UsageError
from circleflow.unitary_poisson import moment
from circleflow.zetasolver import x_t


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(lines))))


def test_defaults():
    cfg = parse_config(["density", "--t", "0.5"])
    assert isinstance(cfg, RunConfig)
    assert (cfg.grid, cfg.tol, cfg.seed, cfg.format) == (721, 1e-10, 42, "csv")


def test_density_csv(capsys):
    code, out, _ = run(capsys, "density", "--t", "0.5")
    assert code == 0
    r = rows(out)
    assert r[0] == ["theta", "density"]
    assert len(r) == 722
    e = 2 * x_t(0.5)
    vals = [(float(a), float(b)) for a, b in r[1:]]
    assert all(d == 0.0 for th, d in vals if abs(th) < e)
    assert vals[0][0] == -math.pi and all(th < math.pi for th, _ in vals)
    assert out.splitlines()[-1] == "# atom,0.0,0.5"


def test_density_t3_lower_bound(capsys):
    code, out, _ = run(capsys, "density", "--t", "3", "--grid", "101")
    assert code == 0
    assert all(float(d) >= 0.5 / (2 * math.pi) for _, d in rows(out)[1:])


def test_density_json_atom(capsys):
    code, out, _ = run(capsys, "density", "--t", "0.25", "--grid", "8", "--format", "json")
    obj = json.loads(out)
    assert obj["columns"] == ["theta", "density"]
    assert obj["atom"] == {"angle": 0.0, "weight": 0.75}
    assert len(obj["rows"]) == 8


def test_moments(capsys):
    code, out, _ = run(capsys, "moments", "--t", "0.7", "--L", "5")
    r = rows(out)
    assert r[0] == ["ell", "p_ell", "moment"]
    assert r[1] == ["0", "1.0", "1.0"]
    t = 0.7
    polys = [1, 1 + 4 * t]
    for ell, p in enumerate(polys, 1):
        assert float(r[ell + 1][1]) == pytest.approx(p, rel=1e-15)
    for ell in range(1, 6):
        assert float(r[ell + 1][2]) == moment(t, ell)


def test_moments_json_roundtrip(capsys, tmp_path):
    out = tmp_path / "m.json"
    assert main(["moments", "--t", "1.3", "--L", "6", "--format", "json", "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert [r[2] for r in obj["rows"]] == [moment(1.3, l) for l in range(7)]


def test_laguerre_roots(capsys):
    code, out, _ = run(capsys, "laguerre-roots", "--n", "400", "--k", "200")
    r = rows(out)
    assert r[0] == ["angle", "multiplicity"]
    ang = [float(a) for a, _ in r[1:]]
    assert sum(int(m) for _, m in r[1:]) == 400
    assert ang == sorted(ang)
    code, out, _ = run(capsys, "laguerre-roots", "--n", "6", "--k", "1")
    assert len(rows(out)) == 3


def test_zeta(capsys):
    code, out, _ = run(capsys, "zeta", "--t", "2", "--format", "json")
    obj = json.loads(out)
    assert code == 0
    assert obj["zeta_re"] == 0.0
    assert obj["zeta_im"] == pytest.approx(1.91501, abs=1e-5)


def test_reflections_k1(capsys, tmp_path):
    f = tmp_path / "ang.csv"
    code, out, _ = run(capsys, "reflections", "--n", "4", "--k", "1", "--samples", "50", "--angles-out", str(f))
    assert code == 0
    assert rows(f.read_text())[1:] == [[repr(-math.pi), "50"], ["0.0", "150"]]


def test_flow_and_convergence(capsys):
    code, out, _ = run(capsys, "flow", "--n", "16", "--t", "0.5", "--alpha", "0.4", "--format", "json")
    assert code == 0 and json.loads(out)["k"] == 8
    code, out, _ = run(capsys, "convergence", "--n", "400", "--t", "0.5", "--format", "json")
    obj = json.loads(out)
    assert code == 0 and obj["kolmogorov"] <= obj["target"]
    code, _, _ = run(capsys, "convergence", "--n", "100", "--t", "0.5", "--target", "1e-6")
    assert code == 3


def test_pde_check(capsys):
    code, out, _ = run(capsys, "pde-check", "--format", "json")
    assert code == 0 and json.loads(out)["residual"] <= 1e-4
    code, _, _ = run(capsys, "pde-check", "--target", "1e-12")
    assert code == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["density", "--t", "-1"],
        ["density", "--t", "nan"],
        ["density"],
        ["moments", "--t", "1", "--L", "0"],
        ["laguerre-roots", "--n", "10", "--k", "2", "--grid", "20"],
        ["zeta", "--t", "1", "--theta-im", "-0.5"],
        ["reflections", "--n", "65", "--k", "1"],
        ["reflections", "--n", "4", "--k", "1", "--seed", "-3"],
        ["pde-check", "--t", "0.5"],
        ["density", "--t", "1", "--format", "xml"],
        ["bogus"],
        [],
    ],
)
def test_validation_exit_2(capsys, tmp_path, argv):
    out = tmp_path / "never.csv"
    code = main(argv + ["--out", str(out)] if argv and argv[0] != "bogus" else argv)
    _, err = capsys.readouterr()
    assert code == 2
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["exit"] == 2
    assert not out.exists()


def test_validate_raises_directly():
    with pytest.raises(UsageError):
        parse_config(["flow", "--n", "200", "--t", "0.5"])


def test_byte_identical(tmp_path):
    for argv in (
        ["density", "--t", "0.5", "--grid", "50"],
        ["reflections", "--n", "4", "--k", "2", "--samples", "3000", "--seed", "7"],
        ["convergence", "--n", "100", "--t", "0.5"],
    ):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


def test_atomic_write_leaves_no_temp(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["density", "--t", "2", "--grid", "10", "--out", str(out)]) == 0
    assert [p.name for p in tmp_path.iterdir()] == ["d.csv"]


def test_module_entry_point():
    r = subprocess.run(
        [sys.executable, "-m", "circleflow", "zeta", "--t", "0.5", "--theta-re", "0.1"],
        capture_output=True, text=True,
    )
    assert r.returncode == 0
    assert r.stdout.splitlines()[0] == "zeta_re,zeta_im,residual,iterations,method"
    r = subprocess.run([sys.executable, "-m", "circleflow", "density"], capture_output=True, text=True)
    assert r.returncode == 2 and len(r.stderr.strip().splitlines()) == 1
