import json
import math
import time

import pytest

from overlap_lab import asymptotics, cli
from overlap_lab.finite_n import EllipticParams, expected_real_count
from overlap_lab.quad import QuadratureError


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    text = path.read_text()
    assert text.endswith("\n") and "\r" not in text
    lines = text.split("\n")[:-1]
    assert all(line == line.rstrip() for line in lines)
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_edge_jpdf_rejects_b_zero(capsys, tmp_path):
    out = tmp_path / "x.csv"
    code, _, err = run(["edge-jpdf", "--b", "0", "--zeta", "0", "--t", "1", "--out", str(out)], capsys)
    assert code == 2 and "delta(t)" in err
    assert not out.exists()


def test_single_point_matches_library(capsys, tmp_path):
    out = tmp_path / "p.csv"
    code, _, _ = run(["edge-jpdf", "--b", "0.6", "--zeta", "-1.25", "--t", "0.75", "--out", str(out)],
                     capsys)
    assert code == 0
    header, rows = read_csv(out)
    assert header == ["zeta", "t", "density"]
    assert float(rows[0][2]) == asymptotics.jpdf_edge(zeta=-1.25, t=0.75, b=0.6)
    assert all(len(c.split("e")[0].replace("-", "").replace(".", "")) == 17 for c in rows[0])


def test_grid_row_major_order(capsys, tmp_path):
    out = tmp_path / "g.csv"
    code, _, _ = run(["cond-density", "--b", "0.6", "--zeta", "-4:-2:3", "--t", "0.5:2:4",
                      "--out", str(out)], capsys)
    assert code == 0
    _, rows = read_csv(out)
    pairs = [(float(r[0]), float(r[1])) for r in rows]
    assert pairs == [(z, t) for z in (-4.0, -3.0, -2.0) for t in (0.5, 1.0, 1.5, 2.0)]


@pytest.mark.parametrize("argv", [
    ["finite-jpdf", "--n", "1", "--tau", "0.5", "--z", "0", "--t", "1"],
    ["finite-jpdf", "--n", "3", "--tau", "1.0", "--z", "0", "--t", "1"],
    ["edge-jpdf", "--b", "1", "--zeta", "-1:0:1", "--t", "1"],
    ["edge-jpdf", "--b", "1", "--zeta", "0:1", "--t", "1"],
    ["edge-jpdf", "--b", "1", "--zeta", "0", "--t", "0:1:3"],
    ["bulk-jpdf", "--a", "-1", "--w", "1", "--t", "1"],
    ["strong-jpdf", "--delta", "0", "--sigma", "-1:1:3"],
    ["nonsense"],
])
def test_usage_errors(argv, capsys):
    code, _, _ = run(argv, capsys)
    assert code == 2


def test_bad_thread_env(monkeypatch, capsys):
    monkeypatch.setenv("OVERLAP_LAB_THREADS", "-2")
    code, _, err = run(["strong-jpdf", "--delta", "0", "--sigma", "1"], capsys)
    assert code == 2 and "OVERLAP_LAB_THREADS" in err


def test_finite_jpdf_small_n_oracle(capsys, tmp_path):
    out = tmp_path / "f.csv"
    code, _, _ = run(["finite-jpdf", "--n", "2", "--tau", "0.5", "--z", "-1:1:3", "--t", "0.2:1:2",
                      "--out", str(out)], capsys)
    assert code == 0
    _, rows = read_csv(out)
    tau = 0.5
    for z, t, d in ((float(a), float(b), float(c)) for a, b, c in rows):
        q = t / (1 - tau)
        Q = (1 + tau) / (1 + q) + z * z / (1 + q) ** 2
        P = (math.exp(-z * z / (2 * (1 + tau)) * (1 + q / (1 + q))) / math.sqrt(q * (q + 1))
             * Q / (2 * (1 + tau) * math.sqrt(2 * math.pi)))
        assert d == pytest.approx(P / (1 - tau), rel=1e-13)


def test_figure_commands(capsys, tmp_path):
    for argv, header in [
        (["edge-density", "--b", "0.6", "--zeta", "-6:2:5"], ["zeta", "density"]),
        (["bulk-jpdf", "--a", "1.41421356", "--w", "1", "--t", "0.01:6:7"], ["w", "t", "density"]),
        (["strong-jpdf", "--delta", "-0.5", "--sigma", "0.01:3:7"], ["delta", "sigma", "density"]),
    ]:
        out = tmp_path / "o.csv"
        assert run(argv + ["--out", str(out)], capsys)[0] == 0
        h, rows = read_csv(out)
        assert h == header and all(float(r[-1]) >= 0 for r in rows)


def test_stdout_when_no_out(capsys):
    code, out, _ = run(["strong-jpdf", "--delta", "0", "--sigma", "1"], capsys)
    assert code == 0 and out.startswith("delta,sigma,density\n")


def test_numerical_failure_leaves_no_file(monkeypatch, capsys, tmp_path):
    def broken(*args, **kwargs):
        raise QuadratureError("forced", 0.0, 1.0)

    monkeypatch.setattr(asymptotics, "jpdf_edge", broken)
    out = tmp_path / "n.csv"
    code, _, err = run(["edge-jpdf", "--b", "1", "--zeta", "0", "--t", "1", "--out", str(out)], capsys)
    assert code == 3 and "numerical failure" in err
    assert not out.exists() and list(tmp_path.iterdir()) == []


def test_sample_reproducible_and_meta(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["sample", "--n", "8", "--tau", "0.9", "--matrices", "300", "--seed", "7"]
    assert run(argv + ["--out", str(a)], capsys)[0] == 0
    assert run(argv + ["--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    for key in ("seed", "n", "tau", "matrices", "rejected_count", "real_eigenvalue_count",
                "tool_version"):
        assert key in meta
    header, rows = read_csv(a)
    assert header == ["matrix_index", "lambda", "t"]
    assert len(rows) == meta["real_eigenvalue_count"]


def test_sample_count_matches_normalisation(capsys, tmp_path):
    out = tmp_path / "g.csv"
    argv = ["sample", "--n", "10", "--tau", "0", "--matrices", "20000", "--seed", "7", "--out", str(out)]
    assert run(argv, capsys)[0] == 0
    _, rows = read_csv(out)
    assert len(rows) / 20000 == pytest.approx(expected_real_count(EllipticParams(10, 0.0)), rel=0.02)


def test_compare_roundtrip(capsys, tmp_path):
    s = tmp_path / "s.csv"
    assert run(["sample", "--n", "6", "--tau", "0.5", "--matrices", "4000", "--seed", "3",
                "--out", str(s)], capsys)[0] == 0
    out = tmp_path / "c.csv"
    code, stdout, _ = run(["compare", "--samples", str(s), "--theory", "finite",
                           "--z-bins", "-5:5:11", "--t-bins", "0:4:9", "--out", str(out)], capsys)
    assert code == 0 and "PASS" in stdout and "chi2=" in stdout
    header, rows = read_csv(out)
    assert header[:2] == ["z_lo", "z_hi"] and len(rows) == 10 * 8
    code, stdout, _ = run(["compare", "--samples", str(s), "--theory", "finite",
                           "--zeta-bins", "-3:1:5", "--t-bins", "0:4:5", "--out", str(out)], capsys)
    assert code == 0
    code, _, _ = run(["compare", "--samples", str(s), "--theory", "edge", "--zeta-bins", "-3:1:5",
                      "--t-bins", "0.01:4:5", "--threshold", "1e-9", "--out", str(out)], capsys)
    assert code == 1
    code, _, _ = run(["compare", "--samples", str(s), "--theory", "finite", "--z-bins", "-5:5:3",
                      "--zeta-bins", "-1:1:3", "--t-bins", "0:4:5"], capsys)
    assert code == 2


def test_verify_quick(capsys):
    t0 = time.perf_counter()
    code, out, _ = run(["verify", "--quick"], capsys)
    assert code == 0 and time.perf_counter() - t0 < 20
    assert "t-marginal identity" in out and "FAIL" not in out


def test_verify_detects_flipped_t1(monkeypatch, capsys):
    real = asymptotics.t_quadruple

    def faulty(*args, **kwargs):
        T = real(*args, **kwargs)
        return T.__class__(T.T0, -T.T1, T.T2, T.T3, T.J, T.ai, T.aip)

    monkeypatch.setattr(asymptotics, "t_quadruple", faulty)
    code, out, err = run(["verify", "--quick"], capsys)
    assert code == 1
    assert "t-marginal identity" in err
    line = next(l for l in out.splitlines() if l.startswith("t-marginal identity"))
    assert "FAIL" in line
