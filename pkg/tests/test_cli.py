import csv
import hashlib

import numpy as np
import pytest

from gdm_pme.barenblatt import BarenblattParams, front_radius
from gdm_pme.cli import ConfigError, main, parse_config


def _write(tmp_path, text, name="c.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _read(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    rows = list(csv.DictReader(lines[1:]))
    return lines[0], rows


def test_parse_defaults_and_sections():
    cfg = parse_config("[problem]\nm = 2.5\n[output]\nout = x\n")
    assert cfg.m == 2.5 and cfg.out == "x" and cfg.dt == "h2" and cfg.scheme == "mlp1"
    cfg = parse_config("m = 0.5\nlambda = scalar:2\ndt = 0.01\nmeshes = tri:4, tri:8\n")
    assert cfg.diffusivity == 2.0 and cfg.dt == 0.01 and cfg.meshes == ["tri:4", "tri:8"]
    assert cfg.sha256 == hashlib.sha256(b"m = 0.5\nlambda = scalar:2\ndt = 0.01\nmeshes = tri:4, tri:8\n").hexdigest()


@pytest.mark.parametrize("text,word", [
    ("scheme = mlp1\n", "'m'"),
    ("m = two\n", "m"),
    ("m = 2\nscheme = fem\n", "scheme"),
    ("m = 2\nlambda = tensor\n", "lambda"),
    ("m = 2\ncolour = red\n", "colour"),
    ("m = 2\nvector_probes = vortex\n", "vortex"),
    ("[a]\nm = 2\n[b]\nm = 3\n", "twice"),
    ("m = -1\n", "positive"),
])
def test_parse_errors_name_the_key(text, word):
    with pytest.raises(ConfigError, match=word):
        parse_config(text)


def test_missing_m_exit_code(tmp_path, capsys):
    assert main(["run", "--config", str(_write(tmp_path, "scheme = mlp1\nmesh = tri:4\n"))]) == 2
    assert "'m'" in capsys.readouterr().err


def test_bad_mesh_and_missing_file(tmp_path):
    assert main(["run", "--config", str(_write(tmp_path, "m = 2\nmesh = quad:4\n"))]) == 2
    assert main(["run", "--config", str(tmp_path / "none.cfg")]) == 2


def test_solver_error_exit_code(tmp_path):
    cfg = _write(tmp_path, "m = 2\nmesh = tri:4\ndt = 0.5\ntol = 1e-300\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3


def test_run_zero_problem(tmp_path):
    cfg = _write(tmp_path, "m = 2\nscheme = hmm\nmesh = hex:3\ninitial = zero\ndt = 0.25\nsnapshots = 0.1, 0.6\n")
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["energy.csv", "field_final.csv", "field_t0.1.csv", "field_t0.6.csv", "summary.csv"]
    for f in ("field_final.csv", "field_t0.1.csv", "field_t0.6.csv"):
        _, rows = _read(out / f)
        assert rows and all(float(r["value"]) == 0.0 for r in rows)
    _, led = _read(out / "energy.csv")
    assert all(r["holds"] == "1" for r in led)


def test_run_barenblatt_snapshots_and_determinism(tmp_path):
    text = "m = 2.5\nscheme = mlp1\nmesh = tri:8\nT = 0.7\ndt = 1e-2\nsnapshots = 0.1, 0.19, 0.37, 0.73\n"
    cfg = _write(tmp_path, text)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(b)]) == 0
    for t in ("0.1", "0.19", "0.37", "0.73"):
        assert (a / f"field_t{t}.csv").exists()
    for f in a.iterdir():
        assert f.read_bytes() == (b / f.name).read_bytes()
    head, rows = _read(a / "summary.csv")
    assert hashlib.sha256(text.encode()).hexdigest() in head and "units:" in head
    assert float(rows[-1]["t"]) == pytest.approx(0.8)
    assert max(int(r["newton_iterations"]) for r in rows) <= 10
    # scientific notation with six significant digits
    assert all("e" in r["residual"] and len(r["residual"].split("e")[0].lstrip("-")) == 7 for r in rows)
    _, err = _read(a / "errors.csv")
    assert 0 < float(err[0]["err_beta"]) < 0.5
    _, led = _read(a / "energy.csv")
    assert all(r["holds"] == "1" for r in led)


def test_snapshot_outside_window(tmp_path):
    cfg = _write(tmp_path, "m = 2\nmesh = tri:4\nT = 0.2\ndt = 0.1\nsnapshots = 0.9\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_scalar_diffusivity_matches_time_rescaling(tmp_path):
    # u_B(t0 + c t) solves the problem with Lambda = c Id; compare c = 2 over T with c = 1 over 2T
    base = "m = 2\nmesh = tri:8\ndt = 0.05\n"
    c2 = _write(tmp_path, base + "lambda = scalar:2\nT = 0.5\n", "c2.cfg")
    c1 = _write(tmp_path, base.replace("0.05", "0.1") + "T = 1\n", "c1.cfg")
    assert main(["run", "--config", str(c2), "--out", str(tmp_path / "c2")]) == 0
    assert main(["run", "--config", str(c1), "--out", str(tmp_path / "c1")]) == 0
    f2 = np.array([float(r["value"]) for r in _read(tmp_path / "c2" / "field_final.csv")[1]])
    f1 = np.array([float(r["value"]) for r in _read(tmp_path / "c1" / "field_final.csv")[1]])
    np.testing.assert_allclose(f2, f1, rtol=1e-5, atol=1e-8 * np.abs(f1).max())


def test_convergence_tables(tmp_path):
    cfg = _write(tmp_path, "m = 2\nmeshes = tri:4, tri:8\nT = 0.2\n")
    assert main(["convergence", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    head, rows = _read(tmp_path / "o" / "convergence_spatial.csv")
    assert list(rows[0]) == ["h", "err_u", "rate_u", "err_beta", "rate_beta", "newton_avg", "newton_max"]
    assert rows[0]["rate_u"] == "" and rows[1]["rate_u"] != ""
    cfg = _write(tmp_path, "m = 2\nmeshes = tri:4\nT = 0.2\ntiming = yes\n", "one.cfg")
    assert main(["convergence", "--config", str(cfg), "--out", str(tmp_path / "p")]) == 0
    _, rows = _read(tmp_path / "p" / "convergence_spatial.csv")
    assert len(rows) == 1 and rows[0]["rate_beta"] == "" and "wall" in rows[0]
    cfg = _write(tmp_path, "m = 1.5\nmesh = tri:8\nsweep = temporal\ndts = 0.2, 0.1\nT = 0.4\n", "t.cfg")
    assert main(["convergence", "--config", str(cfg), "--out", str(tmp_path / "q")]) == 0
    _, rows = _read(tmp_path / "q" / "convergence_temporal.csv")
    assert [float(r["dt"]) for r in rows] == [0.2, 0.1]
    cfg = _write(tmp_path, "m = 1.5\nmesh = tri:8\nsweep = temporal\n", "bad.cfg")
    assert main(["convergence", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 2


def test_front_table(tmp_path):
    rel = {}
    for n in (12, 24):
        cfg = _write(tmp_path, f"m = 2\nms = 2, 3\nmesh = tri:{n}\ndt = 0.05\n", f"f{n}.cfg")
        assert main(["front", "--config", str(cfg), "--out", str(tmp_path / f"f{n}")]) == 0
        _, rows = _read(tmp_path / f"f{n}" / "front.csv")
        assert list(rows[0]) == ["m", "d_u", "d_uB", "rel_err"]
        for r in rows:
            assert float(r["d_uB"]) == pytest.approx(front_radius(1.1, BarenblattParams(float(r["m"]), 0.005)),
                                                      rel=1e-5)
        rel[n] = [float(r["rel_err"]) for r in rows]
    assert all(c > f for c, f in zip(rel[12], rel[24]))
    cfg = _write(tmp_path, "m = 0.5\nmesh = tri:4\n", "fast.cfg")
    assert main(["front", "--config", str(cfg), "--out", str(tmp_path / "g")]) == 2


def test_diagnose_table(tmp_path):
    cfg = _write(tmp_path, "m = 2\nmeshes = tri:2, tri:4, tri:8, tri:16\nscalar_probes = bubble\nvector_probes = swirl\n")
    assert main(["diagnose", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    _, rows = _read(tmp_path / "o" / "diagnose.csv")
    S = [float(r["S_bubble"]) for r in rows]
    W = [float(r["W_swirl"]) for r in rows]
    C = [float(r["C_D"]) for r in rows]
    assert all(b < a for a, b in zip(S, S[1:])) and all(b < a for a, b in zip(W, W[1:]))
    assert max(C) / min(C) <= 1.5
    cfg = _write(tmp_path, "m = 2\nscheme = hmm\nmeshes = hex:2, hex:4\n", "e.cfg")
    assert main(["diagnose", "--config", str(cfg), "--out", str(tmp_path / "e")]) == 0
    _, rows = _read(tmp_path / "e" / "diagnose.csv")
    assert list(rows[0]) == ["h", "C_D"]
