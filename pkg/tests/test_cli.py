import json

import pytest

from stochain import io
from stochain.cli import EXIT_CONFIG, EXIT_OK, EXIT_VERIFY, main


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main(list(args) + ["--out", str(out)])
    return code, out


def test_moments_m0_and_msl_t0(tmp_path):
    code, out = run(tmp_path, "moments", "--m", "0", "1")
    assert code == EXIT_OK
    rows = io.read_csv(out / "moments.csv")
    assert float(rows[0]["value"]) == 1.0
    assert float(rows[1]["value"]) == pytest.approx(0.786938680574733, rel=1e-9)
    code, out = run(tmp_path, "msl", "--t", "0", name="msl")
    assert float(io.read_csv(out / "msl.csv")[0]["value"]) == pytest.approx(1.0, rel=1e-12)


def test_cf_origin_is_one(tmp_path):
    code, out = run(tmp_path, "cf", "-M", "1000")
    row = next(r for r in io.read_csv(out / "cf.csv") if r["alpha"] == "0.0" and r["beta"] == "0.0")
    assert (float(row["re"]), float(row["im"])) == (1.0, 0.0)


def test_csv_is_crlf_and_manifest_complete(tmp_path):
    code, out = run(tmp_path, "simulate", "-M", "200", "--seed", "5")
    raw = (out / "endpoints.csv").read_bytes()
    assert raw.startswith(b"trajectory,x,y\r\n")
    man = json.loads((out / "manifest.json").read_text())
    assert man["seed"] == 5 and man["subcommand"] == "simulate"
    assert set(man["outputs"]) == {"endpoints.csv", "stats.csv"}
    assert {"version", "wall_clock", "config", "args"} <= set(man)


def test_sde_exact_without_noise_is_constant(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"a": {"kind": "constant", "value": 1.0},
                               "sigma": {"f": {"kind": "constant", "value": 0.0},
                                         "g": {"kind": "constant", "value": 1.0}},
                               "L": 1.0, "N": 100, "T": 1.0}))
    code, out = run(tmp_path, "simulate", "--which", "sde-exact", "-M", "300", "--config", str(cfg))
    rows = io.read_csv(out / "endpoints.csv")
    assert {(r["x"], r["y"]) for r in rows} == {(rows[0]["x"], "0.0")}
    assert float(rows[0]["x"]) == pytest.approx(1.0, abs=1e-12)


def test_replay_is_bitwise(tmp_path):
    code, out = run(tmp_path, "simulate", "--which", "original", "-M", "150", "--paths", "1")
    assert main(["replay", str(out / "manifest.json"), "--out", str(tmp_path / "re")]) == EXIT_OK
    for f in ("endpoints.csv", "stats.csv", "paths.csv"):
        assert (out / f).read_bytes() == (tmp_path / "re" / f).read_bytes()


def test_plot_writes_svg(tmp_path):
    code, out = run(tmp_path, "density", "-M", "1000", "--points", "33", "--plot")
    assert code == EXIT_OK and (out / "density.svg").read_text().lstrip().startswith("<?xml")
    code, out = run(tmp_path, "density", "--phase", "--plot", name="phase")
    assert (out / "phase_density.svg").exists()


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"a": 1}')
    assert run(tmp_path, "msl", "--config", str(bad))[0] == EXIT_CONFIG
    assert "missing" in capsys.readouterr().err
    assert main(["feller", "--bogus"]) == EXIT_CONFIG
    assert run(tmp_path, "simulate", "-M", "10")[0] == EXIT_CONFIG
    assert run(tmp_path, "msl", "--t", "5")[0] == EXIT_CONFIG
    # kappa = 1/2 hat field against the original field: mismatch reported as failure
    code, _ = run(tmp_path, "compare", "-M", "4000", "--kappa", "0.5", name="cmp")
    assert code == EXIT_VERIFY
    assert "informational" in capsys.readouterr().out


def test_compare_from_files(tmp_path):
    _, a = run(tmp_path, "simulate", "--which", "hat", "-M", "3000", name="a")
    _, b = run(tmp_path, "simulate", "--which", "sde-exact", "-M", "3000", name="b")
    code, _ = run(tmp_path, "compare", "--inputs", str(a / "endpoints.csv"), str(b / "endpoints.csv"))
    assert code == EXIT_OK


def test_feller_trivial(tmp_path):
    code, out = run(tmp_path, "feller", "--n", "1", "-M", "200")
    row = io.read_csv(out / "feller.csv")[0]
    assert float(row["formula"]) == 1.0 and float(row["mc_mean"]) == pytest.approx(1.0)
