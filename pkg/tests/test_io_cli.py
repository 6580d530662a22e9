import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rarpinn import io
from rarpinn.cli import grid_of, interpolated_solution, main
from rarpinn.config import PRESETS, build, expand
from rarpinn.errors import ConfigurationError, UsageError

TINY = """
[experiment]
seed = 7
[domain]
x_lo = -5
x_hi = 5
t_lo = -1
t_hi = 1
[grid]
nx = 21
nt = 11
[network]
hidden_layers = 2
hidden_width = 6
[sampling]
n0 = 5
nb = 5
nf = 30
[rar]
m = 2
epsilon0 = 1e-9
max_rounds = 2
candidate_pool = 100
refit_iterations = 3
[adam]
lr = 0.01
iterations = 8
[lbfgs]
max_iter = 4
[inverse]
n_u = 50
"""


def write_ini(tmp_path, extra="", name="run.ini"):
    path = tmp_path / name
    path.write_text(TINY + extra)
    return path


# --- delimited text --------------------------------------------------------


@given(st.lists(st.floats(allow_nan=False, allow_infinity=True, width=64), min_size=6, max_size=60))
def test_table_round_trip_is_exact(tmp_path_factory, values):
    values = values[: len(values) // 6 * 6]
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    io.write_dataset(path, np.reshape(values, (-1, 6)))
    back = io.read_dataset(path)
    np.testing.assert_array_equal(back, np.reshape(values, (-1, 6)))


def test_read_errors_name_the_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,t,u1,v1,u2,v2\n1,2,3,4,5,6\n1,2,3\n")
    with pytest.raises(UsageError, match=r"bad.csv:3"):
        io.read_dataset(path)
    path.write_text("x,t,u1,v1,u2,v2\n1,2,3,4,5,oops\n")
    with pytest.raises(UsageError, match=r"bad.csv:2"):
        io.read_dataset(path)
    path.write_text("x,t,score\n")
    with pytest.raises(UsageError, match=r"bad.csv:1: expected header"):
        io.read_dataset(path)
    with pytest.raises(UsageError, match="no such file"):
        io.read_dataset(tmp_path / "missing.csv")


def test_loss_file_round_trip(tmp_path):
    rows = [("adam", 0, 0.5, 0.25, 0.125, 0.875), ("lbfgs", 3, 1e-9, 0.0, 2e-9, 3e-9)]
    io.write_losses(tmp_path / "l.csv", rows)
    assert io.read_losses(tmp_path / "l.csv") == rows


# --- metrics ---------------------------------------------------------------


def test_relative_l2_examples(rng):
    exact = rng.normal(size=(50, 4))
    assert io.relative_l2(exact, exact) == (0.0, 0.0)
    e1, e2 = io.relative_l2(1.1 * exact, exact)
    assert e1 == pytest.approx(0.1) and e2 == pytest.approx(0.1)
    pred = exact + rng.normal(scale=0.1, size=exact.shape)
    for s in (0.5, 2.0):
        np.testing.assert_allclose(io.relative_l2(s * pred, s * exact), io.relative_l2(pred, exact))
    zero = exact.copy()
    zero[:, 2:] = 0
    with pytest.raises(UsageError, match="h2"):
        io.relative_l2(exact, zero)
    with pytest.raises(UsageError):
        io.relative_l2(exact[:, :3], exact[:, :3])


def test_relative_l2_uses_magnitudes():
    exact = np.array([[1.0, 0.0, 0.0, 1.0]])
    rotated = np.array([[0.0, 1.0, -1.0, 0.0]])
    assert io.relative_l2(rotated, exact) == (0.0, 0.0)


# --- configuration ---------------------------------------------------------


def test_presets_build():
    for name in PRESETS:
        cfg = build(expand(name, overrides={"paths": {"dataset": "x.csv"}}))
        assert cfg.preset == name
    inel = build(expand("two-soliton-inelastic"))
    assert inel.oracle_spec.xi21 == pytest.approx((39 + 80j) / 89)
    assert (inel.grid.nx, inel.grid.nt, inel.nf) == (400, 301, 15000)
    assert build(expand("three-soliton-ingest", overrides={"paths": {"dataset": "x.csv"}})).oracle_spec is None


def test_config_errors_name_section_and_key(tmp_path):
    with pytest.raises(ConfigurationError, match=r"unknown section \[bogus\]"):
        expand(overrides={"bogus": {"a": "1"}})
    with pytest.raises(ConfigurationError, match="unknown key 'widht'"):
        (tmp_path / "a.ini").write_text("[network]\nwidht = 3\n")
        expand(file=tmp_path / "a.ini")
    with pytest.raises(ConfigurationError, match=r"\[adam\] lr"):
        build(expand(overrides={"adam": {"lr": "fast"}}))
    with pytest.raises(ConfigurationError, match=r"\[adam\]"):
        build(expand(overrides={"adam": {"lr": "-1"}}))
    with pytest.raises(ConfigurationError, match="unknown preset"):
        expand("nope")
    with pytest.raises(ConfigurationError, match="not found"):
        expand(file=tmp_path / "none.ini")


def test_mode_checks():
    with pytest.raises(ConfigurationError, match="cannot generate"):
        build(expand("three-soliton-ingest", overrides={"experiment": {"mode": "generate"}}))
    with pytest.raises(ConfigurationError, match="dataset is required"):
        build(expand("three-soliton-ingest"))
    with pytest.raises(ConfigurationError, match="alpha = beta = gamma = 1"):
        build(expand("two-soliton-elastic", overrides={"experiment": {"mode": "train-inverse"}}))
    with pytest.raises(ConfigurationError, match="prediction is required"):
        build(expand(overrides={"experiment": {"mode": "evaluate"}}))
    with pytest.raises(ConfigurationError, match="different files"):
        build(expand(overrides={"experiment": {"mode": "evaluate"}, "paths": {"prediction": "a.csv", "dataset": "a.csv"}}))


# --- command line ----------------------------------------------------------


def run_cli(*args):
    return main([*map(str, args), "-q"])


def test_generate_default_grid(tmp_path, capsys):
    assert run_cli("generate", "--preset", "one-soliton", "--out", tmp_path) == 0
    rows = io.read_dataset(tmp_path / "dataset.csv")
    assert rows.shape == (60300, 6)
    summary = json.loads(capsys.readouterr().out)
    assert summary["rows"] == 60300
    assert summary["dx"] == pytest.approx(20 / 299) and summary["dt"] == pytest.approx(4 / 200)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["config"]["experiment"]["preset"] == "one-soliton"
    assert {"numpy", "scipy", "python", "rarpinn"} <= set(manifest["versions"])


def test_grid_recovery_and_interpolation(tmp_path):
    run_cli("generate", "--config", write_ini(tmp_path), "--out", tmp_path)
    rows = io.read_dataset(tmp_path / "dataset.csv")
    grid, fields = grid_of(rows)
    assert (grid.nx, grid.nt) == (21, 11) and fields.shape == (11, 21, 4)
    sol, _ = interpolated_solution(rows)
    h1, h2 = sol(rows[:, 0], rows[:, 1])
    np.testing.assert_array_equal(np.column_stack([h1.real, h1.imag, h2.real, h2.imag]), rows[:, 2:])
    with pytest.raises(UsageError, match="tensor grid"):
        grid_of(rows[:-1])


def test_train_forward_bundle(tmp_path, capsys):
    cfg = write_ini(tmp_path)
    with pytest.warns(RuntimeWarning):
        assert run_cli("train-forward", "--config", cfg, "--out", tmp_path / "rar", "--single-thread") == 0
    out = tmp_path / "rar"
    for name in ("losses.csv", "rar.csv", "tau0.csv", "taub.csv", "tauf.csv", "params.npy", "prediction.csv",
                 "exact.csv", "magnitude.csv", "residual.csv", "summary.json", "manifest.json"):
        assert (out / name).is_file(), name
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n_collocation"] == 34 and summary["rar_rounds"] == 2
    assert summary["mode"] == "rar"
    assert len(io.read_table(out / "residual.csv", io.RESIDUAL_HEADER)) == 21 * 11
    assert io.read_table(out / "magnitude.csv", io.MAGNITUDE_HEADER).shape == (231, 8)

    # a second run is bit-identical
    with pytest.warns(RuntimeWarning):
        run_cli("train-forward", "--config", cfg, "--out", tmp_path / "again", "--single-thread")
    np.testing.assert_array_equal(np.load(out / "params.npy"), np.load(tmp_path / "again" / "params.npy"))

    # the fixed-collocation run shares the initial and boundary sets
    fixed = write_ini(tmp_path, "", "fixed.ini")
    fixed.write_text(fixed.read_text().replace("nf = 30", "nf = 30\ntpinn = true"))
    assert run_cli("train-forward", "--config", fixed, "--out", tmp_path / "tp") == 0
    for name in ("tau0.csv", "taub.csv"):
        assert (out / name).read_bytes() == (tmp_path / "tp" / name).read_bytes()
    assert len(io.read_table(tmp_path / "tp" / "tauf.csv", io.POINTS_HEADER)) == 34
    assert json.loads((tmp_path / "tp" / "summary.json").read_text())["mode"] == "tpinn"

    # evaluate the prediction against the oracle and against the written exact field
    assert run_cli("evaluate", "--config", cfg, "--out", tmp_path / "ev") != 0  # no prediction path
    ev = write_ini(tmp_path, f"[paths]\nprediction = {out / 'prediction.csv'}\n", "ev.ini")
    capsys.readouterr()
    assert run_cli("evaluate", "--config", ev, "--out", tmp_path / "ev") == 0
    got = json.loads(capsys.readouterr().out)["relative_l2"]
    assert got == summary["relative_l2"]
    ev.write_text(ev.read_text() + f"dataset = {out / 'exact.csv'}\n")
    assert run_cli("evaluate", "--config", ev, "--out", tmp_path / "ev2") == 0
    assert json.loads(capsys.readouterr().out)["relative_l2"] == pytest.approx(got)


def test_evaluate_perfect_prediction_is_zero(tmp_path, capsys):
    cfg = write_ini(tmp_path)
    run_cli("generate", "--config", cfg, "--out", tmp_path)
    ev = write_ini(tmp_path, f"[paths]\nprediction = {tmp_path / 'dataset.csv'}\n", "ev.ini")
    capsys.readouterr()
    assert run_cli("evaluate", "--config", ev, "--out", tmp_path / "ev") == 0
    assert json.loads(capsys.readouterr().out)["relative_l2"] == {"h1": 0.0, "h2": 0.0}


def test_ingest_without_closed_form(tmp_path):
    two = (
        "[oracle]\nkind = two-soliton\nalpha = 2\nbeta = 2\ngamma = 0.5+0.5j\n"
    )
    run_cli("generate", "--config", write_ini(tmp_path, two, "gen.ini"), "--out", tmp_path / "gen")
    ingest = (
        "[oracle]\nkind = none\nalpha = 2\nbeta = 2\ngamma = 0.5+0.5j\n"
        f"[paths]\ndataset = {tmp_path / 'gen' / 'dataset.csv'}\n"
    )
    with pytest.warns(RuntimeWarning):
        assert run_cli("train-forward", "--config", write_ini(tmp_path, ingest, "in.ini"), "--out", tmp_path / "in") == 0
    summary = json.loads((tmp_path / "in" / "summary.json").read_text())
    assert set(summary["relative_l2"]) == {"h1", "h2"}
    assert not (tmp_path / "in" / "exact.csv").exists()
    # initial supervision reproduces the file's values at grid nodes
    rows = io.read_dataset(tmp_path / "gen" / "dataset.csv")
    tau0 = io.read_table(tmp_path / "in" / "tau0.csv", io.POINTS_HEADER)
    assert np.isin(tau0[:, 0], rows[:, 0]).all() and (tau0[:, 1] == -1).all()


@pytest.mark.filterwarnings("ignore:refinement stopped:RuntimeWarning")
def test_train_inverse_bundle(tmp_path, capsys):
    assert run_cli("train-inverse", "--config", write_ini(tmp_path), "--out", tmp_path) == 0
    summary = json.loads(capsys.readouterr().out)
    ident = summary["identification"]
    assert ident["n_u"] == 50 and len(ident["errors"]) == 4
    assert (tmp_path / "identified.txt").read_text().startswith("i h1_t ")


def test_cli_exit_codes(tmp_path, capsys):
    assert run_cli("train-forward", "--config", tmp_path / "missing.ini", "--out", tmp_path) == 2
    assert "config error" in capsys.readouterr().err
    bad = write_ini(tmp_path, "[paths]\ndataset = /nonexistent.csv\n[oracle]\nkind = none\n", "bad.ini")
    assert run_cli("train-forward", "--config", bad, "--out", tmp_path / "b") == 2
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["status"] == "failed"
