import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from covdist import detequiv, experiments
from covdist.cli import main
from covdist.config import load_config, parse_config
from covdist.errors import ConfigError

CONFIGS = __import__("pathlib").Path(__file__).resolve().parents[1] / "configs"

BASE = {
    "model_a": {"spectrum": {"eigenvalues": [1, 6, 15, 25], "multiplicity_fractions": [0.1, 0.2, 0.3, 0.4]}},
    "model_b": {"spectrum": {"eigenvalues": [1, 6, 15, 25], "multiplicity_fractions": [0.1, 0.2, 0.3, 0.4]}},
    "ratios": [[1.5, 3]],
    "dims": [10],
    "metrics": ["log-euclidean"],
}


def cfg_file(tmp_path, **overrides):
    doc = {**BASE, **overrides}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return str(p)


def read_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# -- config validation -------------------------------------------------------

@pytest.mark.parametrize("patch, field", [
    ({"bogus": 1}, "bogus"),
    ({"metrics": []}, "metrics"),
    ({"metrics": ["cosine"]}, "metrics[0]"),
    ({"ratios": [[1, 3]]}, "ratios[0][0]"),
    ({"ratios": [[1.55, 3]]}, "ratios[0][0]"),
    ({"dims": [0]}, "dims[0]"),
    ({"trials": 1}, "trials"),
    ({"overlap_mode": "mean"}, "overlap_mode"),
    ({"model_a": {"toeplitz": {"rho": 1.2}}}, "model_a.toeplitz.rho"),
    ({"model_b": {"spectrum": {"eigenvalues": [2, 1], "multiplicity_fractions": [0.5, 0.5]}}},
     "model_b.spectrum.eigenvalues"),
    ({"model_a": {"toeplitz": {"rho": 0.5}, "extra": 3}}, "model_a.extra"),
    ({"model_b": {"toeplitz": {"rho": 0.5}, "field": "real"}}, "model_b.field"),
])
def test_config_errors_name_the_field(patch, field):
    with pytest.raises(ConfigError) as info:
        parse_config({**BASE, **patch})
    assert info.value.field == field


def test_config_error_exit_code(tmp_path, capsys):
    code, out, err = run_cli(capsys, "det-equiv", "--config", cfg_file(tmp_path, metrics=[]))
    assert code == 1 and "metrics" in err and out == ""
    code, _, err = run_cli(capsys, "det-equiv", "--config", str(tmp_path / "missing.json"))
    assert code == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli(capsys, "det-equiv", "--config", str(bad))[0] == 1


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["sweep", "--config", "x.json"])
    assert info.value.code == 1


def test_shipped_configs_parse():
    for path in sorted(CONFIGS.glob("*.json")):
        cfg = load_config(path)
        assert cfg.cases()


# -- det-equiv / convergence -------------------------------------------------

def test_det_equiv_reference_value(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "det-equiv", "--config", cfg_file(tmp_path))
    assert code == 0
    (row,) = read_rows(out)
    assert (row["experiment"], row["M"], row["N1"], row["N2"]) == ("det-equiv", "10", "15", "30")
    assert float(row["value"]) == pytest.approx(1.44313, abs=1e-3)
    total = float(row["alpha1"]) - 2 * float(row["cross"]) + float(row["alpha2"])
    assert total == pytest.approx(float(row["value"]), rel=1e-12)


def test_det_equiv_fig1_config_header_and_rows(tmp_path, capsys):
    out_path = tmp_path / "o.csv"
    code, out, _ = run_cli(capsys, "det-equiv", "--config", str(CONFIGS / "fig1_same.json"),
                           "--out", str(out_path))
    assert code == 0 and out == ""
    text = out_path.read_text()
    assert text.splitlines()[0].split(",")[:10] == list(experiments.HEADER[:10])
    rows = read_rows(text)
    assert len(rows) == 24
    ref = {("10", "1", "4"): 5.66056, ("10", "8", "8"): 3.89561, ("10", "15", "30"): 1.44313,
           ("10", "20", "80"): 0.81271}
    for r in rows:
        key = (r["M"], r["N1"], r["N2"])
        if key in ref:
            assert float(r["value"]) == pytest.approx(ref[key], abs=1e-3)


def test_det_equiv_toeplitz_all_metrics(tmp_path, capsys):
    path = cfg_file(tmp_path, model_a={"toeplitz": {"rho": 0.75}}, model_b={"toeplitz": {"rho": 0.75}},
                    ratios=[[2, 2], [0.5, 2]], dims=[20],
                    metrics=["log-euclidean", "euclidean", "symmetrized-kl"])
    code, out, _ = run_cli(capsys, "det-equiv", "--config", path)
    assert code == 0
    rows = read_rows(out)
    for r in rows:
        if r["metric"] == "symmetrized-kl" and r["N1"] == "10":
            assert r["value"] == "" and r["flags"] == "undefined-undersampled"
        else:
            assert float(r["value"]) > 0


def test_convergence_rows_and_low_trials_flag(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "convergence", "--config", cfg_file(tmp_path), "--trials", "2",
                           "--seed", "4")
    assert code == 0
    rows = read_rows(out)
    kinds = [r["experiment"] for r in rows]
    assert kinds == ["empirical", "det-equiv", "gap"]
    emp, de, gap = rows
    assert emp["trials"] == "2" and emp["seed"] == "4" and "low-trials" in emp["flags"]
    assert float(gap["value"]) == pytest.approx(abs(float(emp["value"]) - float(de["value"])), rel=1e-12)


def test_csv_is_byte_identical_across_runs(tmp_path, monkeypatch):
    path = cfg_file(tmp_path, dims=[10, 20], ratios=[[1.5, 3], [0.5, 2]], trials=150)
    cfg = load_config(path)
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("COVDIST_THREADS", threads)
        outs.append(experiments.rows_to_csv(experiments.run_convergence(cfg)))
        outs.append(experiments.rows_to_csv(experiments.run_det_equiv(cfg)))
    assert outs[0] == outs[2] and outs[1] == outs[3]


# -- sweep ---------------------------------------------------------------------

def sweep_values(start, stop, steps, metric="log-euclidean"):
    cfg = load_config(CONFIGS / "toeplitz_sweep.json")
    rows = experiments.run_sweep(cfg, "rho2", start, stop, steps, threads=2)
    grid = [r for r in rows if r.experiment == "sweep" and r.metric == metric]
    return np.array([r.param for r in grid]), np.array([r.value for r in grid]), rows


def test_sweep_smooth_by_jump_ratio():
    _, v, _ = sweep_values(0.0, 0.9, 46)
    jumps = np.abs(np.diff(v))
    assert jumps.max() < 10 * np.median(jumps)


def test_sweep_continuous_under_refinement():
    # halving the step must roughly halve the largest increment on a continuous curve
    _, coarse, _ = sweep_values(0.0, 0.99, 100)
    _, fine, _ = sweep_values(0.0, 0.99, 199)
    np.testing.assert_allclose(fine[::2], coarse, rtol=1e-12)
    ratio = np.abs(np.diff(fine)).max() / np.abs(np.diff(coarse)).max()
    assert 0.3 < ratio < 0.7


def test_sweep_minimum_near_matched_rho(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "sweep", "--config", str(CONFIGS / "toeplitz_sweep.json"),
                           "--param", "rho2", "--from", "0.5", "--to", "0.95", "--steps", "10")
    assert code == 0
    rows = read_rows(out)
    at = [r for r in rows if r["experiment"] == "sweep" and r["param"] == "0.75"]
    assert len(at) == 3 and all(float(r["value"]) > 0 for r in at)
    argmin = {r["metric"]: float(r["param"]) for r in rows if r["experiment"] == "sweep-argmin"}
    assert set(argmin) == {"log-euclidean", "euclidean", "symmetrized-kl"}
    assert all(abs(v - 0.75) <= 0.05 + 1e-12 for v in argmin.values())


@pytest.mark.parametrize("args", [["--from", "0.5", "--to", "0.4", "--steps", "5"],
                                  ["--from", "0.0", "--to", "1.0", "--steps", "5"],
                                  ["--from", "0.0", "--to", "0.5", "--steps", "1"]])
def test_sweep_bad_grid(capsys, args):
    code, _, err = run_cli(capsys, "sweep", "--config", str(CONFIGS / "toeplitz_sweep.json"), *args)
    assert code == 1 and "config error" in err


def test_sweep_requires_toeplitz_model_b(tmp_path, capsys):
    code, _, err = run_cli(capsys, "sweep", "--config", cfg_file(tmp_path), "--from", "0", "--to", "0.5",
                           "--steps", "3")
    assert code == 1 and "model_b" in err


# -- validate ------------------------------------------------------------------

def test_validate_fast_passes(capsys):
    code, out, _ = run_cli(capsys, "validate", "--fast")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[-1] == "validation passed"
    assert all("worst deviation" in ln for ln in lines[:-1])


def test_validate_detects_broken_alpha(monkeypatch, capsys):
    good = detequiv._alpha_oversampled
    monkeypatch.setattr(detequiv, "_alpha_oversampled", lambda *a, **k: -good(*a, **k))
    lines, ok = experiments.run_validate(fast=True)
    assert not ok
    assert any(ln.startswith("FAIL") and "alpha" in ln for ln in lines)
    assert run_cli(capsys, "validate", "--fast")[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "covdist", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "det-equiv" in proc.stdout
