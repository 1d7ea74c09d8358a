"""End-to-end runs of the command line on small configurations.

Artifact names, CSV headers and JSON keys are a public contract; they are
compared against ``golden/artifacts.json``.
"""

import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from micropolar.cli import main
from micropolar.io import read_csv, read_snapshot

GOLDEN = json.loads((Path(__file__).parent / "golden" / "artifacts.json").read_text())

SMALL = {
    "symbol-check": "symbol.draws = 40\ntimes.count = 3\n",
    "linear-decay": "times.count = 13\n",
    "profile-error": "times.count = 13\n",
    "enstrophy": (
        "data.w_weight = 1\nparams.gamma = 0.5\nenstrophy.intervals = 1:2\ntimes.count = 5\n"
        "quad.n_radial = 64\nquad.n_angular = 4\n"
    ),
    "splitting": "times.count = 5\n",
    "nonlinear-run": (
        "data.kind = torus-random\ndata.q = 2\ndata.sigma = 3\ndata.w_weight = 1\n"
        "params.mu = 0.05\nparams.chi = 0.05\n"
        "solver.n = 16\nsolver.dt = 1e-2\nsolver.t_end = 0.05\nsolver.record_every = 1\n"
    ),
    "gen-data": "data.kind = torus-random\nsolver.n = 8\n",
}


def _run(tmp_path, experiment, text, *extra):
    tmp_path.mkdir(parents=True, exist_ok=True)
    cfg = tmp_path / f"{experiment}.cfg"
    cfg.write_text(text)
    out = tmp_path / f"out-{experiment}"
    code = main([experiment, "--config", str(cfg), "--out-dir", str(out), *extra])
    meta = json.loads((out / "meta.json").read_text())
    return code, out, meta


@pytest.mark.parametrize("experiment", sorted(SMALL))
def test_experiment_contract(tmp_path, experiment):
    code, out, meta = _run(tmp_path, experiment, SMALL[experiment])
    assert code == 0, meta.get("checks")
    assert meta["status"] == "pass" and meta["exit_code"] == 0
    assert sorted(meta) == GOLDEN["meta.json"]
    gold = GOLDEN[experiment]
    assert sorted(p.name for p in out.iterdir()) == gold["artifacts"]
    for name, header in gold["csv"].items():
        cols, data = read_csv(out / name)
        assert cols == header
        assert data.size and np.all(np.isfinite(data))
    for name, keys in gold["json"].items():
        assert sorted(json.loads((out / name).read_text())) == keys
    # defaults are echoed into the metadata
    assert meta["config"]["params.mu"] == (0.05 if experiment == "nonlinear-run" else 1.0)
    assert meta["seeds"]["run"] == 0


def test_linear_decay_slopes(tmp_path):
    _, out, meta = _run(tmp_path, "linear-decay", SMALL["linear-decay"])
    curves = {c["curve_name"]: c["slope"] for c in json.loads((out / "slopes.json").read_text())["curves"]}
    assert curves["u"] == pytest.approx(-1.5, abs=0.1)
    assert curves["w"] == pytest.approx(-2.5, abs=0.15)


def test_gen_data_reloads(tmp_path):
    _, out, _ = _run(tmp_path, "gen-data", SMALL["gen-data"])
    z, t = read_snapshot(out / "initial_data.mpolar")
    assert z.grid.n == 8 and t == 0.0


def test_deterministic_outputs(tmp_path):
    a = _run(tmp_path / "a", "symbol-check", SMALL["symbol-check"])[1]
    b = _run(tmp_path / "b", "symbol-check", SMALL["symbol-check"])[1]
    for name in ("oracle_gaps.csv", "symbol_table.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()

    def cfg_lines(d):
        return [ln for ln in (d / "effective.cfg").read_text().splitlines() if not ln.startswith("run.out_dir")]

    assert cfg_lines(a) == cfg_lines(b)


def test_seed_override(tmp_path):
    _, out, meta = _run(tmp_path, "symbol-check", SMALL["symbol-check"], "--seed", "5")
    assert meta["seeds"]["run"] == 5 and meta["config"]["run.seed"] == 5
    assert "run.seed = 5" in (out / "effective.cfg").read_text()


def test_jobs_do_not_change_results(tmp_path):
    a = _run(tmp_path / "a", "symbol-check", SMALL["symbol-check"])[1]
    b = _run(tmp_path / "b", "symbol-check", SMALL["symbol-check"], "--jobs", "2")[1]
    assert (a / "oracle_gaps.csv").read_bytes() == (b / "oracle_gaps.csv").read_bytes()


def test_config_error(tmp_path, capsys):
    code, out, meta = _run(tmp_path, "symbol-check", "params.chi = -1\nparams.bogus = 2\n")
    assert code == 2
    assert meta["status"] == "config-error"
    assert meta["errors"] == ["line 1: params.chi: chi must be > 0", "line 2: unknown key 'params.bogus'"]
    assert "chi must be > 0" in capsys.readouterr().err


def test_experiment_conflict(tmp_path):
    code, _, meta = _run(tmp_path, "symbol-check", "run.experiment = enstrophy\n")
    assert code == 2 and "requested" in meta["errors"][0]


def test_failed_check_exit_code(tmp_path):
    # a time window that ends before the splitting time t0 = 20
    code, _, meta = _run(tmp_path, "splitting", "times.t_max = 1.5\ntimes.count = 3\n")
    assert code == 1 and meta["status"] == "fail"
    assert [c["name"] for c in meta["checks"] if not c["passed"]] == ["time_window_after_t0"]


def test_runtime_error_recorded(tmp_path):
    # a blow-up inside the solver still leaves meta.json behind
    text = SMALL["nonlinear-run"].replace("solver.dt = 1e-2", "solver.dt = 10").replace(
        "solver.t_end = 0.05", "solver.t_end = 2000"
    ) + "data.amplitude = 1000\nparams.mu = 0.001\nparams.chi = 0.001\n"
    text = text.replace("params.mu = 0.05\nparams.chi = 0.05\n", "")
    with np.errstate(all="ignore"):
        code, _, meta = _run(tmp_path, "nonlinear-run", text)
    assert code == 3 and meta["status"] == "error"
    assert meta["error"]["type"] == "SolverError"


def test_numpy_fallback_matches(tmp_path):
    """The pure-numpy kernels give the same trajectory as the numba ones."""
    cfg = tmp_path / "nl.cfg"
    cfg.write_text(SMALL["nonlinear-run"])
    outs = {}
    for flag in ("0", "1"):
        out = tmp_path / f"out{flag}"
        env = dict(os.environ, MICROPOLAR_DISABLE_NUMBA=flag)
        proc = subprocess.run(
            [sys.executable, "-m", "micropolar.cli", "nonlinear-run", "--config", str(cfg), "--out-dir", str(out)],
            env=env,
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        meta = json.loads((out / "meta.json").read_text())
        assert meta["backend"] == ("numpy" if flag == "1" else "numba")
        outs[flag] = read_csv(out / "trajectory.csv")[1]
    assert np.allclose(outs["0"], outs["1"], rtol=1e-12, atol=0)
