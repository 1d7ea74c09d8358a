import math

import pytest

from micropolar.config import ConfigError, ExperimentConfig, emit_config, iter_entries, parse_config


def test_minimal_defaults():
    cfg = parse_config("run.experiment = symbol-check\n")
    assert isinstance(cfg, ExperimentConfig)
    assert cfg.experiment == "symbol-check"
    assert cfg["symbol.draws"] == 1000
    assert cfg.params.as_tuple() == (1.0, 1.0, 0.0, 0.0)
    assert cfg.solver.n_cut == 10
    assert cfg.quad.r_min == pytest.approx(1e-4 / math.sqrt(1 + 1e4))
    assert cfg.quad.r_max == 12.0


def test_comments_and_blank_lines():
    text = "# header\n\nparams.mu = 2.5   # trailing\n"
    assert parse_config(text).params.mu == 2.5
    assert list(iter_entries(text)) == [(3, "params.mu", "2.5")]


def test_negative_chi_reported_with_line():
    with pytest.raises(ConfigError) as info:
        parse_config("run.seed = 1\nparams.chi = -1\n")
    assert info.value.errors == ["line 2: params.chi: chi must be > 0"]


def test_all_errors_collected():
    text = "\n".join(
        [
            "params.mu = abc",
            "params.nope = 1",
            "solver.n = 31",
            "params.mu = 2",
            "garbage",
            "data.kind = sphere",
        ]
    )
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    errs = info.value.errors
    assert len(errs) == 6
    assert [e.split(":")[0] for e in errs] == [f"line {i}" for i in (1, 2, 3, 4, 5, 6)]
    assert errs[0].startswith("line 1: params.mu:")
    assert "line 2: unknown key 'params.nope'" in errs
    assert any(e.startswith("line 4: duplicate key 'params.mu'") for e in errs)
    assert "line 5: expected 'section.key = value'" in errs
    assert any(e.startswith("line 6: data.kind") for e in errs)
    # constraint checks run after parsing and still report the line
    assert errs[2] == "line 3: solver.n: n must be an even integer >= 4"


def test_cross_field():
    with pytest.raises(ConfigError) as info:
        parse_config("run.experiment = nonlinear-run\ntimes.t_min = 5\ntimes.t_max = 2\n")
    errs = info.value.errors
    assert "line 3: times.t_max: t_max must exceed t_min" in errs
    assert "default: data.kind: nonlinear-run needs data.kind = torus-random" in errs


def test_overrides():
    cfg = parse_config("run.seed = 3\n", {"run.seed": 9, "run.out_dir": "x"})
    assert cfg.seed == 9 and cfg.data.seed == 9 and cfg.out_dir == "x"
    with pytest.raises(ConfigError, match="override: unknown key"):
        parse_config("", {"nope.x": 1})


def test_bool_and_auto():
    cfg = parse_config("solver.nonlinear = off\nsolver.n_cut = 4\nquad.r_min = 1e-5\n")
    assert cfg.solver.nonlinear is False and cfg.solver.n_cut == 4 and cfg.quad.r_min == 1e-5
    with pytest.raises(ConfigError, match="solver.nonlinear"):
        parse_config("solver.nonlinear = maybe\n")


def test_intervals():
    cfg = parse_config("enstrophy.intervals = 0:1, 3.5:7\n")
    assert cfg["enstrophy.intervals"] == ((0.0, 1.0), (3.5, 7.0))
    with pytest.raises(ConfigError, match="0 <= t1 < t2"):
        parse_config("enstrophy.intervals = 2:1\n")


@pytest.mark.parametrize(
    "text",
    [
        "",
        "run.experiment = nonlinear-run\ndata.kind = torus-random\nsolver.dt = 2e-3\nsolver.box_length = 3.7\n",
        "params.gamma = 0.1\nenstrophy.intervals = 1:2\nquad.r_min = 0.001\ndata.coupling = u0-equals-minus-half-curl-w0\n",
        "times.t_min = 0.1\nfit.t_a = 0.30000000000000004\nrun.out_dir = some dir\n",
    ],
)
def test_emit_roundtrip(text):
    cfg = parse_config(text)
    again = parse_config(emit_config(cfg))
    assert again == cfg
    assert emit_config(again) == emit_config(cfg)
