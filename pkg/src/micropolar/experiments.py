"""Experiment drivers behind the command line.

Each driver takes a validated :class:`~micropolar.config.ExperimentConfig`
and an output directory, writes its curves there, and returns the list of
built-in checks it evaluated.  :func:`run_experiment` wraps a driver and
always leaves a ``meta.json`` behind, whether the run passed, failed a
check or raised.
"""

from __future__ import annotations

import dataclasses
import math
import platform
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .config import ExperimentConfig, emit_config
from .continuum import (
    PLANCHEREL,
    constants_ledger,
    decay_curves,
    enstrophy_functional,
    enstrophy_identity_residual,
    fourier_splitting_diagnostics,
    l2_norm_continuum,
    profile_error_curves,
    total_energy,
)
from .datagen import make_continuum_profile, make_torus_field
from .io import read_snapshot, write_csv, write_json, write_snapshot
from .linear import propagator_matrix, write_symbol_csv
from .oracle import oracle_gap, sample_draws
from .solver import SolverError, difference_from_linear, energy_balance_residual, run
from .spectral import hermitian_defect, is_divergence_free, l2_norm_sq

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_ERROR = 3


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    bound: float | None = None
    detail: str = ""

    def as_json(self) -> dict:
        def num(x):
            return None if x is None or not math.isfinite(x) else float(x)

        return {"name": self.name, "passed": bool(self.passed), "value": num(self.value), "bound": num(self.bound), "detail": self.detail}


def _at_most(name, value, bound, detail="") -> Check:
    return Check(name, bool(value <= bound), float(value), float(bound), detail)


def _within(name, value, target, tol) -> Check:
    return Check(name, bool(abs(value - target) <= tol), float(value), float(tol), f"target {target:g}")


@dataclass
class Outcome:
    checks: list[Check] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _curve_csv(path: Path, times, values) -> None:
    write_csv(path, ("t", "value"), zip(times, values))


def _non_increasing(values, rtol=1e-12) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) <= rtol * np.abs(v[:-1])))


# ---------------------------------------------------------------------------
# symbol-check
# ---------------------------------------------------------------------------


def _gap_rows(draws) -> list[tuple]:
    rows = []
    for p, xi, t in draws:
        gap, norm = oracle_gap(p, xi, t)
        rows.append((p.mu, p.chi, p.gamma, p.kappa, float(np.linalg.norm(xi)), t, gap, norm, gap / (1.0 + norm)))
    return rows


def _chunks(seq, k):
    size = -(-len(seq) // k)
    return [seq[i : i + size] for i in range(0, len(seq), size)]


def symbol_check(cfg: ExperimentConfig, out: Path, jobs: int) -> Outcome:
    draws = sample_draws(cfg.seed, cfg["symbol.draws"])
    if jobs > 1 and len(draws) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = [r for part in pool.map(_gap_rows, _chunks(draws, jobs)) for r in part]
    else:
        rows = _gap_rows(draws)
    write_csv(
        out / "oracle_gaps.csv",
        ("draw", "mu", "chi", "gamma", "kappa", "xi_norm", "t", "gap", "oracle_norm", "relative_gap"),
        [(i,) + r for i, r in enumerate(rows)],
    )
    worst = max(r[-1] for r in rows)
    checks = [_at_most("oracle_gap", worst, 1e-8, "max |K - K_oracle| / (1 + ||K_oracle||)")]

    # identity and longitudinal cases on the same draws
    eye6 = np.eye(6)
    ident = max(float(np.max(np.abs(propagator_matrix(p, xi, 0.0) - eye6))) for p, xi, _ in draws)
    checks.append(_at_most("K_at_t0_is_identity", ident, 1e-14))
    zero = 0.0
    for p, _, t in draws:
        target = np.diag([1.0] * 3 + [math.exp(-4.0 * p.chi * t)] * 3)
        zero = max(zero, float(np.max(np.abs(propagator_matrix(p, np.zeros(3), t) - target))))
    checks.append(_at_most("K_at_xi0", zero, 1e-12))
    longi = 0.0
    for p, xi, t in draws:
        K = propagator_matrix(p, xi, t)
        e = xi / np.linalg.norm(xi)
        expected = math.exp(-4.0 * p.chi * t - (p.gamma + p.kappa) * t * float(xi @ xi))
        longi = max(longi, abs(complex(e @ K[3:, 3:] @ e) - expected))
    checks.append(_at_most("longitudinal_block", longi, 1e-12))

    write_symbol_csv(out / "symbol_table.csv", cfg.params, np.geomspace(1e-4, 1e2, 25), cfg.times.values())
    return Outcome(checks, {"draws": len(rows), "max_relative_gap": worst})


# ---------------------------------------------------------------------------
# continuum experiments
# ---------------------------------------------------------------------------

_DECAY_FILES = {"u": "decay_uL.csv", "w": "decay_wL.csv", "h": "decay_hL.csv", "grad_u": "decay_grad_uL.csv", "E": "decay_EL.csv", "F": "decay_F.csv"}


def _report_json(cfg: ExperimentConfig, reports) -> dict:
    return {
        "curves": [r.as_json() for r in reports],
        "quad_spec": dataclasses.asdict(cfg.quad),
        "params": dataclasses.asdict(cfg.params),
    }


def linear_decay(cfg: ExperimentConfig, out: Path, jobs: int) -> Outcome:
    p, spec = cfg.params, cfg.data
    prof = make_continuum_profile(spec)
    times = cfg.times.values()
    reports = decay_curves(p, prof, times, cfg.quad, cfg.window)
    for name, fname in _DECAY_FILES.items():
        _curve_csv(out / fname, times, reports[name].values)
    write_json(out / "slopes.json", _report_json(cfg, reports.values()))
    su, sw = reports["u"].fitted_slope, reports["w"].fitted_slope
    checks = [Check("F_non_increasing", _non_increasing(reports["F"].values))]
    summary = {"slope_u": su, "slope_w": sw}
    if spec.coupling == "independent":
        # a vanishing u0 leaves the curl of w0 as the leading velocity term
        q_u = spec.q if spec.u_weight > 0 else spec.q + 1.0
        gamma_rate = q_u + 1.5
        summary["Gamma"] = gamma_rate
        checks.append(_within("slope_uL", su, -gamma_rate, 0.10))
        checks.append(_within("slope_wL", sw, -(gamma_rate + 1.0), 0.15))
        checks.append(_at_most("w_gains_one_power", sw - su, -0.8))
    else:
        # compare against the heat flow of u0 alone
        t_ref = float(times[np.argmin(np.abs(np.log(times / 1e3)))])
        heat = l2_norm_continuum(lambda xi: np.exp(-p.mu * t_ref * np.sum(xi * xi, axis=0)) * prof.u0_hat(xi), cfg.quad) ** 2
        u_ref = float(reports["u"].values[list(times).index(t_ref)])
        ratio = heat / u_ref
        summary.update({"t_ref": t_ref, "heat_uL": heat, "uL": u_ref, "heat_ratio": ratio})
        checks.append(Check("faster_than_heat", ratio >= 10.0, ratio, 10.0, "heat / u_L at t_ref"))
    return Outcome(checks, summary)


def profile_error(cfg: ExperimentConfig, out: Path, jobs: int) -> Outcome:
    spec = cfg.data
    prof = make_continuum_profile(spec)
    times = cfg.times.values()
    eu, ew = profile_error_curves(cfg.params, prof, times, cfg.quad, cfg.window)
    _curve_csv(out / "profile_error_u.csv", times, eu.values)
    _curve_csv(out / "profile_error_w.csv", times, ew.values)
    write_json(out / "slopes.json", _report_json(cfg, (eu, ew)))
    checks = []
    w0_zero = spec.coupling == "independent" and spec.w_weight == 0 and spec.w_longitudinal == 0
    u0_zero = spec.coupling == "independent" and spec.u_weight == 0
    if w0_zero:
        checks.append(_at_most("slope_u_error", eu.fitted_slope, -0.9))
        checks.append(_at_most("slope_w_error", ew.fitted_slope, -1.35))
        t_b = cfg.window[1]
        last = (times >= t_b / 10.0 * (1 - 1e-12)) & (times <= t_b * (1 + 1e-12))
        checks.append(Check("t_times_u_error_non_increasing", _non_increasing(times[last] * eu.values[last])))
    elif u0_zero:
        checks.append(_at_most("slope_w_error", ew.fitted_slope, -1.85))
    return Outcome(checks, {"case": "w0=0" if w0_zero else "u0=0" if u0_zero else "general", "slope_u": eu.fitted_slope, "slope_w": ew.fitted_slope})


def _enstrophy_row(args) -> tuple:
    p, prof, quad, t1, t2 = args
    res = enstrophy_identity_residual(p, prof, t1, t2, quad)
    F1 = enstrophy_functional(p, prof, t1, quad)
    F2 = enstrophy_functional(p, prof, t2, quad)
    return (t1, t2, F1, F2, res, abs(res) / F1)


def enstrophy(cfg: ExperimentConfig, out: Path, jobs: int) -> Outcome:
    p = cfg.params
    prof = make_continuum_profile(cfg.data)
    tasks = [(p, prof, cfg.quad, t1, t2) for t1, t2 in cfg["enstrophy.intervals"]]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_enstrophy_row, tasks))
    else:
        rows = [_enstrophy_row(t) for t in tasks]
    write_csv(out / "enstrophy_residuals.csv", ("t1", "t2", "F_t1", "F_t2", "residual", "relative_residual"), rows)
    times = cfg.times.values()
    F = [enstrophy_functional(p, prof, float(t), cfg.quad) for t in times]
    _curve_csv(out / "enstrophy_F.csv", times, F)
    tol = cfg["enstrophy.tol"]
    checks = [_at_most(f"relative_residual[{r[0]:g},{r[1]:g}]", r[5], tol) for r in rows]
    checks.append(Check("F_non_increasing", _non_increasing(F)))
    return Outcome(checks, {"a": constants_ledger(p).a, "max_relative_residual": max(r[5] for r in rows)})


def splitting(cfg: ExperimentConfig, out: Path, jobs: int) -> Outcome:
    p = cfg.params
    led = constants_ledger(p)
    write_json(out / "constants.json", dataclasses.asdict(led))
    prof = make_continuum_profile(cfg.data)
    t_lo = max(led.t0, cfg.times.t_min)
    checks = [
        Check("constants_positive", all(x > 0 for x in (led.c1, led.c2, led.c3, led.c4, led.delta, led.a))),
        _at_most("t0_vs_10_over_delta", 10.0 / led.delta, led.t0),
        _at_most("c2_one_plus_t0", 10.0, led.c2 * (1.0 + led.t0)),
    ]
    if t_lo >= cfg.times.t_max:
        checks.append(Check("time_window_after_t0", False, t_lo, cfg.times.t_max, "t_max must exceed t0"))
        return Outcome(checks, {"t0": led.t0})
    times = np.geomspace(t_lo, cfg.times.t_max, cfg.times.count)
    rows = []
    for t in times:
        g, mass = fourier_splitting_diagnostics(p, led, prof, float(t), cfg.quad)
        energy = total_energy(p, prof, float(t), cfg.quad)
        rows.append((float(t), g, mass, PLANCHEREL * mass, energy, PLANCHEREL * mass / energy))
    write_csv(out / "splitting.csv", ("t", "g", "I_z", "I_z_l2", "energy", "low_fraction"), rows)
    gs = [r[1] for r in rows]
    checks.append(Check("g_decreasing", bool(np.all(np.diff(gs) < 0))))
    checks.append(_at_most("low_fraction", max(r[5] for r in rows), 1.0 + 1e-8))
    return Outcome(checks, {"t0": led.t0, "delta": led.delta})


# ---------------------------------------------------------------------------
# torus experiments
# ---------------------------------------------------------------------------


def nonlinear_run(cfg: ExperimentConfig, out: Path, jobs: int) -> Outcome:
    scfg = cfg.solver
    z0 = make_torus_field(scfg.grid, cfg.data, scfg.n_cut)
    write_snapshot(out / "initial.mpolar", z0, 0.0)
    traj = run(scfg, z0)
    write_csv(out / "trajectory.csv", traj.CSV_COLUMNS, traj.table())
    E0 = float(traj.energy[0])
    t_end = float(traj.times[-1])
    res = energy_balance_residual(traj, scfg.params, 0.0, t_end)
    tol = cfg["solver.residual_tol"]
    scale = max(E0, np.finfo(float).tiny)
    checks = [
        Check("finite", bool(np.all(np.isfinite(traj.table())))),
        _at_most("energy_balance_residual", abs(res) / scale, tol, "|residual| / E(0)"),
        _at_most("energy_increase", float(np.max(np.diff(traj.energy), initial=0.0)) / scale, tol),
    ]
    summary = {"E0": E0, "E_end": float(traj.energy[-1]), "residual": res, "steps": scfg.n_steps}
    if traj.states:
        final = traj.states[-1]
        write_snapshot(out / "final.mpolar", final, t_end)
        checks.append(Check("final_u_divergence_free", is_divergence_free(final.u, rtol=1e-11)))
        gap = difference_from_linear(traj, scfg.params)
        _curve_csv(out / "gap_from_linear.csv", gap.times, gap.values)
        summary["max_gap"] = float(np.max(gap.values))
    return Outcome(checks, summary)


def gen_data(cfg: ExperimentConfig, out: Path, jobs: int) -> Outcome:
    spec = cfg.data
    checks = []
    if spec.kind == "torus-random":
        scfg = cfg.solver
        z = make_torus_field(scfg.grid, spec, scfg.n_cut)
        path = out / "initial_data.mpolar"
        write_snapshot(path, z, 0.0)
        back, t = read_snapshot(path)
        same = back.stacked().tobytes() == z.stacked().tobytes() and t == 0.0
        checks.append(Check("reload_bit_identical", same))
        checks.append(Check("u_divergence_free", is_divergence_free(z.u, rtol=1e-12)))
        checks.append(_at_most("hermitian_defect", hermitian_defect(z.stacked(), scfg.grid), 1e-14))
        g = scfg.grid
        vol = g.box_length**3
        summary = {"rms_u": math.sqrt(l2_norm_sq(z.u.data, g) / vol), "rms_w": math.sqrt(l2_norm_sq(z.w.data, g) / vol)}
        return Outcome(checks, summary)

    prof = make_continuum_profile(spec)
    r = np.geomspace(cfg.quad.r_min, cfg.quad.r_max, 200)
    d = np.array([1.0, 2.0, 2.0]) / 3.0
    pts = r[None, :] * d[:, None]
    u0, w0 = prof.u0_hat(pts), prof.w0_hat(pts)
    write_csv(
        out / "profile_samples.csv",
        ("r", "abs_u0_hat", "abs_w0_hat"),
        zip(r, np.sqrt(np.sum(np.abs(u0) ** 2, axis=0)), np.sqrt(np.sum(np.abs(w0) ** 2, axis=0))),
    )
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    xi = rng.standard_normal((3, 10**6)) * spec.sigma
    uu = prof.u0_hat(xi)
    scale = np.sqrt(np.sum(xi * xi, axis=0)) * np.sqrt(np.sum(np.abs(uu) ** 2, axis=0))
    div = float(np.max(np.abs(np.sum(xi * uu, axis=0)) / np.where(scale > 0, scale, 1.0)))
    checks.append(_at_most("u0_divergence_free", div, 1e-14))
    if spec.coupling != "independent":
        ww = prof.w0_hat(xi)
        cw = np.stack((xi[1] * ww[2] - xi[2] * ww[1], xi[2] * ww[0] - xi[0] * ww[2], xi[0] * ww[1] - xi[1] * ww[0]))
        gap = float(np.max(np.abs(uu + 0.5j * cw)))
        checks.append(_at_most("u0_plus_half_curl_w0", gap, 1e-15 * max(1.0, float(np.max(np.abs(uu))))))
    return Outcome(checks, {"q": prof.q, "sigma": prof.sigma})


DRIVERS = {
    "symbol-check": symbol_check,
    "linear-decay": linear_decay,
    "profile-error": profile_error,
    "enstrophy": enstrophy,
    "splitting": splitting,
    "nonlinear-run": nonlinear_run,
    "gen-data": gen_data,
}


def _versions() -> dict:
    import scipy

    try:
        import numba

        numba_version = numba.__version__
    except ImportError:  # pragma: no cover
        numba_version = None
    return {
        "micropolar": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba_version,
    }


def _finite_or_none(obj):
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_meta(out: Path, meta: dict) -> None:
    """``meta.json``; non-finite numbers are written as ``null``."""
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "meta.json", _finite_or_none(meta))


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs: int | None = None) -> int:
    """Run the configured experiment; returns the process exit status."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = cfg["run.jobs"] if jobs is None else jobs
    (out / "effective.cfg").write_text(emit_config(cfg))
    meta = {
        "experiment": cfg.experiment,
        "config": cfg.as_dict(),
        "seeds": {"run": cfg.seed, "data": cfg.data.seed},
        "versions": _versions(),
        "backend": _accel.backend(),
    }
    start = time.perf_counter()
    try:
        outcome = DRIVERS[cfg.experiment](cfg, out, jobs)
    except (SolverError, ArithmeticError, ValueError, RuntimeError) as exc:
        meta.update(
            status="error",
            exit_code=EXIT_ERROR,
            error={"type": type(exc).__name__, "message": str(exc), "traceback": traceback.format_exc()},
            wall_time_s=time.perf_counter() - start,
        )
        write_meta(out, meta)
        return EXIT_ERROR
    passed = all(c.passed for c in outcome.checks)
    code = EXIT_OK if passed else EXIT_CHECK_FAILED
    meta.update(
        status="pass" if passed else "fail",
        exit_code=code,
        checks=[c.as_json() for c in outcome.checks],
        summary=outcome.summary,
        artifacts=sorted(p.name for p in out.iterdir() if p.name != "meta.json"),
        wall_time_s=time.perf_counter() - start,
    )
    write_meta(out, meta)
    return code


__all__ = ["DRIVERS", "Check", "Outcome", "run_experiment", "write_meta"]
