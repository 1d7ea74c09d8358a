import numpy as np
import pytest

from micropolar.linear import MaterialParams, apply_linear
from micropolar.solver import (
    SolverConfig,
    SolverError,
    difference_from_linear,
    energy_balance_residual,
    nonlinear_rhs,
    run,
    step,
)
from micropolar.spectral import (
    GridSpec,
    SpectralField,
    StateSpectral,
    div_hat,
    grad_norm_sq,
    hermitian_defect,
    inner,
    l2_norm_sq,
    truncation_mask,
)

P = MaterialParams(0.05, 0.05, 0.05, 0.05)


def _cfg(n=16, **kw):
    base = dict(grid=GridSpec(n), params=P, dt=1e-2, t_end=0.1)
    base.update(kw)
    return SolverConfig(**base)


def _mode(grid, index, vec):
    data = np.zeros((3,) + grid.shape, dtype=complex)
    data[(slice(None),) + index] = vec
    data[(slice(None),) + tuple(-i % grid.n for i in index)] += np.conj(vec)
    return data


def _support(data, tol=1e-13):
    mags = np.max(np.abs(data), axis=0)
    return {tuple(int(i) for i in idx) for idx in np.argwhere(mags > tol)}


class TestConfig:
    def test_default_cut(self):
        assert _cfg(n=32).n_cut == 10

    @pytest.mark.parametrize(
        "kw", [{"dt": 0.0}, {"t_end": -1.0}, {"epsilon": -0.1}, {"n_cut": 9}, {"record_every": 0}]
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            _cfg(**kw)


class TestRhs:
    def test_zero(self):
        cfg = _cfg()
        z = StateSpectral.zeros(cfg.grid)
        assert not np.any(nonlinear_rhs(cfg, z).stacked())

    def test_single_shear_mode(self):
        # a lone transverse mode satisfies u . grad u = 0 exactly
        cfg = _cfg()
        g = cfg.grid
        u = SpectralField(g, _mode(g, (1, 0, 0), np.array([0, 0.3 - 0.2j, 0])))
        out = nonlinear_rhs(cfg, StateSpectral(u, SpectralField.zeros(g)))
        assert np.max(np.abs(out.stacked())) < 1e-14

    def test_two_mode_convolution(self):
        cfg = _cfg()
        g = cfg.grid
        a = np.array([0, 0.5, 0], dtype=complex)
        b = np.array([0.2, 0, 0.4j], dtype=complex)
        u = SpectralField(g, _mode(g, (1, 0, 0), a))
        w = SpectralField(g, _mode(g, (0, 1, 0), b))
        out = nonlinear_rhs(cfg, StateSpectral(u, w))
        assert np.max(np.abs(out.u.data)) < 1e-14
        expected = {(1, 1, 0), (1, 15, 0), (15, 1, 0), (15, 15, 0)}
        assert _support(out.w.data) == expected
        # u . grad w at (1, 1, 0): (a . i e_y) b = 0.5 i b
        assert np.allclose(out.w.data[:, 1, 1, 0], -0.5j * b)

    def test_structure(self, torus_state):
        cfg = _cfg(epsilon=0.2)
        z = torus_state(n=16, seed=4)
        out = nonlinear_rhs(cfg, z)
        g = cfg.grid
        assert np.max(np.abs(div_hat(out.u))) < 1e-12
        assert hermitian_defect(out.stacked(), g) < 1e-14
        assert not np.any(out.stacked()[:, ~truncation_mask(g, cfg.n_cut)])

    @pytest.mark.parametrize("seed", range(5))
    def test_energy_neutral(self, torus_state, seed):
        cfg = _cfg(epsilon=0.1 * seed)
        z = torus_state(n=16, seed=seed, amplitude=3.0)
        out = nonlinear_rhs(cfg, z)
        g = cfg.grid
        total = inner(out.u.data, z.u.data, g) + inner(out.w.data, z.w.data, g)
        scale = (l2_norm_sq(z.u.data, g) + l2_norm_sq(z.w.data, g)) * np.sqrt(
            grad_norm_sq(z.u.data, g) + grad_norm_sq(z.w.data, g)
        )
        assert abs(total.real) <= 1e-11 * scale


class TestStep:
    def test_zero(self):
        cfg = _cfg()
        assert not np.any(step(cfg, StateSpectral.zeros(cfg.grid)).stacked())

    def test_linear_limit(self, torus_state):
        cfg = _cfg(nonlinear=False)
        z = torus_state(n=16)
        a = step(cfg, z)
        b = apply_linear(P, z, cfg.dt)
        assert np.max(np.abs(a.stacked() - b.stacked())) <= 1e-13 * np.max(np.abs(z.stacked()))

    def test_zero_mode_decay(self):
        cfg = _cfg(nonlinear=False)
        g = cfg.grid
        w = np.zeros((3,) + g.shape, dtype=complex)
        w[:, 0, 0, 0] = [1.0, -2.0, 0.5]
        z = StateSpectral(SpectralField.zeros(g), SpectralField(g, w))
        out = step(cfg, z)
        assert np.allclose(out.w.data[:, 0, 0, 0], np.exp(-4 * P.chi * cfg.dt) * w[:, 0, 0, 0], rtol=1e-14)


class TestRun:
    def test_zero(self):
        cfg = _cfg()
        traj = run(cfg, StateSpectral.zeros(cfg.grid))
        assert not np.any(traj.table()[:, 1:])

    def test_w_is_sourced(self, torus_state):
        cfg = _cfg(dt=1e-2, t_end=1e-2)
        z = torus_state(n=16, w_weight=0.0, amplitude=0.1)
        traj = run(cfg, z)
        assert traj.energy_w[0] == 0.0 and traj.energy_w[1] > 0.0

    def test_energy_non_increasing(self, torus_state):
        cfg = _cfg(dt=1e-2, t_end=0.3, record_every=3)
        traj = run(cfg, torus_state(n=16))
        E = traj.energy
        assert np.all(np.diff(E) <= 1e-4 * E[0])
        assert E[-1] <= E[0]
        assert len(traj.times) == 11 and traj.table().shape == (11, 7)

    def test_invariants_along_run(self, torus_state):
        cfg = _cfg(dt=1e-2, t_end=0.1, store_states=True, record_every=5)
        traj = run(cfg, torus_state(n=16))
        mask = truncation_mask(cfg.grid, cfg.n_cut)
        for z in traj.states:
            assert np.max(np.abs(div_hat(z.u))) < 1e-11
            assert not np.any(z.stacked()[:, ~mask])
            assert np.allclose(z.u.data[:, 0, 0, 0], 0)

    def test_linear_trajectory(self, torus_state):
        cfg = _cfg(dt=1e-2, t_end=0.2, nonlinear=False, store_states=True, record_every=4)
        z0 = torus_state(n=16)
        traj = run(cfg, z0)
        scale = np.max(np.abs(z0.stacked()))
        for t, z in zip(traj.times, traj.states):
            ref = apply_linear(P, z0, float(t))
            assert np.max(np.abs(z.stacked() - ref.stacked())) <= 1e-12 * scale

    def test_rejects_untruncated(self, grid16, rng):
        from micropolar.spectral import from_physical

        cfg = _cfg()
        f = SpectralField(grid16, from_physical(rng.standard_normal((3,) + grid16.shape), grid16))
        with pytest.raises(SolverError):
            run(cfg, StateSpectral(SpectralField.zeros(grid16), f))

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_blowup_reported(self, torus_state):
        cfg = _cfg(dt=10.0, t_end=2000.0, params=MaterialParams(1e-3, 1e-3))
        with pytest.raises(SolverError, match="step"):
            run(cfg, torus_state(n=16, amplitude=1e3))


class TestEnergyBalance:
    def test_same_time(self, torus_state):
        traj = run(_cfg(), torus_state(n=16))
        assert energy_balance_residual(traj, P, 0.1, 0.1) == 0.0

    def test_small_residual(self, torus_state):
        traj = run(_cfg(dt=5e-3, t_end=0.2), torus_state(n=16))
        res = energy_balance_residual(traj, P, 0.0, 0.2)
        assert abs(res) < 1e-5 * traj.energy[0]

    def test_needs_recorded_times(self, torus_state):
        traj = run(_cfg(record_every=2), torus_state(n=16))
        with pytest.raises(ValueError):
            energy_balance_residual(traj, P, 0.0, 0.01)

    def test_zero_coefficients_skipped(self, torus_state):
        p = MaterialParams(0.05, 0.05)
        traj = run(_cfg(params=p), torus_state(n=16))
        traj.grad_w[:] = np.nan
        traj.div_w[:] = np.nan
        assert np.isfinite(energy_balance_residual(traj, p, 0.0, 0.1))


class TestDifference:
    def test_starts_at_zero_and_grows(self, torus_state):
        traj = run(_cfg(store_states=True), torus_state(n=16))
        rep = difference_from_linear(traj, P)
        assert rep.values[0] == 0.0
        assert rep.values[-1] > 0.0

    def test_needs_states(self, torus_state):
        traj = run(_cfg(), torus_state(n=16))
        with pytest.raises(ValueError):
            difference_from_linear(traj, P)
