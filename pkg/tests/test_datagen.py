import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from micropolar.continuum import fit_slope, l2_norm_continuum
from micropolar.datagen import DataSpec, make_continuum_profile, make_torus_field
from micropolar.quadrature import QuadratureSpec
from micropolar.spectral import GridSpec, div_hat, hermitian_defect, l2_norm, truncation_mask


class TestSpec:
    @pytest.mark.parametrize(
        "kw",
        [{"kind": "sphere"}, {"coupling": "x"}, {"sigma": 0.0}, {"amplitude": -1.0}, {"q": -1.5}, {"seed": -1}],
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            DataSpec(**kw)


class TestContinuum:
    @settings(max_examples=20, deadline=None)
    @given(q=st.floats(-1, 2), sigma=st.floats(0.2, 5), seed=st.integers(0, 2**32))
    def test_transverse(self, q, sigma, seed):
        prof = make_continuum_profile(DataSpec(q=q, sigma=sigma, w_weight=0.5))
        xi = np.random.default_rng(seed).standard_normal((3, 1000)) * sigma
        u = prof.u0_hat(xi)
        assert np.max(np.abs(np.sum(xi * u, axis=0))) <= 1e-12 * (1 + np.max(np.abs(u)))

    def test_million_points(self):
        prof = make_continuum_profile(DataSpec(q=0.5))
        xi = np.random.default_rng(0).standard_normal((3, 10**6))
        u = prof.u0_hat(xi)
        assert np.max(np.abs(np.sum(xi * u, axis=0))) < 1e-13

    def test_low_frequency_exponent(self):
        prof = make_continuum_profile(DataSpec(q=0.5))
        r = np.array([1e-6, 1e-5])
        xi = np.stack((r, 0 * r, 0 * r))
        mag = np.linalg.norm(prof.u0_hat(xi), axis=0)
        assert np.log(mag[1] / mag[0]) / np.log(10) == pytest.approx(0.5, abs=1e-6)

    def test_coupling(self):
        prof = make_continuum_profile(DataSpec(coupling="u0-equals-minus-half-curl-w0"))
        xi = np.random.default_rng(1).standard_normal((3, 500))
        resid = prof.u0_hat(xi) + 0.5j * np.cross(xi, prof.w0_hat(xi), axis=0)
        assert np.max(np.abs(resid)) == 0.0
        assert prof.q == 1.0

    @pytest.mark.parametrize("q", [0.0, 0.5, 1.0])
    def test_calibration(self, q):
        prof = make_continuum_profile(DataSpec(q=q))
        quad = QuadratureSpec.for_profile(1.0, 1e4)
        times = np.geomspace(1e2, 1e4, 9)
        vals = []
        for t in times:
            f = lambda xi, t=t: prof.u0_hat(xi) * np.exp(-t * np.sum(xi * xi, axis=0))  # noqa: E731
            vals.append(l2_norm_continuum(f, quad) ** 2)
        assert fit_slope(times, vals)[0] == pytest.approx(-(q + 1.5), abs=0.05)


class TestTorus:
    def test_zero_amplitude(self, grid8):
        z = make_torus_field(grid8, DataSpec(kind="torus-random", amplitude=0.0, w_weight=1.0))
        assert not np.any(z.stacked())

    def test_deterministic(self, grid16):
        spec = DataSpec(kind="torus-random", w_weight=1.0, seed=123)
        a, b = make_torus_field(grid16, spec), make_torus_field(grid16, spec)
        assert a.stacked().tobytes() == b.stacked().tobytes()
        c = make_torus_field(grid16, DataSpec(kind="torus-random", w_weight=1.0, seed=124))
        assert not np.array_equal(a.stacked(), c.stacked())

    def test_linear_in_amplitude(self, grid16):
        a = make_torus_field(grid16, DataSpec(kind="torus-random", amplitude=1.0, seed=5))
        b = make_torus_field(grid16, DataSpec(kind="torus-random", amplitude=2.5, seed=5))
        assert l2_norm(b.u) == pytest.approx(2.5 * l2_norm(a.u), rel=1e-14)

    def test_rms_amplitude(self, grid16):
        z = make_torus_field(grid16, DataSpec(kind="torus-random", amplitude=0.7, w_weight=2.0, seed=9))
        vol = grid16.box_length**3
        assert l2_norm(z.u) ** 2 / vol == pytest.approx(0.49, rel=1e-12)
        assert l2_norm(z.w) ** 2 / vol == pytest.approx((0.7 * 2.0) ** 2, rel=1e-12)

    def test_invariants(self, grid16):
        z = make_torus_field(grid16, DataSpec(kind="torus-random", w_weight=1.0, seed=2))
        assert np.max(np.abs(div_hat(z.u))) < 1e-12
        assert hermitian_defect(z.stacked(), grid16) < 1e-15
        outside = ~truncation_mask(grid16, 16 // 3)
        assert not np.any(z.stacked()[:, outside])
        assert not np.any(z.stacked()[:, 0, 0, 0])

    def test_custom_cut(self, grid16):
        z = make_torus_field(grid16, DataSpec(kind="torus-random", seed=2), n_cut=2)
        assert not np.any(z.u.data[:, ~truncation_mask(grid16, 2)])


def test_smallest_grid():
    z = make_torus_field(GridSpec(4), DataSpec(kind="torus-random", w_weight=1.0))
    assert np.all(np.isfinite(z.stacked()))
