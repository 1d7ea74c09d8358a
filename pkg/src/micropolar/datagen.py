"""Divergence-free initial data with a prescribed low-frequency exponent.

A velocity spectrum ``|u0_hat| ~ |xi|^q`` near the origin gives the heat
flow ``||e^{t Delta} u0||^2 ~ t^{-(q + 3/2)}``, so ``q = Gamma - 3/2`` targets
the decay exponent ``Gamma``.

Torus data use numpy's counter-based ``Philox`` bit generator seeded with
the recipe's 64-bit seed, drawn in a fixed order (u then w, component-major).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .continuum import ContinuumProfile
from .spectral import (
    GridSpec,
    SpectralField,
    StateSpectral,
    from_physical,
    l2_norm_sq,
    leray_project,
    to_physical,
    truncation_mask,
)

KINDS = ("torus-random", "continuum-profile")
COUPLINGS = ("independent", "u0-equals-minus-half-curl-w0")


@dataclass(frozen=True)
class DataSpec:
    """Initial-data recipe.

    ``u_weight``/``w_weight`` scale the velocity and microrotation parts;
    ``w_longitudinal`` adds a gradient component to ``w0`` (continuum only).
    """

    kind: str = "continuum-profile"
    q: float = 0.0
    sigma: float = 1.0
    amplitude: float = 1.0
    seed: int = 0
    coupling: str = "independent"
    u_weight: float = 1.0
    w_weight: float = 0.0
    w_longitudinal: float = 0.0
    axis: tuple = field(default=(0.0, 0.0, 1.0))

    def __post_init__(self):
        errors = validate_data_spec(self)
        if errors:
            raise ValueError("; ".join(errors))


def validate_data_spec(spec) -> list[str]:
    errors = []
    if spec.kind not in KINDS:
        errors.append(f"kind must be one of {KINDS}")
    if spec.coupling not in COUPLINGS:
        errors.append(f"coupling must be one of {COUPLINGS}")
    if not spec.sigma > 0:
        errors.append("sigma must be > 0")
    if not spec.amplitude >= 0:
        errors.append("amplitude must be >= 0")
    if spec.q < -1:
        errors.append("q must be >= -1")
    if not 0 <= spec.seed < 2**64:
        errors.append("seed must be a 64-bit unsigned integer")
    return errors


@dataclass(frozen=True)
class TransverseEnvelope:
    """``xi -> A |xi|^(q-1) exp(-|xi|^2 / (2 sigma^2)) (xi x c)``; zero at the origin."""

    amplitude: float
    q: float
    sigma: float
    axis: tuple = (0.0, 0.0, 1.0)

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        c = np.asarray(self.axis, dtype=float).reshape((3,) + (1,) * (xi.ndim - 1))
        r = np.sqrt(np.sum(xi * xi, axis=0))
        with np.errstate(divide="ignore", invalid="ignore"):
            m = self.amplitude * np.where(r > 0, r ** (self.q - 1.0), 0.0) * np.exp(-0.5 * r * r / self.sigma**2)
        cross = np.stack(
            (
                xi[1] * c[2] - xi[2] * c[1],
                xi[2] * c[0] - xi[0] * c[2],
                xi[0] * c[1] - xi[1] * c[0],
            )
        )
        return (m * cross).astype(complex)


@dataclass(frozen=True)
class LongitudinalEnvelope:
    """``xi -> A |xi|^(q-1) exp(-|xi|^2 / (2 sigma^2)) xi`` (a pure gradient field)."""

    amplitude: float
    q: float
    sigma: float

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        r = np.sqrt(np.sum(xi * xi, axis=0))
        with np.errstate(divide="ignore", invalid="ignore"):
            m = self.amplitude * np.where(r > 0, r ** (self.q - 1.0), 0.0) * np.exp(-0.5 * r * r / self.sigma**2)
        return (m * xi).astype(complex)


@dataclass(frozen=True)
class SumField:
    parts: tuple

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        out = np.zeros(np.shape(xi), dtype=complex)
        for part in self.parts:
            out = out + part(xi)
        return out


@dataclass(frozen=True)
class MinusHalfCurl:
    """``xi -> -1/2 i xi x f(xi)``, the Fourier form of ``-1/2 curl f``."""

    inner: object

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        v = self.inner(xi)
        cross = np.stack(
            (
                xi[1] * v[2] - xi[2] * v[1],
                xi[2] * v[0] - xi[0] * v[2],
                xi[0] * v[1] - xi[1] * v[0],
            )
        )
        return -0.5j * cross


_W_AXIS = (1.0, 0.0, 0.0)


def make_continuum_profile(spec: DataSpec) -> ContinuumProfile:
    """Closed-form ``(u0_hat, w0_hat)`` on R^3.

    With the ``u0-equals-minus-half-curl-w0`` coupling, ``w0`` carries the
    envelope of exponent ``q`` and ``u0 = -1/2 curl w0``, whose exponent is
    ``q + 1`` (the value stored on the profile).
    """
    A = spec.amplitude
    if spec.coupling == "u0-equals-minus-half-curl-w0":
        w0 = TransverseEnvelope(A, spec.q, spec.sigma, spec.axis)
        return ContinuumProfile(MinusHalfCurl(w0), w0, spec.q + 1.0, spec.sigma)
    u0 = TransverseEnvelope(A * spec.u_weight, spec.q, spec.sigma, spec.axis)
    parts = []
    if spec.w_weight:
        parts.append(TransverseEnvelope(A * spec.w_weight, spec.q, spec.sigma, _W_AXIS))
    if spec.w_longitudinal:
        parts.append(LongitudinalEnvelope(A * spec.w_longitudinal, spec.q, spec.sigma))
    w0 = SumField(tuple(parts))
    return ContinuumProfile(u0, w0, spec.q, spec.sigma)


def _random_vector_field(rng: np.random.Generator, grid: GridSpec) -> np.ndarray:
    # real white noise in physical space -> Hermitian coefficients
    noise = rng.standard_normal((3,) + grid.shape)
    return from_physical(noise, grid)


def make_torus_field(grid: GridSpec, spec: DataSpec, n_cut: int | None = None) -> StateSpectral:
    """Seeded random divergence-free ``u0`` and free ``w0`` on the torus.

    White noise is shaped by ``|xi|^q exp(-|xi|^2 / (2 sigma^2))``, Leray
    projected (``u`` only), stripped of its mean, truncated to ``n_cut``
    (default ``n // 3``) and scaled so that the root-mean-square value of
    ``u0`` is ``amplitude * u_weight`` (``w0``: ``amplitude * w_weight``).
    """
    n_cut = grid.n // 3 if n_cut is None else n_cut
    rng = np.random.Generator(np.random.Philox(int(spec.seed)))
    r = np.sqrt(grid.xi_sq)
    env = np.where(r > 0, np.where(r > 0, r, 1.0) ** spec.q, 0.0)
    env = env * np.exp(-0.5 * r * r / spec.sigma**2) * truncation_mask(grid, n_cut)
    env[0, 0, 0] = 0.0
    volume = grid.box_length**3

    def shaped(weight: float, project: bool) -> np.ndarray:
        data = _random_vector_field(rng, grid) * env
        if project:
            data = leray_project(SpectralField(grid, data)).data
        # re-symmetrize exactly through a real round trip
        data = from_physical(to_physical(data, grid), grid) * truncation_mask(grid, n_cut)
        data[:, 0, 0, 0] = 0.0
        norm = np.sqrt(l2_norm_sq(data, grid) / volume)
        target = spec.amplitude * weight
        if target == 0 or norm == 0:
            return np.zeros_like(data)
        return data * (target / norm)

    u = shaped(spec.u_weight, True)
    w = shaped(spec.w_weight, False)
    return StateSpectral(SpectralField(grid, u), SpectralField(grid, w))
