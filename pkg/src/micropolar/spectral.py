"""Fourier-side vector calculus on the periodic box ``[0, L)^3``.

Conventions
-----------
Coefficients are those of the Fourier series,

    f(x) = sum_xi f_hat(xi) exp(i xi . x),    f_hat = fftn(f) / n^3,

so that ``||f||_{L^2}^2 = L^3 * sum |f_hat|^2``.  Arrays hold the full
``n x n x n`` lattice in numpy FFT index order.  The wavenumber attached to
index ``j`` along an axis is ``(2 pi / L) * k`` with ``k`` in
``{-n/2+1, ..., n/2}``, i.e. the Nyquist index carries ``+n/2``.

Odd operators (curl, divergence, the Leray projector and the linear
propagator) use the *effective* wavevector, in which a Nyquist component is
replaced by zero.  A real field's Nyquist coefficient is its own Hermitian
partner, and an odd multiplier applied there would break the symmetry.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

from ._accel import HAVE_NUMBA

_WORKERS = -1


@dataclass(frozen=True)
class GridSpec:
    n: int
    box_length: float = 2.0 * np.pi

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ValueError(f"n must be an integer >= 4, got {self.n!r}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be > 0, got {self.box_length!r}")
        if self.n % 2:
            raise ValueError("n must be even")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def unit(self) -> float:
        """Lattice spacing 2 pi / L in wavenumber space."""
        return 2.0 * np.pi / self.box_length

    @cached_property
    def axis_integers(self) -> np.ndarray:
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        k[self.n // 2] = self.n // 2
        return k

    @cached_property
    def xi(self) -> np.ndarray:
        """Wavevectors, shape ``(3, n, n, n)``."""
        return wavenumbers(self)

    @cached_property
    def xi_eff(self) -> np.ndarray:
        """Wavevectors with Nyquist components zeroed (odd operators)."""
        k = self.axis_integers.copy()
        k[self.n // 2] = 0.0
        k = k * self.unit
        return np.stack(np.meshgrid(k, k, k, indexing="ij"))

    @cached_property
    def xi_sq(self) -> np.ndarray:
        return np.sum(self.xi**2, axis=0)

    @cached_property
    def xi_eff_sq(self) -> np.ndarray:
        return np.sum(self.xi_eff**2, axis=0)

    @cached_property
    def conj_index(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Index arrays mapping each mode to its Hermitian partner ``-k mod n``."""
        j = (-np.arange(self.n)) % self.n
        return np.ix_(j, j, j)

    def physical_coords(self) -> np.ndarray:
        x = np.arange(self.n) * (self.box_length / self.n)
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))


def wavenumbers(grid: GridSpec) -> np.ndarray:
    """Lattice of wavevectors ``(2 pi / L) k`` in FFT order, shape ``(3, n, n, n)``."""
    k = grid.axis_integers * grid.unit
    return np.stack(np.meshgrid(k, k, k, indexing="ij"))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Three complex coefficient arrays of a real vector field."""

    grid: GridSpec
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.shape != (3,) + self.grid.shape:
            raise ValueError(f"expected shape {(3,) + self.grid.shape}, got {data.shape}")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, grid: GridSpec) -> SpectralField:
        return cls(grid, np.zeros((3,) + grid.shape, dtype=complex))

    def __add__(self, other: SpectralField) -> SpectralField:
        return SpectralField(self.grid, self.data + other.data)

    def __sub__(self, other: SpectralField) -> SpectralField:
        return SpectralField(self.grid, self.data - other.data)

    def __mul__(self, scalar: float) -> SpectralField:
        return SpectralField(self.grid, self.data * scalar)

    __rmul__ = __mul__

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))


@dataclass(frozen=True, eq=False)
class StateSpectral:
    u: SpectralField
    w: SpectralField

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: GridSpec) -> StateSpectral:
        return cls(SpectralField.zeros(grid), SpectralField.zeros(grid))

    def stacked(self) -> np.ndarray:
        """Coefficients as one ``(6, n, n, n)`` array, u first."""
        return np.concatenate((self.u.data, self.w.data))

    @classmethod
    def from_stacked(cls, grid: GridSpec, data: np.ndarray) -> StateSpectral:
        return cls(SpectralField(grid, data[:3]), SpectralField(grid, data[3:]))

    def __add__(self, other: StateSpectral) -> StateSpectral:
        return StateSpectral(self.u + other.u, self.w + other.w)

    def __sub__(self, other: StateSpectral) -> StateSpectral:
        return StateSpectral(self.u - other.u, self.w - other.w)

    def __mul__(self, scalar: float) -> StateSpectral:
        return StateSpectral(self.u * scalar, self.w * scalar)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def to_physical(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Real physical-space values from Hermitian coefficients (leading axes kept)."""
    n = grid.n
    half = coeffs[..., : n // 2 + 1]
    return scipy.fft.irfftn(half, s=grid.shape, axes=(-3, -2, -1), norm="forward", workers=_WORKERS)


def physical_from_half(half: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Real values from the non-negative half of the last axis (rfft layout)."""
    return scipy.fft.irfftn(half, s=grid.shape, axes=(-3, -2, -1), norm="forward", workers=_WORKERS)


def half_from_physical(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    return scipy.fft.rfftn(values, axes=(-3, -2, -1), norm="forward", workers=_WORKERS)


def expand_half(half: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Full lattice from rfft-layout coefficients using Hermitian symmetry."""
    n = grid.n
    full = np.empty(half.shape[:-1] + (n,), dtype=complex)
    full[..., : n // 2 + 1] = half
    j = (-np.arange(n)) % n
    rest = np.arange(n // 2 + 1, n)
    partner = half[..., j, :, :][..., :, j, :][..., n - rest]
    full[..., rest] = np.conj(partner)
    return full


def half_weights(grid: GridSpec) -> np.ndarray:
    """Multiplicity of each rfft-layout mode in the full lattice (1 or 2)."""
    n = grid.n
    w = np.full(grid.shape[:2] + (n // 2 + 1,), 2.0)
    w[..., 0] = 1.0
    w[..., n // 2] = 1.0
    return w


def from_physical(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Full-lattice Fourier-series coefficients of real physical-space values."""
    return expand_half(half_from_physical(values, grid), grid)


def hermitian_defect(coeffs: np.ndarray, grid: GridSpec) -> float:
    """``max |f(k) - conj f(-k)|`` over the lattice."""
    partner = coeffs[(..., *grid.conj_index)]
    return float(np.max(np.abs(coeffs - np.conj(partner)), initial=0.0))


def symmetrize(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Project onto Hermitian-symmetric coefficient arrays."""
    partner = coeffs[(..., *grid.conj_index)]
    return 0.5 * (coeffs + np.conj(partner))


# ---------------------------------------------------------------------------
# vector calculus
# ---------------------------------------------------------------------------


def _cross(k: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.stack(
        (
            k[1] * v[2] - k[2] * v[1],
            k[2] * v[0] - k[0] * v[2],
            k[0] * v[1] - k[1] * v[0],
        )
    )


def curl_hat(f: SpectralField) -> SpectralField:
    """Mode-wise ``i xi x f_hat``."""
    return SpectralField(f.grid, 1j * _cross(f.grid.xi_eff, f.data))


def div_hat(f: SpectralField) -> np.ndarray:
    """Mode-wise ``i xi . f_hat`` (scalar coefficient array)."""
    return 1j * np.sum(f.grid.xi_eff * f.data, axis=0)


def _leray(data: np.ndarray, grid: GridSpec) -> np.ndarray:
    k = grid.xi_eff
    R = grid.xi_eff_sq
    safe = np.where(R > 0.0, R, 1.0)
    s = np.where(R > 0.0, np.sum(k * data, axis=0) / safe, 0.0)
    return data - k * s


def leray_project(f: SpectralField) -> SpectralField:
    """Orthogonal projection onto divergence-free fields; identity on the mean mode."""
    return SpectralField(f.grid, _leray(f.data, f.grid))


def truncation_mask(grid: GridSpec, n_cut: int) -> np.ndarray:
    if n_cut < 0:
        raise ValueError("n_cut must be >= 0")
    radius = n_cut * grid.unit
    return grid.xi_sq <= radius * radius * (1.0 + 1e-12)


def truncate(f: SpectralField, n_cut: int) -> SpectralField:
    """Sharp spherical cutoff keeping ``|xi| <= n_cut * 2 pi / L``."""
    return SpectralField(f.grid, f.data * truncation_mask(f.grid, n_cut))


def mollifier_symbol(grid: GridSpec, epsilon: float) -> np.ndarray:
    """Gaussian multiplier ``exp(-eps^2 |xi|^2 / 2)``."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    return np.exp(-0.5 * epsilon * epsilon * grid.xi_sq)


def mollify(f: SpectralField, epsilon: float) -> SpectralField:
    if epsilon == 0:
        return f
    return SpectralField(f.grid, f.data * mollifier_symbol(f.grid, epsilon))


def inner(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> float:
    """Real L^2(torus) inner product of two coefficient arrays."""
    return float(grid.box_length**3 * np.real(np.vdot(b.ravel(), a.ravel())))


def l2_norm_sq(data: np.ndarray, grid: GridSpec) -> float:
    return float(grid.box_length**3 * np.sum(data.real**2 + data.imag**2))


def l2_norm(f: SpectralField) -> float:
    """Physical-space L^2 norm via Plancherel."""
    return float(np.sqrt(l2_norm_sq(f.data, f.grid)))


def grad_norm_sq(data: np.ndarray, grid: GridSpec) -> float:
    """``||grad f||^2`` summed over components."""
    return float(grid.box_length**3 * np.sum(grid.xi_eff_sq * (data.real**2 + data.imag**2)))


def is_divergence_free(f: SpectralField, rtol: float = 1e-12) -> bool:
    k = f.grid.xi_eff
    dot = np.abs(np.sum(k * f.data, axis=0))
    scale = np.sqrt(f.grid.xi_eff_sq) * np.sqrt(np.sum(np.abs(f.data) ** 2, axis=0))
    return bool(np.all(dot <= rtol * scale + 1e-300))


__all__ = [
    "GridSpec",
    "SpectralField",
    "StateSpectral",
    "wavenumbers",
    "curl_hat",
    "div_hat",
    "leray_project",
    "truncate",
    "truncation_mask",
    "mollify",
    "mollifier_symbol",
    "l2_norm",
    "l2_norm_sq",
    "grad_norm_sq",
    "inner",
    "to_physical",
    "from_physical",
    "physical_from_half",
    "half_from_physical",
    "expand_half",
    "half_weights",
    "hermitian_defect",
    "symmetrize",
    "is_divergence_free",
    "HAVE_NUMBA",
]
