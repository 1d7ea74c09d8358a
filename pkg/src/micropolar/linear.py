"""Closed-form symbol of the linear micropolar semigroup.

In Fourier variables the linearized system for ``(u, w)`` is

    d/dt u = -(mu + chi) R u + 2 chi (i xi x w)
    d/dt w = -gamma R w - kappa xi (xi . w) + 2 chi (i xi x u) - 4 chi w

with ``R = |xi|^2``.  Splitting ``w`` into its transverse part ``h`` and its
longitudinal part decouples the latter (pure decay at rate
``4 chi + (gamma + kappa) R``) while ``(curl u, h)`` obey a 2x2 system with
eigenvalues ``lambda_{1,2} = alpha -+ sqrt(D)``.  The propagator is then

    u(t) = E11 u0 + E21 (i xi x w0)
    w(t) = E21 (i xi x u0) + E22 P w0 + div_factor (xi xi^T / R) w0

with every exponential taken at a non-positive argument.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .spectral import SpectralField, StateSpectral


@dataclass(frozen=True)
class MaterialParams:
    """Kinematic (mu), vortex (chi), spin (gamma) and gyro (kappa) viscosities."""

    mu: float
    chi: float
    gamma: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        errors = validate_params(self.mu, self.chi, self.gamma, self.kappa)
        if errors:
            raise ValueError("; ".join(errors))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.mu, self.chi, self.gamma, self.kappa)


def validate_params(mu, chi, gamma, kappa) -> list[str]:
    errors = []
    for name, value in (("mu", mu), ("chi", chi), ("gamma", gamma), ("kappa", kappa)):
        if not math.isfinite(value):
            errors.append(f"{name} must be finite")
    if not mu > 0:
        errors.append("mu must be > 0")
    if not chi > 0:
        errors.append("chi must be > 0")
    if not gamma >= 0:
        errors.append("gamma must be >= 0")
    if not kappa >= 0:
        errors.append("kappa must be >= 0")
    return errors


@dataclass(frozen=True)
class EigQuantities:
    R: float
    alpha: float
    beta: float
    D: float
    sqrtD: float
    lambda1: float
    lambda2: float


@dataclass(frozen=True)
class SymbolComponents:
    E11: float
    E21: float
    E22: float
    divFactor: float


def eig_quantities(p: MaterialParams, R: float) -> EigQuantities:
    if R < 0:
        raise ValueError("R must be >= 0")
    mu, chi, gamma, _ = p.as_tuple()
    alpha = 0.5 * (mu + chi + gamma) * R + 2.0 * chi
    beta = 0.5 * (mu + chi - gamma) * R - 2.0 * chi
    D = beta * beta + 4.0 * chi * chi * R
    sD = math.sqrt(D)
    # alpha^2 - D written out, so that lambda1 keeps its digits as R -> 0
    lam1 = ((mu + chi) * gamma * R * R + 4.0 * chi * mu * R) / (alpha + sD)
    return EigQuantities(R, alpha, beta, D, sD, lam1, alpha + sD)


def _check_nonneg(**kw):
    for name, v in kw.items():
        if np.any(np.asarray(v) < 0):
            raise ValueError(f"{name} must be >= 0")


def e_components(p: MaterialParams, xi_sq: float, t: float) -> SymbolComponents:
    _check_nonneg(xi_sq=xi_sq, t=t)
    out = _kernels.symbol_components(np.array([float(xi_sq)]), float(t), *p.as_tuple())
    return SymbolComponents(*(float(v) for v in out[:, 0]))


def symbol_table(p: MaterialParams, xi_sq: np.ndarray, t: float) -> np.ndarray:
    """Vectorized components, shape ``(4,) + xi_sq.shape`` ordered E11, E21, E22, divFactor."""
    xi_sq = np.asarray(xi_sq, dtype=float)
    _check_nonneg(xi_sq=xi_sq, t=t)
    flat = np.ascontiguousarray(xi_sq.ravel())
    return _kernels.symbol_components(flat, float(t), *p.as_tuple()).reshape((4,) + xi_sq.shape)


def enstrophy_coefficients(p: MaterialParams, xi_sq, t: float) -> np.ndarray:
    """Row ``(-1/2, 1) exp(t A)`` of the ``(curl u, P w)`` system, shape ``(2,) + xi_sq.shape``.

    ``E_L = h_L - Omega_L / 2`` equals ``c[0] (i xi x u0) + c[1] P w0``.  The
    direct difference ``h_L - Omega_L / 2`` cancels to the level of the slow
    mode, so the row is expanded over the two left eigenvectors of the 2x2
    generator instead, which keeps each coefficient free of subtraction.
    """
    R = np.asarray(xi_sq, dtype=float)
    _check_nonneg(xi_sq=R, t=t)
    mu, chi, gamma, _ = p.as_tuple()
    alpha = 0.5 * (mu + chi + gamma) * R + 2.0 * chi
    beta = 0.5 * (mu + chi - gamma) * R - 2.0 * chi
    sD = np.sqrt(beta * beta + 4.0 * chi * chi * R)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(beta <= 0.0, 4.0 * chi * chi * R / (sD - beta), sD + beta)
    lam1 = ((mu + chi) * gamma * R * R + 4.0 * chi * mu * R) / (alpha + sD)
    # lambda1 - gamma R from the product of the shifted roots
    x1 = 4.0 * chi * R * (mu - gamma) / (4.0 * chi + m)
    slow = np.exp(-lam1 * t)
    x = 2.0 * sD * t
    fast = slow * np.exp(-x)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(x < _kernels.PHI_TAYLOR_CUTOFF, 1.0 - x / 2.0 + x * x / 6.0, -np.expm1(-x) / x)
        b = x1 / (8.0 * chi * sD)
    a = -0.25 / chi - b
    c_omega = -0.5 * fast + 0.5 * x1 * t * phi * slow
    c_h = a * (x1 - 4.0 * chi) * fast + b * m * slow
    return np.stack((c_omega, c_h))


def cross_matrix(xi) -> np.ndarray:
    """Matrix of ``v -> xi x v``."""
    a, b, c = (float(x) for x in xi)
    return np.array([[0.0, -c, b], [c, 0.0, -a], [-b, a, 0.0]])


def propagator_matrix(p: MaterialParams, xi, t: float) -> np.ndarray:
    """The 6x6 complex symbol ``K(xi, t)`` acting on stacked ``(u_hat, w_hat)``."""
    xi = np.asarray(xi, dtype=float)
    R = float(xi @ xi)
    c = e_components(p, R, t)
    K = np.zeros((6, 6), dtype=complex)
    eye = np.eye(3)
    X = cross_matrix(xi)
    K[:3, :3] = c.E11 * eye
    K[:3, 3:] = 1j * c.E21 * X
    K[3:, :3] = 1j * c.E21 * X
    if R > 0:
        long = np.outer(xi, xi) / R
        K[3:, 3:] = c.E22 * (eye - long) + c.divFactor * long
    else:
        K[3:, 3:] = c.E22 * eye
    return K


def apply_symbol_arrays(
    p: MaterialParams, u: np.ndarray, w: np.ndarray, xi: np.ndarray, t: float
) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``K(xi, t)`` mode by mode; ``u``, ``w``, ``xi`` have shape ``(3, ...)``."""
    shape = u.shape
    kx, ky, kz = (np.ascontiguousarray(x.ravel()) for x in xi)
    R = kx * kx + ky * ky + kz * kz
    comps = _kernels.symbol_components(R, float(t), *p.as_tuple())
    uo, wo = _kernels.apply_symbol(
        np.ascontiguousarray(u.reshape(3, -1)),
        np.ascontiguousarray(w.reshape(3, -1)),
        kx,
        ky,
        kz,
        comps,
    )
    return uo.reshape(shape), wo.reshape(shape)


def apply_linear(p: MaterialParams, z0: StateSpectral, t: float) -> StateSpectral:
    """Exact linear evolution ``z_hat(t) = K(xi, t) z_hat(0)`` on the torus."""
    _check_nonneg(t=t)
    grid = z0.grid
    u, w = apply_symbol_arrays(p, z0.u.data, z0.w.data, grid.xi_eff, t)
    return StateSpectral(SpectralField(grid, u), SpectralField(grid, w))


def heat_profiles(
    p: MaterialParams, z0: StateSpectral, t: float
) -> tuple[SpectralField, SpectralField]:
    """Heat-kernel asymptotic profiles of ``u_L`` and ``w_L``.

    ``u`` profile: ``e^{-mu t R}(u0 + 1/2 i xi x w0)``;
    ``w`` profile: ``e^{-mu t R}(1/2 i xi x u0 + R/4 P w0)``.
    """
    grid = z0.grid
    k = grid.xi_eff
    R = grid.xi_eff_sq
    heat = np.exp(-p.mu * t * R)
    u0, w0 = z0.u.data, z0.w.data
    safe = np.where(R > 0, R, 1.0)
    pw0 = w0 - k * np.where(R > 0, np.sum(k * w0, axis=0) / safe, 0.0)
    cu = 1j * np.stack((k[1] * u0[2] - k[2] * u0[1], k[2] * u0[0] - k[0] * u0[2], k[0] * u0[1] - k[1] * u0[0]))
    cw = 1j * np.stack((k[1] * w0[2] - k[2] * w0[1], k[2] * w0[0] - k[0] * w0[2], k[0] * w0[1] - k[1] * w0[0]))
    u_prof = heat * (u0 + 0.5 * cw)
    w_prof = heat * (0.5 * cu + 0.25 * R * pw0)
    return SpectralField(grid, u_prof), SpectralField(grid, w_prof)


def prop_e_residuals(p: MaterialParams, xi_sq, t):
    """Distances of E11, E21, E22 from their heat-kernel limits.

    Returns ``(|E11 - H|, |xi| |E21 - H/2|, |E22 - R H / 4|)`` with
    ``H = exp(-mu t R)``.  The comparison is only meaningful for ``t >= 1``.
    """
    xi_sq = np.asarray(xi_sq, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 1):
        raise ValueError("prop_e_residuals is defined for t >= 1")
    xi_sq, t = np.broadcast_arrays(xi_sq, t)
    out = np.empty((3,) + xi_sq.shape)
    for idx in np.ndindex(xi_sq.shape):
        R, tt = float(xi_sq[idx]), float(t[idx])
        c = e_components(p, R, tt)
        heat = math.exp(-p.mu * tt * R)
        out[(0,) + idx] = abs(c.E11 - heat)
        out[(1,) + idx] = math.sqrt(R) * abs(c.E21 - 0.5 * heat)
        out[(2,) + idx] = abs(c.E22 - 0.25 * R * heat)
    if out.shape[1:] == ():
        return tuple(float(v) for v in out)
    return out[0], out[1], out[2]


def write_symbol_csv(path, p: MaterialParams, xi_sq, times) -> Path:
    """Tabulate the symbol components on a ``(xi_sq, t)`` grid."""
    path = Path(path)
    xi_sq = np.asarray(xi_sq, dtype=float)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["xi_sq", "t", "E11", "E21", "E22", "divFactor"])
        for t in times:
            table = symbol_table(p, xi_sq, float(t))
            for j, R in enumerate(xi_sq):
                writer.writerow([repr(float(R)), repr(float(t))] + [repr(float(v)) for v in table[:, j]])
    return path
