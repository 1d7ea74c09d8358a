"""Product quadrature on R^3: composite Gauss-Legendre in log r times a sphere rule."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

PANEL_ORDER = 16
DEFAULT_TOL = 1e-8


class QuadratureError(RuntimeError):
    """Raised when resolution doubling moves a reported value by more than the tolerance."""


def quad_tolerance(default: float = DEFAULT_TOL) -> float:
    value = os.environ.get("MICROPOLAR_QUAD_TOL")
    return float(value) if value else default


@dataclass(frozen=True)
class QuadratureSpec:
    """Radial window ``[r_min, r_max]`` (log-spaced panels) and angular resolution.

    ``n_radial`` is rounded up to a multiple of the panel order (16).  The sphere
    rule uses ``n_angular`` Gauss-Legendre nodes in ``cos(theta)`` and
    ``2 * n_angular`` equispaced azimuths.
    """

    r_min: float = 1e-6
    r_max: float = 12.0
    n_radial: int = 256
    n_angular: int = 8

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        if self.n_radial < 1 or self.n_angular < 1:
            raise ValueError("n_radial and n_angular must be positive")

    def refined(self) -> QuadratureSpec:
        return replace(self, n_radial=2 * self.n_radial, n_angular=2 * self.n_angular)

    def with_window(self, r_min: float | None = None, r_max: float | None = None) -> QuadratureSpec:
        return replace(
            self,
            r_min=self.r_min if r_min is None else r_min,
            r_max=self.r_max if r_max is None else r_max,
        )

    @classmethod
    def for_profile(cls, sigma: float, t_max: float, n_radial: int = 256, n_angular: int = 8):
        """Window ``[1e-4 / sqrt(1 + t_max), 12 sigma]``."""
        return cls(1e-4 / np.sqrt(1.0 + t_max), 12.0 * sigma, n_radial, n_angular)

    @cached_property
    def radial(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes ``r`` and weights for ``int f(r) r^2 dr``."""
        panels = max(1, -(-self.n_radial // PANEL_ORDER))
        x, wx = np.polynomial.legendre.leggauss(PANEL_ORDER)
        edges = np.linspace(np.log(self.r_min), np.log(self.r_max), panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        ws = (half[:, None] * wx[None, :]).ravel()
        r = np.exp(s)
        return r, ws * r**3

    @cached_property
    def sphere(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit vectors ``(3, m)`` and weights summing to ``4 pi``."""
        c, wc = np.polynomial.legendre.leggauss(self.n_angular)
        n_phi = 2 * self.n_angular
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        s = np.sqrt(1.0 - c * c)
        dirs = np.stack(
            (
                (s[:, None] * np.cos(phi)[None, :]).ravel(),
                (s[:, None] * np.sin(phi)[None, :]).ravel(),
                np.repeat(c, n_phi),
            )
        )
        w = np.repeat(wc, n_phi) * (2.0 * np.pi / n_phi)
        return dirs, w

    @cached_property
    def nodes(self) -> np.ndarray:
        """Quadrature points, shape ``(3, n_r, n_dir)``."""
        r, _ = self.radial
        dirs, _ = self.sphere
        return r[None, :, None] * dirs[:, None, :]

    @cached_property
    def weights(self) -> np.ndarray:
        """Weights for ``int f(xi) d xi``, shape ``(n_r, n_dir)``."""
        return self.radial[1][:, None] * self.sphere[1][None, :]

    def integrate(self, values: np.ndarray) -> float:
        """``int f d xi`` for ``values`` sampled on :attr:`nodes` (trailing axes)."""
        # fsum is correctly rounded, hence independent of summation order
        return math.fsum((values * self.weights).ravel().tolist())


def sq_magnitude(v: np.ndarray) -> np.ndarray:
    """``sum_i |v_i|^2`` over the leading component axis."""
    return np.sum(v.real**2 + v.imag**2, axis=0)
