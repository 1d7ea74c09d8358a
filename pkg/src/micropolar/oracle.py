"""Reference propagators built by brute force, independent of the closed form.

The 6x6 oracle exponentiates the Fourier-side generator of the linear system
directly, without the Helmholtz split or the 2x2 reduction.  Its u-block acts
on the full 3-space, whereas the physical u is divergence-free, so closed
form and oracle are compared on the admissible subspace
``blockdiag(P_xi, I_3)``.
"""

from __future__ import annotations

import mpmath
import numpy as np
import scipy.linalg

from .linear import MaterialParams, cross_matrix, propagator_matrix


def generator_matrix(p: MaterialParams, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    R = float(xi @ xi)
    mu, chi, gamma, kappa = p.as_tuple()
    eye = np.eye(3)
    X = cross_matrix(xi)
    A = np.zeros((6, 6), dtype=complex)
    A[:3, :3] = -(mu + chi) * R * eye
    A[:3, 3:] = 2j * chi * X
    A[3:, :3] = 2j * chi * X
    A[3:, 3:] = -(gamma * R + 4.0 * chi) * eye - kappa * np.outer(xi, xi)
    return A


def admissible_projector(xi) -> np.ndarray:
    """``blockdiag(I - xi xi^T / |xi|^2, I_3)``; the identity at ``xi = 0``."""
    xi = np.asarray(xi, dtype=float)
    R = float(xi @ xi)
    P = np.eye(6)
    if R > 0:
        P[:3, :3] -= np.outer(xi, xi) / R
    return P


def propagator_oracle(p: MaterialParams, xi, t: float) -> np.ndarray:
    """``expm(t A(xi))`` by scaling and squaring (scipy)."""
    return scipy.linalg.expm(t * generator_matrix(p, xi))


def propagator_oracle_mp(p: MaterialParams, xi, t: float, dps: int = 40) -> np.ndarray:
    """Extended-precision ``expm(t A(xi))`` (mpmath), for auditing the scipy oracle."""
    with mpmath.workdps(dps):
        A = generator_matrix(p, xi) * t
        M = mpmath.matrix(6, 6)
        for i in range(6):
            for j in range(6):
                M[i, j] = mpmath.mpc(A[i, j].real, A[i, j].imag)
        E = mpmath.expm(M)
        return np.array([[complex(E[i, j]) for j in range(6)] for i in range(6)])


def e_components_oracle(p: MaterialParams, xi_sq: float, t: float, dps: int = 40):
    """E11, E21, E22 from the 2x2 generator of (curl u, P w), in extended precision."""
    with mpmath.workdps(dps):
        # promote before any arithmetic, otherwise the entries are rounded to double
        mu, chi, gamma, _ = (mpmath.mpf(x) for x in p.as_tuple())
        R, t = mpmath.mpf(xi_sq), mpmath.mpf(t)
        A = mpmath.matrix(
            [
                [-(mu + chi) * R * t, 2 * chi * R * t],
                [2 * chi * t, -(gamma * R + 4 * chi) * t],
            ]
        )
        E = mpmath.expm(A)
        return float(E[0, 0]), float(E[1, 0]), float(E[1, 1])


def rk4_propagator(p: MaterialParams, xi, t: float, steps: int = 2000) -> np.ndarray:
    """Classical RK4 on the 6-dimensional ODE; a second, step-based oracle for moderate ``t``."""
    A = generator_matrix(p, xi)
    h = t / steps
    Y = np.eye(6, dtype=complex)
    for _ in range(steps):
        k1 = A @ Y
        k2 = A @ (Y + 0.5 * h * k1)
        k3 = A @ (Y + 0.5 * h * k2)
        k4 = A @ (Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return Y


def sample_draws(seed: int, count: int) -> list[tuple[MaterialParams, np.ndarray, float]]:
    """Seeded ``(params, xi, t)`` draws for the closed-form/oracle comparison.

    mu, chi uniform in [0.1, 10]; gamma, kappa zero with probability 1/2 and
    uniform in [0.1, 10] otherwise; ``|xi|`` log-uniform in [1e-4, 1e3] with a
    uniform direction; ``t`` log-uniform in [1e-3, 1e3].
    """
    rng = np.random.Generator(np.random.Philox(int(seed)))
    draws = []
    for _ in range(count):
        mu, chi = rng.uniform(0.1, 10.0, size=2)
        gamma = 0.0 if rng.random() < 0.5 else rng.uniform(0.1, 10.0)
        kappa = 0.0 if rng.random() < 0.5 else rng.uniform(0.1, 10.0)
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        xi = 10.0 ** rng.uniform(-4.0, 3.0) * direction
        t = 10.0 ** rng.uniform(-3.0, 3.0)
        draws.append((MaterialParams(float(mu), float(chi), float(gamma), float(kappa)), xi, float(t)))
    return draws


def oracle_gap(p: MaterialParams, xi, t: float, closed=None) -> tuple[float, float]:
    """``(max entrywise |K - K_oracle|, ||K_oracle||_2)`` on the admissible subspace."""
    if closed is None:
        closed = propagator_matrix(p, xi, t)
    P = admissible_projector(xi)
    ref = P @ propagator_oracle(p, xi, t) @ P
    gap = float(np.max(np.abs(P @ closed @ P - ref)))
    return gap, float(np.linalg.norm(ref, 2))
