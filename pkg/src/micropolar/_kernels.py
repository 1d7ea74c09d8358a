"""Hot inner loops, each in a numba and a numpy flavour.

Both flavours are always importable so the benchmark can compare them in a
single process; the public names at the bottom of the module pick the numba
version unless acceleration is disabled (see :mod:`micropolar._accel`).
"""

import math

import numpy as np

from ._accel import HAVE_NUMBA, njit

# below this argument the Taylor branch of (1 - e^{-x})/x is used
PHI_TAYLOR_CUTOFF = 1e-4


# ---------------------------------------------------------------------------
# symbol components E11, E21, E22 and the longitudinal factor
# ---------------------------------------------------------------------------


@njit(cache=True)
def _components_scalar(R, t, mu, chi, gamma, kappa):
    if t == 0.0:
        # (p + m) / (2 sqrt(D)) is 1 only up to rounding
        return 1.0, 0.0, 1.0, 1.0
    alpha = 0.5 * (mu + chi + gamma) * R + 2.0 * chi
    beta = 0.5 * (mu + chi - gamma) * R - 2.0 * chi
    D = beta * beta + 4.0 * chi * chi * R
    sD = math.sqrt(D)
    # p = sqrt(D) - beta, m = sqrt(D) + beta, with p * m = 4 chi^2 R
    if beta <= 0.0:
        p = sD - beta
        m = 4.0 * chi * chi * R / p
    else:
        m = sD + beta
        p = 4.0 * chi * chi * R / m
    lam1 = ((mu + chi) * gamma * R * R + 4.0 * chi * mu * R) / (alpha + sD)
    slow = math.exp(-lam1 * t)
    x = 2.0 * sD * t
    gap = math.exp(-x)
    if x < PHI_TAYLOR_CUTOFF:
        phi = 1.0 - x / 2.0 + x * x / 6.0
    else:
        phi = -math.expm1(-x) / x
    inv = 0.5 / sD
    e11 = slow * (p + m * gap) * inv
    e22 = slow * (m + p * gap) * inv
    e21 = 2.0 * chi * t * slow * phi
    div = math.exp(-(4.0 * chi + (gamma + kappa) * R) * t)
    return e11, e21, e22, div


@njit(cache=True)
def _symbol_components_numba(R, t, mu, chi, gamma, kappa):
    n = R.shape[0]
    out = np.empty((4, n))
    for k in range(n):
        e11, e21, e22, div = _components_scalar(R[k], t, mu, chi, gamma, kappa)
        out[0, k] = e11
        out[1, k] = e21
        out[2, k] = e22
        out[3, k] = div
    return out


def _symbol_components_numpy(R, t, mu, chi, gamma, kappa):
    R = np.asarray(R, dtype=float)
    if t == 0.0:
        out = np.zeros((4,) + R.shape)
        out[[0, 2, 3]] = 1.0
        return out
    alpha = 0.5 * (mu + chi + gamma) * R + 2.0 * chi
    beta = 0.5 * (mu + chi - gamma) * R - 2.0 * chi
    D = beta * beta + 4.0 * chi * chi * R
    sD = np.sqrt(D)
    neg = beta <= 0.0
    big = np.where(neg, sD - beta, sD + beta)
    small = 4.0 * chi * chi * R / big
    p = np.where(neg, big, small)
    m = np.where(neg, small, big)
    lam1 = ((mu + chi) * gamma * R * R + 4.0 * chi * mu * R) / (alpha + sD)
    slow = np.exp(-lam1 * t)
    x = 2.0 * sD * t
    gap = np.exp(-x)
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = np.where(
            x < PHI_TAYLOR_CUTOFF,
            1.0 - x / 2.0 + x * x / 6.0,
            -np.expm1(-x) / x,
        )
    inv = 0.5 / sD
    out = np.empty((4,) + R.shape)
    out[0] = slow * (p + m * gap) * inv
    out[1] = 2.0 * chi * t * slow * phi
    out[2] = slow * (m + p * gap) * inv
    out[3] = np.exp(-(4.0 * chi + (gamma + kappa) * R) * t)
    return out


# ---------------------------------------------------------------------------
# mode-wise application of the 6x6 symbol
# ---------------------------------------------------------------------------


@njit(cache=True)
def _apply_symbol_numba(u, w, kx, ky, kz, comps):
    n = kx.shape[0]
    uo = np.empty_like(u)
    wo = np.empty_like(w)
    for k in range(n):
        a = kx[k]
        b = ky[k]
        c = kz[k]
        e11 = comps[0, k]
        e21 = comps[1, k]
        e22 = comps[2, k]
        div = comps[3, k]
        u0 = u[0, k]
        u1 = u[1, k]
        u2 = u[2, k]
        w0 = w[0, k]
        w1 = w[1, k]
        w2 = w[2, k]
        # i xi x w and i xi x u
        cw0 = 1j * (b * w2 - c * w1)
        cw1 = 1j * (c * w0 - a * w2)
        cw2 = 1j * (a * w1 - b * w0)
        cu0 = 1j * (b * u2 - c * u1)
        cu1 = 1j * (c * u0 - a * u2)
        cu2 = 1j * (a * u1 - b * u0)
        uo[0, k] = e11 * u0 + e21 * cw0
        uo[1, k] = e11 * u1 + e21 * cw1
        uo[2, k] = e11 * u2 + e21 * cw2
        R = a * a + b * b + c * c
        if R > 0.0:
            s = (div - e22) * (a * w0 + b * w1 + c * w2) / R
        else:
            s = 0.0j
        wo[0, k] = e21 * cu0 + e22 * w0 + s * a
        wo[1, k] = e21 * cu1 + e22 * w1 + s * b
        wo[2, k] = e21 * cu2 + e22 * w2 + s * c
    return uo, wo


def _cross(k, v):
    return np.stack(
        (
            k[1] * v[2] - k[2] * v[1],
            k[2] * v[0] - k[0] * v[2],
            k[0] * v[1] - k[1] * v[0],
        )
    )


def _apply_symbol_numpy(u, w, kx, ky, kz, comps):
    k = (kx, ky, kz)
    e11, e21, e22, div = comps
    R = kx * kx + ky * ky + kz * kz
    safe = np.where(R > 0.0, R, 1.0)
    s = np.where(R > 0.0, (div - e22) * (kx * w[0] + ky * w[1] + kz * w[2]) / safe, 0.0)
    uo = e11 * u + 1j * e21 * _cross(k, w)
    wo = 1j * e21 * _cross(k, u) + e22 * w + s * np.stack(k)
    return uo, wo


# ---------------------------------------------------------------------------
# physical-space advection (a . grad) v for two fields at once
# ---------------------------------------------------------------------------


@njit(cache=True)
def _advect_numba(a, gu, gw):
    n = a.shape[1]
    ou = np.empty((3, n))
    ow = np.empty((3, n))
    for k in range(n):
        a0 = a[0, k]
        a1 = a[1, k]
        a2 = a[2, k]
        for i in range(3):
            ou[i, k] = a0 * gu[i, 0, k] + a1 * gu[i, 1, k] + a2 * gu[i, 2, k]
            ow[i, k] = a0 * gw[i, 0, k] + a1 * gw[i, 1, k] + a2 * gw[i, 2, k]
    return ou, ow


def _advect_numpy(a, gu, gw):
    return np.einsum("jk,ijk->ik", a, gu), np.einsum("jk,ijk->ik", a, gw)


if HAVE_NUMBA:
    symbol_components = _symbol_components_numba
    apply_symbol = _apply_symbol_numba
    advect = _advect_numba
else:
    symbol_components = _symbol_components_numpy
    apply_symbol = _apply_symbol_numpy
    advect = _advect_numpy
