"""Whole-space L^2 diagnostics of the linear flow.

Norms follow Plancherel on R^3, ``||f||^2 = (2 pi)^{-3} int |f_hat|^2 d xi``,
evaluated with :class:`~micropolar.quadrature.QuadratureSpec`.  Every
reported norm is also computed at doubled resolution and a
:class:`~micropolar.quadrature.QuadratureError` is raised when the two differ
by more than the tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .linear import MaterialParams, enstrophy_coefficients, symbol_table
from .quadrature import QuadratureError, QuadratureSpec, quad_tolerance, sq_magnitude

PLANCHEREL = (2.0 * np.pi) ** -3

FieldFn = Callable[[np.ndarray], np.ndarray]


def _zero_field(xi: np.ndarray) -> np.ndarray:
    return np.zeros(xi.shape, dtype=complex)


@dataclass(frozen=True)
class ContinuumProfile:
    """Closed-form initial data in Fourier variables.

    ``u0_hat`` and ``w0_hat`` map points of shape ``(3, ...)`` to complex
    vectors of the same shape.  ``q`` is the low-frequency exponent of
    ``|u0_hat|`` and ``sigma`` its spectral decay scale.
    """

    u0_hat: FieldFn = _zero_field
    w0_hat: FieldFn = _zero_field
    q: float = 0.0
    sigma: float = 1.0


@dataclass
class DecayReport:
    times: np.ndarray
    values: np.ndarray
    fitted_slope: float
    slope_stderr: float
    window: tuple[float, float]
    name: str = ""
    extra: dict = field(default_factory=dict)

    def as_json(self) -> dict:
        return {
            "curve_name": self.name,
            "slope": self.fitted_slope,
            "stderr": self.slope_stderr,
            "window": list(self.window),
        }


@dataclass(frozen=True)
class ConstantsLedger:
    eta: float
    c1: float
    c2: float
    c3: float
    c4: float
    delta: float
    a: float
    t0: float


DEFAULT_WINDOW = (1e2, 1e4)


def fit_slope(times, values, window=DEFAULT_WINDOW) -> tuple[float, float]:
    """Least-squares slope of ``log(values)`` against ``log(times)`` inside ``window``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = (times >= window[0] * (1 - 1e-12)) & (times <= window[1] * (1 + 1e-12))
    if np.count_nonzero(sel) < 3:
        raise ValueError(f"fewer than 3 samples inside window {window}")
    if np.any(values[sel] <= 0):
        raise ValueError("values must be positive for a log-log fit")
    res = stats.linregress(np.log(times[sel]), np.log(values[sel]))
    return float(res.slope), float(res.stderr)


def make_report(name, times, values, window=DEFAULT_WINDOW, **extra) -> DecayReport:
    slope, err = fit_slope(times, values, window)
    return DecayReport(np.asarray(times), np.asarray(values), slope, err, tuple(window), name, dict(extra))


# ---------------------------------------------------------------------------
# pointwise linear state
# ---------------------------------------------------------------------------


def _cross(k, v):
    return np.stack(
        (
            k[1] * v[2] - k[2] * v[1],
            k[2] * v[0] - k[0] * v[2],
            k[0] * v[1] - k[1] * v[0],
        )
    )


@dataclass
class LinearState:
    """Hatted linear fields at a set of points."""

    u: np.ndarray
    w: np.ndarray
    h: np.ndarray
    omega: np.ndarray
    E: np.ndarray
    longitudinal: np.ndarray


def _state_from_data(p, xi, R, u0, w0, comps, ecoef) -> LinearState:
    e11, e21, e22, div = comps
    safe = np.where(R > 0, R, 1.0)
    s0 = np.where(R > 0, np.sum(xi * w0, axis=0) / safe, 0.0)
    h0 = w0 - xi * s0
    curl_u0 = 1j * _cross(xi, u0)
    u = e11 * u0 + 1j * e21 * _cross(xi, h0)
    h = e21 * curl_u0 + e22 * h0
    longitudinal = div * xi * s0
    w = h + longitudinal
    omega = 1j * _cross(xi, u)
    # not h - omega / 2: that difference loses digits at late times
    E = ecoef[0] * curl_u0 + ecoef[1] * h0
    return LinearState(u, w, h, omega, E, longitudinal)


def linear_state_hat(p: MaterialParams, prof: ContinuumProfile, xi, t: float):
    """``(u_L, w_L, h_L, Omega_L, E_L)`` in Fourier variables at points ``xi``.

    ``h_L`` is the transverse part of ``w_L``, ``Omega_L = i xi x u_L`` and
    ``E_L = h_L - Omega_L / 2``.
    """
    xi = np.asarray(xi, dtype=float)
    R = np.sum(xi * xi, axis=0)
    comps = symbol_table(p, R, t)
    ecoef = enstrophy_coefficients(p, R, t)
    st = _state_from_data(p, xi, R, prof.u0_hat(xi), prof.w0_hat(xi), comps, ecoef)
    return st.u, st.w, st.h, st.omega, st.E


class _NodeCache:
    """Profile data sampled once on a quadrature rule, reused across times."""

    def __init__(self, prof: ContinuumProfile, quad: QuadratureSpec):
        self.quad = quad
        self.xi = quad.nodes
        self.R = np.sum(self.xi * self.xi, axis=0)
        self.r_sq = quad.radial[0] ** 2
        self.u0 = prof.u0_hat(self.xi)
        self.w0 = prof.w0_hat(self.xi)
        for name, v in (("u0_hat", self.u0), ("w0_hat", self.w0)):
            if not np.all(np.isfinite(v)):
                raise QuadratureError(f"{name} is not finite on the quadrature nodes")

    def state(self, p: MaterialParams, t: float) -> LinearState:
        # the symbol depends on |xi| only: evaluate per radius, broadcast over directions
        comps = symbol_table(p, self.r_sq, t)[:, :, None]
        ecoef = enstrophy_coefficients(p, self.r_sq, t)[:, :, None]
        return _state_from_data(p, self.xi, self.R, self.u0, self.w0, comps, ecoef)

    def norm_sq(self, v: np.ndarray, weight: np.ndarray | None = None) -> float:
        dens = sq_magnitude(v)
        if weight is not None:
            dens = dens * weight
        return PLANCHEREL * self.quad.integrate(dens)


def _checked(values_lo: dict, values_hi: dict, tol: float, what: str) -> dict:
    for key, lo in values_lo.items():
        hi = values_hi[key]
        lo_a, hi_a = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        scale = np.maximum(np.abs(hi_a), np.finfo(float).tiny)
        rel = np.max(np.abs(lo_a - hi_a) / scale)
        if rel > tol:
            raise QuadratureError(
                f"{what}: '{key}' moved by {rel:.3e} (relative) under resolution doubling, tol {tol:.1e}"
            )
    return values_hi


def l2_norm_continuum(field_hat: FieldFn, quad: QuadratureSpec, tol: float | None = None) -> float:
    """``||f||_{L^2(R^3)}`` of a field given by its Fourier transform."""
    tol = quad_tolerance() if tol is None else tol
    vals = []
    for q in (quad, quad.refined()):
        v = np.asarray(field_hat(q.nodes))
        if not np.all(np.isfinite(v)):
            raise QuadratureError("field is not finite on the quadrature nodes")
        dens = sq_magnitude(v) if v.ndim == q.nodes.ndim else np.abs(v) ** 2
        vals.append(PLANCHEREL * q.integrate(dens))
    lo, hi = vals
    if abs(lo - hi) > tol * max(abs(hi), np.finfo(float).tiny):
        raise QuadratureError(f"norm moved by {abs(lo - hi) / abs(hi):.3e} under refinement (tol {tol:.1e})")
    return math.sqrt(hi)


# ---------------------------------------------------------------------------
# time series
# ---------------------------------------------------------------------------

CURVES = ("u", "w", "h", "grad_u", "E", "F")


def _curve_values(cache: _NodeCache, p: MaterialParams, times, a: float) -> dict:
    out = {k: [] for k in CURVES}
    for t in times:
        st = cache.state(p, float(t))
        Esq = cache.norm_sq(st.E)
        Osq = cache.norm_sq(st.omega)
        out["u"].append(cache.norm_sq(st.u))
        out["w"].append(cache.norm_sq(st.w))
        out["h"].append(cache.norm_sq(st.h))
        out["grad_u"].append(Osq)
        out["E"].append(Esq)
        out["F"].append(Esq + a * Osq)
    return {k: np.array(v) for k, v in out.items()}


def decay_curves(
    p: MaterialParams,
    prof: ContinuumProfile,
    times,
    quad: QuadratureSpec,
    window=DEFAULT_WINDOW,
    tol: float | None = None,
) -> dict[str, DecayReport]:
    """Squared norms of ``u_L, w_L, h_L, grad u_L`` (and ``E_L``, ``F``) with fitted slopes.

    ``F = ||E_L||^2 + a ||Omega_L||^2`` with ``a`` from :func:`constants_ledger`.
    """
    times = np.asarray(times, dtype=float)
    tol = quad_tolerance() if tol is None else tol
    a = constants_ledger(p).a
    lo = _curve_values(_NodeCache(prof, quad), p, times, a)
    hi = _curve_values(_NodeCache(prof, quad.refined()), p, times, a)
    vals = _checked(lo, hi, tol, "decay_curves")
    reports = {}
    for name in CURVES:
        try:
            reports[name] = make_report(name, times, vals[name], window)
        except ValueError:
            reports[name] = DecayReport(times, vals[name], math.nan, math.nan, tuple(window), name)
    return reports


def profile_error_curves(
    p: MaterialParams,
    prof: ContinuumProfile,
    times,
    quad: QuadratureSpec,
    window=DEFAULT_WINDOW,
    tol: float | None = None,
) -> tuple[DecayReport, DecayReport]:
    """``||u_L - u_profile||`` and ``||w_L - w_profile||`` against time (norms, not squares)."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 1):
        raise ValueError("profile errors are defined for t >= 1")
    tol = quad_tolerance() if tol is None else tol

    def series(q):
        cache = _NodeCache(prof, q)
        xi, R = cache.xi, cache.R
        safe = np.where(R > 0, R, 1.0)
        pw0 = cache.w0 - xi * np.where(R > 0, np.sum(xi * cache.w0, axis=0) / safe, 0.0)
        cu0 = 1j * _cross(xi, cache.u0)
        cw0 = 1j * _cross(xi, cache.w0)
        eu, ew = [], []
        for t in times:
            st = cache.state(p, float(t))
            heat = np.exp(-p.mu * float(t) * R)
            u_prof = heat * (cache.u0 + 0.5 * cw0)
            w_prof = heat * (0.5 * cu0 + 0.25 * R * pw0)
            eu.append(cache.norm_sq(st.u - u_prof))
            ew.append(cache.norm_sq(st.w - w_prof))
        return {"u": np.array(eu), "w": np.array(ew)}

    vals = _checked(series(quad), series(quad.refined()), tol, "profile_error_curves")
    return (
        make_report("u_profile_error", times, np.sqrt(vals["u"]), window),
        make_report("w_profile_error", times, np.sqrt(vals["w"]), window),
    )


# ---------------------------------------------------------------------------
# enstrophy identity
# ---------------------------------------------------------------------------


def _enstrophy_terms(cache: _NodeCache, p: MaterialParams, t: float, a: float) -> tuple[float, float]:
    mu, chi, gamma, _ = p.as_tuple()
    st = cache.state(p, t)
    R = cache.R
    F = cache.norm_sq(st.E) + a * cache.norm_sq(st.omega)
    diss = 4.0 * chi * cache.norm_sq(st.E)
    diss += (gamma + chi) * cache.norm_sq(st.E - (mu / (2.0 * chi)) * st.omega, R)
    coef = mu * gamma * (mu + chi) / (4.0 * chi * chi)
    if coef:
        diss += coef * cache.norm_sq(st.omega, R)
    return F, diss


def enstrophy_functional(p: MaterialParams, prof: ContinuumProfile, t: float, quad: QuadratureSpec) -> float:
    """``F(t) = ||E_L||^2 + a ||Omega_L||^2``."""
    return _enstrophy_terms(_NodeCache(prof, quad), p, t, constants_ledger(p).a)[0]


def enstrophy_identity_residual(
    p: MaterialParams,
    prof: ContinuumProfile,
    t1: float,
    t2: float,
    quad: QuadratureSpec,
    n_time: int = 12,
    tol: float | None = None,
) -> float:
    """Signed residual ``F(t2) - F(t1) + 2 int_{t1}^{t2} dissipation dt``.

    The time integral uses ``n_time`` Gauss-Legendre nodes; both the spatial and
    the temporal rule are checked under doubling.
    """
    if not 0 <= t1 <= t2:
        raise ValueError("need 0 <= t1 <= t2")
    if t1 == t2:
        return 0.0
    tol = quad_tolerance() if tol is None else tol
    a = constants_ledger(p).a

    def residual(q, nt):
        cache = _NodeCache(prof, q)
        x, wx = np.polynomial.legendre.leggauss(nt)
        half, mid = 0.5 * (t2 - t1), 0.5 * (t2 + t1)
        integral = math.fsum(
            wi * half * _enstrophy_terms(cache, p, mid + half * xi, a)[1] for xi, wi in zip(x, wx)
        )
        F1 = _enstrophy_terms(cache, p, t1, a)[0]
        F2 = _enstrophy_terms(cache, p, t2, a)[0]
        return F2 - F1 + 2.0 * integral, F1

    lo, F1 = residual(quad, n_time)
    hi, _ = residual(quad.refined(), 2 * n_time)
    if abs(lo - hi) > tol * abs(F1):
        raise QuadratureError(
            f"enstrophy residual moved by {abs(lo - hi) / abs(F1):.3e} of F(t1) under refinement"
        )
    return hi


# ---------------------------------------------------------------------------
# constants and Fourier splitting
# ---------------------------------------------------------------------------


def constants_ledger(p: MaterialParams) -> ConstantsLedger:
    mu, chi, gamma, _ = p.as_tuple()
    eta = 0.25 * (1.0 + (mu + chi) / chi)
    c1 = 2.0 * (mu + chi - 2.0 * chi * eta)
    c2 = 2.0 * chi * (4.0 - 2.0 / eta)
    c3 = min(c1 / 2.0, c2 / 2.0)
    c4 = max(2.0 / c1, 2.0 / c2)
    delta = min(c1, c3)
    t0 = max(10.0 / delta, 10.0 / c2 - 1.0)
    a = (gamma * chi + mu * chi + 2.0 * mu * gamma) / (4.0 * chi * chi)
    return ConstantsLedger(eta, c1, c2, c3, c4, delta, a, t0)


def splitting_radius(delta: float, t: float) -> float:
    """``g(t) = sqrt(10 / delta) (1 + t)^{-1/2}``."""
    return math.sqrt(10.0 / delta) / math.sqrt(1.0 + t)


def fourier_splitting_diagnostics(
    p: MaterialParams,
    ledger: ConstantsLedger,
    prof: ContinuumProfile,
    t: float,
    quad: QuadratureSpec,
    tol: float | None = None,
) -> tuple[float, float]:
    """``(g(t), I_z(t))`` with ``I_z = int_{|xi| <= g(t)} |z_L_hat|^2 d xi``.

    ``I_z`` carries no ``(2 pi)^{-3}`` factor; divide by ``(2 pi)^3`` to compare
    with an L^2 norm.
    """
    if t < ledger.t0:
        raise ValueError(f"t = {t} is below t0 = {ledger.t0}")
    tol = quad_tolerance() if tol is None else tol
    g = splitting_radius(ledger.delta, t)
    vals = []
    for q in (quad, quad.refined()):
        ball = q.with_window(r_min=min(q.r_min, 0.5 * g), r_max=g)
        cache = _NodeCache(prof, ball)
        st = cache.state(p, t)
        vals.append(cache.quad.integrate(sq_magnitude(st.u) + sq_magnitude(st.w)))
    lo, hi = vals
    if abs(lo - hi) > tol * max(abs(hi), np.finfo(float).tiny):
        raise QuadratureError("low-frequency mass did not converge")
    return g, hi


def total_energy(p: MaterialParams, prof: ContinuumProfile, t: float, quad: QuadratureSpec) -> float:
    """``||u_L(t)||^2 + ||w_L(t)||^2``."""
    cache = _NodeCache(prof, quad)
    st = cache.state(p, t)
    return cache.norm_sq(st.u) + cache.norm_sq(st.w)
