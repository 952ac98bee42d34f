"""Brute-force ground truth for the certificates.

``majorant_fixed_point`` iterates the right-hand side of the integral
inequality on a grid until it settles; the limit dominates every member of the
solution family with the same initial norm. ``characteristic_root`` gives the
dominant real eigenvalue of a scalar linear lag equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.ndimage import maximum_filter1d

from .certificate import InequalityData
from .dde import DelaySystemSpec, History
from .errors import NoConvergence, NotContractive
from .kernels import DEFAULT_CFG, FutureExponential, QuadratureConfig, ScaledBy, _primitive_power_exp, kappa_sup

__all__ = [
    "MajorantTable",
    "majorant_fixed_point",
    "characteristic_root",
    "random_members",
    "decay_rate_fit",
    "sharpness_probe",
]


@dataclass(frozen=True)
class MajorantTable:
    grid: np.ndarray
    values: np.ndarray
    iterations: int
    residual: float

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.grid, self.values]), delimiter=",", header="t,y_star",
                   comments="", fmt="%.17g")

    def segment_sup(self, r: float) -> np.ndarray:
        """Grid-max of the table over trailing windows of length ``r``."""
        dt = self.grid[1] - self.grid[0]
        return _window_max(self.values, int(round(r / dt)) + 1)


def _window_max(y, w):
    """Trailing window maximum ``max(y[i-w+1 .. i])``, clamped at the start."""
    if w <= 1:
        return y.copy()
    centred = maximum_filter1d(y, size=w, mode="nearest")
    out = np.empty_like(y)
    shift = (w - 1) - w // 2
    out[shift:] = centred[: y.size - shift]
    # first entries: window truncated at the grid start
    out[:shift] = np.maximum.accumulate(y[:shift])
    return out


def _past_weights(K, t):
    """Quadrature matrix ``W[i, j]`` for ``int_0^{t_i} K(t_i, s) g(s) ds ~ sum_j W[i, j] g_j``."""
    n = t.size
    dt = t[1] - t[0]
    prof = K.profile()
    if prof is not None and prof[1] > 0:
        # singular profile: integrate the kernel exactly on each cell and split evenly
        C, alpha, rate = prof
        cells = np.diff(_primitive_power_exp(C, alpha, rate, np.arange(n) * dt))
        W = np.zeros((n, n))
        for i in range(1, n):
            c = cells[:i][::-1]  # cell j..j+1 has lag index i-1-j
            W[i, :i] += 0.5 * c
            W[i, 1:i + 1] += 0.5 * c
        return W
    if isinstance(K, ScaledBy) and K.base.profile() is not None and K.base.profile()[1] > 0:
        C, alpha, rate = K.base.profile()
        cells = np.diff(_primitive_power_exp(C, alpha, rate, np.arange(n) * dt))
        b = np.asarray(K.b(t), float) * np.ones(n)
        W = np.zeros((n, n))
        for i in range(1, n):
            c = cells[:i][::-1]
            W[i, :i] += 0.5 * c * b[:i]
            W[i, 1:i + 1] += 0.5 * c * b[1:i + 1]
        return W
    T, S = np.meshgrid(t, t, indexing="ij")
    mask = S <= T + 1e-12
    vals = np.zeros((n, n))
    vals[mask] = K(T[mask], S[mask])
    W = np.tril(vals) * dt
    idx = np.arange(n)
    W[idx, idx] *= 0.5
    W[:, 0] *= 0.5
    W[0, 0] = 0.0
    return W


def _future_weights(K, t):
    """Trapezoid matrix for ``int_{t_i}^{t_max} K(t_i, s) g(s) ds`` and the analytic tail factor."""
    n = t.size
    dt = t[1] - t[0]
    T, S = np.meshgrid(t, t, indexing="ij")
    mask = S >= T - 1e-12
    vals = np.zeros((n, n))
    vals[mask] = K(T[mask], S[mask])
    W = np.triu(vals) * dt
    idx = np.arange(n)
    W[idx, idx] *= 0.5
    W[:, -1] *= 0.5
    W[-1, -1] = 0.0
    base = K.base if isinstance(K, ScaledBy) else K
    if not isinstance(base, FutureExponential):
        raise NotContractive("future kernel must be exponential for the oracle tail bound")
    bsup = 1.0 if base is K else float(np.max(np.abs(K.b(np.linspace(t[0], t[-1] + 40.0 / base.beta, 4097)))))
    tail = bsup * base.C * np.exp(base.beta * (t - t[-1])) / base.beta
    return W, tail


def majorant_fixed_point(data: InequalityData, y0_norm: float, t_max: float, n_grid: int = 2000,
                         tol: float = 1e-10, max_iter: int = 2000,
                         cfg: QuadratureConfig = DEFAULT_CFG) -> MajorantTable:
    """Jacobi iteration of ``y <- E(t,0) y0 + int K1 ||y_s|| + int K2 ||y_s|| + rho``.

    The grid is uniform on ``[-r, t_max]`` with ``n_grid`` cells on ``[0, t_max]``;
    the history part is held at ``y0_norm``.
    """
    kappa = kappa_sup(data.K1, data.K2, horizon=t_max, cfg=cfg)
    if kappa.upper >= 1.0:
        raise NotContractive(f"kappa = {float(kappa):g} >= 1; the iteration is not a contraction")
    dt = t_max / n_grid
    n_hist = int(math.ceil(data.r / dt - 1e-9))
    t = np.arange(n_grid + 1) * dt
    grid = np.concatenate([-dt * np.arange(n_hist, 0, -1), t])
    w = n_hist + 1
    base = np.asarray(data.E(t, 0.0), float) * y0_norm + data.rho
    W1 = _past_weights(data.K1, t) if data.K1 is not None else None
    if data.K2 is not None:
        W2, tail = _future_weights(data.K2, t)
    else:
        W2 = tail = None
    y = np.full(grid.size, float(y0_norm))
    y[n_hist:] = max(float(y0_norm), 0.0)
    residual = np.inf
    for it in range(1, max_iter + 1):
        seg = _window_max(y, w)[n_hist:]
        new = base.copy()
        if W1 is not None:
            new += W1 @ seg
        if W2 is not None:
            new += W2 @ seg + tail * seg.max()
        new = np.maximum(new, 0.0)
        residual = float(np.max(np.abs(new - y[n_hist:])))
        y[n_hist:] = new
        if residual < tol * max(1.0, float(np.max(new))):
            return MajorantTable(grid, y, it, residual)
    raise NoConvergence(f"fixed point not reached after {max_iter} iterations (residual {residual:g})")


def characteristic_root(a: float, b: float, lag: float) -> float:
    """Unique real root of ``lam + a = b e^{-lam lag}`` (``b >= 0``, ``lag > 0``)."""
    if b < 0:
        raise ValueError("b must be nonnegative")
    if not lag > 0:
        raise ValueError("lag must be positive")
    if b == 0:
        return -float(a)
    g = lambda lam: lam + a - b * math.exp(-lam * lag)  # noqa: E731
    lo, hi = -float(a), max(b - a, 0.0)
    if g(hi) == 0.0:
        return hi
    return optimize.bisect(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400)


def random_members(alpha: float, beta: float, rho: float, r: float, n: int, seed: int = 42,
                   extremal: bool = True):
    """Random linear DDEs whose moduli satisfy the Halanay-type inequality.

    ``x' = -alpha x + beta c x(t - d) + f(t)`` with ``|c| <= 1``, ``d in [0, r]``
    and ``|f| <= alpha rho``. Returns a batched spec; ``|x|`` solves the
    inequality with ``E = e^{-alpha (t-s)}``, ``K1 = beta E`` and offset ``rho``.
    With ``extremal`` the first member uses ``c = 1``, ``d = r`` and the constant
    forcing ``alpha rho``, which pushes ``|x|`` as high as the family allows.
    """
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1.0, 1.0, (n, 1))
    d_choices = np.round(rng.uniform(0.0, r, n) / 0.05) * 0.05 if r > 0 else np.zeros(n)
    amp = rng.uniform(-1.0, 1.0, (n, 1)) * alpha * rho
    freq = rng.uniform(0.0, 3.0, (n, 1))
    phase = rng.uniform(0.0, 2 * np.pi, (n, 1))
    if extremal and n:
        c[0], d_choices[0], amp[0], freq[0], phase[0] = 1.0, r, alpha * rho, 0.0, 0.0
    lags = sorted(set(float(x) for x in d_choices))
    which = np.array([lags.index(float(x)) for x in d_choices])
    sel = np.zeros((len(lags), n, 1))
    sel[which, np.arange(n), 0] = 1.0

    def rhs(t, x, xd):
        delayed = sum(sel[k] * xd[k] for k in range(len(lags)))
        return -alpha * x + beta * c * delayed + amp * np.cos(freq * t + phase)

    return DelaySystemSpec(1, rhs, lags, max_lag=r, name="random_members")


def decay_rate_fit(t, y, t_lo: float, t_hi: float) -> float:
    """Slope of ``-log y`` against ``t`` on ``[t_lo, t_hi]`` by least squares."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    m = (t >= t_lo) & (t <= t_hi) & (y > 0)
    if m.sum() < 2:
        raise ValueError("not enough positive samples for a decay fit")
    slope = np.polyfit(t[m], np.log(y[m]), 1)[0]
    return -float(slope)


def sharpness_probe(kappas, alpha: float = 1.0, r: float = 1.0, t_max: float = 60.0, n_grid: int = 1200):
    """Empirical decay of the majorant for Halanay data across ``kappa`` values.

    Purely descriptive: records how fast the fixed-point envelope decays when
    ``kappa`` lies between ``1/(1+theta)`` and 1.
    """
    from .certificate import halanay_map

    tol = 1e-13
    rows = []
    for k in kappas:
        data = halanay_map(alpha, k * alpha, r)
        tab = majorant_fixed_point(data, 1.0, t_max, n_grid, tol=tol)
        # values near the fixed-point tolerance are iteration noise, not decay
        m = (tab.grid >= 0) & (tab.values > 1e4 * tol)
        rate = decay_rate_fit(tab.grid[m], tab.values[m], 0.25 * t_max, t_max)
        rows.append({"kappa": float(k), "rate": rate, "chen_rate": _chen(alpha, k * alpha, r)})
    return rows


def _chen(alpha, beta, r):
    from .certificate import chen_rate

    return chen_rate(alpha, beta, r) if 0 < beta < alpha else 0.0
