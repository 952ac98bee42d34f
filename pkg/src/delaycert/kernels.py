"""Two-variable kernels and the functionals ``theta``, ``kappa`` and ``e(t)``.

A retarded integral inequality is driven by three kernels: a decay kernel
``E(t, s)``, a past kernel ``K1(t, s)`` integrated over ``[0, t]`` and a
future kernel ``K2(t, s)`` integrated over ``[t, inf)``. The certificate
constants need upper bounds on

    theta = sup_{t >= s >= 0} E(t, s)
    kappa = sup_{t >= 0} ( int_0^t K1(t, s) ds + int_t^inf K2(t, s) ds )

Suprema over continuous variables are computed on doubling grids. The value
returned is the finest grid value and the last refinement delta is attached as
a safety pad (see :class:`Bound`); callers that need a guaranteed upper bound
use ``bound.upper``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import fftconvolve

from .errors import DivergentTail, HorizonTooSmall, NonFinite, NoUniformDecay, OutOfTable
from .functions import CoefficientFunction, Constant, as_function

__all__ = [
    "Bound",
    "QuadratureConfig",
    "Kernel2",
    "ExponentialScaled",
    "CoefficientIntegral",
    "ScaledBy",
    "PowerSingular",
    "FutureExponential",
    "Tabulated",
    "DecayMajorant",
    "theta_sup",
    "kappa_sup",
    "decay_majorant",
    "half_line_integral",
]


class Bound(float):
    """A float carrying the refinement pad of the computation that produced it."""

    def __new__(cls, value, pad=0.0):
        obj = super().__new__(cls, value)
        obj.pad = abs(float(pad))
        return obj

    @property
    def upper(self) -> float:
        return float(self) + self.pad

    def __repr__(self):
        return f"Bound({float(self)!r}, pad={self.pad!r})"


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_refinements: int = 20
    tail_cutoff: float = 40.0  # in units of 1/rate
    initial_points: int = 256
    max_points: int = 2**22
    max_points_2d: int = 2048

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be >= 1")
        if self.tail_cutoff <= 0:
            raise ValueError("tail_cutoff must be positive")

    def converged(self, delta, value):
        return abs(delta) <= max(self.abs_tol, self.rel_tol * abs(value))


DEFAULT_CFG = QuadratureConfig()


def _finite(x, what="kernel"):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFinite(f"{what} evaluation produced non-finite values")
    return x


# ---------------------------------------------------------------------------
# kernel forms


class Kernel2:
    """Base class. ``k(t, s)`` broadcasts over array arguments."""

    future = False

    def __call__(self, t, s):
        raise NotImplementedError

    def shift(self, tau: float) -> "Kernel2":
        """Kernel in translated time, ``(t, s) -> k(t + tau, s + tau)``."""
        raise NotImplementedError

    def profile(self):
        """``(C, alpha, rate)`` if ``k(t, s) = C u^-alpha e^{-rate u}`` with ``u = t - s``."""
        return None

    def exp_form(self):
        """``(scale, a, b)`` if ``k(t, s) = scale * exp(-int_s^t a) * b(s)``."""
        return None


@dataclass(frozen=True)
class ExponentialScaled(Kernel2):
    """``M0 * exp(-lam0 (t - s))``."""

    M0: float
    lam0: float

    def __post_init__(self):
        if not self.M0 > 0:
            raise ValueError("M0 must be positive")

    def __call__(self, t, s):
        return self.M0 * np.exp(-self.lam0 * (np.asarray(t, float) - np.asarray(s, float)))

    def shift(self, tau):
        return self

    def profile(self):
        return (self.M0, 0.0, self.lam0)

    def exp_form(self):
        return (self.M0, Constant(self.lam0), Constant(1.0))


@dataclass(frozen=True)
class CoefficientIntegral(Kernel2):
    """``exp(-int_s^t a)`` for a scalar coefficient ``a``."""

    a: CoefficientFunction

    def __post_init__(self):
        object.__setattr__(self, "a", as_function(self.a))

    def __call__(self, t, s):
        return np.exp(-self.a.integral(np.asarray(s, float), np.asarray(t, float)))

    def shift(self, tau):
        return CoefficientIntegral(self.a.shift(tau))

    def profile(self):
        if self.a.is_constant:
            return (1.0, 0.0, float(self.a(0.0)))
        return None

    def exp_form(self):
        return (1.0, self.a, Constant(1.0))


@dataclass(frozen=True)
class ScaledBy(Kernel2):
    """``base(t, s) * b(s)``."""

    base: Kernel2
    b: CoefficientFunction

    def __post_init__(self):
        object.__setattr__(self, "b", as_function(self.b))

    @property
    def future(self):
        return self.base.future

    def __call__(self, t, s):
        return self.base(t, s) * self.b(np.asarray(s, float))

    def shift(self, tau):
        return ScaledBy(self.base.shift(tau), self.b.shift(tau))

    def profile(self):
        p = self.base.profile()
        if p is None or not self.b.is_constant:
            return None
        return (p[0] * float(self.b(0.0)), p[1], p[2])

    def exp_form(self):
        f = self.base.exp_form()
        if f is None:
            return None
        scale, a, b0 = f
        if b0.is_constant:
            return (scale * float(b0(0.0)), a, self.b)
        b1 = self.b
        return (scale, a, as_function(lambda s: b0(s) * b1(s)))


@dataclass(frozen=True)
class PowerSingular(Kernel2):
    """``C (t - s)^-alpha exp(-beta (t - s))`` for ``t > s``."""

    C: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")
        if self.C < 0:
            raise ValueError("C must be nonnegative")

    def __call__(self, t, s):
        u = np.asarray(t, float) - np.asarray(s, float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.C * np.power(u, -self.alpha) * np.exp(-self.beta * u)
        return np.where(u > 0, out, np.inf if self.alpha > 0 else self.C)

    def shift(self, tau):
        return self

    def profile(self):
        return (self.C, self.alpha, self.beta)

    def exp_form(self):
        if self.alpha == 0.0:
            return (self.C, Constant(self.beta), Constant(1.0))
        return None


@dataclass(frozen=True)
class FutureExponential(Kernel2):
    """``C exp(beta (t - s))`` for ``s >= t``."""

    C: float
    beta: float
    future = True

    def __call__(self, t, s):
        return self.C * np.exp(self.beta * (np.asarray(t, float) - np.asarray(s, float)))

    def shift(self, tau):
        return self


@dataclass(frozen=True)
class Tabulated(Kernel2):
    """Bilinear interpolation of ``values[i, j] = k(t_grid[i], s_grid[j])``.

    Exact on the table; evaluation outside it raises :class:`OutOfTable`.
    """

    t_grid: np.ndarray
    s_grid: np.ndarray
    values: np.ndarray
    future: bool = False
    _interp: RegularGridInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.t_grid, float)
        s = np.asarray(self.s_grid, float)
        v = np.asarray(self.values, float)
        if v.shape != (t.size, s.size):
            raise ValueError("values must have shape (len(t_grid), len(s_grid))")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("tabulated kernel values must be finite and nonnegative")
        for name, arr in (("t_grid", t), ("s_grid", s), ("values", v)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_interp", RegularGridInterpolator((t, s), v, method="linear", bounds_error=True))

    def __call__(self, t, s):
        t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
        eps = 1e-12 * max(1.0, abs(self.t_grid[-1]), abs(self.s_grid[-1]))
        if (t.min(initial=np.inf) < self.t_grid[0] - eps or t.max(initial=-np.inf) > self.t_grid[-1] + eps
                or s.min(initial=np.inf) < self.s_grid[0] - eps or s.max(initial=-np.inf) > self.s_grid[-1] + eps):
            raise OutOfTable("kernel evaluated outside its table")
        tt = np.clip(t, self.t_grid[0], self.t_grid[-1])
        ss = np.clip(s, self.s_grid[0], self.s_grid[-1])
        return self._interp(np.stack([tt.ravel(), ss.ravel()], axis=-1)).reshape(t.shape)

    def shift(self, tau):
        return Tabulated(self.t_grid - tau, self.s_grid - tau, self.values, self.future)


# ---------------------------------------------------------------------------
# quadrature building blocks


def _primitive_power_exp(C, alpha, rate, x):
    """``int_0^x C u^-alpha e^{-rate u} du`` in closed form."""
    x = np.asarray(x, float)
    if rate > 0:
        return C * rate ** (alpha - 1.0) * special.gamma(1.0 - alpha) * special.gammainc(1.0 - alpha, rate * x)
    if rate == 0:
        return C * x ** (1.0 - alpha) / (1.0 - alpha)
    raise DivergentTail("negative rate in power-exponential primitive")


def half_line_integral(C: float, alpha: float, rate: float, cfg: QuadratureConfig = DEFAULT_CFG) -> Bound:
    """``int_0^inf C u^-alpha e^{-rate u} du`` by substituted trapezoid plus analytic tail.

    The substitution ``v = u^(1 - alpha)`` removes the singularity at zero. The
    integral is truncated at ``X = tail_cutoff / rate`` and the remainder is
    bounded by ``C X^-alpha e^{-rate X} / rate``.
    """
    if C == 0:
        return Bound(0.0)
    if rate <= 0:
        return Bound(np.inf)
    X = cfg.tail_cutoff / rate
    p = 1.0 / (1.0 - alpha)
    V = X ** (1.0 - alpha)

    def g(v):
        return C * p * np.exp(-rate * v**p)

    n = cfg.initial_points
    h = V / n
    v = np.linspace(0.0, V, n + 1)
    vals = _finite(g(v))
    total = h * (vals.sum() - 0.5 * (vals[0] + vals[-1]))
    delta = np.inf
    for _ in range(cfg.max_refinements):
        if 2 * n > cfg.max_points:
            break
        mid = _finite(g((np.arange(n) + 0.5) * h))
        new = 0.5 * total + 0.5 * h * mid.sum()
        delta = new - total
        total = new
        n *= 2
        h *= 0.5
        if cfg.converged(delta, total):
            break
    tail = C * X ** (-alpha) * np.exp(-rate * X) / rate
    return Bound(total + tail, 0.0 if not np.isfinite(delta) else delta)


def _exp_form_past_integral(scale, a, b, t):
    """``F(t_k) = int_0^{t_k} scale e^{-int_s^{t_k} a} b(s) ds`` on a uniform grid.

    Stable forward recursion with Simpson's rule per cell, evaluated in blocks
    so the exponentials never overflow.
    """
    n = t.size - 1
    h = t[1] - t[0]
    A = a.antiderivative(t)
    tm = t[:-1] + 0.5 * h
    Am = a.antiderivative(tm)
    bn = np.asarray(b(t), float) * np.ones_like(t)
    bm = np.asarray(b(tm), float) * np.ones_like(tm)
    dA = A[1:] - A[:-1]
    # cell contribution measured at the right end of the cell
    cell = h / 6.0 * (np.exp(-dA) * bn[:-1] + 4.0 * np.exp(-(A[1:] - Am)) * bm + bn[1:])
    F = np.empty(n + 1)
    F[0] = 0.0
    block = 512
    k0 = 0
    while k0 < n:
        k1 = min(n, k0 + block)
        # within the block: F_k = e^{-(A_k - A_k0)} (F_k0 + sum_j cell_j e^{A_{j+1} - A_k0})
        rel = A[k0 + 1:k1 + 1] - A[k0]
        acc = F[k0] + np.cumsum(cell[k0:k1] * np.exp(rel))
        F[k0 + 1:k1 + 1] = np.exp(-rel) * acc
        k0 = k1
    return _finite(scale * F, "past integral")


def _convolution_past_integral(prof, b, t):
    """``int_0^t k(t - s) b(s) ds`` for a profile kernel and a varying ``b``."""
    C, alpha, rate = prof
    h = t[1] - t[0]
    n = t.size - 1
    edges = np.arange(n + 1) * h
    W = np.diff(_primitive_power_exp(C, alpha, rate, edges))
    bm = np.asarray(b(t[:-1] + 0.5 * h), float) * np.ones(n)
    F = np.zeros(n + 1)
    F[1:] = fftconvolve(bm, W)[:n]
    return _finite(np.maximum(F, 0.0), "past integral")


def _generic_past_integral(K, t):
    """Trapezoid over ``s`` on the same grid, one row per ``t``."""
    T, S = np.meshgrid(t, t, indexing="ij")
    mask = S <= T + 1e-14
    vals = np.zeros_like(T)
    vals[mask] = K(T[mask], S[mask])
    _finite(vals)
    h = t[1] - t[0]
    w = np.tril(np.ones_like(vals)) * h
    idx = np.arange(t.size)
    w[idx, idx] *= 0.5
    w[:, 0] *= 0.5
    w[0, 0] = 0.0
    return (vals * w).sum(axis=1)


def _future_integral_scaled(C, beta, b, t, cutoff):
    """``sup``-ready table of ``int_t^inf C e^{beta (t - s)} b(s) ds`` on ``t``.

    Backward recursion over ``[0, t_end + cutoff/beta]``; the value at the far
    end is bounded by ``C sup|b| / beta``.
    """
    h = t[1] - t[0]
    extra = int(np.ceil(cutoff / beta / h))
    grid = np.arange(t.size + extra) * h + t[0]
    bn = np.asarray(b(grid), float) * np.ones_like(grid)
    bm = np.asarray(b(grid[:-1] + 0.5 * h), float) * np.ones(grid.size - 1)
    q = np.exp(-beta * h)
    cell = C * h / 6.0 * (bn[:-1] + 4.0 * np.exp(-0.5 * beta * h) * bm + q * bn[1:])
    G = np.empty(grid.size)
    G[-1] = C * np.max(np.abs(bn)) / beta
    for k in range(grid.size - 2, -1, -1):
        G[k] = cell[k] + q * G[k + 1]
    return _finite(G[: t.size], "future integral")


# ---------------------------------------------------------------------------
# refinement drivers


def _refine_sup(table_fn, horizon, cfg, n0=None, cap=None):
    """Sup of ``table_fn(grid)`` over doubling uniform grids on ``[0, horizon]``."""
    n = n0 or cfg.initial_points
    cap = cap or cfg.max_points
    prev = None
    delta = 0.0
    for _ in range(cfg.max_refinements + 1):
        t = np.linspace(0.0, horizon, n + 1)
        val = float(np.max(table_fn(t)))
        if prev is not None:
            delta = val - prev
            if cfg.converged(delta, val):
                break
        prev = val
        if 2 * n > cap:
            break
        n *= 2
    return Bound(val, delta)


def _past_route(K1, horizon, cfg):
    """Return ``("const", Bound)`` or ``("grid", fn, cap)`` for the past term."""
    if K1 is None:
        return ("const", Bound(0.0))
    if K1.future:
        raise ValueError("K1 must be a past (decay-type) kernel")
    prof = K1.profile()
    if prof is not None:
        # translation invariant: int_0^t k is nondecreasing in t
        return ("const", half_line_integral(*prof, cfg=cfg))
    form = K1.exp_form()
    if form is not None:
        scale, a, b = form
        return ("grid", lambda t: _exp_form_past_integral(scale, a, b, t), cfg.max_points // 4)
    if isinstance(K1, ScaledBy) and K1.base.profile() is not None:
        prof = K1.base.profile()
        return ("grid", lambda t: _convolution_past_integral(prof, K1.b, t), cfg.max_points // 16)
    return ("grid", lambda t: _generic_past_integral(K1, t), cfg.max_points_2d)


def _future_route(K2, horizon, cfg):
    if K2 is None:
        return ("const", Bound(0.0))
    if isinstance(K2, FutureExponential):
        if K2.beta <= 0:
            raise DivergentTail("future kernel has no integrable tail (beta <= 0)")
        return ("const", Bound(K2.C / K2.beta))
    if isinstance(K2, ScaledBy) and isinstance(K2.base, FutureExponential):
        C, beta = K2.base.C, K2.base.beta
        if beta <= 0:
            raise DivergentTail("future kernel has no integrable tail (beta <= 0)")
        if K2.b.is_constant:
            return ("const", Bound(C * abs(float(K2.b(0.0))) / beta))
        return ("grid", lambda t: _future_integral_scaled(C, beta, K2.b, t, cfg.tail_cutoff), 2**18)
    raise DivergentTail(f"cannot bound the tail of {type(K2).__name__} over [t, inf)")


def kappa_sup(K1: Kernel2 | None, K2: Kernel2 | None = None, horizon: float = 100.0,
              cfg: QuadratureConfig = DEFAULT_CFG) -> Bound:
    """``sup_t ( int_0^t K1(t,s) ds + int_t^inf K2(t,s) ds )``.

    Translation-invariant past kernels are integrated over the half line, since
    ``int_0^t`` is then nondecreasing in ``t``. Varying kernels are tabulated on
    ``[0, horizon]``.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    past = _past_route(K1, horizon, cfg)
    fut = _future_route(K2, horizon, cfg)
    if past[0] == "const" and fut[0] == "const":
        return Bound(float(past[1]) + float(fut[1]), past[1].pad + fut[1].pad)
    if past[0] == "grid" and fut[0] == "grid":
        f1, f2 = past[1], fut[1]
        return _refine_sup(lambda t: f1(t) + f2(t), horizon, cfg, cap=min(past[2], fut[2]))
    grid, const = (past, fut) if past[0] == "grid" else (fut, past)
    s = _refine_sup(grid[1], horizon, cfg, cap=grid[2])
    return Bound(float(s) + float(const[1]), s.pad + const[1].pad)


def _max_drawdown(A):
    return float(np.max(np.maximum.accumulate(A) - A))


def theta_sup(E: Kernel2, horizon: float = 100.0, cfg: QuadratureConfig = DEFAULT_CFG) -> Bound:
    """``sup_{t >= s >= 0} E(t, s)``."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if E.future:
        raise ValueError("theta is defined for decay-type kernels only")
    if isinstance(E, ExponentialScaled):
        if E.lam0 < 0:
            raise HorizonTooSmall("exponential kernel grows; its supremum is infinite")
        return Bound(E.M0)
    prof = E.profile()
    if prof is not None:
        C, alpha, rate = prof
        if alpha > 0:
            raise NonFinite("singular kernel is unbounded on the diagonal")
        if rate < 0:
            raise HorizonTooSmall("exponential kernel grows; its supremum is infinite")
        return Bound(C)
    form = E.exp_form()
    if form is not None and form[2].is_constant:
        scale, a, b = form
        scale = scale * abs(float(b(0.0)))

        n = cfg.initial_points
        prev, delta = None, 0.0
        for _ in range(cfg.max_refinements + 1):
            t = np.linspace(0.0, horizon, n + 1)
            A = _finite(a.antiderivative(t), "antiderivative")
            val = _max_drawdown(A)
            if prev is not None:
                delta = val - prev
                if cfg.converged(delta, val):
                    break
            prev = val
            if 2 * n > cfg.max_points // 4:
                break
            n *= 2
        k = int(0.75 * n)
        part = _max_drawdown(A[: k + 1])
        if val - part > 1e-6 * (1.0 + val):
            raise HorizonTooSmall("max drawdown of the coefficient integral still grows at the horizon")
        out = scale * np.exp(val)
        if not np.isfinite(out):
            raise NonFinite("theta overflow")
        return Bound(out, out * (np.exp(abs(delta)) - 1.0))
    if isinstance(E, Tabulated):
        mask = E.t_grid[:, None] >= E.s_grid[None, :]
        if not mask.any():
            return Bound(0.0)
        return Bound(float(np.max(E.values[mask])))

    def table(t):
        T, S = np.meshgrid(t, t, indexing="ij")
        m = S <= T
        vals = np.zeros_like(T)
        vals[m] = E(T[m], S[m])
        return _finite(vals)

    n = 64
    prev, delta = None, 0.0
    while True:
        t = np.linspace(0.0, horizon, n + 1)
        vals = table(t)
        val = float(vals.max())
        if prev is not None:
            delta = val - prev
            if cfg.converged(delta, val) or 2 * n > cfg.max_points_2d:
                break
        prev = val
        n *= 2
    k = int(0.75 * n)
    if val - float(vals[: k + 1, : k + 1].max()) > 1e-6 * (1.0 + val):
        raise HorizonTooSmall("kernel supremum still grows at the horizon")
    return Bound(val, delta)


# ---------------------------------------------------------------------------
# decay majorant


@dataclass(frozen=True)
class DecayMajorant:
    """Nonincreasing sampled envelope ``e(t) >= E(t + s, s)``."""

    t: np.ndarray
    table: np.ndarray
    tail_bound: float
    pad: float = 1.0

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def __call__(self, t):
        """Left-step evaluation; the tail bound beyond ``t_max``."""
        t = np.asarray(t, float)
        idx = np.clip(np.floor(t / self.dt + 1e-12).astype(int), 0, self.t.size - 1)
        out = self.table[idx]
        return np.where(t > self.t_max, self.tail_bound, out)


def decay_majorant(E: Kernel2, t_max: float, n_s_samples: int = 256,
                   cfg: QuadratureConfig = DEFAULT_CFG, n_t: int = 2049) -> DecayMajorant:
    """Tabulate ``max_s E(t + s, s)`` and take the running max from the right.

    For a periodic coefficient integral the ``s`` samples cover one period,
    otherwise they cover ``[0, t_max]``. For ``exp(-int a)`` kernels the table is
    multiplied by ``exp(sup|a| (ds + dt))``: ``log E(t + s, s)`` is
    ``2 sup|a|``-Lipschitz in ``s`` and rises at most ``sup|a| dt`` within a
    step in ``t``, so the padded table also covers the points between samples.
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if E.future:
        raise ValueError("decay majorant needs a decay-type kernel")
    t = np.linspace(0.0, t_max, n_t)
    pad = 1.0
    if E.profile() is not None:
        raw = _finite(E(t, 0.0))
    else:
        span = t_max
        form = E.exp_form()
        periodic = form is not None and bool(getattr(form[1], "period", None))
        if periodic:
            span = form[1].period
        s = np.linspace(0.0, span, n_s_samples, endpoint=not periodic)
        raw = _finite(E(t[:, None] + s[None, :], s[None, :])).max(axis=1)
        if form is not None and form[2].is_constant:
            A = form[1].sup(0.0, span + t_max, 8 * n_t)
            ds = span / n_s_samples if periodic else s[1] - s[0]
            pad = math.exp(A * (ds + (t[1] - t[0])))
    table = np.maximum.accumulate(raw[::-1])[::-1] * pad
    if not table[-1] < 0.5 * table[0]:
        raise NoUniformDecay("max_s E(t + s, s) does not fall below half its peak within t_max")
    return DecayMajorant(t, table, float(table[-1]), pad)
