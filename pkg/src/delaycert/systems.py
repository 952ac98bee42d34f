"""Concrete delay systems with their certificates and right-hand sides.

* ``ScalarFDE``: ``x' = -a(t) x + B(t, x_t)`` with ``|B| <= b(t) ||x_t||``.
* ``LinearLag``: ``x' = -a x + b x(t - lag)``.
* ``SuperlinearSystem``: ``x' = F0(t, x) + sum_i Fi(t, x(t - r_i))`` under the
  structure condition (dissipation of degree ``p`` in ``F0``, growth of degree
  ``q < p`` in the delayed terms, forcing sizes ``beta_i(t)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as spi
from scipy import optimize

from .certificate import Verdict, derive_constants
from .dde import DelaySystemSpec
from .errors import ForcingBoundViolated, Infeasible, NonPositiveMeanCoefficient, StructureViolated
from .functions import CoefficientFunction, Constant, SinePlusOffset, AbsSine, as_function
from .kernels import (CoefficientIntegral, DEFAULT_CFG, QuadratureConfig, ScaledBy, decay_majorant, kappa_sup,
                      theta_sup)

__all__ = [
    "ScalarFDE",
    "LinearLag",
    "SuperlinearSystem",
    "ScalarFDECertificate",
    "PeriodicCoefficientReport",
    "SuperlinearCertificate",
    "scalar_fde_certificate",
    "periodic_certificate",
    "superlinear_certificate",
    "build_rhs",
    "check_forcing_bound",
    "check_structure",
    "superlinear_scalar",
]


# ---------------------------------------------------------------------------
# scalar FDE


@dataclass(frozen=True)
class ScalarFDE:
    """``x' = -a(t) x + B(t, x_t)``.

    ``variant="delay"`` realises ``B = b(t) x(t - lag)``; ``variant="sampled"``
    realises ``B = b(t) max_k |x(t - s_k)|`` over ``samples``.
    """

    a: CoefficientFunction
    b: CoefficientFunction
    lag: float = 1.0
    r: float | None = None
    variant: str = "delay"
    samples: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "a", as_function(self.a))
        object.__setattr__(self, "b", as_function(self.b))
        if self.variant not in ("delay", "sampled"):
            raise ValueError("variant must be 'delay' or 'sampled'")
        lags = (self.lag,) if self.variant == "delay" else tuple(self.samples)
        if not lags or min(lags) < 0:
            raise ValueError("lags must be nonnegative and nonempty")
        if self.r is None:
            object.__setattr__(self, "r", float(max(lags)))
        if max(lags) > self.r + 1e-14:
            raise ValueError("lags must not exceed r")

    @property
    def lags(self) -> tuple:
        return (float(self.lag),) if self.variant == "delay" else tuple(float(s) for s in self.samples)

    def B(self, t, xd: Sequence):
        """The delayed functional evaluated on the looked-up values."""
        if self.variant == "delay":
            return self.b(t) * xd[0]
        return self.b(t) * np.max(np.abs(np.stack(xd)), axis=0)


@dataclass(frozen=True)
class LinearLag:
    a: float
    b: float
    lag: float


@dataclass(frozen=True)
class ScalarFDECertificate:
    taus: np.ndarray
    theta_tau: np.ndarray
    kappa_tau: np.ndarray
    verdict: str
    horizon: float

    def as_report(self) -> dict:
        return {"tau": list(self.taus), "theta_tau": list(self.theta_tau), "kappa_tau": list(self.kappa_tau),
                "kappa_max": float(np.max(self.kappa_tau)), "theta_max": float(np.max(self.theta_tau)),
                "verdict": self.verdict, "horizon": self.horizon}


def _default_horizon(a: CoefficientFunction) -> float:
    if a.period:
        return 10.0 * a.period
    mean = float(a(0.0)) if a.is_constant else float(a.integral(0.0, 50.0)) / 50.0
    return 40.0 / mean if mean > 0 else 100.0


def scalar_fde_certificate(sys: ScalarFDE, tau_grid=None, horizon: float | None = None,
                           cfg: QuadratureConfig = DEFAULT_CFG) -> ScalarFDECertificate:
    """``theta_tau`` and ``kappa_tau`` over initial times, and the verdict.

    GEAS when every ``kappa_tau < 1/(1 + theta_tau)``, GAS when every
    ``kappa_tau < 1``, Uncertified otherwise. Upper bounds are used throughout.
    """
    a, b = sys.a, sys.b
    horizon = horizon or _default_horizon(a)
    if tau_grid is None:
        tau_grid = np.linspace(0.0, a.period, 8, endpoint=False) if a.period else np.array([0.0])
    tau_grid = np.atleast_1d(np.asarray(tau_grid, float))
    # plausibility of uniform decay, raises NoUniformDecay
    if not a.is_constant:
        decay_majorant(CoefficientIntegral(a), horizon, cfg=cfg)
    elif float(a(0.0)) <= 0:
        decay_majorant(CoefficientIntegral(a), horizon, cfg=cfg)
    th, ka = [], []
    for tau in tau_grid:
        E = CoefficientIntegral(a.shift(tau))
        th.append(theta_sup(E, horizon, cfg).upper)
        ka.append(kappa_sup(ScaledBy(E, b.shift(tau)), None, horizon, cfg).upper)
    th, ka = np.array(th), np.array(ka)
    if np.all(ka < 1.0 / (1.0 + th)):
        verdict = "GEAS"
    elif np.all(ka < 1.0):
        verdict = "GAS"
    else:
        verdict = "Uncertified"
    return ScalarFDECertificate(tau_grid, th, ka, verdict, float(horizon))


# ---------------------------------------------------------------------------
# periodic coefficient


@dataclass(frozen=True)
class PeriodicCoefficientReport:
    I: float
    I_plus: float
    I_minus: float
    Lambda: float
    theta_bound: float
    kappa_bound: float
    beta1: float
    beta2: float
    beta: float
    kappa_exact: float
    theta_exact: float
    coarse_beta1: float | None = None
    omega: float = 0.0

    @property
    def gas(self) -> bool:
        return self.beta < self.beta1

    @property
    def geas(self) -> bool:
        return self.beta < self.beta2

    def as_report(self) -> dict:
        d = {k: getattr(self, k) for k in ("I", "I_plus", "I_minus", "Lambda", "theta_bound", "kappa_bound",
                                           "beta1", "beta2", "beta", "kappa_exact", "theta_exact",
                                           "coarse_beta1", "omega")}
        d["gas"] = self.gas
        d["geas"] = self.geas
        return d


def _positive_part_integral(a: CoefficientFunction, omega: float, n: int = 4096) -> float:
    """``int_0^omega max(a, 0)`` using exact crossings and the antiderivative."""
    t = np.linspace(0.0, omega, n + 1)
    v = a(t)
    pts = [0.0] + list(t[1:-1][v[1:-1] == 0.0])
    for k in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
        pts.append(optimize.brentq(lambda x: float(a(x)), t[k], t[k + 1], xtol=1e-15, rtol=1e-15))
    pts = sorted(pts) + [omega]
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if float(a(0.5 * (lo + hi))) > 0:
            total += float(a.integral(lo, hi))
    return total


def periodic_certificate(a: CoefficientFunction, omega: float | None = None, beta: float = 0.0,
                         cfg: QuadratureConfig = DEFAULT_CFG, n_tau: int = 8) -> PeriodicCoefficientReport:
    """Thresholds for ``x' = -a(t) x + B`` with ``|B| <= beta ||x_t||`` and periodic ``a``."""
    a = as_function(a)
    omega = float(omega or a.period or 0.0)
    if not omega > 0:
        raise ValueError("a period omega > 0 is required")
    I = float(a.integral(0.0, omega))
    if not I > 0:
        raise NonPositiveMeanCoefficient(f"mean coefficient integral I = {I:g} must be positive")
    I_plus = _positive_part_integral(a, omega)
    I_minus = I_plus - I
    theta_bound = math.exp(I_minus)
    beta1 = I / (omega * math.exp(I_plus))
    beta2 = beta1 / (1.0 + math.exp(I_minus))
    kappa_bound = beta * omega * math.exp(I_plus) / I
    horizon = 10.0 * omega
    taus = np.linspace(0.0, omega, n_tau, endpoint=False)
    th = max(theta_sup(CoefficientIntegral(a.shift(t)), horizon, cfg) for t in taus)
    ka = max(kappa_sup(ScaledBy(CoefficientIntegral(a.shift(t)), Constant(beta)), None, horizon, cfg)
             for t in taus) if beta > 0 else 0.0
    coarse = None
    if isinstance(a, SinePlusOffset) and a.offset > 0:
        # |A sin| integrates to 2A/w per positive lobe, the offset to omega*eps
        w = abs(a.frequency)
        coarse = I / (omega * math.exp(2.0 * abs(a.amplitude) / w + omega * a.offset))
    return PeriodicCoefficientReport(I, I_plus, I_minus, I / omega, theta_bound, kappa_bound, beta1, beta2,
                                     float(beta), float(ka), float(th), coarse, omega)


# ---------------------------------------------------------------------------
# superlinear system


@dataclass
class SuperlinearSystem:
    """Structure-annotated ``x' = F0(t, x) + sum_i Fi(t, x(t - r_i(t)))``.

    ``alpha = (alpha_0, alpha_1, ..., alpha_m)``, ``beta = (beta_0, ..., beta_m)``
    with ``(F0(t,x), x) <= -alpha_0 |x|^{p+1} + beta_0(t)`` and
    ``|Fi(t,x)| <= alpha_i |x|^q + beta_i(t)``.
    """

    p: float
    q: float
    alpha: Sequence[float]
    beta: Sequence
    F0: Callable
    F: Sequence[Callable]
    delays: Sequence
    M: float
    N: float
    dim: int = 1
    max_lag: float | None = None
    name: str = ""

    def __post_init__(self):
        self.alpha = tuple(float(x) for x in self.alpha)
        self.beta = tuple(as_function(b) for b in self.beta)
        self.F = list(self.F)
        self.delays = list(self.delays)
        m = len(self.F)
        if not self.p > self.q >= 1:
            raise StructureViolated("need p > q >= 1")
        if len(self.alpha) != m + 1 or len(self.beta) != m + 1 or len(self.delays) != m:
            raise StructureViolated("alpha and beta need m+1 entries, delays m entries")
        if not self.alpha[0] > 0 or any(x < 0 for x in self.alpha):
            raise StructureViolated("alpha_0 must be positive and all alpha_i nonnegative")
        if self.M < 0 or self.N < 0:
            raise StructureViolated("M and N must be nonnegative")


def check_structure(sys: SuperlinearSystem, n_samples: int = 2000, seed: int = 0, x_max: float = 20.0,
                    t_range=(0.0, 20.0)) -> None:
    """Spot-check the structure inequalities on random ``(t, x)``."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(*t_range, n_samples)
    x = rng.uniform(-x_max, x_max, (n_samples, sys.dim))
    nx = np.linalg.norm(x, axis=-1)
    lhs = np.array([np.dot(np.atleast_1d(sys.F0(ti, xi)), xi) for ti, xi in zip(t, x)])
    rhs = -sys.alpha[0] * nx ** (sys.p + 1) + sys.beta[0](t)
    if np.any(lhs > rhs + 1e-9 * (1 + np.abs(rhs))):
        raise StructureViolated("dissipation inequality for F0 fails on sampled points")
    for i, Fi in enumerate(sys.F, start=1):
        val = np.array([np.linalg.norm(np.atleast_1d(Fi(ti, xi))) for ti, xi in zip(t, x)])
        bound = sys.alpha[i] * nx ** sys.q + sys.beta[i](t)
        if np.any(val > bound + 1e-9 * (1 + bound)):
            raise StructureViolated(f"growth inequality for F{i} fails on sampled points")


def check_forcing_bound(beta: Sequence[CoefficientFunction], M: float, N: float,
                        t_range=(-50.0, 50.0), n: int = 20001) -> float:
    """Verify ``sum_i int_s^t beta_i <= M (t - s) + N`` on all grid windows.

    Returns the worst excess ``max_{s<t} (B(t) - M t) - (B(s) - M s)`` which
    must not exceed ``N``.
    """
    t = np.linspace(*t_range, n)
    total = sum(np.asarray(b(t), float) * np.ones_like(t) for b in beta)
    if np.any(total < -1e-14):
        raise ForcingBoundViolated("forcing sizes beta_i must be nonnegative")
    B = spi.cumulative_trapezoid(total, t, initial=0.0)
    G = B - M * t
    worst = float(np.max(G - np.minimum.accumulate(G)))
    if worst > N + 1e-9 * (1 + N):
        raise ForcingBoundViolated(f"forcing integral exceeds M(t-s)+N by {worst - N:g}")
    return worst


@dataclass(frozen=True)
class SuperlinearCertificate:
    gamma_exp: float
    alpha_sum: float
    c0: float
    c1: float
    c2: float
    theta: float
    kappa0: float
    eps_star: float | None
    verdict: str
    rho_empirical: float | None = None
    eps_limits: dict = field(default_factory=dict)

    @property
    def dissipative(self) -> bool:
        return self.verdict == "dissipative"

    def with_radius(self, rho: float) -> "SuperlinearCertificate":
        return replace(self, rho_empirical=float(rho))

    def as_report(self) -> dict:
        d = {k: getattr(self, k) for k in ("gamma_exp", "alpha_sum", "c0", "c1", "c2", "theta", "kappa0",
                                           "eps_star", "verdict", "rho_empirical")}
        d.update({f"eps_limit.{k}": v for k, v in self.eps_limits.items()})
        return d


def superlinear_certificate(sys: SuperlinearSystem, check: bool = True) -> SuperlinearCertificate:
    """Proof constants and the largest admissible ``epsilon`` on a log sweep.

    ``epsilon`` must satisfy ``eps kappa0 < 1/(1 + theta)``,
    ``eps (gamma+1)(alpha + M) < c0/2``, ``eps < 1`` and ``eps alpha < alpha_0``.
    """
    if check:
        check_forcing_bound(sys.beta, sys.M, sys.N)
    p, q = sys.p, sys.q
    g = p * (q - 1.0) / (p - q) + 1.0
    alpha = float(sum(sys.alpha[1:]))
    c0 = (g + 1.0) * sys.alpha[0]
    c1 = c0 / 2.0
    c2 = (g + 1.0) * sys.N
    theta = math.exp(c2)
    kappa0 = alpha * (g + 1.0) * theta / c1
    inf = math.inf
    limits = {
        "kappa": (1.0 / (1.0 + theta)) / kappa0 if kappa0 > 0 else inf,
        "decay": (c0 / 2.0) / ((g + 1.0) * (alpha + sys.M)) if alpha + sys.M > 0 else inf,
        "unit": 1.0,
        "alpha0": sys.alpha[0] / alpha if alpha > 0 else inf,
    }
    binding = min(limits, key=limits.get)
    upper = limits[binding]
    lo = 1e-8
    if not upper > lo:
        raise Infeasible(f"no epsilon in [{lo:g}, {upper:g}); binding constraint: {binding}", binding=binding)
    sweep = np.geomspace(lo, upper, 60)
    ok = [e for e in sweep if e * kappa0 < 1.0 / (1.0 + theta) and e * (g + 1.0) * (alpha + sys.M) < c0 / 2.0
          and e < 1.0 and e * alpha < sys.alpha[0]]
    if not ok:
        raise Infeasible(f"epsilon sweep found no feasible value; binding constraint: {binding}", binding=binding)
    return SuperlinearCertificate(g, alpha, c0, c1, c2, theta, kappa0, float(max(ok)), "dissipative",
                                  None, limits)


def superlinear_scalar(alpha0: float = 1.0, alpha1: float = 0.1, lag: float = 1.0,
                       forcing: CoefficientFunction | None = None, p: float = 3.0, M: float | None = None,
                       N: float | None = None) -> SuperlinearSystem:
    """``x' = -alpha0 x^p + alpha1 x(t - lag) + f(t)`` with odd power ``p``.

    The forcing ``f`` is carried by the delayed term, ``F1(t, y) = alpha1 y + f(t)``,
    so that ``beta_0 = 0`` and ``beta_1 = |f|``. ``M`` defaults to ``sup|f|`` and
    ``N`` to ``sup|f|`` as well (any window of length ``L`` then integrates to at
    most ``sup|f| L``).
    """
    f = as_function(forcing if forcing is not None else 0.0)
    if isinstance(f, SinePlusOffset) and f.offset == 0:
        size = AbsSine(abs(f.amplitude), f.frequency, f.phase)
    else:
        size = as_function(lambda t, f=f: np.abs(f(t)))
    bound = 0.0 if (f.is_constant and float(f(0.0)) == 0.0) else f.sup(0.0, 100.0)
    M = bound if M is None else M
    N = bound if N is None else N
    F0 = lambda t, x: -alpha0 * np.abs(x) ** (p - 1) * x  # noqa: E731
    F1 = lambda t, y: alpha1 * y + f(t)  # noqa: E731
    return SuperlinearSystem(p, 1.0, (alpha0, alpha1), (Constant(0.0), size), F0, [F1], [lag], M, N, 1,
                             float(lag), "superlinear_scalar")


# ---------------------------------------------------------------------------
# right-hand sides


def build_rhs(sys) -> DelaySystemSpec:
    """Integrator spec for a ``ScalarFDE``, ``LinearLag`` or ``SuperlinearSystem``."""
    if isinstance(sys, LinearLag):
        a, b = float(sys.a), float(sys.b)
        return DelaySystemSpec(1, lambda t, x, xd: -a * x + b * xd[0], [float(sys.lag)], name="linear_lag")
    if isinstance(sys, ScalarFDE):
        a, B = sys.a, sys.B
        return DelaySystemSpec(1, lambda t, x, xd: -a(t) * x + B(t, xd), list(sys.lags), max_lag=sys.r,
                               name="scalar_fde")
    if isinstance(sys, SuperlinearSystem):
        F0, F = sys.F0, list(sys.F)

        def rhs(t, x, xd):
            out = F0(t, x)
            for Fi, y in zip(F, xd):
                out = out + Fi(t, y)
            return out

        return DelaySystemSpec(sys.dim, rhs, list(sys.delays), max_lag=sys.max_lag, name=sys.name or "superlinear")
    raise TypeError(f"cannot build a right-hand side for {type(sys).__name__}")


def linear_lag_certificate(a: float, b: float, lag: float):
    """Constants for ``x' = -a x + b x(t - lag)``: ``theta = 1``, ``kappa = b/a``."""
    from .certificate import exp_certificate

    consts = derive_constants(1.0, kappa_sup(ScaledBy(CoefficientIntegral(Constant(a)), Constant(b))).upper)
    cert = exp_certificate(consts, (1.0, a), lag) if consts.verdict == Verdict.GEAS else None
    return consts, cert
