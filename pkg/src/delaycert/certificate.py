"""Stability constants, verdicts and explicit decay certificates.

Everything here is scalar arithmetic on already computed upper bounds
``theta`` and ``kappa``; no quadrature happens in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize

from .errors import BetaNotLessThanOne, MajorantTooShort, NotGEAS, UncertifiedInput
from .kernels import DecayMajorant, ExponentialScaled, Kernel2, ScaledBy

__all__ = [
    "Verdict",
    "InequalityData",
    "CertificateConstants",
    "ExpDecayCertificate",
    "HalanayProblem",
    "HaleEnvelope",
    "derive_constants",
    "exp_certificate",
    "bounds",
    "halanay_map",
    "chen_rate",
    "hale_envelope",
]


class Verdict(str, Enum):
    GEAS = "GEAS"
    GAS_ONLY = "GAS_only"
    UNCERTIFIED = "Uncertified"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class InequalityData:
    """Kernels, offset and lag of a retarded integral inequality."""

    E: Kernel2
    K1: Kernel2 | None = None
    K2: Kernel2 | None = None
    rho: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.r < 0:
            raise ValueError("r must be nonnegative")
        if self.E.future:
            raise ValueError("E must be a decay-type kernel")


@dataclass(frozen=True)
class CertificateConstants:
    """``theta, kappa`` and the derived constants. Undefined entries are ``None``."""

    theta: float
    kappa: float
    mu: float | None
    c: float | None
    gamma: float | None
    sigma: float | None
    verdict: Verdict

    @property
    def kappa_c(self) -> float | None:
        return None if self.c is None else self.kappa * self.c

    def as_report(self) -> dict:
        return {
            "theta": self.theta,
            "kappa": self.kappa,
            "mu": self.mu,
            "c": self.c,
            "gamma": self.gamma,
            "sigma": self.sigma,
            "verdict": str(self.verdict),
        }


FORMULAS = {
    "theta": "sup_{t>=s>=0} E(t,s)",
    "kappa": "sup_t (int_0^t K1 ds + int_t^inf K2 ds)",
    "mu": "1/(1-kappa)",
    "c": "max(theta/(1-kappa), 1)",
    "gamma": "(mu+1)/(1-kappa*c)",
    "sigma": "(1+kappa*c)/2",
    "verdict": "GEAS iff kappa<1/(1+theta); GAS_only iff kappa<1",
    "t0": "first t with E(t+s,s)*gamma<=1",
    "t1": "first t with E(t+s,s)<(1-kappa*c)/2",
    "T": "max(t0,t1)+r",
    "lambda": "-ln(sigma)/(2T)",
    "M": "c*exp(lambda*T)  [certificate M; distinct from Mfut and M_sect]",
}


def derive_constants(theta: float, kappa: float) -> CertificateConstants:
    """Constants and verdict from the kernel bounds ``theta > 0``, ``kappa >= 0``."""
    theta = float(theta)
    kappa = float(kappa)
    if not theta > 0:
        raise ValueError("theta must be positive")
    if not kappa >= 0:
        raise ValueError("kappa must be nonnegative")
    if kappa >= 1:
        return CertificateConstants(theta, kappa, None, None, None, None, Verdict.UNCERTIFIED)
    mu = 1.0 / (1.0 - kappa)
    c = max(theta / (1.0 - kappa), 1.0)
    kc = kappa * c
    # gamma and sigma only make sense while kappa*c < 1
    gamma = (mu + 1.0) / (1.0 - kc) if kc < 1 else None
    sigma = (1.0 + kc) / 2.0 if kc < 1 else None
    verdict = Verdict.GEAS if kappa < 1.0 / (1.0 + theta) else Verdict.GAS_ONLY
    return CertificateConstants(theta, kappa, mu, c, gamma, sigma, verdict)


@dataclass(frozen=True)
class ExpDecayCertificate:
    """Envelope ``||y_t|| <= M ||y_0|| e^{-lambda t} + gamma rho`` valid for all t >= 0."""

    t0: float
    t1: float
    T: float
    lam: float
    M: float
    branch: str = "exponential"

    def envelope(self, t, y0_norm: float, gamma: float = 0.0, rho: float = 0.0):
        return self.M * y0_norm * np.exp(-self.lam * np.asarray(t, float)) + gamma * rho

    def as_report(self) -> dict:
        return {"t0": self.t0, "t1": self.t1, "T": self.T, "lambda": self.lam, "M": self.M,
                "branch": self.branch}


def _require_geas(consts):
    if consts.verdict != Verdict.GEAS:
        raise NotGEAS(f"exponential certificate needs verdict GEAS, got {consts.verdict}")


def exp_certificate(consts: CertificateConstants, decay, r: float = 0.0) -> ExpDecayCertificate:
    """Explicit ``(T, lambda, M)``.

    ``decay`` is either an ``(M0, lam0)`` pair for ``E = M0 e^{-lam0 (t-s)}``,
    an :class:`ExponentialScaled` kernel, or a :class:`DecayMajorant`.
    """
    _require_geas(consts)
    if r < 0:
        raise ValueError("r must be nonnegative")
    kc = consts.kappa * consts.c
    sigma_gap = math.log(2.0) - math.log1p(kc)  # = -ln(sigma)
    if isinstance(decay, ExponentialScaled):
        decay = (decay.M0, decay.lam0)
    if isinstance(decay, DecayMajorant):
        e = decay.table
        hits0 = np.nonzero(e * consts.gamma <= 1.0)[0]
        hits1 = np.nonzero(e < (1.0 - kc) / 2.0)[0]
        if hits0.size == 0 or hits1.size == 0:
            raise MajorantTooShort("decay majorant never crosses a certificate threshold; extend t_max")
        # strict thresholds: pad each crossing by one grid step
        t0 = float(decay.t[hits0[0]]) + decay.dt
        t1 = float(decay.t[hits1[0]]) + decay.dt
        T = max(t0, t1) + r
        lam = sigma_gap / (2.0 * T)
        return ExpDecayCertificate(t0, t1, T, lam, consts.c * math.exp(lam * T), "majorant")
    M0, lam0 = (float(x) for x in decay)
    if not (M0 > 0 and lam0 > 0):
        raise ValueError("exponential branch needs M0 > 0 and lam0 > 0")
    log0 = math.log(M0 * consts.gamma)
    log1 = math.log(2.0 * M0 / (1.0 - kc))
    M1 = max(log0, log1)
    if M1 + r * lam0 <= 0:
        raise ValueError("degenerate certificate: T would be zero")
    T = M1 / lam0 + r
    lam = sigma_gap / (2.0 * (M1 + r * lam0)) * lam0
    M = consts.c * math.sqrt(2.0 / (1.0 + kc))
    return ExpDecayCertificate(log0 / lam0, log1 / lam0, T, lam, M, "exponential")


def bounds(consts: CertificateConstants, y0_norm: float, rho: float) -> dict:
    """Uniform, ultimate and a-priori bounds on the solution."""
    if consts.verdict == Verdict.UNCERTIFIED:
        raise UncertifiedInput("bounds need kappa < 1")
    if y0_norm < 0 or rho < 0:
        raise ValueError("y0_norm and rho must be nonnegative")
    c, mu = consts.c, consts.mu
    return {
        "uniform": c * y0_norm + mu * rho,
        "ultimate": mu * rho,
        "apriori": (c + 1.0) * (y0_norm + 1.0) + mu * rho,
    }


@dataclass(frozen=True)
class HalanayProblem:
    alpha: float
    beta: float
    r: float = 0.0

    def __post_init__(self):
        if not self.alpha > self.beta > 0:
            raise ValueError("need alpha > beta > 0")
        if self.r < 0:
            raise ValueError("r must be nonnegative")


def halanay_map(alpha: float, beta: float, r: float = 0.0) -> InequalityData:
    """``y' <= -alpha y + beta ||y_t||`` as an integral inequality."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    E = ExponentialScaled(1.0, alpha)
    return InequalityData(E=E, K1=ScaledBy(E, beta), K2=None, rho=0.0, r=r)


def chen_rate(alpha: float, beta: float, r: float) -> float:
    """Root ``mu`` of ``beta e^{mu r} = alpha - mu`` in ``(0, alpha)``."""
    if not 0 < beta < alpha:
        raise ValueError("need 0 < beta < alpha")
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r == 0:
        return alpha - beta
    f = lambda mu: beta * math.exp(mu * r) - (alpha - mu)  # noqa: E731
    return optimize.bisect(f, 0.0, alpha * (1.0 - 1e-12), xtol=1e-300, rtol=4 * np.finfo(float).eps,
                           maxiter=200)


@dataclass(frozen=True)
class HaleEnvelope:
    bound: float
    beta: float
    exponent: float
    decay: bool


def hale_envelope(K: float, L: float, Mfut: float, alpha: float, gamma_rate: float | None,
                  t) -> HaleEnvelope:
    """``(1-beta)^-1 K exp(-[alpha - (1-beta)^-1 L] t)`` with ``beta = L/alpha + Mfut/gamma_rate``."""
    future = 0.0 if Mfut == 0 else Mfut / gamma_rate
    beta = L / alpha + future
    if not beta < 1:
        raise BetaNotLessThanOne(f"beta = {beta:g} must be < 1")
    inv = 1.0 / (1.0 - beta)
    exponent = alpha - inv * L
    bound = inv * K * np.exp(-exponent * np.asarray(t, float))
    return HaleEnvelope(bound if np.ndim(bound) else float(bound), beta, exponent, exponent > 0)
