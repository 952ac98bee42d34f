"""Scalar constants for semilinear equations with sectorial linear part.

The function-space theory is not reproduced. What is computable is the
kernel functional ``kappa0`` of ``(t-s)^-alpha e^{-beta (t-s)}``, the threshold
tests on the Lipschitz constant ``L`` and the equilibrium radius. A
finite-difference reaction-diffusion neural network provides a concrete
delay system on which the qualitative conclusions can be simulated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from .dde import DelaySystemSpec
from .errors import DimensionMismatch, UnstableLinearPart
from .functions import as_function
from .kernels import DEFAULT_CFG, FutureExponential, PowerSingular, QuadratureConfig, half_line_integral, kappa_sup

__all__ = [
    "SectorialParams",
    "SectorialVerdict",
    "kappa0",
    "kappa0_closed_form",
    "sectorial_thresholds",
    "neural_lipschitz",
    "Activation",
    "ACTIVATIONS",
    "NeuralDemo",
    "neural_demo_build",
]


@dataclass(frozen=True)
class SectorialParams:
    alpha: float
    beta: float
    M_sect: float = 1.0
    L: float = 0.0
    C0: float = 0.0
    C1: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.M_sect < 1:
            raise ValueError("M_sect must be >= 1")
        if min(self.L, self.C0, self.C1) < 0:
            raise ValueError("L, C0, C1 must be nonnegative")


@dataclass(frozen=True)
class SectorialVerdict:
    kappa0: float
    equilibrium_exists: bool
    gas: bool
    geas: bool
    rho_eq: float | None
    variant: str
    thresholds: dict = field(default_factory=dict)

    def as_report(self) -> dict:
        d = {"kappa0": self.kappa0, "equilibrium_exists": self.equilibrium_exists, "gas": self.gas,
             "geas": self.geas, "rho_eq": self.rho_eq, "variant": self.variant}
        d.update({f"threshold.{k}": v for k, v in self.thresholds.items()})
        return d


def kappa0(alpha: float, beta: float, variant: str = "full", cfg: QuadratureConfig = DEFAULT_CFG) -> float:
    """``sup_t int_0^t (t-s)^-alpha e^{-beta(t-s)} ds`` plus ``int_t^inf e^{beta(t-s)} ds`` for ``full``."""
    if variant not in ("full", "stable"):
        raise ValueError("variant must be 'full' or 'stable'")
    if not 0.0 <= alpha < 1.0 or not beta > 0:
        raise ValueError("need alpha in [0, 1) and beta > 0")
    K2 = FutureExponential(1.0, beta) if variant == "full" else None
    return float(kappa_sup(PowerSingular(1.0, alpha, beta), K2, cfg=cfg))


def kappa0_closed_form(alpha: float, beta: float, variant: str = "full") -> float:
    from scipy.special import gamma

    val = gamma(1.0 - alpha) * beta ** (alpha - 1.0)
    return float(val + (1.0 / beta if variant == "full" else 0.0))


def sectorial_thresholds(params: SectorialParams, variant: str = "stable",
                         cfg: QuadratureConfig = DEFAULT_CFG) -> SectorialVerdict:
    """Threshold tests on ``L``.

    Existence of the equilibrium needs ``L < 1/(kappa0 M)``. Asymptotic
    stability needs the same bound and exponential stability the stronger
    ``L < 1/(kappa0 M (1 + M))``; both stability claims rest on a stable
    linear part and are only made for ``variant="stable"``.
    """
    k0 = kappa0(params.alpha, params.beta, variant, cfg)
    M = params.M_sect
    t_eq = 1.0 / (k0 * M)
    t_exp = 1.0 / (k0 * M * (1.0 + M))
    exists = params.L < t_eq
    gas = variant == "stable" and exists
    geas = variant == "stable" and params.L < t_exp
    denom = 1.0 - k0 * params.C0 * M
    rho = None
    if denom > 0:
        # int_0^inf (1 + s^-alpha) e^{-beta s} ds by the same substituted quadrature
        integral = float(half_line_integral(1.0, 0.0, params.beta, cfg)) + float(
            half_line_integral(1.0, params.alpha, params.beta, cfg))
        rho = params.C1 * M / denom * integral
    return SectorialVerdict(k0, bool(exists), bool(gas), bool(geas), rho, variant,
                            {"equilibrium": t_eq, "exponential": t_exp,
                             "exponential_met": bool(params.L < t_exp)})


def neural_lipschitz(T, Lg) -> float:
    """``2 sqrt(sum_i (sum_j |T_ij| L_j)^2)``."""
    T = np.atleast_2d(np.asarray(T, float))
    Lg = np.atleast_1d(np.asarray(Lg, float))
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[1] != Lg.size:
        raise DimensionMismatch(f"T of shape {T.shape} does not match {Lg.size} Lipschitz constants")
    if np.any(Lg < 0):
        raise ValueError("Lipschitz constants must be nonnegative")
    row = np.abs(T) @ Lg
    return float(2.0 * np.sqrt(np.sum(row**2)))


@dataclass(frozen=True)
class Activation:
    """``g(u, v)`` of the current and delayed value with ``|dg| <= L (|du| + |dv|)``."""

    func: Callable
    lipschitz: float
    name: str = ""


ACTIVATIONS = {
    "tanh_delayed": Activation(lambda u, v: np.tanh(v), 1.0, "tanh_delayed"),
    "tanh_mean": Activation(lambda u, v: 0.5 * (np.tanh(u) + np.tanh(v)), 0.5, "tanh_mean"),
    "zero": Activation(lambda u, v: 0.0 * v, 0.0, "zero"),
}


@dataclass
class NeuralDemo:
    spec: DelaySystemSpec
    params: SectorialParams
    verdict: SectorialVerdict
    x_nodes: np.ndarray
    n_neurons: int
    mesh_points: int
    symmetric: bool
    beta_gershgorin: float
    estimate_based: bool
    laplacian_min: np.ndarray

    def as_report(self) -> dict:
        d = {"beta": self.params.beta, "M_sect": self.params.M_sect, "L": self.params.L,
             "symmetric": self.symmetric, "beta_gershgorin": self.beta_gershgorin,
             "estimate_based": self.estimate_based, "n_neurons": self.n_neurons, "mesh_points": self.mesh_points}
        d.update({f"verdict.{k}": v for k, v in self.verdict.as_report().items()})
        return d


def _dirichlet_laplacian(m: int) -> np.ndarray:
    hx = 1.0 / (m + 1)
    return (np.diag(-2.0 * np.ones(m)) + np.diag(np.ones(m - 1), 1) + np.diag(np.ones(m - 1), -1)) / hx**2


def neural_demo_build(n_neurons: int, mesh_points: int, diffusion: Sequence[float], b=None, T=None,
                      g: Activation | str = "tanh_delayed", delays=None, J: Sequence = None,
                      cfg: QuadratureConfig = DEFAULT_CFG) -> NeuralDemo:
    """Method-of-lines discretisation on ``(0, 1)`` with Dirichlet ends.

    State ordering is neuron-major: ``u[i * m + k]`` is neuron ``i`` at node
    ``k``. The rhs is
    ``u_i' = a_i D2 u_i + sum_j b_ij u_j + sum_j T_ij g(u_j, u_j(t - r_ij)) + J_i(t)``.
    """
    n, m = int(n_neurons), int(mesh_points)
    if m < 3:
        raise ValueError("mesh_points must be >= 3")
    a = np.broadcast_to(np.asarray(diffusion, float), (n,)).copy()
    if np.any(a <= 0):
        raise ValueError("diffusion coefficients must be positive")
    b = np.zeros((n, n)) if b is None else np.atleast_2d(np.asarray(b, float))
    T = np.zeros((n, n)) if T is None else np.atleast_2d(np.asarray(T, float))
    if b.shape != (n, n) or T.shape != (n, n):
        raise DimensionMismatch("coupling matrices must be n x n")
    R = np.zeros((n, n)) if delays is None else np.broadcast_to(np.asarray(delays, float), (n, n)).copy()
    if np.any(R < 0):
        raise ValueError("delays must be nonnegative")
    act = ACTIVATIONS[g] if isinstance(g, str) else g
    J = [as_function(0.0)] * n if J is None else [as_function(f) for f in J]
    if len(J) != n:
        raise DimensionMismatch("one input function per neuron is required")

    D2 = _dirichlet_laplacian(m)
    A = np.kron(np.diag(a), -D2)  # positive operator
    Bfull = np.kron(b, np.eye(m))
    lin = A - Bfull  # du/dt + (A - B) u = F + J
    sym = 0.5 * (lin + lin.T)
    beta = float(linalg.eigvalsh(sym)[0])
    if beta <= 0:
        raise UnstableLinearPart(f"smallest symmetric-part eigenvalue {beta:g} <= 0")
    symmetric = bool(np.allclose(lin, lin.T))
    # Gershgorin lower bound on the real spectrum of A - B
    off = np.sum(np.abs(lin), axis=1) - np.abs(np.diag(lin))
    beta_g = float(np.min(np.diag(lin) - off))
    Lg = np.full(n, act.lipschitz)
    L = neural_lipschitz(T, Lg)
    # the logarithmic norm gives ||e^{-(A-B)t}||_2 <= e^{-beta t}, so M = 1
    params = SectorialParams(0.0, beta, 1.0, L, L, 0.0)
    verdict = sectorial_thresholds(params, "stable", cfg)

    lag_values = sorted(set(float(x) for x in R.ravel()))
    lag_index = {v: k for k, v in enumerate(lag_values)}
    pairs = [(i, j, lag_index[float(R[i, j])]) for i in range(n) for j in range(n) if T[i, j] != 0.0]
    f = act.func

    def rhs(t, x, xd):
        out = -(x @ lin.T)
        shp = x.shape[:-1]
        u = x.reshape(shp + (n, m))
        acc = np.zeros(shp + (n, m))
        for i, j, k in pairs:
            v = xd[k].reshape(shp + (n, m))
            acc[..., i, :] += T[i, j] * f(u[..., j, :], v[..., j, :])
        for i in range(n):
            acc[..., i, :] += J[i](t)
        return out + acc.reshape(shp + (n * m,))

    spec = DelaySystemSpec(n * m, rhs, lag_values, max_lag=max(lag_values), name="neural_demo")
    x_nodes = np.arange(1, m + 1) / (m + 1)
    lap_min = a * (2.0 * (m + 1) ** 2) * (1.0 - np.cos(np.pi / (m + 1)))
    return NeuralDemo(spec, params, verdict, x_nodes, n, m, symmetric, beta_g, not symmetric, lap_min)
