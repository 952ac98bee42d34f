"""End-to-end experiments combining certificates, simulation and oracles.

Each function returns a plain result object with an ``as_report`` dict; the
command-line front end, the demos and the acceptance tests share them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .attractor import (AbsorbingBallReport, PullbackReport, absorbing_ball, default_schedule, invariance_check,
                        pullback_attractor, sample_cloud)
from .certificate import (CertificateConstants, ExpDecayCertificate, InequalityData, Verdict, bounds,
                          derive_constants, exp_certificate, halanay_map)
from .dde import DelaySystemSpec, EnvelopeReport, aligned_step, integrate, random_histories, verify_envelope
from .functions import Constant, as_function
from .kernels import DEFAULT_CFG, CoefficientIntegral, ExponentialScaled, QuadratureConfig, decay_majorant, \
    kappa_sup, theta_sup
from .oracle import MajorantTable, characteristic_root, decay_rate_fit, majorant_fixed_point, random_members
from .sectorial import NeuralDemo, neural_demo_build
from .systems import (PeriodicCoefficientReport, ScalarFDE, SuperlinearCertificate, build_rhs,
                      linear_lag_certificate, periodic_certificate, superlinear_certificate, superlinear_scalar)

__all__ = [
    "CertifyResult",
    "certify",
    "EnvelopeExperiment",
    "envelope_experiment",
    "PeriodicExperiment",
    "periodic_experiment",
    "SuperlinearExperiment",
    "superlinear_experiment",
    "DominanceExperiment",
    "dominance_experiment",
    "NeuralExperiment",
    "neural_experiment",
]


@dataclass
class CertifyResult:
    theta: float
    kappa: float
    constants: CertificateConstants
    certificate: ExpDecayCertificate | None
    bounds: dict | None

    def as_report(self) -> dict:
        from .certificate import FORMULAS

        d = {"theta_estimate": self.theta, "kappa_estimate": self.kappa}
        d.update(self.constants.as_report())
        if self.certificate is not None:
            d.update({f"certificate.{k}": v for k, v in self.certificate.as_report().items()})
        if self.bounds is not None:
            d.update({f"bound.{k}": v for k, v in self.bounds.items()})
        d.update({f"formula.{k}": v for k, v in FORMULAS.items()})
        return d


def certify(data: InequalityData, y0_norm: float = 1.0, horizon: float = 100.0,
            cfg: QuadratureConfig = DEFAULT_CFG) -> CertifyResult:
    """``theta``, ``kappa``, the verdict and, when GEAS, the explicit certificate."""
    theta = theta_sup(data.E, horizon, cfg)
    kappa = kappa_sup(data.K1, data.K2, horizon, cfg)
    consts = derive_constants(theta.upper, kappa.upper)
    cert = None
    if consts.verdict == Verdict.GEAS:
        if isinstance(data.E, ExponentialScaled) and data.E.lam0 > 0:
            cert = exp_certificate(consts, data.E, data.r)
        else:
            cert = exp_certificate(consts, decay_majorant(data.E, horizon, cfg=cfg), data.r)
    b = bounds(consts, y0_norm, data.rho) if consts.verdict != Verdict.UNCERTIFIED else None
    return CertifyResult(float(theta), float(kappa), consts, cert, b)


# ---------------------------------------------------------------------------


@dataclass
class EnvelopeExperiment:
    constants: CertificateConstants
    certificate: ExpDecayCertificate
    envelope: EnvelopeReport
    rates: np.ndarray
    oracle_rate: float
    n: int
    t_end: float

    @property
    def min_rate(self) -> float:
        return float(np.min(self.rates))

    @property
    def median_rate(self) -> float:
        return float(np.median(self.rates))

    @property
    def rate_rel_error(self) -> float:
        return abs(self.median_rate - self.oracle_rate) / self.oracle_rate

    def as_report(self) -> dict:
        d = {f"constants.{k}": v for k, v in self.constants.as_report().items()}
        d.update({f"certificate.{k}": v for k, v in self.certificate.as_report().items()})
        d.update({f"envelope.{k}": v for k, v in self.envelope.as_report().items()})
        d.update({"empirical_rate.min": self.min_rate, "empirical_rate.median": self.median_rate,
                  "empirical_rate.max": float(np.max(self.rates)), "oracle_rate": self.oracle_rate,
                  "rate_rel_error": self.rate_rel_error, "n_histories": self.n, "t_end": self.t_end})
        return d


def envelope_experiment(a: float = 3.0, b: float = 1.0, lag: float = 1.0, n: int = 200, radius: float = 10.0,
                        seed: int = 42, h: float = 0.01, t_end: float = 30.0,
                        fit_window: tuple = (5.0, 20.0)) -> EnvelopeExperiment:
    """Certificate for ``x' = -a x + b x(t - lag)`` checked on random histories.

    Decay rates are least-squares slopes of ``log ||x_t||`` over ``fit_window``
    and are compared with the dominant characteristic root.
    """
    consts, cert = linear_lag_certificate(a, b, lag)
    if cert is None:
        from .errors import NotGEAS

        raise NotGEAS(f"x' = -{a} x + {b} x(t - {lag}) is not certified GEAS")
    spec = DelaySystemSpec(1, lambda t, x, xd: -a * x + b * xd[0], [lag])
    phi = random_histories(n, lag, 1, radius, seed)
    t_end = max(t_end, cert.T)
    traj = integrate(spec, phi, 0.0, t_end, aligned_step(h, [lag]))
    env = verify_envelope(traj, cert, consts.gamma, 0.0)
    t, seg = traj.segnorm_profile(sub=1)
    rates = np.array([decay_rate_fit(t, seg[:, k], *fit_window) for k in range(n)])
    return EnvelopeExperiment(consts, cert, env, rates, -characteristic_root(a, b, lag), n, float(t_end))


# ---------------------------------------------------------------------------


@dataclass
class PeriodicExperiment:
    report: PeriodicCoefficientReport
    constants: CertificateConstants
    certificate: ExpDecayCertificate | None
    horizon: float
    final_segnorm: float
    decay_time: float | None
    threshold: float

    @property
    def decayed(self) -> bool:
        return self.decay_time is not None and self.decay_time <= self.horizon

    def as_report(self) -> dict:
        d = {f"periodic.{k}": v for k, v in self.report.as_report().items()}
        d.update({f"constants.{k}": v for k, v in self.constants.as_report().items()})
        if self.certificate is not None:
            d.update({f"certificate.{k}": v for k, v in self.certificate.as_report().items()})
        d.update({"certified_horizon": self.horizon, "final_segnorm": self.final_segnorm,
                  "decay_time": self.decay_time, "threshold": self.threshold, "decayed": self.decayed})
        return d


def periodic_experiment(a=None, beta: float = 0.002, lag: float = 1.0, phi_norm: float = 1.0,
                        threshold: float = 1e-4, h: float = 0.01,
                        cfg: QuadratureConfig = DEFAULT_CFG) -> PeriodicExperiment:
    """``x' = -a(t) x + beta x(t - lag)`` with periodic ``a`` (default ``sin t + 0.5``).

    The certified horizon is the first ``t`` with ``M ||phi|| e^{-lambda t} <=
    threshold``; the simulation from the constant history ``phi_norm`` must fall
    below ``threshold`` by then.
    """
    from .functions import SinePlusOffset

    a = SinePlusOffset(1.0, 1.0, 0.0, 0.5) if a is None else as_function(a)
    rep = periodic_certificate(a, beta=beta, cfg=cfg)
    consts = derive_constants(rep.theta_exact, rep.kappa_exact)
    cert = None
    horizon = math.inf
    if consts.verdict == Verdict.GEAS:
        maj = decay_majorant(CoefficientIntegral(a), 20.0 * rep.omega, cfg=cfg)
        cert = exp_certificate(consts, maj, lag)
        horizon = max(math.log(cert.M * phi_norm / threshold) / cert.lam, cert.T)
    sys_ = ScalarFDE(a, Constant(beta), lag)
    spec = build_rhs(sys_)
    from .dde import History

    t_end = horizon if math.isfinite(horizon) else 60.0 * rep.omega
    traj = integrate(spec, History.constant(phi_norm, lag), 0.0, t_end, aligned_step(h, [lag]))
    t, seg = traj.segnorm_profile(sub=1)
    below = np.nonzero(seg <= threshold)[0]
    # first time after which the segment norm stays below the threshold
    decay_time = None
    if below.size and np.all(seg[below[0]:] <= threshold):
        decay_time = float(t[below[0]])
    return PeriodicExperiment(rep, consts, cert, float(horizon), float(seg[-1]), decay_time, threshold)


# ---------------------------------------------------------------------------


@dataclass
class SuperlinearExperiment:
    certificate: SuperlinearCertificate
    ball: AbsorbingBallReport
    pullback: PullbackReport
    invariance_gap: float | None
    h: float

    @property
    def passed(self) -> bool:
        return bool(self.certificate.dissipative and self.ball.all_absorbed and self.pullback.converged
                    and self.pullback.contained_in_ball)

    def as_report(self) -> dict:
        d = {f"certificate.{k}": v for k, v in self.certificate.as_report().items()}
        d.update({f"ball.{k}": v for k, v in self.ball.as_report().items()})
        d.update({f"pullback.{k}": v for k, v in self.pullback.as_report().items()})
        d.update({"invariance_gap": self.invariance_gap, "h": self.h, "passed": self.passed})
        return d


def superlinear_experiment(alpha0: float = 1.0, alpha1: float = 0.1, lag: float = 1.0, forcing=None,
                           p: float = 3.0, radius: float = 10.0, n_test: int = 100, n_calibration: int = 40,
                           seed: int = 42, h: float = 0.005, t_end: float = 60.0, burn_in: float = 20.0,
                           margin: float = 0.05, t_star: float = 0.0, tol: float = 1e-3, n_cloud: int = 16,
                           invariance_delta: float | None = 1.5) -> SuperlinearExperiment:
    """Certificate, measured absorbing ball and pullback attractor sample.

    ``h`` must keep the explicit scheme stable on ``|x| <= radius``: the local
    rate of ``-alpha0 x^p`` is ``p alpha0 radius^(p-1)``.
    """
    from .functions import SinePlusOffset

    forcing = SinePlusOffset(1.0, 1.0, 0.0, 0.0) if forcing is None else as_function(forcing)
    sys_ = superlinear_scalar(alpha0, alpha1, lag, forcing, p)
    cert = superlinear_certificate(sys_)
    spec = build_rhs(sys_)
    n_nodes = int(round(lag / h)) + 1
    n_corner = 4
    test = sample_cloud(lag, 1, radius, n_nodes, max(n_test - n_corner, 0), seed, "test")
    calib = sample_cloud(lag, 1, radius, n_nodes, n_calibration, seed + 1, "calibration")
    ball = absorbing_ball(spec, test, calib, 0.0, t_end, h, burn_in, margin)
    cert = cert.with_radius(ball.radius)
    cloud0 = sample_cloud(lag, 1, radius, n_nodes, n_cloud, seed + 2, "pullback")
    pb = pullback_attractor(spec, t_star, cloud0, default_schedule(t_star, lag), h, tol, ball.radius)
    gap = invariance_check(spec, pb, cloud0, invariance_delta, h) if invariance_delta else None
    return SuperlinearExperiment(cert, ball, pb, gap, h)


# ---------------------------------------------------------------------------


@dataclass
class DominanceExperiment:
    table: MajorantTable
    constants: CertificateConstants
    max_value: float
    ultimate: float
    uniform: float
    max_excess: float
    n_members: int
    grid_tol: float

    @property
    def within_ultimate(self) -> bool:
        return self.max_value <= self.ultimate + self.grid_tol

    @property
    def dominates(self) -> bool:
        return self.max_excess <= self.grid_tol

    def as_report(self) -> dict:
        d = {f"constants.{k}": v for k, v in self.constants.as_report().items()}
        d.update({"majorant.max": self.max_value, "majorant.iterations": self.table.iterations,
                  "majorant.residual": self.table.residual, "bound.ultimate": self.ultimate,
                  "bound.uniform": self.uniform, "members.max_excess": self.max_excess,
                  "members.n": self.n_members, "grid_tol": self.grid_tol,
                  "within_ultimate": self.within_ultimate, "dominates": self.dominates})
        return d


def dominance_experiment(alpha: float = 2.0, beta: float = 1.0, rho: float = 1.0, r: float = 1.0,
                         y0: float = 0.0, t_max: float = 20.0, n_grid: int = 2000, n_members: int = 50,
                         seed: int = 42, h: float = 0.01, grid_tol: float = 1e-3) -> DominanceExperiment:
    """Fixed-point majorant for Halanay data against integrated family members.

    Members start from histories of norm ``y0`` (zero by default) and satisfy
    the inequality with offset ``rho``; each ``|x(t)|`` must stay below the
    table at every grid point.
    """
    data = halanay_map(alpha, beta, r)
    data = InequalityData(data.E, data.K1, data.K2, rho, r)
    table = majorant_fixed_point(data, y0, t_max, n_grid)
    consts = derive_constants(1.0, float(kappa_sup(data.K1, None)))
    bd = bounds(consts, y0, rho)
    spec = random_members(alpha, beta, rho, r, n_members, seed)
    if y0 > 0:
        phi = random_histories(n_members, r, 1, y0, seed + 1)
    else:
        from .dde import History

        phi = History.constant(np.zeros((n_members, 1)), r)
    traj = integrate(spec, phi, 0.0, t_max, aligned_step(h, spec.constant_lags + [t_max / n_grid]))
    m = table.grid >= 0
    x = np.abs(traj(table.grid[m]))[..., 0]
    excess = float(np.max(x - table.values[m][:, None]))
    return DominanceExperiment(table, consts, float(np.max(table.values)), bd["ultimate"], bd["uniform"],
                               excess, n_members, grid_tol)


# ---------------------------------------------------------------------------


@dataclass
class NeuralExperiment:
    demo: NeuralDemo
    pair_gap: float
    period_gap: float
    t_end: float
    transient: float
    period: float
    h: float

    @property
    def passed(self) -> bool:
        return bool(self.demo.verdict.equilibrium_exists and self.pair_gap < 1e-4 and self.period_gap < 1e-4)

    def as_report(self) -> dict:
        d = {f"demo.{k}": v for k, v in self.demo.as_report().items()}
        d.update({"pair_gap": self.pair_gap, "period_gap": self.period_gap, "t_end": self.t_end,
                  "transient": self.transient, "period": self.period, "h": self.h, "passed": self.passed})
        return d


def neural_experiment(n_neurons: int = 2, mesh_points: int = 9, diffusion=(1.0, 1.0), b=None, T=None,
                      delays=None, inputs=None, activation: str = "tanh_delayed", h: float = 0.005,
                      t_end: float = 40.0, transient: float = 20.0, period: float = 2 * math.pi,
                      histories=(1.0, -2.0)) -> NeuralExperiment:
    """Two trajectories of the discretised network from different constant histories.

    Reports the largest gap between the two on ``[transient, t_end]`` and the
    largest ``|x(t + period) - x(t)|`` on the same window.
    """
    from .dde import History
    from .functions import SinePlusOffset

    T = [[0.5, -1.0], [0.8, 0.3]] if T is None else T
    delays = [[1.0, 0.5], [0.5, 1.0]] if delays is None else delays
    if inputs is None:
        inputs = [SinePlusOffset(1.0, 1.0, 0.0, 0.0), SinePlusOffset(1.0, 1.0, math.pi / 2, 0.0)]
    demo = neural_demo_build(n_neurons, mesh_points, diffusion, b, T, activation, delays, inputs)
    spec = demo.spec
    dim = spec.dim
    start = np.stack([np.full(dim, float(v)) for v in histories])
    h_eff = aligned_step(h, spec.constant_lags)
    traj = integrate(spec, History.constant(start, max(spec.max_lag, h_eff)), 0.0, t_end, h_eff)
    if t_end - period < transient:
        raise ValueError("t_end must exceed transient + period")
    t = np.linspace(transient, t_end, 801)
    x = traj(t)
    pair = float(np.max(np.linalg.norm(x[:, 0] - x[:, 1], axis=-1)))
    tp = np.linspace(transient, t_end - period, 801)
    per = float(np.max(np.linalg.norm(traj(tp + period) - traj(tp), axis=-1)))
    return NeuralExperiment(demo, pair, per, float(t_end), float(transient), float(period), float(h_eff))
