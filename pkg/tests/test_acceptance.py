"""Acceptance suite: one test per criterion, each at its stated tolerance and time budget.

Every test records a one-line PASS/FAIL summary which is printed at the end of
the pytest session (see ``conftest.py``) or directly when run as a script.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate as spi
from scipy import special

from delaycert import pipelines
from delaycert.certificate import chen_rate, derive_constants, halanay_map
from delaycert.dde import DelaySystemSpec, History, integrate
from delaycert.functions import SinePlusOffset
from delaycert.kernels import kappa_sup
from delaycert.oracle import characteristic_root
from delaycert.sectorial import kappa0
from delaycert.systems import periodic_certificate

RESULTS: list[str] = []


class Criterion:
    """Context manager timing a block and recording a summary line."""

    def __init__(self, number, title, budget):
        self.number, self.title, self.budget = number, title, budget
        self.detail = ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.perf_counter() - self.t0
        ok = exc_type is None and self.elapsed < self.budget
        RESULTS.append(f"criterion {self.number:2d} {'PASS' if ok else 'FAIL'}  {self.title}  "
                       f"[{self.elapsed:.3g}s / {self.budget:g}s] {self.detail}")
        print(RESULTS[-1])
        return False


def test_criterion_01_constants_exactness():
    with Criterion(1, "constants exactness", 1e-3) as c:
        best = math.inf
        for _ in range(20):
            t0 = time.perf_counter()
            k = derive_constants(1.0, 1.0 / 3.0)
            best = min(best, time.perf_counter() - t0)
        for got, want in [(k.mu, 1.5), (k.c, 1.5), (k.gamma, 5.0), (k.sigma, 0.75)]:
            assert abs(got - want) < 1e-12
        c.detail = f"mu={k.mu!r} c={k.c!r} gamma={k.gamma!r} sigma={k.sigma!r} best_call={best:.2e}s"
    assert best < 1e-3


def test_criterion_02_halanay_mapping():
    with Criterion(2, "Halanay mapping kappa = beta/alpha", 1.0) as c:
        data = halanay_map(2.0, 1.0)
        k = float(kappa_sup(data.K1, data.K2))
        assert abs(k - 0.5) < 1e-6
        c.detail = f"kappa={k!r}"
    assert c.elapsed < 1.0


def test_criterion_03_kappa0_closed_form():
    with Criterion(3, "kappa0(0.5, 1, full) = sqrt(pi) + 1", 1.0) as c:
        k = kappa0(0.5, 1.0, "full")
        gamma_form = special.gamma(0.5) * 1.0 ** (-0.5) + 1.0
        # u = s^(1/2): int_0^inf s^(-1/2) e^(-s) ds = 2 int_0^inf e^(-u^2) du
        substituted = spi.quad(lambda u: 2.0 * math.exp(-u * u), 0, math.inf, epsabs=1e-14)[0] + 1.0
        assert abs(k - gamma_form) < 1e-6
        assert abs(k - substituted) < 1e-6
        assert abs(k - 2.7724539) < 1e-6
        c.detail = f"kappa0={k!r} gamma_form={gamma_form!r} substituted={substituted!r}"
    assert c.elapsed < 1.0


def test_criterion_04_envelope_end_to_end():
    with Criterion(4, "GEAS envelope on 200 random histories", 30.0) as c:
        exp = pipelines.envelope_experiment(3.0, 1.0, 1.0, n=200, radius=10.0, seed=42)
        assert abs(exp.certificate.M - 1.7321) < 1e-4
        assert abs(exp.certificate.lam - 0.0936) < 1e-4
        assert exp.envelope.passed
        assert exp.min_rate >= exp.certificate.lam
        assert abs(exp.oracle_rate - 0.7921) < 1e-4
        worst = float(np.max(np.abs(exp.rates - exp.oracle_rate))) / exp.oracle_rate
        assert worst <= 0.05
        c.detail = (f"M={exp.certificate.M:.6g} lambda={exp.certificate.lam:.6g} rates=[{exp.min_rate:.5g}, "
                    f"{float(np.max(exp.rates)):.5g}] oracle={exp.oracle_rate:.6g} worst_rel={worst:.3g}")
    assert c.elapsed < 30.0


def test_criterion_05_sharpness_witness():
    with Criterion(5, "characteristic root vs Chen rate", 1.0) as c:
        unstable = characteristic_root(1.0, 2.0, 1.0)
        root = characteristic_root(2.0, 1.0, 1.0)
        rate = chen_rate(2.0, 1.0, 1.0)
        assert unstable > 0
        assert abs(root + rate) < 1e-10
        c.detail = f"root(1,2,1)={unstable:.6g} root(2,1,1)={root!r} chen={rate!r}"
    assert c.elapsed < 1.0


def test_criterion_06_periodic_example():
    with Criterion(6, "periodic coefficient thresholds and decay", 60.0) as c:
        rep = periodic_certificate(SinePlusOffset(1.0, 1.0, 0.0, 0.5), beta=0.002)
        assert abs(rep.I - math.pi) < 1e-8
        assert abs(rep.I_minus - (math.sqrt(3) - math.pi / 3)) < 1e-8
        coarse = 0.5 * math.exp(-(2 + math.pi))
        assert abs(rep.coarse_beta1 - coarse) < 1e-12 and abs(coarse - 0.00292) < 1e-5
        assert abs(rep.beta1 - 0.01089) < 1e-5
        assert rep.coarse_beta1 <= rep.beta1
        exp = pipelines.periodic_experiment(beta=0.002, phi_norm=1.0, threshold=1e-4)
        assert 0.002 < rep.coarse_beta1 and 0.002 < rep.beta1
        assert exp.decayed
        c.detail = (f"I={rep.I!r} I-={rep.I_minus!r} coarse={rep.coarse_beta1:.6g} beta1={rep.beta1:.6g} "
                    f"decay_time={exp.decay_time:.4g} horizon={exp.horizon:.4g}")
    assert c.elapsed < 60.0


def test_criterion_07_superlinear_dissipativity():
    with Criterion(7, "superlinear absorbing ball and pullback attractor", 120.0) as c:
        exp = pipelines.superlinear_experiment(n_test=100, radius=10.0, seed=42)
        assert exp.certificate.dissipative
        assert exp.ball.entered.size == 100 and exp.ball.all_absorbed
        assert exp.pullback.converged and exp.pullback.dH_history[-1] < 1e-3
        c.detail = (f"radius={exp.ball.radius:.5g} absorbed={int(exp.ball.remained.sum())}/100 "
                    f"dH_last={exp.pullback.dH_history[-1]:.3g}")
    assert c.elapsed < 120.0


def test_criterion_08_oracle_dominance():
    with Criterion(8, "majorant ultimate bound and dominance", 60.0) as c:
        exp = pipelines.dominance_experiment(alpha=2.0, beta=1.0, rho=1.0, y0=0.0, n_members=50, grid_tol=1e-3)
        assert exp.ultimate == pytest.approx(2.0)
        assert exp.max_value <= 2.0 + 1e-3
        assert exp.n_members == 50 and exp.max_excess <= 1e-3
        c.detail = f"max={exp.max_value!r} excess={exp.max_excess:.3g}"
    assert c.elapsed < 60.0


def test_criterion_09_order_four():
    with Criterion(9, "order-4 convergence of the integrator", 10.0) as c:
        spec = DelaySystemSpec(1, lambda t, x, xd: -2.0 * x + xd[0], [1.0])
        exact = (1.0 + math.exp(-2.0)) / 2.0
        hs = [0.1, 0.05, 0.025, 0.0125]
        errs = [abs(integrate(spec, History.constant(1.0, 1.0), 0.0, 1.0, h)(1.0)[0] - exact) for h in hs]
        ratios = [a / b for a, b in zip(errs, errs[1:])]
        assert len(ratios) == 3 and min(ratios) >= 12.0
        c.detail = "ratios=" + ", ".join(f"{r:.4g}" for r in ratios)
    assert c.elapsed < 10.0


def test_criterion_10_neural_demo():
    with Criterion(10, "neural field convergence and periodicity", 120.0) as c:
        exp = pipelines.neural_experiment()
        v = exp.demo.verdict
        assert exp.demo.n_neurons == 2
        assert exp.demo.params.L < v.thresholds["equilibrium"]
        assert exp.pair_gap < 1e-4 and exp.period_gap < 1e-4
        c.detail = (f"L={exp.demo.params.L:.4g} < {v.thresholds['equilibrium']:.4g} pair_gap={exp.pair_gap:.3g} "
                    f"period_gap={exp.period_gap:.3g}")
    assert c.elapsed < 120.0


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
