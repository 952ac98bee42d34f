import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaycert.errors import ForcingBoundViolated, Infeasible, NonPositiveMeanCoefficient, StructureViolated
from delaycert.functions import Constant, SinePlusOffset
from delaycert.systems import (LinearLag, ScalarFDE, SuperlinearSystem, build_rhs, check_forcing_bound,
                               check_structure, linear_lag_certificate, periodic_certificate,
                               scalar_fde_certificate, superlinear_certificate, superlinear_scalar)

SINE = SinePlusOffset(1.0, 1.0, 0.0, 0.5)


def test_scalar_fde_examples():
    c = scalar_fde_certificate(ScalarFDE(3.0, 1.0, 1.0))
    assert c.verdict == "GEAS"
    assert np.allclose(c.kappa_tau, 1 / 3, atol=1e-8) and np.allclose(c.theta_tau, 1.0, atol=1e-8)
    assert scalar_fde_certificate(ScalarFDE(3.0, 0.0, 1.0)).verdict == "GEAS"
    edge = scalar_fde_certificate(ScalarFDE(1.0, 1.0, 1.0))
    assert edge.verdict == "Uncertified" and np.allclose(edge.kappa_tau, 1.0, atol=1e-8)


def test_sampled_variant_bound():
    sys = ScalarFDE(2.0, 0.5, variant="sampled", samples=(0.25, 0.5, 1.0))
    rng = np.random.default_rng(0)
    for _ in range(50):
        xd = list(rng.normal(size=(3, 4)))
        t = rng.uniform(0, 10)
        assert np.all(np.abs(sys.B(t, xd)) <= 0.5 * np.max(np.abs(xd), axis=0) + 1e-15)
    with pytest.raises(ValueError):
        ScalarFDE(1.0, 1.0, variant="sampled")


def test_periodic_example():
    rep = periodic_certificate(SINE)
    assert rep.I == pytest.approx(math.pi, abs=1e-8)
    assert rep.I_minus == pytest.approx(math.sqrt(3) - math.pi / 3, abs=1e-8)
    assert rep.I_plus == pytest.approx(math.pi + math.sqrt(3) - math.pi / 3, abs=1e-8)
    assert rep.beta1 == pytest.approx(0.01089, abs=1e-5)
    assert rep.coarse_beta1 == pytest.approx(0.5 * math.exp(-(2 + math.pi)), rel=1e-12)
    assert rep.coarse_beta1 <= rep.beta1
    assert rep.beta2 < rep.beta1
    assert rep.I == pytest.approx(rep.I_plus - rep.I_minus, abs=1e-12)


def test_periodic_constant_coefficient():
    rep = periodic_certificate(Constant(1.0), omega=2.0)
    assert (rep.I, rep.I_minus, rep.I_plus) == pytest.approx((2.0, 0.0, 2.0))
    assert rep.beta1 == pytest.approx(math.exp(-2)) and rep.beta2 == pytest.approx(math.exp(-2) / 2)
    with pytest.raises(NonPositiveMeanCoefficient):
        periodic_certificate(SinePlusOffset(1.0, 1.0, 0.0, -0.1))


@settings(max_examples=10)
@given(eps=st.floats(0.2, 2.0), beta=st.floats(1e-4, 1e-2))
def test_coarse_bounds_dominate_exact(eps, beta):
    rep = periodic_certificate(SinePlusOffset(1.0, 1.0, 0.0, eps), beta=beta)
    assert rep.kappa_bound >= rep.kappa_exact - 1e-9
    assert rep.theta_bound >= rep.theta_exact - 1e-9
    assert rep.beta2 < rep.beta1


def test_kappa_tau_is_periodic_in_tau():
    sys = ScalarFDE(SINE, Constant(0.002), 1.0)
    w = 2 * math.pi
    c = scalar_fde_certificate(sys, tau_grid=[0.7, 0.7 + w])
    assert c.kappa_tau[0] == pytest.approx(c.kappa_tau[1], rel=1e-6)
    assert c.theta_tau[0] == pytest.approx(c.theta_tau[1], rel=1e-6)


def test_superlinear_constants():
    cert = superlinear_certificate(superlinear_scalar(1.0, 0.1, 1.0))
    assert (cert.gamma_exp, cert.c0, cert.c1, cert.c2, cert.theta) == pytest.approx((1, 2, 1, 0, 1))
    assert cert.kappa0 == pytest.approx(0.2)
    assert cert.dissipative
    assert cert.eps_star * cert.kappa0 < 1 / (1 + cert.theta)
    assert cert.eps_star * (cert.gamma_exp + 1) * (cert.alpha_sum + 0.0) < cert.c0 / 2
    forced = superlinear_certificate(superlinear_scalar(1.0, 0.1, 1.0, SinePlusOffset(1, 1, 0, 0)))
    assert forced.dissipative and forced.c2 == pytest.approx(2.0)


def _system(p, q, alpha, beta=(0.0, 0.0)):
    return SuperlinearSystem(p, q, alpha, beta, lambda t, x: -alpha[0] * np.abs(x) ** (p - 1) * x,
                             [lambda t, y: alpha[1] * np.abs(y) ** (q - 1) * y], [1.0], 0.0, 0.0)


def test_gamma_exponent_formula():
    assert superlinear_certificate(_system(3, 2, (1.0, 0.1))).gamma_exp == pytest.approx(4.0)
    assert superlinear_certificate(_system(3, 1, (1.0, 0.1))).gamma_exp == pytest.approx(1.0)


def test_superlinear_errors():
    with pytest.raises(StructureViolated):
        _system(1, 1, (1.0, 0.1))
    with pytest.raises(StructureViolated):
        _system(3, 1, (0.0, 0.1))
    bad = superlinear_scalar(1.0, 0.1, 1.0, SinePlusOffset(1, 1, 0, 0), M=0.1, N=0.1)
    with pytest.raises(ForcingBoundViolated):
        superlinear_certificate(bad)
    wrong = SuperlinearSystem(3, 1, (1.0, 0.1), (0.0, 0.0), lambda t, x: x, [lambda t, y: 0.1 * y], [1.0], 0, 0)
    with pytest.raises(StructureViolated):
        check_structure(wrong)
    check_structure(superlinear_scalar(1.0, 0.1, 1.0, SinePlusOffset(1, 1, 0, 0)))
    heavy = superlinear_scalar(1.0, 0.1, 1.0, Constant(1.0), M=1.0, N=30.0)
    with pytest.raises(Infeasible) as exc:
        superlinear_certificate(heavy)
    assert exc.value.binding == "kappa"


def test_forcing_bound_worst_window():
    assert check_forcing_bound([Constant(0.0), Constant(1.0)], 1.0, 0.0) == pytest.approx(0.0, abs=1e-9)


def test_build_rhs_examples():
    s = build_rhs(LinearLag(3.0, 1.0, 1.0))
    assert s.rhs(0.0, np.array([2.0]), [np.array([1.0])])[0] == -5.0
    f = build_rhs(ScalarFDE(SINE, Constant(0.002), 1.0))
    t = 0.4
    assert f.rhs(t, np.array([1.0]), [np.array([2.0])])[0] == pytest.approx(-(math.sin(t) + 0.5) + 0.004)
    g = build_rhs(superlinear_scalar(1.0, 0.1, 1.0))
    assert g.rhs(0.0, np.array([2.0]), [np.array([1.0])])[0] == pytest.approx(-8.0 + 0.1)
    assert list(g.constant_lags) == [1.0]


def test_linear_lag_certificate_values():
    consts, cert = linear_lag_certificate(3.0, 1.0, 1.0)
    assert cert.M == pytest.approx(1.7321, abs=1e-4) and cert.lam == pytest.approx(0.0936, abs=1e-4)
    consts, cert = linear_lag_certificate(1.0, 0.9, 1.0)
    assert cert is None and consts.verdict.value == "GAS_only"
