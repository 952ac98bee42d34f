import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from delaycert.certificate import (FORMULAS, InequalityData, Verdict, bounds, chen_rate, derive_constants,
                                   exp_certificate, halanay_map, hale_envelope)
from delaycert.errors import BetaNotLessThanOne, MajorantTooShort, NotGEAS, UncertifiedInput
from delaycert.functions import SinePlusOffset
from delaycert.kernels import CoefficientIntegral, ExponentialScaled, decay_majorant, kappa_sup


def test_constants_examples():
    c = derive_constants(1.0, 1 / 3)
    assert (c.mu, c.c, c.gamma, c.sigma) == pytest.approx((1.5, 1.5, 5.0, 0.75), abs=1e-12)
    assert c.kappa_c == pytest.approx(0.5)
    assert c.verdict == Verdict.GEAS
    c0 = derive_constants(1.0, 0.0)
    assert (c0.mu, c0.c, c0.gamma, c0.sigma, c0.verdict) == (1.0, 1.0, 2.0, 0.5, Verdict.GEAS)
    assert derive_constants(1.0, 0.6).verdict == Verdict.GAS_ONLY
    u = derive_constants(1.0, 1.0)
    assert u.verdict == Verdict.UNCERTIFIED and u.mu is None and u.gamma is None


@given(theta=st.floats(1e-3, 50), kappa=st.floats(0, 2))
def test_constant_invariants(theta, kappa):
    c = derive_constants(theta, kappa)
    if kappa >= 1:
        assert c.verdict == Verdict.UNCERTIFIED
        return
    assert c.verdict == (Verdict.GEAS if kappa < 1 / (1 + theta) else Verdict.GAS_ONLY)
    assert c.mu >= 1 and c.c >= 1
    if c.verdict == Verdict.GEAS:
        assert c.kappa_c < 1
        assert c.gamma >= c.mu
        assert c.kappa_c <= c.sigma < 1


def test_exponential_certificate_example():
    c = derive_constants(1.0, 1 / 3)
    cert = exp_certificate(c, (1.0, 3.0), 1.0)
    M1 = math.log(5)
    assert cert.T == pytest.approx(M1 / 3 + 1, abs=1e-12)
    assert cert.lam == pytest.approx((math.log(2) - math.log(1.5)) / (2 * (M1 + 3)) * 3, abs=1e-12)
    assert cert.M == pytest.approx(1.5 * math.sqrt(4 / 3), abs=1e-12)
    assert cert.T == pytest.approx(1.5365, abs=1e-4) and cert.lam == pytest.approx(0.0936, abs=1e-4)


def test_exponential_certificate_r0_theta_rate():
    c = derive_constants(1.0, 1 / 3)
    cert = exp_certificate(c, (1.0, 3.0), 0.0)
    theta = (math.log(2) - math.log(1.5)) / (2 * math.log(5))
    assert cert.lam == pytest.approx(theta * 3, rel=1e-12)


@given(theta=st.floats(0.5, 5), frac=st.floats(0.01, 0.99), M0=st.floats(1, 5), lam0=st.floats(0.1, 5),
       r=st.floats(0, 3))
def test_certificate_invariants(theta, frac, M0, lam0, r):
    c = derive_constants(theta, frac / (1 + theta))
    cert = exp_certificate(c, (M0, lam0), r)
    assert cert.lam > 0
    assert cert.M >= c.c >= 1
    # lambda * 2T = -ln sigma, up to the exact-form rearrangement
    assert cert.lam * 2 * cert.T == pytest.approx(-math.log(c.sigma), rel=1e-10)


def test_majorant_branch_and_gates():
    E = CoefficientIntegral(SinePlusOffset(1, 1, 0, 0.5))
    c = derive_constants(2.0, 0.05)
    m = decay_majorant(E, 40.0)
    cert = exp_certificate(c, m, 1.0)
    assert cert.branch == "majorant"
    assert cert.T == pytest.approx(max(cert.t0, cert.t1) + 1.0)
    assert cert.M == pytest.approx(c.c * math.exp(cert.lam * cert.T))
    assert cert.t0 > 0 and m(cert.t0 - m.dt) * c.gamma <= 1 + 1e-12
    with pytest.raises(NotGEAS):
        exp_certificate(derive_constants(1.0, 0.6), (1.0, 1.0), 0.0)
    with pytest.raises(MajorantTooShort):
        exp_certificate(derive_constants(1.0, 0.49), decay_majorant(ExponentialScaled(1.0, 1.0), 1.0), 0.0)


def test_bounds_examples():
    c = derive_constants(1.0, 1 / 3)
    b = bounds(c, 2.0, 1.0)
    assert b["uniform"] == pytest.approx(4.5) and b["ultimate"] == pytest.approx(1.5)
    # (c + 1)(y0 + 1) + mu rho = 2.5 * 3 + 1.5
    assert b["apriori"] == pytest.approx(9.0)
    z = bounds(c, 0.0, 0.0)
    assert (z["uniform"], z["ultimate"], z["apriori"]) == pytest.approx((0.0, 0.0, c.c + 1))
    h = halanay_map(2.0, 1.0)
    ch = derive_constants(1.0, float(kappa_sup(h.K1, h.K2)))
    assert bounds(ch, 1.0, 0.0)["uniform"] == pytest.approx(2.0, abs=1e-8)
    with pytest.raises(UncertifiedInput):
        bounds(derive_constants(1.0, 1.5), 1.0, 0.0)


def test_halanay_map_examples():
    for (a, b), k in [((2, 1), 0.5), ((1, 0), 0.0), ((3, 1), 1 / 3)]:
        d = halanay_map(a, b)
        assert d.K2 is None and d.rho == 0
        assert float(kappa_sup(d.K1, d.K2)) == pytest.approx(k, abs=1e-8)
    assert derive_constants(1.0, float(kappa_sup(halanay_map(3, 1).K1))).verdict == Verdict.GEAS


def test_chen_rate_examples():
    mu = chen_rate(2, 1, 1)
    assert mu == pytest.approx(0.4429, abs=1e-4)
    assert abs(math.exp(mu) - (2 - mu)) < 1e-10
    assert chen_rate(2, 1, 0) == 1.0
    assert chen_rate(1, 0.5, 0) == 0.5


@given(alpha=st.floats(0.1, 10), frac=st.floats(0.01, 0.99), r=st.floats(0, 5))
def test_chen_rate_properties(alpha, frac, r):
    beta = frac * alpha
    mu = chen_rate(alpha, beta, r)
    assert 0 < mu <= alpha - beta + 1e-12
    assert abs(beta * math.exp(mu * r) - (alpha - mu)) < 1e-12 * alpha + 1e-15
    if r == 0:
        assert mu == pytest.approx(alpha - beta)


def test_hale_envelope_examples():
    assert hale_envelope(1, 0, 0, 2, None, 1.0).bound == pytest.approx(math.exp(-2))
    e = hale_envelope(1, 1, 0, 4, None, np.array([0.0, 1.0]))
    assert e.beta == pytest.approx(0.25) and e.decay
    assert np.allclose(e.bound, 4 / 3 * np.exp(-8 / 3 * np.array([0.0, 1.0])))
    g = hale_envelope(1, 1, 0, 1.5, None, 1.0)
    assert g.beta == pytest.approx(2 / 3) and g.exponent == pytest.approx(-1.5) and not g.decay
    with pytest.raises(BetaNotLessThanOne):
        hale_envelope(1, 1, 1, 1.5, 1.0, 0.0)


def test_reports_and_formula_annotations():
    rep = derive_constants(1.0, 2.0).as_report()
    assert rep["mu"] is None and rep["verdict"] == "Uncertified"
    assert "Mfut" in FORMULAS["M"] and "M_sect" in FORMULAS["M"]


def test_inequality_data_validation():
    with pytest.raises(ValueError):
        InequalityData(ExponentialScaled(1, 1), rho=-1)
    with pytest.raises(ValueError):
        InequalityData(ExponentialScaled(1, 1), r=-1)


@given(theta=st.floats(0.1, 10), kappa=st.floats(0, 0.99), scale=st.floats(0.1, 10))
def test_constants_are_unit_free(theta, kappa, scale):
    # time rescaling changes lambda0 only; constants stay put
    assume(kappa < 1)
    a, b = derive_constants(theta, kappa), derive_constants(theta, kappa)
    assert a == b
