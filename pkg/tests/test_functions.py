import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from delaycert.functions import AbsSine, Constant, FromCallable, Piecewise, SinePlusOffset, as_function, make_function

finite = st.floats(-5, 5, allow_nan=False)


def quad(f, a, b, kinks=()):
    """Adaptive quadrature split at the given kinks."""
    cuts = [a] + sorted(k for k in kinks if a < k < b) + [b]
    with warnings.catch_warnings():
        # the round-off detector fires on smooth pieces at this tolerance
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return sum(integrate.quad(lambda x: float(f(x)), lo, hi, limit=200, epsabs=1e-13, epsrel=1e-13)[0]
                   for lo, hi in zip(cuts, cuts[1:]))


@pytest.mark.parametrize("f", [
    Constant(2.5),
    SinePlusOffset(1.0, 1.0, 0.3, 0.5),
    AbsSine(1.5, 2.0, 0.1),
    Piecewise((0.0, 1.0, 2.5), (1.0, -1.0, 2.0)),
    Piecewise((0.0, 1.0, 2.0), (1.0, 3.0, 1.0), periodic=True),
])
def test_integral_matches_adaptive_quadrature(f):
    for a, b in [(0.0, 1.0), (0.3, 7.9), (-2.0, 4.0)]:
        assert f.integral(a, b) == pytest.approx(quad(f, a, b), abs=1e-10)


@given(a=finite, b=finite, amp=st.floats(0.1, 3), w=st.floats(0.2, 4), ph=finite)
def test_abs_sine_antiderivative_is_monotone_and_exact(a, b, amp, w, ph):
    f = AbsSine(amp, w, ph)
    lo, hi = min(a, b), max(a, b)
    assert f.integral(lo, hi) >= -1e-12
    ks = np.arange(math.floor((w * lo + ph) / math.pi), math.ceil((w * hi + ph) / math.pi) + 1)
    kinks = (ks * math.pi - ph) / w
    assert f.integral(lo, hi) == pytest.approx(quad(f, lo, hi, kinks), abs=1e-8)


@given(tau=finite, t=finite)
def test_shift_is_translation(tau, t):
    f = SinePlusOffset(1.0, 1.3, 0.2, 0.5)
    assert f.shift(tau)(t) == pytest.approx(f(t + tau), abs=1e-12)
    assert f.shift(tau).integral(0.0, t) == pytest.approx(f.integral(tau, t + tau), abs=1e-10)


def test_periods_and_constant_flag():
    assert SinePlusOffset(1, 1, 0, 0.5).period == pytest.approx(2 * math.pi)
    assert AbsSine(1, 1, 0).period == pytest.approx(math.pi)
    assert Constant(1.0).is_constant
    assert not SinePlusOffset(1, 1, 0, 0).is_constant


def test_registry_and_coercion():
    f = make_function("sine_plus_offset", amplitude=1, frequency=1, phase=0, offset=0.5)
    assert f(0.0) == pytest.approx(0.5)
    assert isinstance(as_function(3), Constant)
    assert isinstance(as_function(np.sin), FromCallable)
    with pytest.raises(KeyError):
        make_function("nope")


def test_from_callable_integral():
    f = FromCallable(np.cos)
    assert f.integral(0.0, 1.0) == pytest.approx(math.sin(1.0), abs=1e-10)
