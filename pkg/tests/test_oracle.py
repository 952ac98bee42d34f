import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaycert.certificate import InequalityData, chen_rate, derive_constants, exp_certificate, halanay_map
from delaycert.dde import History, integrate
from delaycert.errors import NoConvergence, NotContractive
from delaycert.kernels import ExponentialScaled, kappa_sup
from delaycert.oracle import (_window_max, characteristic_root, decay_rate_fit, majorant_fixed_point,
                              random_members, sharpness_probe)
from delaycert.report import load_csv


def forced(alpha, beta, r, rho):
    return replace(halanay_map(alpha, beta, r), rho=rho)


def test_pure_decay_table():
    tab = majorant_fixed_point(InequalityData(ExponentialScaled(1.0, 1.0)), 1.0, 5.0, 500)
    m = tab.grid >= 0
    assert np.allclose(tab.values[m], np.exp(-tab.grid[m]), atol=1e-14)
    assert tab.iterations <= 2


def test_halanay_ultimate_bound():
    tab = majorant_fixed_point(forced(2.0, 1.0, 1.0, 1.0), 0.0, 20.0, 2000)
    assert np.all(tab.values >= 0)
    assert tab.values.max() <= 2.0 + 1e-3
    assert tab.values[-1] > 1.9
    assert tab.residual < 1e-9


def test_table_below_certificate_envelope():
    data = halanay_map(3.0, 1.0, 1.0)
    c = derive_constants(1.0, float(kappa_sup(data.K1)))
    cert = exp_certificate(c, (1.0, 3.0), 1.0)
    tab = majorant_fixed_point(data, 1.0, 30.0, 1500)
    m = tab.grid >= 0
    assert np.all(tab.values[m] <= cert.M * np.exp(-cert.lam * tab.grid[m]) + 1e-3)


def test_iteration_is_monotone_from_below():
    # Jacobi iterates from y = y0 stay ordered, so fewer iterations give a smaller table
    data = forced(2.0, 1.0, 1.0, 1.0)
    coarse = majorant_fixed_point(data, 0.0, 10.0, 400, tol=1e-3)
    fine = majorant_fixed_point(data, 0.0, 10.0, 400, tol=1e-12)
    assert np.all(coarse.values <= fine.values + 1e-15)


def test_errors():
    with pytest.raises(NotContractive):
        majorant_fixed_point(halanay_map(1.0, 1.0, 1.0), 1.0, 5.0, 100)
    with pytest.raises(NoConvergence):
        majorant_fixed_point(forced(2.0, 1.9, 1.0, 1.0), 0.0, 20.0, 400, max_iter=3)


def test_characteristic_root_examples():
    assert characteristic_root(1.0, 1.0, 1.0) == pytest.approx(0.0, abs=1e-14)
    lam = characteristic_root(2.0, 1.0, 1.0)
    assert lam == pytest.approx(-0.4429, abs=1e-4)
    assert abs(lam + chen_rate(2.0, 1.0, 1.0)) < 1e-10
    assert characteristic_root(1.0, 2.0, 1.0) > 0
    assert characteristic_root(3.0, 1.0, 1.0) == pytest.approx(-0.7921, abs=1e-4)


@given(alpha=st.floats(0.1, 10), frac=st.floats(0.01, 0.99), r=st.floats(0.05, 5))
def test_chen_characteristic_duality(alpha, frac, r):
    beta = frac * alpha
    assert abs(chen_rate(alpha, beta, r) + characteristic_root(alpha, beta, r)) < 1e-10


def test_window_max_matches_naive():
    rng = np.random.default_rng(0)
    y = rng.normal(size=97)
    for w in (1, 2, 5, 10, 50):
        naive = np.array([y[max(0, i - w + 1): i + 1].max() for i in range(y.size)])
        assert np.array_equal(_window_max(y, w), naive)


@settings(max_examples=5)
@given(seed=st.integers(0, 10_000))
def test_oracle_dominance_property(seed):
    alpha, beta, rho, r = 2.0, 1.0, 1.0, 1.0
    tab = majorant_fixed_point(forced(alpha, beta, r, rho), 0.0, 10.0, 1000)
    spec = random_members(alpha, beta, rho, r, 50, seed=seed)
    tr = integrate(spec, History.constant(np.zeros((50, 1)), r), 0.0, 10.0, 0.01)
    m = tab.grid >= 0
    x = np.abs(tr(tab.grid[m])[..., 0])
    assert np.all(x <= tab.values[m][:, None] + 1e-3)


def test_decay_rate_fit_recovers_slope():
    t = np.linspace(0, 10, 200)
    assert decay_rate_fit(t, 3 * np.exp(-0.7 * t), 2, 8) == pytest.approx(0.7)
    with pytest.raises(ValueError):
        decay_rate_fit(t, -np.ones_like(t), 0, 1)


def test_sharpness_probe_rows():
    rows = sharpness_probe([0.3, 0.7], t_max=30.0, n_grid=600)
    assert [r["kappa"] for r in rows] == [0.3, 0.7]
    assert rows[0]["rate"] > rows[1]["rate"] > 0
    for row in rows:
        # the majorant of the Halanay inequality decays at the Halanay rate
        assert row["rate"] == pytest.approx(row["chen_rate"], rel=1e-2)


def test_table_csv(tmp_path):
    tab = majorant_fixed_point(forced(2.0, 1.0, 1.0, 1.0), 0.0, 5.0, 100)
    tab.to_csv(tmp_path / "m.csv")
    header, data = load_csv(tmp_path / "m.csv")
    assert header == ["t", "y_star"] and np.array_equal(data[:, 1], tab.values)
    assert math.isclose(data[-1, 0], 5.0)
