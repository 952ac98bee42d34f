import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaycert.attractor import (SetCloud, absorbing_ball, default_schedule, hausdorff_semidist, invariance_check,
                                 mutual_distance, process_evolve, pullback_attractor, sample_cloud)
from delaycert.dde import DelaySystemSpec
from delaycert.errors import AttractorError, NotConvergedWarning
from delaycert.report import load_csv

S = np.linspace(-1.0, 0.0, 11)
CUBIC = DelaySystemSpec(1, lambda t, x, xd: -x**3 + 0.1 * xd[0], [1.0])
FORCED = DelaySystemSpec(1, lambda t, x, xd: -x**3 + 0.1 * xd[0] + np.sin(t), [1.0])
LINEAR = DelaySystemSpec(1, lambda t, x, xd: -3 * x + xd[0], [1.0])


def const_cloud(*levels):
    return SetCloud(np.array([np.full((S.size, 1), v) for v in levels], float), S)


def test_semidistance_examples():
    A = sample_cloud(1.0, 1, 2.0, 11, 4, seed=1)
    assert hausdorff_semidist(A, A) == 0.0
    assert hausdorff_semidist(const_cloud(2.0), const_cloud(0.0)) == 2.0
    a, b = const_cloud(0.0), const_cloud(0.0, 5.0)
    assert hausdorff_semidist(a, b) == 0.0 and hausdorff_semidist(b, a) == 5.0
    assert mutual_distance(a, b) == 5.0
    with pytest.raises(AttractorError):
        hausdorff_semidist(a, SetCloud(np.zeros((1, 5, 1)), np.linspace(-1, 0, 5)))


@settings(max_examples=25)
@given(seeds=st.tuples(st.integers(0, 999), st.integers(0, 999), st.integers(0, 999)))
def test_semidistance_triangle(seeds):
    A, B, C = (SetCloud(np.random.default_rng(s).normal(size=(5, S.size, 2)), S) for s in seeds)
    assert hausdorff_semidist(A, C) <= hausdorff_semidist(A, B) + hausdorff_semidist(B, C) + 1e-12


def test_identity_and_composition():
    cloud = sample_cloud(1.0, 1, 5.0, n_nodes=201, n_random=6, seed=3)
    same = process_evolve(CUBIC, cloud, 0.0, 0.0, 0.005)
    assert np.array_equal(same.values, cloud.values)
    one = process_evolve(CUBIC, cloud, 0.0, 4.0, 0.005)
    two = process_evolve(CUBIC, process_evolve(CUBIC, cloud, 0.0, 1.7, 0.005), 1.7, 4.0, 0.005)
    assert np.max(np.abs(one.values - two.values)) < 1e-8


def test_linear_contraction_shrinks_diameter():
    cloud = sample_cloud(1.0, 1, 3.0, n_nodes=101, n_random=6, seed=0)
    diam = []
    for t in (0.0, 2.0, 4.0, 6.0, 8.0):
        img = process_evolve(LINEAR, cloud, 0.0, t, 0.01)
        diam.append(mutual_distance(img, SetCloud(img.values[:1], img.s_grid)))
    assert all(b < a for a, b in zip(diam, diam[1:]))


def test_pullback_autonomous_collapse():
    spec = DelaySystemSpec(1, lambda t, x, xd: -x, [], max_lag=1.0)
    cloud = sample_cloud(1.0, 1, 2.0, n_nodes=51, n_random=4)
    rep = pullback_attractor(spec, 0.0, cloud, [-10.0, -20.0, -40.0], h=0.02)
    assert rep.converged
    assert np.max(np.abs(rep.attractor_sample.values)) < 1e-10
    assert all(d >= 0 for d in rep.dH_history)


def test_pullback_fixed_point_converges_at_once():
    rep = pullback_attractor(CUBIC, 0.0, const_cloud(0.0, 0.0), [-1.0, -2.0], h=0.1)
    assert rep.converged and rep.dH_history == [0.0]


def test_pullback_forced_system():
    cloud = sample_cloud(1.0, 1, 10.0, n_nodes=201, n_random=6, seed=5)
    rep = pullback_attractor(FORCED, 0.0, cloud, default_schedule(0.0, 1.0, (10, 20, 40)), h=0.005,
                             radius=5.0)
    assert rep.converged and rep.contained_in_ball
    assert rep.dH_history[-1] <= rep.dH_history[0]
    norms = rep.attractor_sample.segment_norms()
    assert norms.max() > 0.1  # nontrivial section
    assert invariance_check(FORCED, rep, cloud, 1.5, 0.005) < 1e-2


def test_pullback_not_converged_warning():
    with pytest.warns(NotConvergedWarning):
        rep = pullback_attractor(FORCED, 0.0, sample_cloud(1.0, 1, 10.0, 101, 2), [-0.5, -1.0], h=0.01)
    assert not rep.converged
    with pytest.raises(AttractorError):
        pullback_attractor(FORCED, 0.0, const_cloud(0.0), [-2.0, -1.0])


def test_blowup_is_flagged_and_dropped():
    spec = DelaySystemSpec(1, lambda t, x, xd: x**2, [1.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        img = process_evolve(spec, const_cloud(-0.5, 3.0), 0.0, 2.0, 0.01)
    assert img.dropped.tolist() == [False, True]
    assert img.live().n_segments == 1


def test_absorbing_ball():
    calib = sample_cloud(1.0, 1, 10.0, n_nodes=201, n_random=10, seed=1)
    test = sample_cloud(1.0, 1, 10.0, n_nodes=201, n_random=10, seed=2)
    rep = absorbing_ball(FORCED, test, calib, 0.0, 40.0, 0.005, burn_in=15.0)
    assert rep.all_absorbed
    assert rep.radius == pytest.approx(1.05 * rep.calibration_max)
    assert np.all(rep.entry_times <= 15.0 + 1e-12)


def test_cloud_csv(tmp_path):
    cloud = sample_cloud(1.0, 2, 1.0, n_nodes=5, n_random=1)
    cloud.to_csv(tmp_path / "c.csv")
    header, data = load_csv(tmp_path / "c.csv")
    assert header == ["segment", "s", "x1", "x2"]
    assert data.shape == (cloud.n_segments * 5, 4)
    assert np.array_equal(data[:, 2:].reshape(cloud.values.shape), cloud.values)


def test_sample_cloud_in_ball():
    c = sample_cloud(2.0, 3, 4.0, n_nodes=21, n_random=30, seed=9)
    assert c.n_segments == 12 + 30 and c.r == 2.0
    assert np.all(c.segment_norms() <= 4.0 + 1e-12)
