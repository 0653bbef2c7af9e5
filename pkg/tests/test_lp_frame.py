import numpy as np
import pytest

from qslab.lp_frame import CutoffProfile, eta0, eta_k, fourth_difference, partition_defect, psi


def test_plateau_and_support():
    assert eta0(0.0) == 1.0
    assert eta0(1.25) == 1.0
    assert eta0(-1.25) == 1.0
    assert eta0(1.6) == 0.0
    assert eta0(2.0) == 0.0
    assert eta0(-2.0) == 0.0
    mid = eta0(1.5)
    assert 0.0 < mid < 1.0


def test_even_and_range():
    x = np.linspace(-3, 3, 20001)
    vals = eta0(x)
    assert np.allclose(vals, eta0(-x))
    assert np.all(vals >= 0.0) and np.all(vals <= 1.0)


def test_ring_cutoff_values():
    assert eta_k(2.0, 1) == 1.0
    assert eta_k(0.0, 3) == 0.0
    assert eta_k(2.0**10, 10) == 1.0
    assert np.all(eta_k(np.linspace(-50, 50, 999), -1) == 0.0)
    assert np.all(eta_k(np.linspace(-50, 50, 999), -4) == 0.0)
    # k = 0 plays the role of the low cutoff
    assert np.allclose(eta_k(np.linspace(-2, 2, 101), 0), eta0(np.linspace(-2, 2, 101)))


def test_ring_support_window():
    for k in range(1, 12):
        inner = np.linspace(-(2.0 ** (k - 2)), 2.0 ** (k - 2), 101)
        assert np.all(eta_k(inner, k) == 0.0)
        outer = np.array([2.0 ** (k + 1), -(2.0 ** (k + 1)), 2.0 ** (k + 2)])
        assert np.all(eta_k(outer, k) == 0.0)
        peak = eta_k(np.array([2.0**k]), k)
        assert peak == 1.0


def test_partition_defect_examples():
    xs = np.linspace(-100, 100, 100001)
    assert partition_defect(xs, 10) <= 1e-12
    assert partition_defect(np.linspace(-1, 1, 5001), 1) <= 1e-12
    for k_max in (3, 7, 11):
        edge = np.array([2.0**k_max * 1.9, -(2.0**k_max) * 1.9])
        assert partition_defect(edge, k_max) <= 1e-12


def test_partition_of_unity_inside_cover():
    k_max = 9
    xs = np.linspace(-(2.0**k_max) * 1.25, 2.0**k_max * 1.25, 40001)
    acc = eta0(xs)
    for k in range(1, k_max + 1):
        acc = acc + eta_k(xs, k)
    assert np.max(np.abs(acc - 1.0)) <= 1e-12


def test_smoothness_fourth_difference_bounded():
    # a kink would blow the 4th difference up like h^-3
    xs = np.linspace(-2.0, 2.0, 4001)
    d4 = fourth_difference(eta0, xs, h=1e-3)
    assert np.max(np.abs(d4)) < 1.0e6
    step = np.abs(fourth_difference(np.abs, np.array([0.0]), h=1e-3))[0]
    assert step > 1e8  # the probe does detect corners


def test_time_window_is_same_profile():
    t = np.linspace(-2, 2, 501)
    assert np.allclose(psi(t), eta0(t))


def test_profile_validation():
    with pytest.raises(ValueError):
        CutoffProfile(inner_plateau=2.0, outer_support=1.0)
    with pytest.raises(ValueError):
        CutoffProfile(transition_sharpness=0.0)
    with pytest.raises(ValueError):
        partition_defect([0.0], 0)
