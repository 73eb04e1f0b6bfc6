#!/usr/bin/env python3
"""
序列空间动态采样测试：测量获取、Poisson 公式、系统矩阵、稳定性扫描与重构
"""

import sys
import os

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)) + '/../')
from lctds.dynamical_sampling import (acquire, build_system_matrix, measurement_spectrum, example_kernel,
                                      poisson_check, predicted_measurement_spectrum, reconstruct,
                                      recoverable, stability_scan, system_matrix_field)
from lctds.errors import SupportTooLarge, UnstableSystem
from lctds.lattice import build_lattice
from lctds.lct_config import random_signal
from lctds.lct_core import SymplecticParams
from lctds.sequences import ComplexSequence2D, SupportBox, relative_error

EXAMPLE_M = [[1, 1], [1, 3]]
DYADIC_M = [[2, 0], [0, 2]]
SHEAR_M = [[2, 1], [0, 2]]

# M = 2I 时四个陪集上的 (L a) 互不相同
THREE_TAP = {(0, 0): 1.0, (1, 0): 0.5, (0, 1): 0.25}


@pytest.fixture
def params():
    return SymplecticParams.example()


def random_sequence(rng, origin=(0, 0), extent=(8, 8)):
    values = rng.standard_normal(extent) + 1j * rng.standard_normal(extent)
    return ComplexSequence2D(origin, values)


# ==================== 测量获取 ====================

def test_acquire_delta(params):
    lat = build_lattice(EXAMPLE_M)
    meas = acquire(ComplexSequence2D.delta(), example_kernel(1.0, 1.0), lat, params)
    assert meas.m == 2
    assert meas.y[0].at((0, 0)) == 1
    assert meas.y[0].norm() == pytest.approx(1.0)
    assert meas.lattice_id == lat.lattice_id
    assert meas.params_id == params.params_id


def test_acquire_zero_signal(params):
    lat = build_lattice(DYADIC_M)
    zero = ComplexSequence2D.zeros(SupportBox((0, 0), (4, 4)))
    meas = acquire(zero, ComplexSequence2D.from_entries(THREE_TAP), lat, params)
    assert meas.m == 4
    assert all(y.is_zero() for y in meas.y)


# ==================== Poisson 求和公式 ====================

@pytest.mark.parametrize("M", [EXAMPLE_M, DYADIC_M, SHEAR_M])
def test_poisson_formula(params, M):
    lat = build_lattice(M)
    rng = np.random.default_rng(10)
    for _ in range(20):
        c = random_sequence(rng, tuple(rng.integers(-4, 4, size=2)), (8, 8))
        xi = rng.uniform(-2, 2, size=(50, 2))
        lhs, rhs = poisson_check(c, lat, params, xi)
        assert np.all(np.abs(lhs - rhs) <= 1e-9 * (1 + np.abs(lhs)))


def test_poisson_single_point(params):
    lat = build_lattice(EXAMPLE_M)
    lhs, rhs = poisson_check(ComplexSequence2D.delta(), lat, params, [0.3, 0.7])
    assert isinstance(lhs, complex)
    assert lhs == pytest.approx(2 / params.sqrt_det_iB)
    assert rhs == pytest.approx(lhs)
    zero = ComplexSequence2D.zeros(SupportBox((0, 0), (2, 2)))
    assert poisson_check(zero, lat, params, [0.1, 0.2]) == (0, 0)


# ==================== 系统矩阵 ====================

@pytest.mark.parametrize("c1,c2", [(1.0, 1.0), (0.0, 1.0), (2.0, -3.0), (1.0, 0.0)])
def test_example_determinant(params, c1, c2):
    lat = build_lattice(EXAMPLE_M)
    xi = np.random.default_rng(11).uniform(0, 1, size=(100, 2))
    A = build_system_matrix(example_kernel(c1, c2), lat, params, xi)
    assert A.shape == (100, 2, 2)
    np.testing.assert_allclose(np.abs(np.linalg.det(A)), np.sqrt(2.0) * abs(c2), atol=1e-10)


def test_example_determinant_on_grid(params):
    field_ = system_matrix_field(example_kernel(1.0, 1.0), build_lattice(EXAMPLE_M), params, 100)
    assert field_.det_magnitudes.shape == (100, 100)
    assert np.max(np.abs(field_.det_magnitudes - np.sqrt(2.0))) <= 1e-9
    assert np.all(np.isfinite(field_.cond))


def test_system_matrix_of_zero_kernel(params):
    zero = ComplexSequence2D.zeros(SupportBox((0, 0), (1, 1)))
    A = build_system_matrix(zero, build_lattice(EXAMPLE_M), params, [0.2, 0.6])
    assert abs(np.linalg.det(A)) == 0
    assert not np.any(A[1])


def test_identity_lattice_has_unit_determinant(params):
    lat = build_lattice(np.eye(2, dtype=int))
    A = build_system_matrix(example_kernel(1.0, 1.0), lat, params, [0.4, 0.9])
    assert A.shape == (1, 1)
    assert abs(A[0, 0]) == pytest.approx(1.0)


@pytest.mark.parametrize("M", [EXAMPLE_M, SHEAR_M])
def test_determinant_invariant_under_integer_shift(params, M):
    lat = build_lattice(M)
    rng = np.random.default_rng(12)
    a = random_sequence(rng, (-1, -1), (3, 3))
    xi = rng.uniform(0, 1, size=(20, 2))
    shift = rng.integers(-3, 4, size=(20, 2))
    base = np.abs(np.linalg.det(build_system_matrix(a, lat, params, xi)))
    moved = np.abs(np.linalg.det(build_system_matrix(a, lat, params, xi + shift)))
    np.testing.assert_allclose(moved, base, rtol=1e-9, atol=1e-12)


def test_measurements_match_system_matrix(params):
    rng = np.random.default_rng(13)
    lat = build_lattice(EXAMPLE_M)
    a = example_kernel(1.0, 1.0)
    c = random_sequence(rng, (0, 0), (6, 6))
    meas = acquire(c, a, lat, params)
    xi = rng.uniform(0, 1, size=(30, 2))
    predicted = predicted_measurement_spectrum(c, a, lat, params, xi)
    for j, y in enumerate(meas.y):
        np.testing.assert_allclose(measurement_spectrum(y, lat, params, xi), predicted[:, j], atol=1e-9)


@pytest.mark.parametrize("M", [DYADIC_M, SHEAR_M])
def test_predicted_spectrum_shapes(params, M):
    rng = np.random.default_rng(14)
    lat = build_lattice(M)
    a = example_kernel(1.0, 1.0)
    c = random_sequence(rng, (-1, 0), (4, 5))
    meas = acquire(c, a, lat, params)
    single = predicted_measurement_spectrum(c, a, lat, params, [0.3, 0.45])
    assert single.shape == (lat.m,)
    grid = rng.uniform(-1, 1, size=(3, 5, 2))
    batched = predicted_measurement_spectrum(c, a, lat, params, grid)
    assert batched.shape == (3, 5, lat.m)
    for j, y in enumerate(meas.y):
        assert measurement_spectrum(y, lat, params, [0.3, 0.45]) == pytest.approx(single[j], abs=1e-9)
        np.testing.assert_allclose(measurement_spectrum(y, lat, params, grid.reshape(-1, 2)),
                                   batched[..., j].ravel(), atol=1e-9)


def test_field_frame_is_omega2_major(params):
    field_ = system_matrix_field(example_kernel(1.0, 1.0), build_lattice(EXAMPLE_M), params, 3)
    frame = field_.to_frame()
    assert list(frame.columns) == ["omega1", "omega2", "absdet", "cond"]
    assert len(frame) == 9
    np.testing.assert_allclose(frame["omega2"].iloc[:3], 0.0)
    np.testing.assert_allclose(frame["omega1"].iloc[:3], [0.0, 1 / 3, 2 / 3])


# ==================== 稳定性 ====================

def test_stability_scan_example(params):
    min_det, argmin_xi, field_ = stability_scan(example_kernel(1.0, 1.0), build_lattice(EXAMPLE_M), params, 64)
    assert min_det == pytest.approx(np.sqrt(2.0), abs=1e-9)
    assert 0 <= argmin_xi[0] < 1 and 0 <= argmin_xi[1] < 1
    assert recoverable(min_det, 1e-8)


def test_stability_scan_detects_singular_kernel(params):
    min_det, _, _ = stability_scan(example_kernel(1.0, 0.0), build_lattice(EXAMPLE_M), params, 16)
    assert min_det <= 1e-12
    assert not recoverable(min_det, 1e-8)


def test_stability_scan_requires_grid(params):
    with pytest.raises(ValueError):
        stability_scan(example_kernel(1.0, 1.0), build_lattice(EXAMPLE_M), params, 3)


# ==================== 重构 ====================

@pytest.mark.parametrize("seed", range(10))
def test_round_trip_example_setup(params, seed):
    lat = build_lattice(EXAMPLE_M)
    a = example_kernel(1.0, 1.0)
    c = random_signal(seed, SupportBox((0, 0), (8, 8)))
    recovered = reconstruct(acquire(c, a, lat, params), a, lat, params, 32, c.box)
    assert relative_error(recovered, c) <= 1e-8


@pytest.mark.parametrize("seed", range(10))
def test_round_trip_dyadic_lattice(params, seed):
    lat = build_lattice(DYADIC_M)
    a = ComplexSequence2D.from_entries(THREE_TAP)
    c = random_signal(100 + seed, SupportBox((0, 0), (8, 8)))
    recovered = reconstruct(acquire(c, a, lat, params), a, lat, params, 32, c.box)
    assert relative_error(recovered, c) <= 1e-8


def test_round_trip_delta(params):
    lat = build_lattice(EXAMPLE_M)
    a = example_kernel(1.0, 1.0)
    c = ComplexSequence2D.delta((2, -1), 3 - 1j)
    recovered = reconstruct(acquire(c, a, lat, params), a, lat, params, 8, c.box)
    assert recovered.at((2, -1)) == pytest.approx(3 - 1j, abs=1e-12)


def test_reconstruct_rejects_singular_kernel(params):
    lat = build_lattice(EXAMPLE_M)
    a = example_kernel(1.0, 0.0)
    c = random_signal(7, SupportBox((0, 0), (4, 4)))
    with pytest.raises(UnstableSystem) as info:
        reconstruct(acquire(c, a, lat, params), a, lat, params, 16, c.box)
    assert info.value.min_det <= 1e-12
    assert info.value.exit_code == 3


def test_reconstruct_rejects_oversized_support(params):
    lat = build_lattice(EXAMPLE_M)
    a = example_kernel(1.0, 1.0)
    c = random_signal(7, SupportBox((0, 0), (4, 4)))
    with pytest.raises(SupportTooLarge):
        reconstruct(acquire(c, a, lat, params), a, lat, params, 32, SupportBox((0, 0), (40, 4)))
