#!/usr/bin/env python3
"""
LCT 核心测试：参数校验、chirp、离散变换与网格快速算法、求积、相位搬移
"""

import sys
import os

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)) + '/../')
from lctds.errors import SingularB, SupportTooLarge, SymplecticViolation
from lctds.lct_core import (SymplecticParams, chirp_eta, chirp_lambda, dt_nslct, dt_nslct_grid,
                            energy_on_period, inverse_dt_nslct_grid, nslct_quadrature,
                            phase_transport, validate_symplectic)
from lctds.sequences import (ComplexSequence2D, GridFunction2D, SpectrumGrid, SupportBox,
                             relative_error)
from lctds.dynamical_sampling import example_kernel, example_kernel_spectrum

EXAMPLE_B = [[1.0, 1.0], [1.0, 3.0]]
EXAMPLE_C = [[-0.5, 0.5], [0.5, 0.5]]


@pytest.fixture
def params():
    return SymplecticParams.example()


def random_sequence(rng, origin=(0, 0), extent=(8, 8)):
    values = rng.standard_normal(extent) + 1j * rng.standard_normal(extent)
    return ComplexSequence2D(origin, values)


# ==================== 参数校验 ====================

def test_example_parameters_are_symplectic(params):
    assert params.det_B == pytest.approx(2.0)
    assert params.sqrt_det_iB == pytest.approx(1j * np.sqrt(2.0), abs=1e-15)
    assert params.sqrt_det_iB ** 2 == pytest.approx(-params.det_B, abs=1e-12)
    assert max(params.residuals().values()) <= 1e-12
    assert len(params.residuals()) == 6


def test_fourier_case_is_valid():
    params = SymplecticParams.fourier()
    assert params.det_B == pytest.approx(1.0)
    assert params.sqrt_det_iB == pytest.approx(1j)


def test_singular_b_rejected():
    with pytest.raises(SingularB):
        validate_symplectic(np.eye(2), [[1, 1], [2, 2]], EXAMPLE_C, EXAMPLE_B)


def test_perturbed_b_violates_symplectic_condition():
    with pytest.raises(SymplecticViolation) as info:
        validate_symplectic(np.eye(2), [[1.0, 1.0], [1.0, 3.001]], EXAMPLE_C, EXAMPLE_B)
    assert info.value.residual > 1e-12
    assert info.value.exit_code == 2


def test_tolerance_must_be_positive():
    with pytest.raises(ValueError):
        validate_symplectic(np.eye(2), EXAMPLE_B, EXAMPLE_C, EXAMPLE_B, tol=0.0)


# ==================== chirp ====================

def test_chirp_lambda_values(params):
    assert chirp_lambda(params, [0, 0]) == pytest.approx(1.0)
    assert chirp_lambda(params, [1, 0]) == pytest.approx(-1j, abs=1e-14)
    t = np.random.default_rng(0).uniform(-10, 10, size=(100, 2))
    np.testing.assert_allclose(np.abs(chirp_lambda(params, t)), 1.0, atol=1e-14)


def test_chirp_eta_reduces_to_unit_quadratic(params):
    xi = np.random.default_rng(1).uniform(-3, 3, size=(50, 2))
    expected = np.exp(1j * np.pi * np.sum(xi ** 2, axis=1))
    np.testing.assert_allclose(chirp_eta(params, xi), expected, atol=1e-12)
    assert chirp_eta(params, [0, 0]) == pytest.approx(1.0)
    value = chirp_eta(params, [0.3, -1.2])
    assert value * np.conj(value) == pytest.approx(1.0)


# ==================== 离散时间变换 ====================

def test_delta_transform_magnitude(params):
    delta = ComplexSequence2D.delta()
    xi = np.random.default_rng(2).uniform(-5, 5, size=(30, 2))
    np.testing.assert_allclose(np.abs(dt_nslct(params, delta, xi)), 1 / np.sqrt(2.0), atol=1e-14)


@pytest.mark.parametrize("c1,c2", [(1.0, 1.0), (0.0, 1.0), (2.0, -3.0)])
def test_example_kernel_matches_closed_form(params, c1, c2):
    xi = np.random.default_rng(3).uniform(-2, 2, size=(100, 2))
    computed = dt_nslct(params, example_kernel(c1, c2), xi)
    np.testing.assert_allclose(computed, example_kernel_spectrum(c1, c2, xi), atol=1e-10)


def test_transform_is_linear(params):
    rng = np.random.default_rng(4)
    s1 = random_sequence(rng, (0, 0), (4, 5))
    s2 = random_sequence(rng, (-2, 1), (3, 3))
    alpha, beta = 0.7 - 0.2j, -1.3 + 0.4j
    xi = rng.uniform(-2, 2, size=(20, 2))
    lhs = dt_nslct(params, alpha * s1 + beta * s2, xi)
    rhs = alpha * dt_nslct(params, s1, xi) + beta * dt_nslct(params, s2, xi)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_grid_transform_matches_direct_sum(params):
    rng = np.random.default_rng(5)
    s = random_sequence(rng, (-2, 1), (5, 6))
    spec = dt_nslct_grid(params, s, 8)
    direct = dt_nslct(params, s, spec.omegas() @ params.B.T)
    assert spec.values.shape == (8, 8)
    assert np.max(np.abs(spec.values - direct)) <= 1e-10 * np.max(np.abs(direct))


def test_grid_transform_folds_large_support(params):
    s = random_sequence(np.random.default_rng(6), (0, 0), (11, 3))
    spec = dt_nslct_grid(params, s, 4)
    direct = dt_nslct(params, s, spec.omegas() @ params.B.T)
    np.testing.assert_allclose(spec.values, direct, atol=1e-10)


def test_grid_transform_delta_and_zero(params):
    spec = dt_nslct_grid(params, ComplexSequence2D.delta(), 16)
    np.testing.assert_allclose(np.abs(spec.values), 1 / np.sqrt(2.0), atol=1e-14)
    zero = dt_nslct_grid(params, ComplexSequence2D.zeros(SupportBox((0, 0), (3, 3))), 8)
    assert not np.any(zero.values)


def test_inverse_round_trip(params):
    s = random_sequence(np.random.default_rng(7), (3, -4), (8, 8))
    recovered = inverse_dt_nslct_grid(params, dt_nslct_grid(params, s, 16), s.box)
    assert relative_error(recovered, s) <= 1e-10


def test_inverse_of_zero_spectrum(params):
    spec = SpectrumGrid(8, np.zeros((8, 8)))
    assert inverse_dt_nslct_grid(params, spec, SupportBox((0, 0), (4, 4))).is_zero()


def test_inverse_rejects_oversized_support(params):
    spec = SpectrumGrid(16, np.zeros((16, 16)))
    with pytest.raises(SupportTooLarge):
        inverse_dt_nslct_grid(params, spec, SupportBox((0, 0), (17, 3)))


# ==================== 周期性与相位搬移 ====================

def test_phase_transport_identity(params):
    assert phase_transport(params, [0.4, 0.1], [0, 0]) == pytest.approx(1.0)
    rng = np.random.default_rng(8)
    for _ in range(100):
        s = random_sequence(rng, tuple(rng.integers(-3, 3, size=2)), (3, 4))
        xi = rng.uniform(-2, 2, size=2)
        l = rng.integers(-3, 4, size=2)
        shifted = dt_nslct(params, s, xi + params.B @ l)
        base = dt_nslct(params, s, xi)
        factor = phase_transport(params, xi, l)
        assert abs(factor) == pytest.approx(1.0)
        assert abs(shifted - base * factor) <= 1e-10 * max(1.0, abs(base))
        assert abs(abs(shifted) - abs(base)) <= 1e-10 * max(1.0, abs(base))


def test_energy_on_period_equals_sequence_norm(params):
    s = random_sequence(np.random.default_rng(9), (0, 0), (8, 8))
    assert energy_on_period(params, s, 16) == pytest.approx(s.norm() ** 2, rel=1e-8)
    assert energy_on_period(params, s, 128) == pytest.approx(s.norm() ** 2, rel=1e-6)


# ==================== 求积 ====================

def tent(h):
    n = int(round(2 / h)) + 1
    return GridFunction2D.from_callable(lambda t1, t2: (1 - np.abs(t1)) * (1 - np.abs(t2)),
                                        (-1.0, -1.0), h, (n, n))


def test_quadrature_of_zero(params):
    f = GridFunction2D((0.0, 0.0), 0.1, np.zeros((5, 5)))
    assert nslct_quadrature(params, f, [0.2, 0.3]) == 0


def test_quadrature_converges_second_order(params):
    xi = [0.3, -0.2]
    values = [nslct_quadrature(params, tent(h), xi) for h in (0.1, 0.05, 0.025)]
    ratio = abs(values[0] - values[1]) / abs(values[1] - values[2])
    assert np.log2(ratio) >= 1.8


def test_gaussian_quadrature_richardson(params):
    def gaussian(h):
        n = int(round(12 / h)) + 1
        return GridFunction2D.from_callable(lambda t1, t2: np.exp(-np.pi * (t1 ** 2 + t2 ** 2)),
                                            (-6.0, -6.0), h, (n, n))

    coarse = nslct_quadrature(params, gaussian(0.1), [0.0, 0.0])
    fine = nslct_quadrature(params, gaussian(0.05), [0.0, 0.0])
    extrapolated = (4 * fine - coarse) / 3
    assert abs(extrapolated - fine) <= 1e-10
    # |det(I - i B^{-1} A)| = sqrt(4.25)
    assert abs(fine) == pytest.approx(1 / (np.sqrt(2.0) * 4.25 ** 0.25), rel=1e-10)


def test_quadrature_of_narrow_bump_approaches_point_mass(params):
    h = 0.01
    f = GridFunction2D.from_callable(
        lambda t1, t2: np.maximum(0.0, 1 - np.hypot(t1, t2) / 0.05), (-0.05, -0.05), h, (11, 11))
    xi = [0.3, -0.2]
    mass = f.mass()
    expected = abs(dt_nslct(params, ComplexSequence2D.delta((0, 0), mass), xi))
    assert expected == pytest.approx(abs(mass) / np.sqrt(2.0))
    assert abs(nslct_quadrature(params, f, xi)) == pytest.approx(expected, rel=0.05)
