"""
chirp 调制的正则卷积
序列-序列 (star_d)、序列-函数 (star_sd)、函数-函数 (star_c) 以及演化核的幂
"""

import logging
from typing import List

import numpy as np
from scipy import signal

from .errors import InvalidPower, StepMismatch
from .lct_core import SymplecticParams, chirp_lambda, chirped_values
from .sequences import ComplexSequence2D, GridFunction2D

logger = logging.getLogger(__name__)


def _chirped_grid(params: SymplecticParams, f: GridFunction2D) -> np.ndarray:
    return f.values * chirp_lambda(params, f.node_points())


def conv_d(s: ComplexSequence2D, c: ComplexSequence2D, params: SymplecticParams) -> ComplexSequence2D:
    """
    (s star_d c)(l) = conj(lambda(l))/sqrt(det(iB)) sum_k lambda(k)s(k) lambda(l-k)c(l-k)

    输出支撑为两个输入区域的 Minkowski 和
    """
    full = signal.convolve2d(chirped_values(params, s), chirped_values(params, c), mode="full")
    origin = (s.origin[0] + c.origin[0], s.origin[1] + c.origin[1])
    out = ComplexSequence2D(origin, full)
    k1, k2 = out.indices()
    return out.map_values(np.conj(chirp_lambda(params, np.stack([k1, k2], axis=-1))) / params.sqrt_det_iB)


def conv_sd(s: ComplexSequence2D, phi: GridFunction2D, params: SymplecticParams) -> GridFunction2D:
    """
    (s star_sd phi)(t) = conj(lambda(t))/sqrt(det(iB)) sum_k lambda(k)s(k) lambda(t-k)phi(t-k)

    要求 1/h 为整数，整数平移恰为网格平移

    Raises:
        IncommensurateGrid: 1/h 不是整数
    """
    q = phi.steps_per_unit()
    weights = chirped_values(params, s)
    shifted = _chirped_grid(params, phi)
    E1, E2 = phi.extent
    K1, K2 = s.extent
    acc = np.zeros((E1 + q * (K1 - 1), E2 + q * (K2 - 1)), dtype=np.complex128)
    for j1, j2 in zip(*np.nonzero(weights)):
        acc[q * j1:q * j1 + E1, q * j2:q * j2 + E2] += weights[j1, j2] * shifted
    origin = (phi.origin[0] + s.origin[0], phi.origin[1] + s.origin[1])
    out = GridFunction2D(origin, phi.h, acc)
    return GridFunction2D(origin, phi.h, acc * np.conj(chirp_lambda(params, out.node_points()))
                          / params.sqrt_det_iB)


def conv_c(f: GridFunction2D, g: GridFunction2D, params: SymplecticParams) -> GridFunction2D:
    """
    (f star_c g)(t) = conj(lambda(t))/sqrt(det(iB)) (f_chirp * g_chirp)(t)

    普通卷积用步长为 h 的黎曼和近似（乘 h^2）

    Raises:
        StepMismatch: 两个网格步长不同
    """
    if abs(f.h - g.h) > 1e-12 * max(f.h, g.h):
        raise StepMismatch(f"步长不一致: {f.h} vs {g.h}")
    full = signal.convolve2d(_chirped_grid(params, f), _chirped_grid(params, g), mode="full")
    origin = (f.origin[0] + g.origin[0], f.origin[1] + g.origin[1])
    out = GridFunction2D(origin, f.h, full)
    return GridFunction2D(origin, f.h, full * f.h ** 2 * np.conj(chirp_lambda(params, out.node_points()))
                          / params.sqrt_det_iB)


def evolution_power(a: ComplexSequence2D, j: int, params: SymplecticParams) -> ComplexSequence2D:
    """
    a^j = a star_d ... star_d a (j 次)

    Raises:
        InvalidPower: j < 1
    """
    if j < 1:
        raise InvalidPower(f"演化核幂次必须 >= 1, 实际 {j}")
    power = a
    for _ in range(j - 1):
        power = conv_d(power, a, params)
    return power


def evolution_powers(a: ComplexSequence2D, count: int, params: SymplecticParams) -> List[ComplexSequence2D]:
    """依次返回 a^1, ..., a^count"""
    powers: List[ComplexSequence2D] = []
    for j in range(1, count + 1):
        powers.append(a if j == 1 else conv_d(powers[-1], a, params))
    return powers


def evolution_powers_c(a: GridFunction2D, count: int, params: SymplecticParams) -> List[GridFunction2D]:
    """连续核的 star_c 幂 a^1, ..., a^count"""
    powers: List[GridFunction2D] = []
    for j in range(1, count + 1):
        powers.append(a if j == 1 else conv_c(powers[-1], a, params))
    return powers
