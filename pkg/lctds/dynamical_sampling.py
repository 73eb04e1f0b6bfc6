"""
序列空间中的动态采样
测量获取、Poisson 求和公式两侧、系统矩阵 A(xi)、稳定性扫描与完整重构
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import pandas as pd

from .convolution import conv_d, evolution_powers
from .errors import NumericalFailure, SupportTooLarge, UnstableSystem
from .lattice import DilationLattice, coset_decompose_many, subsample, torus_reduce_grid
from .lct_core import (SymplecticParams, chirp_eta, chirp_lambda, dt_nslct, dtft_grid,
                       inverse_dt_nslct_grid, phase_transport)
from .sequences import ComplexSequence2D, SpectrumGrid, SupportBox, torus_grid
from .worker_pool import get_worker_pool

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MeasurementSet:
    """
    动态采样测量

    y[0](k) = c(M^T k), y[j](k) = (a^j star_d c)(M^T k)
    """
    y: Tuple[ComplexSequence2D, ...]
    lattice_id: str
    params_id: str
    kernel_id: str

    @property
    def m(self) -> int:
        return len(self.y)


@dataclass(frozen=True, eq=False)
class SystemMatrixField:
    """
    N x N 环面网格上的系统矩阵 A(xi), xi = n / N
    """
    N: int
    entries: np.ndarray
    det_magnitudes: np.ndarray
    cond: np.ndarray = field(repr=False)

    @property
    def max_cond(self) -> float:
        return float(np.max(self.cond))

    def to_frame(self) -> pd.DataFrame:
        """导出为 omega1,omega2,absdet,cond 表，omega2 为外层"""
        omegas = torus_grid(self.N)
        return pd.DataFrame({
            "omega1": omegas[..., 0].T.ravel(),
            "omega2": omegas[..., 1].T.ravel(),
            "absdet": self.det_magnitudes.T.ravel(),
            "cond": self.cond.T.ravel(),
        })


def _coset_frequencies(xi: np.ndarray, lat: DilationLattice, params: SymplecticParams) -> np.ndarray:
    """xi_k = B M^{-1} (xi + gamma_k)，形状 (..., m, 2)"""
    shifted = xi[..., None, :] + lat.gamma_array
    return shifted @ (params.B @ lat.M_inv).T


def acquire(c: ComplexSequence2D, a: ComplexSequence2D, lat: DilationLattice,
            params: SymplecticParams) -> MeasurementSet:
    """
    获取 m 个时间层上的下采样测量

    Args:
        c: 初始状态
        a: 演化核
        lat: 伸缩格
        params: LCT 参数

    Returns:
        MeasurementSet, 长度为 m = |det M|
    """
    y = [subsample(c, lat)]
    for power in evolution_powers(a, lat.m - 1, params):
        y.append(subsample(conv_d(power, c, params), lat))
    logger.debug(f"获取测量 {len(y)} 层, 初始状态 {c.fingerprint()}")
    return MeasurementSet(tuple(y), lat.lattice_id, params.params_id, a.fingerprint())


def _subsampled_chirp(seq: ComplexSequence2D, lat: DilationLattice, params: SymplecticParams) -> np.ndarray:
    """seq(k) lambda(M^T k)"""
    k1, k2 = seq.indices()
    points = np.stack([k1, k2], axis=-1) @ lat.M
    return seq.values * chirp_lambda(params, points)


def measurement_spectrum(y: ComplexSequence2D, lat: DilationLattice, params: SymplecticParams, xi):
    """
    (m / sqrt(det(iB))) sum_k y(k) lambda(M^T k) exp(-2 i pi k.xi)，直接求和
    """
    xi = np.asarray(xi, dtype=float)
    weights = _subsampled_chirp(y, lat, params).ravel()
    phases = np.exp(-2j * np.pi * (xi @ y.points().T.astype(float)))
    total = phases @ weights * lat.m / params.sqrt_det_iB
    return complex(total) if np.ndim(total) == 0 else total


def measurement_spectrum_grid(y: ComplexSequence2D, lat: DilationLattice,
                              params: SymplecticParams, N: int) -> np.ndarray:
    """measurement_spectrum 在 xi = n / N 网格上的快速版本"""
    return dtft_grid(_subsampled_chirp(y, lat, params), y.box, N) * lat.m / params.sqrt_det_iB


def poisson_check(c: ComplexSequence2D, lat: DilationLattice, params: SymplecticParams,
                  xi) -> Tuple[complex, complex]:
    """
    Poisson 求和公式两侧

    Returns:
        (lhs, rhs)：lhs 为下采样后的 DTFT，rhs 为 m 个陪集频率上变换值之和；
        xi 为批量输入时返回两个数组
    """
    xi = np.asarray(xi, dtype=float)
    lhs = measurement_spectrum(subsample(c, lat), lat, params, xi)
    freqs = _coset_frequencies(xi, lat, params)
    rhs = np.sum(np.conj(chirp_eta(params, freqs)) * dt_nslct(params, c, freqs), axis=-1)
    if xi.ndim == 1:
        return complex(lhs), complex(rhs)
    return lhs, rhs


def build_system_matrix(a: ComplexSequence2D, lat: DilationLattice, params: SymplecticParams,
                        xi) -> np.ndarray:
    """
    系统矩阵 A(xi)

    元素 (j, k) = conj(eta(xi_k))^{j+1} (L a)(xi_k)^j, xi_k = B M^{-1}(xi + gamma_k)

    Args:
        xi: 形状 (2,) 或 (..., 2)

    Returns:
        形状 (m, m) 或 (..., m, m)
    """
    xi = np.asarray(xi, dtype=float)
    freqs = _coset_frequencies(xi, lat, params)
    eta_bar = np.conj(chirp_eta(params, freqs))
    spectrum = dt_nslct(params, a, freqs)
    rows = [eta_bar]
    for _ in range(1, lat.m):
        rows.append(rows[-1] * eta_bar * spectrum)
    return np.stack(rows, axis=-2)


def system_matrix_field(a: ComplexSequence2D, lat: DilationLattice, params: SymplecticParams,
                        N: int) -> SystemMatrixField:
    """
    在 N x N 环面网格上逐行构造 A(xi)，并计算 |det| 与条件数
    """
    if N < 1:
        raise ValueError(f"N 必须 >= 1: {N}")
    omegas = torus_grid(N)

    def row(n1: int) -> np.ndarray:
        return build_system_matrix(a, lat, params, omegas[n1])

    entries = np.stack(get_worker_pool().map_rows(row, N), axis=0)
    dets = np.abs(np.linalg.det(entries))
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.linalg.cond(entries)
    cond = np.where(np.isfinite(cond), cond, np.inf)
    if not np.all(np.isfinite(dets)):
        raise NumericalFailure("系统矩阵行列式出现 NaN/Inf")
    return SystemMatrixField(N, entries, dets, cond)


def _argmin(field_: SystemMatrixField) -> Tuple[float, Tuple[float, float]]:
    n1, n2 = np.unravel_index(np.argmin(field_.det_magnitudes), field_.det_magnitudes.shape)
    return float(field_.det_magnitudes[n1, n2]), (n1 / field_.N, n2 / field_.N)


def stability_scan(a: ComplexSequence2D, lat: DilationLattice, params: SymplecticParams,
                   N: int) -> Tuple[float, Tuple[float, float], SystemMatrixField]:
    """
    稳定性扫描：网格上的 min |det A(xi)|

    网格最小值代替本性下确界

    Returns:
        (min_det, argmin_xi, field)
    """
    if N < 4:
        raise ValueError(f"稳定性扫描要求 N >= 4: {N}")
    field_ = system_matrix_field(a, lat, params, N)
    min_det, argmin_xi = _argmin(field_)
    logger.info(f"稳定性扫描 N = {N}: min|det| = {min_det:.6g} @ xi = {argmin_xi}, "
                f"max cond = {field_.max_cond:.3g}")
    return min_det, argmin_xi, field_


def reconstruct(meas: MeasurementSet, a: ComplexSequence2D, lat: DilationLattice,
                params: SymplecticParams, N: int, support: SupportBox,
                threshold: float = 1e-8) -> ComplexSequence2D:
    """
    由动态采样测量重构初始状态

    1. 网格上求 Y(xi)
    2. 逐点解 A(xi) C(xi) = Y(xi)
    3. 由陪集分解与相位搬移拼出 B omega 网格上的 L c
    4. 逆变换

    Raises:
        SupportTooLarge: 支撑超过 N
        UnstableSystem: min |det A| <= threshold
    """
    if support.extent[0] > N or support.extent[1] > N:
        raise SupportTooLarge(f"支撑 {support.extent} 超过网格 N = {N}")
    if meas.m != lat.m:
        raise ValueError(f"测量层数 {meas.m} 与 m = {lat.m} 不符")

    field_ = system_matrix_field(a, lat, params, N)
    min_det, argmin_xi = _argmin(field_)
    if min_det <= threshold:
        logger.error(f"系统矩阵近奇异: min|det| = {min_det:.3e}")
        raise UnstableSystem(min_det, argmin_xi, threshold)

    Y = np.stack([measurement_spectrum_grid(y, lat, params, N) for y in meas.y], axis=-1)
    C = np.linalg.solve(field_.entries, Y[..., None])[..., 0]

    # omega = n/N:  M n = N p + r,  p = gamma_k + M nn
    n1, n2 = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    n = np.stack([n1, n2], axis=-1)
    r, p = torus_reduce_grid(n @ lat.M.T, N)
    k, nn = coset_decompose_many(p, lat)
    base = (n / N - nn) @ params.B.T
    values = C[r[..., 0], r[..., 1], k] * phase_transport(params, base, nn)

    spectrum = SpectrumGrid(N, values, params.params_id)
    recovered = inverse_dt_nslct_grid(params, spectrum, support)
    logger.info(f"重构完成: 支撑 {support.extent}, N = {N}, min|det| = {min_det:.6g}")
    return recovered


def recoverable(min_det: float, alpha: float) -> bool:
    """可恢复判据 min |det| > alpha"""
    return min_det > alpha


def predicted_measurement_spectrum(c: ComplexSequence2D, a: ComplexSequence2D, lat: DilationLattice,
                                   params: SymplecticParams, xi) -> np.ndarray:
    """
    A(xi) C(xi)，其中 C_k(xi) = (L c)(xi_k)

    与 measurement_spectrum 逐层比较可检验系统矩阵的推导
    """
    xi = np.asarray(xi, dtype=float)
    C = dt_nslct(params, c, _coset_frequencies(xi, lat, params))
    return np.einsum("...jk,...k->...j", build_system_matrix(a, lat, params, xi), C)


def example_kernel(c1: float, c2: float) -> ComplexSequence2D:
    """a(-1,-1) = c1, a(-1,-2) = c2"""
    return ComplexSequence2D.from_entries({(-1, -1): c1, (-1, -2): c2})


def example_kernel_spectrum(c1: float, c2: float, xi) -> np.ndarray:
    """
    示例参数下 example_kernel 的闭式谱

    (L a)(xi) = exp(i pi |xi|^2) / (i sqrt 2) * (-c1 exp(2 i pi xi1) - i c2 exp(i pi (xi1 + xi2)))
    """
    xi = np.asarray(xi, dtype=float)
    x1, x2 = xi[..., 0], xi[..., 1]
    inner = -c1 * np.exp(2j * np.pi * x1) - 1j * c2 * np.exp(1j * np.pi * (x1 + x2))
    return np.exp(1j * np.pi * (x1 ** 2 + x2 ** 2)) / (1j * np.sqrt(2.0)) * inner
