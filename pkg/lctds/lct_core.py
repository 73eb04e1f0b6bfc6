"""
二维非可分线性正则变换 (2D-NS-LCT) 核心
参数校验、chirp 因子、离散时间变换及其网格快速算法、连续变换求积、B 周期相位搬移
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Union

import numpy as np

from .errors import SingularB, SupportTooLarge, SymplecticViolation
from .sequences import (ComplexSequence2D, GridFunction2D, SpectrumGrid, SupportBox,
                        fingerprint, torus_grid)

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Iterable[float]]

# 批量求积时每块的频率点数
_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class SymplecticParams:
    """
    LCT 参数矩阵 [A, B; C, D] 及其派生量

    通过 validate_symplectic 构造；构造后不可变，可在线程间共享
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    tol: float = 1e-12
    B_inv: np.ndarray = field(init=False)
    B_inv_A: np.ndarray = field(init=False)
    D_B_inv: np.ndarray = field(init=False)
    det_B: float = field(init=False)
    sqrt_det_iB: complex = field(init=False)
    params_id: str = field(init=False)

    def __post_init__(self):
        for name in ("A", "B", "C", "D"):
            matrix = np.array(getattr(self, name), dtype=float)
            if matrix.shape != (2, 2):
                raise ValueError(f"矩阵 {name} 必须是 2x2, 实际 {matrix.shape}")
            object.__setattr__(self, name, matrix)
        det_B = float(np.linalg.det(self.B))
        if abs(det_B) <= self.tol:
            raise SingularB(f"B 奇异: |det B| = {abs(det_B):.3e} <= tol = {self.tol:.1e}")
        B_inv = np.linalg.inv(self.B)
        object.__setattr__(self, "det_B", det_B)
        object.__setattr__(self, "B_inv", B_inv)
        object.__setattr__(self, "B_inv_A", B_inv @ self.A)
        object.__setattr__(self, "D_B_inv", self.D @ B_inv)
        # det(iB) = i^2 det B；取主值平方根
        object.__setattr__(self, "sqrt_det_iB", complex(np.sqrt(complex(-det_B, 0.0))))
        object.__setattr__(self, "params_id", fingerprint(self.A, self.B, self.C, self.D))

    @classmethod
    def example(cls) -> 'SymplecticParams':
        """A = I, B = D = [[1,1],[1,3]], C = [[-0.5,0.5],[0.5,0.5]]"""
        B = [[1.0, 1.0], [1.0, 3.0]]
        return validate_symplectic(np.eye(2), B, [[-0.5, 0.5], [0.5, 0.5]], B, 1e-12)

    @classmethod
    def fourier(cls) -> 'SymplecticParams':
        """A = 0, B = I, C = -I, D = 0"""
        return validate_symplectic(np.zeros((2, 2)), np.eye(2), -np.eye(2), np.zeros((2, 2)), 1e-12)

    def residuals(self) -> Dict[str, float]:
        """六个辛恒等式的最大逐元残差"""
        A, B, C, D = self.A, self.B, self.C, self.D
        eye = np.eye(2)
        checks = {
            "AB^T=BA^T": A @ B.T - B @ A.T,
            "CD^T=DC^T": C @ D.T - D @ C.T,
            "AD^T-BC^T=I": A @ D.T - B @ C.T - eye,
            "A^TC=C^TA": A.T @ C - C.T @ A,
            "B^TD=D^TB": B.T @ D - D.T @ B,
            "A^TD-C^TB=I": A.T @ D - C.T @ B - eye,
        }
        return {name: float(np.max(np.abs(value))) for name, value in checks.items()}

    def to_dict(self) -> Dict[str, list]:
        return {
            "A": self.A.ravel().tolist(),
            "B": self.B.ravel().tolist(),
            "C": self.C.ravel().tolist(),
            "D": self.D.ravel().tolist(),
            "tol": self.tol,
        }


def validate_symplectic(A: ArrayLike, B: ArrayLike, C: ArrayLike, D: ArrayLike,
                        tol: float = 1e-12) -> SymplecticParams:
    """
    校验并构造 LCT 参数

    Args:
        A, B, C, D: 2x2 实矩阵
        tol: 逐元容差

    Returns:
        已缓存派生矩阵的 SymplecticParams

    Raises:
        SingularB: |det B| <= tol
        SymplecticViolation: 某个辛恒等式残差超过 tol
    """
    if not tol > 0:
        raise ValueError(f"tol 必须为正: {tol}")
    params = SymplecticParams(A, B, C, D, tol)
    for identity, residual in params.residuals().items():
        if residual > tol:
            logger.error(f"辛条件校验失败: {identity}, 残差 {residual:.3e}")
            raise SymplecticViolation(identity, residual)
    logger.debug(f"参数 {params.params_id} 校验通过, det B = {params.det_B:.6g}")
    return params


def _quadratic(points: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """逐点计算 t^T Q t，points 形状 (..., 2)"""
    return np.einsum("...i,ij,...j->...", points, Q, points)


def _scalar_or_array(value: np.ndarray):
    return complex(value) if np.ndim(value) == 0 else value


def chirp_lambda(params: SymplecticParams, t: ArrayLike):
    """lambda_M(t) = exp(i pi t^T B^{-1}A t)，支持 (..., 2) 批量输入"""
    t = np.asarray(t, dtype=float)
    return _scalar_or_array(np.exp(1j * np.pi * _quadratic(t, params.B_inv_A)))


def chirp_eta(params: SymplecticParams, xi: ArrayLike):
    """eta_M(xi) = exp(i pi xi^T D B^{-1} xi)，支持 (..., 2) 批量输入"""
    xi = np.asarray(xi, dtype=float)
    return _scalar_or_array(np.exp(1j * np.pi * _quadratic(xi, params.D_B_inv)))


def chirped_values(params: SymplecticParams, s: ComplexSequence2D) -> np.ndarray:
    """lambda_M(k) s(k) 在支撑区域上的取值"""
    k1, k2 = s.indices()
    return s.values * chirp_lambda(params, np.stack([k1, k2], axis=-1))


def dt_nslct(params: SymplecticParams, s: ComplexSequence2D, xi: ArrayLike):
    """
    离散时间 2D-NS-LCT，直接求和

    Args:
        params: LCT 参数
        s: 有限支撑序列
        xi: 频率点，形状 (2,) 或 (..., 2)

    Returns:
        复数（单点）或形状 (...) 的数组
    """
    xi = np.asarray(xi, dtype=float)
    points = s.points().astype(float)
    weights = chirped_values(params, s).ravel()
    w = xi @ params.B_inv.T
    phases = np.exp(-2j * np.pi * (w @ points.T))
    total = phases @ weights
    return _scalar_or_array(total * chirp_eta(params, xi) / params.sqrt_det_iB)


def dtft_grid(values: np.ndarray, box: SupportBox, N: int) -> np.ndarray:
    """
    有限序列在 N x N 环面网格上的 DTFT: sum_k x(k) exp(-2 i pi k.n/N)

    支撑超过 N 时按模 N 折叠，网格点上的值仍然精确
    """
    folded = np.zeros((N, N), dtype=np.complex128)
    k1, k2 = box.indices()
    np.add.at(folded, (k1 % N, k2 % N), values)
    return np.fft.fft2(folded)


def _post_factor(params: SymplecticParams, N: int) -> np.ndarray:
    xi = torus_grid(N) @ params.B.T
    return chirp_eta(params, xi) / params.sqrt_det_iB


def dt_nslct_grid(params: SymplecticParams, s: ComplexSequence2D, N: int) -> SpectrumGrid:
    """
    在 xi = B omega (omega 取 N x N 环面网格) 上求离散时间 LCT

    先乘 lambda_M，再做折叠后的二维 DFT，最后乘 eta_M(B omega)/sqrt(det(iB))
    """
    if N < 1:
        raise ValueError(f"N 必须 >= 1: {N}")
    spectrum = dtft_grid(chirped_values(params, s), s.box, N)
    return SpectrumGrid(N, spectrum * _post_factor(params, N), params.params_id)


def inverse_dt_nslct_grid(params: SymplecticParams, spec: SpectrumGrid,
                          support: SupportBox) -> ComplexSequence2D:
    """
    由网格频谱恢复序列

    g(omega) = sqrt(det(iB)) conj(eta(B omega)) L(B omega) 是 lambda_M s 的 DTFT，
    逆 DFT 后去掉 lambda_M 即可

    Raises:
        SupportTooLarge: 支撑某一维超过 N
    """
    N = spec.N
    if support.extent[0] > N or support.extent[1] > N:
        raise SupportTooLarge(f"支撑 {support.extent} 超过网格 N = {N}")
    g = spec.values / _post_factor(params, N)
    periodic = np.fft.ifft2(g)
    k1, k2 = support.indices()
    chirped = periodic[k1 % N, k2 % N]
    values = chirped * np.conj(chirp_lambda(params, np.stack([k1, k2], axis=-1)))
    return ComplexSequence2D(support.origin, values)


def eval_nslct_many(params: SymplecticParams, f: GridFunction2D, xi: ArrayLike) -> np.ndarray:
    """
    连续 2D-NS-LCT 的中点求积，批量频率点

    积分核关于网格两轴可分离，按块做矩阵乘法
    """
    xi = np.asarray(xi, dtype=float)
    shape = xi.shape[:-1]
    flat = xi.reshape(-1, 2)
    t1, t2 = f.axes()
    t1_grid, t2_grid = f.nodes()
    chirped = f.values * chirp_lambda(params, np.stack([t1_grid, t2_grid], axis=-1))
    out = np.empty(flat.shape[0], dtype=np.complex128)
    for start in range(0, flat.shape[0], _CHUNK):
        block = flat[start:start + _CHUNK]
        w = block @ params.B_inv.T
        left = np.exp(-2j * np.pi * np.outer(w[:, 0], t1))
        right = np.exp(-2j * np.pi * np.outer(w[:, 1], t2))
        out[start:start + _CHUNK] = np.sum((left @ chirped) * right, axis=1)
    out *= f.h ** 2 * chirp_eta(params, flat) / params.sqrt_det_iB
    return out.reshape(shape)


def nslct_quadrature(params: SymplecticParams, f: GridFunction2D, xi: ArrayLike):
    """
    连续 2D-NS-LCT 的中点法则近似

    二阶连续可微被积函数的误差为 O(h^2)
    """
    return _scalar_or_array(eval_nslct_many(params, f, xi))


def phase_transport(params: SymplecticParams, xi: ArrayLike, l: ArrayLike):
    """
    相位搬移因子 P(xi, l)，满足 L(xi + B l) = L(xi) P(xi, l)

    P = exp(i pi [(Bl)^T D B^{-1} xi + xi^T D l + (Bl)^T D l])
    """
    xi = np.asarray(xi, dtype=float)
    l = np.asarray(l, dtype=float)
    Bl = l @ params.B.T
    Dl = l @ params.D.T
    exponent = (np.einsum("...i,ij,...j->...", Bl, params.D_B_inv, xi)
                + np.sum(xi * Dl, axis=-1)
                + np.sum(Bl * Dl, axis=-1))
    return _scalar_or_array(np.exp(1j * np.pi * exponent))


def energy_on_period(params: SymplecticParams, s: ComplexSequence2D, N: int) -> float:
    """
    一个 B 周期上 |L s|^2 的积分（网格求积）

    N 不小于支撑尺寸时等于 ||s||^2
    """
    spectrum = dt_nslct_grid(params, s, N)
    return float(abs(params.det_B) * np.mean(np.abs(spectrum.values) ** 2))
