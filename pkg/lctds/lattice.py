"""
整数伸缩矩阵 M 的格结构
陪集代表元、基本区域约化、陪集分解、下采样与正交性恒等式
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

import numpy as np

from .errors import IndexOutOfRange, NumericalFailure, SingularM
from .sequences import ComplexSequence2D, IntPair, SupportBox, fingerprint

logger = logging.getLogger(__name__)


def _integer_matrix(M) -> np.ndarray:
    matrix = np.asarray(M, dtype=float)
    if matrix.shape != (2, 2):
        raise ValueError(f"M 必须是 2x2 矩阵, 实际 {matrix.shape}")
    rounded = np.round(matrix)
    if np.any(np.abs(matrix - rounded) > 0):
        raise ValueError(f"M 必须是整数矩阵: {matrix.tolist()}")
    return rounded.astype(np.int64)


def _det(M: np.ndarray) -> int:
    return int(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])


def _adjugate(M: np.ndarray) -> np.ndarray:
    return np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]], dtype=np.int64)


def _enumerate_cosets(M: np.ndarray) -> List[IntPair]:
    """
    扫描 G(M) 的包围盒，保留 M^{-1}p 属于 [0,1)^2 的整数点

    用伴随矩阵做整数判定，边界点不会重复计数
    """
    d = _det(M)
    adj = _adjugate(M)
    corners = np.array([[0, 0], [1, 0], [0, 1], [1, 1]]) @ M.T
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    p1, p2 = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij")
    points = np.stack([p1.ravel(), p2.ravel()], axis=-1)
    num = points @ adj.T
    if d > 0:
        keep = np.all((num >= 0) & (num < d), axis=1)
    else:
        keep = np.all((num <= 0) & (num > d), axis=1)
    reps = sorted(tuple(int(v) for v in p) for p in points[keep])
    reps.remove((0, 0))
    return [(0, 0)] + reps


@dataclass(frozen=True, eq=False)
class DilationLattice:
    """
    伸缩矩阵 M 及其陪集代表元

    gamma 为 N(M) 的代表元, eta 为 N(M^T) 的代表元, 两者首元素均为 [0, 0]
    """
    M: np.ndarray
    m: int
    gamma: Tuple[IntPair, ...]
    eta: Tuple[IntPair, ...]
    M_inv: np.ndarray
    MT_inv: np.ndarray
    det: int
    lattice_id: str = field(default="")

    @property
    def gamma_array(self) -> np.ndarray:
        return np.array(self.gamma, dtype=np.int64)

    @property
    def eta_array(self) -> np.ndarray:
        return np.array(self.eta, dtype=np.int64)

    @property
    def MT(self) -> np.ndarray:
        return self.M.T

    def to_dict(self) -> Dict[str, list]:
        return {
            "M": self.M.ravel().tolist(),
            "m": self.m,
            "gamma": [list(g) for g in self.gamma],
            "eta": [list(e) for e in self.eta],
        }


def build_lattice(M) -> DilationLattice:
    """
    构造伸缩格

    Args:
        M: 2x2 非奇异整数矩阵

    Returns:
        DilationLattice，陪集按 [0,0] 优先、其余字典序排列

    Raises:
        SingularM: det M = 0
    """
    M = _integer_matrix(M)
    d = _det(M)
    if d == 0:
        raise SingularM(f"M 奇异: {M.tolist()}")
    gamma = _enumerate_cosets(M)
    eta = _enumerate_cosets(M.T)
    m = abs(d)
    if len(gamma) != m or len(eta) != m:
        raise NumericalFailure(f"陪集数目 {len(gamma)}/{len(eta)} 与 |det M| = {m} 不符")
    M_inv = np.linalg.inv(M.astype(float))
    lat = DilationLattice(
        M=M, m=m, gamma=tuple(gamma), eta=tuple(eta),
        M_inv=M_inv, MT_inv=M_inv.T, det=d,
        lattice_id=fingerprint(M),
    )
    logger.debug(f"构造格 M = {M.tolist()}, m = {m}, gamma = {gamma}")
    return lat


def orthogonality_sum(lat: DilationLattice, j: int) -> complex:
    """
    sum_k exp(-2 i pi eta_j^T M^{-1} gamma_k)，理论值为 m delta_j

    Raises:
        IndexOutOfRange: j 不在 [0, m) 内
    """
    if not 0 <= j < lat.m:
        raise IndexOutOfRange(f"下标 j = {j} 超出 [0, {lat.m})")
    d = lat.det
    adj = _adjugate(lat.M)
    eta_j = np.array(lat.eta[j], dtype=np.int64)
    # eta^T M^{-1} gamma = eta^T adj gamma / d，先在整数上取模
    numer = (lat.gamma_array @ adj.T) @ eta_j
    phases = np.mod(numer, abs(d)) * np.sign(d) / abs(d)
    return complex(np.sum(np.exp(-2j * np.pi * phases)))


def preimage_box(MT: np.ndarray, box: SupportBox) -> SupportBox:
    """{k : M^T k 落在 box 的包围盒内} 的整数包围盒（向外取整）"""
    d = _det(MT)
    adj = _adjugate(MT)
    num = box.corners() @ adj.T
    if d < 0:
        num, d = -num, -d
    lo = np.floor_divide(num.min(axis=0), d)
    hi = -np.floor_divide(-num.max(axis=0), d)
    return SupportBox.from_corners(lo, hi)


def subsample(c: ComplexSequence2D, lat: DilationLattice) -> ComplexSequence2D:
    """下采样 (S_M c)(k) = c(M^T k)"""
    box = preimage_box(lat.MT, c.box)
    points = box.points()
    return ComplexSequence2D.from_box(box, c.sample(points @ lat.M))


def upsample(y: ComplexSequence2D, lat: DilationLattice) -> ComplexSequence2D:
    """零插值上采样：c(M^T k) = y(k)，其余为 0"""
    image = y.box.corners() @ lat.M
    box = SupportBox.from_corners(image.min(axis=0), image.max(axis=0))
    values = np.zeros(box.extent, dtype=np.complex128)
    targets = y.points() @ lat.M - np.array(box.origin)
    values[targets[:, 0], targets[:, 1]] = y.values.ravel()
    return ComplexSequence2D(box.origin, values)


def coset_decompose_many(points: np.ndarray, lat: DilationLattice) -> Tuple[np.ndarray, np.ndarray]:
    """
    批量陪集分解 p = gamma_k + M n

    Args:
        points: 形状 (..., 2) 的整数点

    Returns:
        (k, n)：形状 (...) 的陪集下标与形状 (..., 2) 的整数向量
    """
    points = np.asarray(points, dtype=np.int64)
    d = lat.det
    adj = _adjugate(lat.M)
    num = points @ adj.T
    n = np.floor_divide(num, d) if d > 0 else np.floor_divide(-num, -d)
    residue = points - n @ lat.M.T
    lookup = {g: i for i, g in enumerate(lat.gamma)}
    flat = residue.reshape(-1, 2)
    k = np.fromiter((lookup[(int(a), int(b))] for a, b in flat), dtype=np.int64, count=flat.shape[0])
    return k.reshape(points.shape[:-1]), n


def coset_decompose(p: Iterable[int], lat: DilationLattice) -> Tuple[int, IntPair]:
    """单点陪集分解，返回 (k, n) 使 p = gamma_k + M n"""
    k, n = coset_decompose_many(np.asarray(list(p), dtype=np.int64), lat)
    return int(k), (int(n[0]), int(n[1]))


def torus_reduce(v: Iterable[float]) -> Tuple[Tuple[float, float], IntPair]:
    """v = xi + p，xi 属于 [0,1)^2，p = floor(v)"""
    v = np.asarray(list(v), dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"v 必须有限: {v}")
    p = np.floor(v)
    xi = v - p
    return (float(xi[0]), float(xi[1])), (int(p[0]), int(p[1]))


def torus_reduce_grid(numerators: np.ndarray, N: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    网格版环面约化：v = numerators / N

    Returns:
        (r, p)：xi = r / N，p = floor(v)，均为整数数组
    """
    p, r = np.divmod(np.asarray(numerators, dtype=np.int64), N)
    return r, p
