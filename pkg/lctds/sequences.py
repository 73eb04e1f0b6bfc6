"""
信号容器
有限支撑复序列、网格采样函数以及频谱网格
"""

import hashlib
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import GridMismatch, IncommensurateGrid, NumericalFailure

IntPair = Tuple[int, int]
RealPair = Tuple[float, float]

# 网格节点判定容差（以步长为单位）
NODE_TOL = 1e-6


def fingerprint(*arrays: np.ndarray) -> str:
    """根据数组内容生成短标识，用于来源追踪"""
    digest = hashlib.sha256()
    for arr in arrays:
        arr = np.ascontiguousarray(arr)
        digest.update(str(arr.shape).encode())
        digest.update(arr.tobytes())
    return digest.hexdigest()[:12]


@dataclass(frozen=True)
class SupportBox:
    """整数格上的矩形支撑区域 [origin, origin + extent)"""
    origin: IntPair
    extent: IntPair

    def __post_init__(self):
        origin = (int(self.origin[0]), int(self.origin[1]))
        extent = (int(self.extent[0]), int(self.extent[1]))
        if extent[0] < 1 or extent[1] < 1:
            raise ValueError(f"支撑区域尺寸必须为正: {extent}")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "extent", extent)

    @classmethod
    def from_corners(cls, lo: Iterable[int], hi: Iterable[int]) -> 'SupportBox':
        """由闭区间角点 [lo, hi] 构造"""
        lo = tuple(int(v) for v in lo)
        hi = tuple(int(v) for v in hi)
        return cls(lo, (max(hi[0] - lo[0] + 1, 1), max(hi[1] - lo[1] + 1, 1)))

    @property
    def last(self) -> IntPair:
        return (self.origin[0] + self.extent[0] - 1, self.origin[1] + self.extent[1] - 1)

    def corners(self) -> np.ndarray:
        """四个角点, 形状 (4, 2)"""
        (a, b), (c, d) = self.origin, self.last
        return np.array([[a, b], [c, b], [a, d], [c, d]], dtype=np.int64)

    def indices(self) -> Tuple[np.ndarray, np.ndarray]:
        """区域内全部整数点 (ij 索引)"""
        k1 = np.arange(self.origin[0], self.origin[0] + self.extent[0])
        k2 = np.arange(self.origin[1], self.origin[1] + self.extent[1])
        return np.meshgrid(k1, k2, indexing="ij")

    def points(self) -> np.ndarray:
        """区域内全部整数点, 形状 (P, 2), 行优先"""
        k1, k2 = self.indices()
        return np.stack([k1.ravel(), k2.ravel()], axis=-1)

    def union(self, other: 'SupportBox') -> 'SupportBox':
        lo = np.minimum(self.origin, other.origin)
        hi = np.maximum(self.last, other.last)
        return SupportBox.from_corners(lo, hi)


@dataclass(frozen=True, eq=False)
class ComplexSequence2D:
    """
    Z^2 上有限支撑的复序列

    values[i, j] 对应整数点 origin + (i, j)，区域外取值恒为零
    """
    origin: IntPair
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.ndim != 2 or min(values.shape) < 1:
            raise ValueError(f"序列数值必须是非空二维数组, 实际形状 {values.shape}")
        object.__setattr__(self, "origin", (int(self.origin[0]), int(self.origin[1])))
        object.__setattr__(self, "values", values)

    # ==================== 构造 ====================

    @classmethod
    def zeros(cls, box: SupportBox) -> 'ComplexSequence2D':
        return cls(box.origin, np.zeros(box.extent, dtype=np.complex128))

    @classmethod
    def delta(cls, k: IntPair = (0, 0), value: complex = 1.0) -> 'ComplexSequence2D':
        """单点序列"""
        return cls(k, np.full((1, 1), value, dtype=np.complex128))

    @classmethod
    def from_entries(cls, entries: Dict[IntPair, complex]) -> 'ComplexSequence2D':
        """
        由稀疏条目构造

        Args:
            entries: {(k1, k2): 数值}

        Returns:
            覆盖全部条目的最小矩形上的序列
        """
        if not entries:
            return cls.delta((0, 0), 0.0)
        keys = np.array(list(entries.keys()), dtype=np.int64)
        box = SupportBox.from_corners(keys.min(axis=0), keys.max(axis=0))
        values = np.zeros(box.extent, dtype=np.complex128)
        for (k1, k2), value in entries.items():
            values[k1 - box.origin[0], k2 - box.origin[1]] += value
        return cls(box.origin, values)

    @classmethod
    def from_box(cls, box: SupportBox, values: np.ndarray) -> 'ComplexSequence2D':
        values = np.asarray(values, dtype=np.complex128).reshape(box.extent)
        return cls(box.origin, values)

    # ==================== 访问 ====================

    @property
    def extent(self) -> IntPair:
        return self.values.shape

    @property
    def box(self) -> SupportBox:
        return SupportBox(self.origin, self.extent)

    def indices(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.box.indices()

    def points(self) -> np.ndarray:
        return self.box.points()

    def at(self, k: Iterable[int]) -> complex:
        """读取单点数值，区域外返回 0"""
        k1, k2 = (int(v) for v in k)
        i, j = k1 - self.origin[0], k2 - self.origin[1]
        if 0 <= i < self.extent[0] and 0 <= j < self.extent[1]:
            return complex(self.values[i, j])
        return 0j

    def sample(self, points: np.ndarray) -> np.ndarray:
        """
        批量读取整数点

        Args:
            points: 形状 (..., 2) 的整数坐标

        Returns:
            形状 (...) 的复数数组，区域外为 0
        """
        points = np.asarray(points, dtype=np.int64)
        i = points[..., 0] - self.origin[0]
        j = points[..., 1] - self.origin[1]
        inside = (i >= 0) & (i < self.extent[0]) & (j >= 0) & (j < self.extent[1])
        out = np.zeros(points.shape[:-1], dtype=np.complex128)
        out[inside] = self.values[i[inside], j[inside]]
        return out

    def reframe(self, box: SupportBox) -> 'ComplexSequence2D':
        """把序列搬到指定区域（区域外的数值被截断）"""
        return ComplexSequence2D.from_box(box, self.sample(box.points()))

    def map_values(self, factor: np.ndarray) -> 'ComplexSequence2D':
        return ComplexSequence2D(self.origin, self.values * factor)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def fingerprint(self) -> str:
        return fingerprint(np.array(self.origin), self.values)

    # ==================== 运算 ====================

    def _combine(self, other: 'ComplexSequence2D', sign: float) -> 'ComplexSequence2D':
        box = self.box.union(other.box)
        points = box.points()
        values = self.sample(points) + sign * other.sample(points)
        return ComplexSequence2D.from_box(box, values)

    def __add__(self, other: 'ComplexSequence2D') -> 'ComplexSequence2D':
        return self._combine(other, 1.0)

    def __sub__(self, other: 'ComplexSequence2D') -> 'ComplexSequence2D':
        return self._combine(other, -1.0)

    def __mul__(self, scalar: complex) -> 'ComplexSequence2D':
        return ComplexSequence2D(self.origin, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> 'ComplexSequence2D':
        return self * -1.0

    def to_frame(self) -> pd.DataFrame:
        """导出为 k1,k2,re,im 表 (k2 为外层顺序)"""
        k1, k2 = self.indices()
        frame = pd.DataFrame({
            "k1": k1.ravel(),
            "k2": k2.ravel(),
            "re": self.values.real.ravel(),
            "im": self.values.imag.ravel(),
        })
        return frame.sort_values(["k2", "k1"], kind="stable").reset_index(drop=True)


def relative_error(estimate: ComplexSequence2D, reference: ComplexSequence2D) -> float:
    """相对 l2 误差; 参考为零时返回绝对误差"""
    diff = (estimate - reference).norm()
    ref = reference.norm()
    return diff / ref if ref > 0 else diff


@dataclass(frozen=True, eq=False)
class GridFunction2D:
    """
    均匀网格上采样的紧支撑函数

    values[i, j] 是 t = origin + h * (i, j) 处的函数值，区域外为零
    """
    origin: RealPair
    h: float
    values: np.ndarray

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"网格步长必须为正: {self.h}")
        values = np.array(self.values, dtype=np.complex128)
        if values.ndim != 2 or min(values.shape) < 1:
            raise ValueError(f"网格函数必须是非空二维数组, 实际形状 {values.shape}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, fn, origin: RealPair, h: float, extent: IntPair) -> 'GridFunction2D':
        """在网格节点上求值 fn(t1, t2)"""
        grid = cls(origin, h, np.zeros(extent, dtype=np.complex128))
        t1, t2 = grid.nodes()
        return cls(origin, h, fn(t1, t2))

    @property
    def extent(self) -> IntPair:
        return self.values.shape

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        n1, n2 = self.extent
        return (self.origin[0] + self.h * np.arange(n1),
                self.origin[1] + self.h * np.arange(n2))

    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        t1, t2 = self.axes()
        return np.meshgrid(t1, t2, indexing="ij")

    def node_points(self) -> np.ndarray:
        t1, t2 = self.nodes()
        return np.stack([t1, t2], axis=-1)

    def steps_per_unit(self) -> int:
        """返回 q = 1/h；要求 q 为正整数"""
        q = int(round(1.0 / self.h))
        if q < 1 or abs(q * self.h - 1.0) > 1e-9:
            raise IncommensurateGrid(f"步长 h = {self.h} 与整数格不可公度")
        return q

    def lattice_offset(self) -> IntPair:
        """origin / h 的整数值；原点不在 h 格上时抛出 GridMismatch"""
        scaled = np.asarray(self.origin) / self.h
        rounded = np.round(scaled)
        if np.any(np.abs(scaled - rounded) > NODE_TOL):
            raise GridMismatch(f"网格原点 {self.origin} 不在步长 {self.h} 的格点上")
        return int(rounded[0]), int(rounded[1])

    def sample_nodes(self, points: np.ndarray) -> np.ndarray:
        """
        读取落在网格节点上的点

        Args:
            points: 形状 (..., 2) 的实坐标

        Returns:
            形状 (...) 的数值，区域外为 0

        Raises:
            GridMismatch: 某点不在网格节点上
        """
        points = np.asarray(points, dtype=float)
        scaled = (points - np.asarray(self.origin)) / self.h
        index = np.round(scaled)
        if np.any(np.abs(scaled - index) > NODE_TOL):
            raise GridMismatch("采样点不在网格节点上")
        index = index.astype(np.int64)
        i, j = index[..., 0], index[..., 1]
        inside = (i >= 0) & (i < self.extent[0]) & (j >= 0) & (j < self.extent[1])
        out = np.zeros(points.shape[:-1], dtype=np.complex128)
        out[inside] = self.values[i[inside], j[inside]]
        return out

    def mass(self) -> complex:
        return complex(self.h ** 2 * self.values.sum())

    def same_grid(self, other: 'GridFunction2D') -> bool:
        return (self.extent == other.extent and abs(self.h - other.h) < 1e-12
                and np.allclose(self.origin, other.origin, atol=1e-12))

    def __add__(self, other: 'GridFunction2D') -> 'GridFunction2D':
        if not self.same_grid(other):
            raise GridMismatch("只能相加同一网格上的函数")
        return GridFunction2D(self.origin, self.h, self.values + other.values)

    def __mul__(self, scalar: complex) -> 'GridFunction2D':
        return GridFunction2D(self.origin, self.h, self.values * scalar)

    __rmul__ = __mul__

    def fingerprint(self) -> str:
        return fingerprint(np.array(self.origin), np.array([self.h]), self.values)


@dataclass(frozen=True, eq=False)
class SpectrumGrid:
    """
    频谱网格

    values[n1, n2] 是 omega = (n1/N, n2/N) 处、即物理频率 xi = B omega 处的谱值
    """
    N: int
    values: np.ndarray
    params_id: Optional[str] = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"网格分辨率必须 >= 1: {self.N}")
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (self.N, self.N):
            raise ValueError(f"频谱形状 {values.shape} 与 N = {self.N} 不符")
        if not np.all(np.isfinite(values)):
            raise NumericalFailure("频谱中出现 NaN/Inf")
        object.__setattr__(self, "values", values)

    def omegas(self) -> np.ndarray:
        """单位环面网格点, 形状 (N, N, 2)"""
        return torus_grid(self.N)


def torus_grid(N: int) -> np.ndarray:
    """omega = (n1/N, n2/N), 形状 (N, N, 2)"""
    n1, n2 = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    return np.stack([n1, n2], axis=-1) / N
