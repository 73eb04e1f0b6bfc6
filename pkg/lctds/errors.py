"""
异常定义
每个异常带有对应的命令行退出码
"""

from typing import Optional, Tuple


class LCTError(Exception):
    """lctds 异常基类"""
    exit_code = 4


class ConfigParseError(LCTError):
    """配置文件解析失败"""
    exit_code = 1

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"{message} (第 {line} 行)"
        super().__init__(message)


class SymplecticViolation(LCTError):
    """参数矩阵不满足辛条件"""
    exit_code = 2

    def __init__(self, identity: str, residual: float):
        self.identity = identity
        self.residual = residual
        super().__init__(f"辛条件 {identity} 不成立, 最大残差 {residual:.3e}")


class SingularB(LCTError):
    """B 矩阵奇异"""
    exit_code = 2


class SingularM(LCTError):
    """采样矩阵 M 奇异"""
    exit_code = 2


class UnstableSystem(LCTError):
    """系统矩阵行列式低于阈值，无法稳定重构"""
    exit_code = 3

    def __init__(self, min_det: float, argmin_xi: Tuple[float, float], threshold: float):
        self.min_det = min_det
        self.argmin_xi = argmin_xi
        self.threshold = threshold
        super().__init__(
            f"系统不稳定: min|det| = {min_det:.3e} < {threshold:.1e}, "
            f"位置 xi = ({argmin_xi[0]:.6f}, {argmin_xi[1]:.6f})"
        )


class NumericalFailure(LCTError):
    """内部数值失败"""
    exit_code = 4


class SupportTooLarge(LCTError, ValueError):
    """支撑区域超过网格尺寸"""


class IndexOutOfRange(LCTError, IndexError):
    """陪集下标越界"""


class InvalidPower(LCTError, ValueError):
    """演化核幂次非法"""


class IncommensurateGrid(LCTError, ValueError):
    """网格步长与整数格不可公度 (1/h 不是整数)"""


class StepMismatch(LCTError, ValueError):
    """两个网格函数步长不一致"""


class GridMismatch(LCTError, ValueError):
    """采样点不落在网格节点上"""
