"""
运行报告与 CSV 输出
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import pandas as pd

from .sequences import ComplexSequence2D

logger = logging.getLogger(__name__)

# 17 位有效数字，双精度往返无损
FLOAT_FORMAT = "%.17g"


@dataclass
class RunReport:
    """单次命令的运行报告"""
    command: str
    config: Dict[str, Any] = field(default_factory=dict)
    residuals: Dict[str, float] = field(default_factory=dict)
    m: Optional[int] = None
    gamma: List[List[int]] = field(default_factory=list)
    eta: List[List[int]] = field(default_factory=list)
    min_det: Optional[float] = None
    argmin_xi: Optional[List[float]] = None
    max_cond: Optional[float] = None
    relative_error: Optional[float] = None
    timings: Dict[str, float] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    error: Optional[str] = None
    exit_code: int = 0

    @property
    def passed(self) -> bool:
        return self.exit_code == 0 and all(self.checks.values())

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def write_json(self, path: str) -> str:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True, ensure_ascii=False, default=str)
        self.outputs.append(path)
        logger.info(f"报告已写入 {path}")
        return path

    def check_table(self) -> pd.DataFrame:
        """检查项 pass/fail 表"""
        return pd.DataFrame({
            "check": list(self.checks.keys()),
            "result": ["PASS" if ok else "FAIL" for ok in self.checks.values()],
        })


def ensure_dir(out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def write_frame(frame: pd.DataFrame, path: str) -> str:
    """写出 CSV（无索引，17 位有效数字）"""
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"已写入 {path} ({len(frame)} 行)")
    return path


def write_sequence_csv(seq: ComplexSequence2D, path: str) -> str:
    """k1,k2,re,im，k2 为外层顺序"""
    return write_frame(seq.to_frame(), path)


def read_sequence_csv(path: str) -> ComplexSequence2D:
    """读回 write_sequence_csv 写出的序列"""
    frame = pd.read_csv(path)
    entries = {(int(r.k1), int(r.k2)): complex(r.re, r.im) for r in frame.itertuples(index=False)}
    return ComplexSequence2D.from_entries(entries)
