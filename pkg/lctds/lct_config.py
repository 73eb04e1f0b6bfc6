"""
实验配置
"""

import configparser
import json
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
from dotenv import load_dotenv

from .errors import ConfigParseError
from .lattice import DilationLattice, build_lattice
from .lct_core import SymplecticParams, validate_symplectic
from .sequences import ComplexSequence2D, IntPair, SupportBox
from .shift_invariant import Generator, bump_kernel

_MASK64 = (1 << 64) - 1

# 字段 -> (INI 小节, 键名)
_LAYOUT: Dict[str, Tuple[str, str]] = {
    "A": ("params", "A"),
    "B": ("params", "B"),
    "C": ("params", "C"),
    "D": ("params", "D"),
    "tol": ("params", "tol"),
    "M": ("lattice", "M"),
    "kernel": ("kernel", "entries"),
    "signal_mode": ("signal", "mode"),
    "seed": ("signal", "seed"),
    "signal_origin": ("signal", "origin"),
    "signal_extent": ("signal", "extent"),
    "signal_entries": ("signal", "entries"),
    "generator_kind": ("generator", "kind"),
    "generator_step": ("generator", "step"),
    "generator_radius": ("generator", "radius"),
    "kernel_taps": ("generator", "kernel_taps"),
    "kernel_radius": ("generator", "kernel_radius"),
    "coeff_seed": ("generator", "coeff_seed"),
    "coeff_extent": ("generator", "coeff_extent"),
    "grid_n": ("run", "grid_n"),
    "trunc_k": ("run", "trunc_k"),
    "alpha": ("run", "alpha"),
    "recon_tol": ("run", "recon_tol"),
    "si_tol": ("run", "si_tol"),
    "out_dir": ("output", "out_dir"),
}

_SIGNAL_MODES = ("random", "entries", "zero")
_GENERATOR_KINDS = ("bump", "gaussian", "zero")


def splitmix64(seed: int) -> Iterator[int]:
    """splitmix64 伪随机序列（64 位无符号整数）"""
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def random_signal(seed: int, box: SupportBox) -> ComplexSequence2D:
    """
    由种子生成复序列

    取高 53 位映射到 [0,1)，实部、虚部依次落在 [-1,1)，按行优先填充支撑区域
    """
    stream = splitmix64(seed)
    count = box.extent[0] * box.extent[1]
    uniform = np.array([(next(stream) >> 11) / float(1 << 53) for _ in range(2 * count)])
    values = (2.0 * uniform[0::2] - 1.0) + 1j * (2.0 * uniform[1::2] - 1.0)
    return ComplexSequence2D.from_box(box, values.reshape(box.extent))


def _entries_to_dict(entries: List) -> Dict[IntPair, complex]:
    return {(int(k[0]), int(k[1])): complex(v[0], v[1]) for k, v in entries}


@dataclass
class ExperimentConfig:
    """实验配置类（默认值即示例参数，c1 = c2 = 1）"""
    A: List[float] = field(default_factory=lambda: [1.0, 0.0, 0.0, 1.0])
    B: List[float] = field(default_factory=lambda: [1.0, 1.0, 1.0, 3.0])
    C: List[float] = field(default_factory=lambda: [-0.5, 0.5, 0.5, 0.5])
    D: List[float] = field(default_factory=lambda: [1.0, 1.0, 1.0, 3.0])
    tol: float = 1e-12
    M: List[int] = field(default_factory=lambda: [1, 1, 1, 3])
    kernel: List = field(default_factory=lambda: [[[-1, -1], [1.0, 0.0]], [[-1, -2], [1.0, 0.0]]])
    signal_mode: str = "random"
    seed: int = 7
    signal_origin: List[int] = field(default_factory=lambda: [0, 0])
    signal_extent: List[int] = field(default_factory=lambda: [8, 8])
    signal_entries: List = field(default_factory=list)
    generator_kind: str = "bump"
    generator_step: float = 0.1
    generator_radius: float = 0.3
    kernel_taps: List = field(default_factory=lambda: [[[0, 0], [1.0, 0.0]], [[1, 0], [0.5, 0.0]],
                                                       [[0, 1], [0.25, 0.0]]])
    kernel_radius: float = 0.2
    coeff_seed: int = 11
    coeff_extent: List[int] = field(default_factory=lambda: [4, 4])
    grid_n: int = 32
    trunc_k: int = 2
    alpha: float = 1e-8
    recon_tol: float = 1e-8
    si_tol: float = 1e-6
    out_dir: str = "results"

    def __post_init__(self):
        if self.signal_mode not in _SIGNAL_MODES:
            raise ConfigParseError(f"未知的信号模式: {self.signal_mode}")
        if self.generator_kind not in _GENERATOR_KINDS:
            raise ConfigParseError(f"未知的生成元类型: {self.generator_kind}")
        if self.grid_n < 1:
            raise ConfigParseError(f"grid_n 必须 >= 1: {self.grid_n}")
        for name in ("A", "B", "C", "D", "M"):
            if len(getattr(self, name)) != 4:
                raise ConfigParseError(f"{name} 必须是 4 个数的行优先列表")

    @classmethod
    def from_env(cls, base: Optional['ExperimentConfig'] = None) -> 'ExperimentConfig':
        """从环境变量（含 .env）覆盖配置"""
        load_dotenv()
        base = base or cls()
        grid_n = os.getenv("LCTDS_GRID_N", str(base.grid_n))
        try:
            return replace(base, grid_n=int(grid_n), out_dir=os.getenv("LCTDS_OUT_DIR", base.out_dir))
        except ValueError:
            raise ConfigParseError(f"LCTDS_GRID_N 无法解析: {grid_n!r}")

    @classmethod
    def from_file(cls, path: str) -> 'ExperimentConfig':
        """
        从 INI 文件加载配置

        Args:
            path: 配置文件路径

        Returns:
            ExperimentConfig，未出现的键取默认值

        Raises:
            ConfigParseError: 文件不可读、语法错误或取值非法（尽量附带行号）
        """
        try:
            with open(path, encoding="utf-8") as handle:
                text = handle.read()
        except OSError as e:
            raise ConfigParseError(f"无法读取配置文件 {path}: {e}")

        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            parser.read_string(text, source=path)
        except (configparser.DuplicateOptionError, configparser.DuplicateSectionError,
                configparser.MissingSectionHeaderError) as e:
            raise ConfigParseError(f"配置文件语法错误: {path}", getattr(e, "lineno", None))
        except configparser.ParsingError as e:
            errors = getattr(e, "errors", None)
            raise ConfigParseError(f"配置文件语法错误: {path}", errors[0][0] if errors else None)
        except configparser.Error as e:
            raise ConfigParseError(f"配置文件语法错误: {e}")

        lines = text.splitlines()
        defaults = cls()
        values: Dict[str, Any] = {}
        for name, (section, key) in _LAYOUT.items():
            if not parser.has_option(section, key):
                continue
            raw = parser.get(section, key)
            default = getattr(defaults, name)
            try:
                if isinstance(default, str):
                    values[name] = raw.strip()
                elif isinstance(default, int) and not isinstance(default, bool):
                    values[name] = int(raw)
                elif isinstance(default, float):
                    values[name] = float(raw)
                else:
                    values[name] = json.loads(raw)
                    if not isinstance(values[name], list):
                        raise ValueError("需要 JSON 列表")
            except ValueError as e:
                raise ConfigParseError(f"[{section}] {key} 取值非法: {e}", _locate(lines, section, key))
        return cls(**values)

    def write(self, path: str) -> None:
        """写出 INI 文件；from_file 读回与原配置相同"""
        parser = configparser.ConfigParser()
        parser.optionxform = str
        for name, (section, key) in _LAYOUT.items():
            if not parser.has_section(section):
                parser.add_section(section)
            value = getattr(self, name)
            if isinstance(value, str):
                text = value
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = json.dumps(value)
            parser.set(section, key, text)
        with open(path, "w", encoding="utf-8") as handle:
            parser.write(handle)

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {f.name: getattr(self, f.name) for f in fields(self)}

    # ==================== 派生对象 ====================

    def params(self) -> SymplecticParams:
        return validate_symplectic(np.reshape(self.A, (2, 2)), np.reshape(self.B, (2, 2)),
                                   np.reshape(self.C, (2, 2)), np.reshape(self.D, (2, 2)), self.tol)

    def lattice(self) -> DilationLattice:
        return build_lattice(np.reshape(self.M, (2, 2)))

    def kernel_sequence(self) -> ComplexSequence2D:
        return ComplexSequence2D.from_entries(_entries_to_dict(self.kernel))

    def signal(self) -> ComplexSequence2D:
        """按模式生成初始状态 c"""
        if self.signal_mode == "random":
            return random_signal(self.seed, SupportBox(tuple(self.signal_origin), tuple(self.signal_extent)))
        if self.signal_mode == "entries":
            return ComplexSequence2D.from_entries(_entries_to_dict(self.signal_entries))
        return ComplexSequence2D.zeros(SupportBox(tuple(self.signal_origin), tuple(self.signal_extent)))

    def generator(self) -> Generator:
        if self.generator_kind == "bump":
            return Generator.bump(self.generator_step, self.generator_radius)
        if self.generator_kind == "gaussian":
            return Generator.gaussian(self.generator_step, self.generator_radius)
        return Generator.zero(self.generator_step)

    def si_kernel(self):
        taps = [((int(k[0]), int(k[1])), complex(w[0], w[1])) for k, w in self.kernel_taps]
        return bump_kernel(taps, self.generator_step, self.kernel_radius)

    def coefficient_box(self) -> SupportBox:
        return SupportBox((0, 0), tuple(self.coeff_extent))

    def coefficients(self) -> ComplexSequence2D:
        return random_signal(self.coeff_seed, self.coefficient_box())

    def with_kernel_weights(self, c1: float, c2: float) -> 'ExperimentConfig':
        """替换示例核 a(-1,-1) = c1, a(-1,-2) = c2"""
        return replace(self, kernel=[[[-1, -1], [float(c1), 0.0]], [[-1, -2], [float(c2), 0.0]]])


def _locate(lines: List[str], section: str, key: str) -> Optional[int]:
    """返回 [section] 下 key 所在的行号（从 1 开始）"""
    current = None
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
        elif current == section and stripped.split("=", 1)[0].split(":", 1)[0].strip() == key:
            return number
    return None


def load_config(path: Optional[str] = None) -> ExperimentConfig:
    """读取配置文件（可选）并应用环境变量覆盖"""
    base = ExperimentConfig.from_file(path) if path else ExperimentConfig()
    return ExperimentConfig.from_env(base)


# 默认配置
DEFAULT_CONFIG = ExperimentConfig()
