"""
实验运行器
把配置、库函数与报告输出串成可复现的命令
"""

import logging
import os
import time
from contextlib import contextmanager
from typing import Callable, Optional

import numpy as np

from .dynamical_sampling import (acquire, example_kernel, example_kernel_spectrum, reconstruct,
                                 recoverable, system_matrix_field)
from .errors import LCTError, NumericalFailure, UnstableSystem
from .lct_config import DEFAULT_CONFIG, ExperimentConfig
from .lct_core import dt_nslct
from .report import RunReport, ensure_dir, write_frame, write_sequence_csv
from .sequences import relative_error
from .shift_invariant import reconstruct_si, riesz_bounds, si_acquire
from .worker_pool import get_worker_pool

# 示例中的陪集代表元
EXAMPLE_GAMMA = [[0, 0], [1, 2]]


class ExperimentRunner:
    """实验运行器"""

    def __init__(self, config: ExperimentConfig = None, out_dir: Optional[str] = None):
        """
        初始化运行器

        Args:
            config: 实验配置
            out_dir: 输出目录，默认取配置中的 out_dir
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        self.config = config or DEFAULT_CONFIG
        self.out_dir = out_dir or self.config.out_dir

    @contextmanager
    def _stage(self, report: RunReport, name: str):
        """计时上下文"""
        start = time.perf_counter()
        try:
            yield
        finally:
            report.timings[name] = time.perf_counter() - start
            self.logger.debug(f"{report.command}/{name} 用时 {report.timings[name]:.3f}s")

    def _output(self, name: str) -> str:
        return os.path.join(ensure_dir(self.out_dir), name)

    def run(self, command: str, body: Callable[[RunReport], None]) -> RunReport:
        """
        执行命令体，把库异常映射为退出码

        Returns:
            RunReport（同时写出 <command>_report.json）
        """
        report = RunReport(command=command, config=self.config.to_dict())
        try:
            with get_worker_pool().session():
                body(report)
        except LCTError as e:
            self.logger.error(f"{command} 失败: {type(e).__name__}: {e}")
            report.error = f"{type(e).__name__}: {e}"
            report.exit_code = e.exit_code
            if isinstance(e, UnstableSystem):
                report.min_det = e.min_det
                report.argmin_xi = list(e.argmin_xi)
        except OSError as e:
            self.logger.error(f"{command} 写出失败: {e}")
            report.error = f"IOError: {e}"
            report.exit_code = 4
        try:
            report.write_json(self._output(f"{command.replace('-', '_')}_report.json"))
        except OSError as e:
            self.logger.warning(f"报告写出失败: {e}")
        self.logger.info(f"{command} 结束, 退出码 {report.exit_code}")
        return report

    # ==================== 参数校验 ====================

    def cmd_validate(self) -> RunReport:
        """校验辛条件并构造伸缩格"""
        def body(report: RunReport) -> None:
            with self._stage(report, "validate"):
                params = self.config.params()
                report.residuals = params.residuals()
                report.checks["symplectic"] = True
                lat = self.config.lattice()
            report.m = lat.m
            report.gamma = [list(g) for g in lat.gamma]
            report.eta = [list(e) for e in lat.eta]
            self.logger.info(f"参数 {params.params_id} 有效, m = {lat.m}, gamma = {report.gamma}")

        return self.run("validate", body)

    # ==================== 稳定性 ====================

    def cmd_detmap(self) -> RunReport:
        """导出 |det A(xi)| 与条件数网格"""
        def body(report: RunReport) -> None:
            params = self.config.params()
            lat = self.config.lattice()
            a = self.config.kernel_sequence()
            N = self.config.grid_n
            with self._stage(report, "scan"):
                field_ = system_matrix_field(a, lat, params, N)
            n1, n2 = np.unravel_index(np.argmin(field_.det_magnitudes), field_.det_magnitudes.shape)
            report.m = lat.m
            report.min_det = float(field_.det_magnitudes[n1, n2])
            report.argmin_xi = [n1 / N, n2 / N]
            report.max_cond = field_.max_cond
            with self._stage(report, "write"):
                report.outputs.append(write_frame(field_.to_frame(), self._output("detmap.csv")))

        return self.run("detmap", body)

    # ==================== 序列空间重构 ====================

    def cmd_reconstruct(self) -> RunReport:
        """acquire -> reconstruct，输出恢复的序列"""
        def body(report: RunReport) -> None:
            cfg = self.config
            params = cfg.params()
            lat = cfg.lattice()
            a = cfg.kernel_sequence()
            c = cfg.signal()
            N = cfg.grid_n
            report.m = lat.m
            with self._stage(report, "acquire"):
                meas = acquire(c, a, lat, params)
            with self._stage(report, "reconstruct"):
                recovered = reconstruct(meas, a, lat, params, N, c.box, threshold=cfg.alpha)
            report.relative_error = relative_error(recovered, c)
            report.checks["recovery"] = report.relative_error <= cfg.recon_tol
            with self._stage(report, "write"):
                report.outputs.append(write_sequence_csv(recovered, self._output("recovered.csv")))
            self.logger.info(f"相对误差 {report.relative_error:.3e}")
            if not report.checks["recovery"]:
                raise NumericalFailure(f"重构误差 {report.relative_error:.3e} 超过 {cfg.recon_tol:.1e}")

        return self.run("reconstruct", body)

    # ==================== 平移不变空间重构 ====================

    def cmd_si_reconstruct(self) -> RunReport:
        """si_acquire -> reconstruct_si，报告系数误差"""
        def body(report: RunReport) -> None:
            cfg = self.config
            params = cfg.params()
            lat = cfg.lattice()
            gen = cfg.generator()
            a = cfg.si_kernel()
            s = cfg.coefficients()
            N = cfg.grid_n
            report.m = lat.m
            if N >= 4:
                with self._stage(report, "riesz"):
                    eta1, eta2 = riesz_bounds(params, gen, min(N, 16), cfg.trunc_k)
                report.checks["riesz"] = eta1 > cfg.alpha
            with self._stage(report, "acquire"):
                meas = si_acquire(s, gen, a, lat, params)
            with self._stage(report, "reconstruct"):
                recovered, _ = reconstruct_si(meas, gen, a, lat, params, N, cfg.coefficient_box(),
                                              threshold=cfg.alpha)
            report.relative_error = relative_error(recovered, s)
            report.checks["recovery"] = report.relative_error <= cfg.si_tol
            with self._stage(report, "write"):
                report.outputs.append(write_sequence_csv(recovered, self._output("recovered_coefficients.csv")))
            if not report.checks["recovery"]:
                raise NumericalFailure(f"系数误差 {report.relative_error:.3e} 超过 {cfg.si_tol:.1e}")

        return self.run("si-reconstruct", body)

    # ==================== 示例校验 ====================

    def cmd_paper_example(self, c1: float = 1.0, c2: float = 1.0) -> RunReport:
        """
        示例参数的完整校验：辛条件、陪集、闭式谱、行列式 sqrt(2)|c2|、往返重构

        c2 = 0 时不可恢复属于预期结果
        """
        self.config = self.config.with_kernel_weights(c1, c2)

        def body(report: RunReport) -> None:
            cfg = self.config
            with self._stage(report, "validate"):
                params = cfg.params()
                lat = cfg.lattice()
            report.residuals = params.residuals()
            report.m = lat.m
            report.gamma = [list(g) for g in lat.gamma]
            report.eta = [list(e) for e in lat.eta]
            report.checks["symplectic"] = max(report.residuals.values()) <= 1e-12
            report.checks["cosets"] = report.gamma == EXAMPLE_GAMMA

            a = example_kernel(c1, c2)
            with self._stage(report, "closed_form"):
                xi = np.random.default_rng(cfg.seed).uniform(-2.0, 2.0, size=(100, 2))
                gap = np.max(np.abs(dt_nslct(params, a, xi) - example_kernel_spectrum(c1, c2, xi)))
            report.checks["closed_form_spectrum"] = bool(gap <= 1e-10)

            with self._stage(report, "determinant"):
                field_ = system_matrix_field(a, lat, params, 100)
            expected = np.sqrt(2.0) * abs(c2)
            report.min_det = float(np.min(field_.det_magnitudes))
            report.max_cond = field_.max_cond
            report.checks["determinant"] = bool(np.max(np.abs(field_.det_magnitudes - expected)) <= 1e-9)
            is_recoverable = recoverable(report.min_det, cfg.alpha)
            report.checks["recoverability_as_expected"] = is_recoverable == (c2 != 0)
            if is_recoverable:
                with self._stage(report, "round_trip"):
                    c = cfg.signal()
                    meas = acquire(c, a, lat, params)
                    recovered = reconstruct(meas, a, lat, params, cfg.grid_n, c.box, threshold=cfg.alpha)
                report.relative_error = relative_error(recovered, c)
                report.checks["round_trip"] = report.relative_error <= cfg.recon_tol
            else:
                self.logger.warning(f"c2 = {c2}: 系统不可恢复（预期结果）")

            for name, ok in report.checks.items():
                self.logger.info(f"{name}: {'PASS' if ok else 'FAIL'}")
            failed = [name for name, ok in report.checks.items() if not ok]
            if failed:
                raise NumericalFailure(f"示例校验未通过: {failed}")

        return self.run("paper-example", body)
