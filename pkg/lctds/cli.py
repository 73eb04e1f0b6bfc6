"""
命令行入口
validate | detmap | reconstruct | si-reconstruct | paper-example
"""

import logging
import os
import sys
from dataclasses import replace
from typing import Optional

import click

from .errors import ConfigParseError
from .lct_config import ExperimentConfig, load_config
from .runner import ExperimentRunner

logger = logging.getLogger(__name__)


def _setup_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, os.getenv("LCTDS_LOG_LEVEL", "INFO").upper(),
                                                  logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


def _load(config_path: Optional[str], grid_n: Optional[int], seed: Optional[int],
          threshold: Optional[float], seed_field: str = "seed") -> ExperimentConfig:
    """读取配置并应用命令行覆盖；解析失败时以退出码 1 结束"""
    overrides = {}
    if grid_n is not None:
        overrides["grid_n"] = grid_n
    if seed is not None:
        overrides[seed_field] = seed
    if threshold is not None:
        overrides["alpha"] = threshold
    try:
        config = load_config(config_path)
        return replace(config, **overrides) if overrides else config
    except ConfigParseError as e:
        logger.error(f"配置错误: {e}")
        click.echo(f"配置错误: {e}", err=True)
        sys.exit(e.exit_code)


def _finish(report) -> None:
    if report.checks:
        click.echo(report.check_table().to_string(index=False))
    if report.error:
        click.echo(report.error, err=True)
    sys.exit(report.exit_code)


def _common_options(fn):
    fn = click.option("--threshold", type=float, default=None, help="稳定性阈值 alpha")(fn)
    fn = click.option("--seed", type=int, default=None, help="随机信号种子")(fn)
    fn = click.option("--grid-n", type=int, default=None, help="环面网格分辨率 N")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="输出目录")(fn)
    fn = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                      help="INI 配置文件")(fn)
    return fn


@click.group()
@click.option("--verbose", is_flag=True, help="输出 DEBUG 日志")
def main(verbose: bool):
    """二维非可分 LCT 动态采样实验工具"""
    _setup_logging(verbose)


@main.command()
@_common_options
def validate(config_path, out_dir, grid_n, seed, threshold):
    """校验参数矩阵并列出陪集代表元"""
    config = _load(config_path, grid_n, seed, threshold)
    report = ExperimentRunner(config, out_dir).cmd_validate()
    if report.exit_code == 0:
        click.echo(f"m = {report.m}, gamma = {report.gamma}, eta = {report.eta}")
    _finish(report)


@main.command()
@_common_options
def detmap(config_path, out_dir, grid_n, seed, threshold):
    """导出 |det A(xi)| 网格 (detmap.csv)"""
    config = _load(config_path, grid_n, seed, threshold)
    report = ExperimentRunner(config, out_dir).cmd_detmap()
    if report.exit_code == 0:
        click.echo(f"min|det| = {report.min_det:.10g} @ xi = {report.argmin_xi}")
    _finish(report)


@main.command()
@_common_options
def reconstruct(config_path, out_dir, grid_n, seed, threshold):
    """序列空间动态采样重构 (recovered.csv)"""
    config = _load(config_path, grid_n, seed, threshold)
    report = ExperimentRunner(config, out_dir).cmd_reconstruct()
    if report.relative_error is not None:
        click.echo(f"relative error = {report.relative_error:.3e}")
    _finish(report)


@main.command("si-reconstruct")
@_common_options
def si_reconstruct(config_path, out_dir, grid_n, seed, threshold):
    """平移不变空间动态采样重构 (recovered_coefficients.csv)"""
    config = _load(config_path, grid_n, seed, threshold, seed_field="coeff_seed")
    report = ExperimentRunner(config, out_dir).cmd_si_reconstruct()
    if report.relative_error is not None:
        click.echo(f"coefficient error = {report.relative_error:.3e}")
    _finish(report)


@main.command("paper-example")
@click.option("--c1", type=float, default=1.0, show_default=True, help="a(-1,-1)")
@click.option("--c2", type=float, default=1.0, show_default=True, help="a(-1,-2)")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="输出目录")
@click.option("--grid-n", type=int, default=None, help="往返重构的网格分辨率 N")
@click.option("--seed", type=int, default=None, help="随机信号种子")
def paper_example(c1, c2, out_dir, grid_n, seed):
    """运行内置示例的完整校验"""
    config = _load(None, grid_n, seed, None)
    report = ExperimentRunner(config, out_dir).cmd_paper_example(c1, c2)
    click.echo(f"min|det| = {report.min_det}, expected sqrt(2)|c2| = {2 ** 0.5 * abs(c2):.10g}")
    _finish(report)


if __name__ == "__main__":
    main()
