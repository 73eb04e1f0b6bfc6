"""
lctds 库使用示例
"""

import sys
import os

import numpy as np

# 添加模块路径
sys.path.append(os.path.dirname(os.path.abspath(__file__)) + '/../')
from lctds.dynamical_sampling import acquire, example_kernel, reconstruct, stability_scan
from lctds.errors import LCTError, UnstableSystem
from lctds.lattice import build_lattice
from lctds.lct_config import random_signal
from lctds.lct_core import SymplecticParams, dt_nslct
from lctds.sequences import SupportBox, relative_error
from lctds.shift_invariant import Generator, bump_kernel, reconstruct_si, riesz_bounds, si_acquire
from lctds.worker_pool import get_worker_pool


def example_sequence_space():
    """序列空间动态采样示例"""
    print("=" * 60)
    print("序列空间动态采样示例")
    print("=" * 60)

    params = SymplecticParams.example()
    lat = build_lattice([[1, 1], [1, 3]])
    print(f"✅ 参数有效, sqrt(det(iB)) = {params.sqrt_det_iB:.6f}")
    print(f"✅ m = {lat.m}, 陪集代表元 gamma = {list(lat.gamma)}")

    a = example_kernel(1.0, 1.0)
    print(f"\n📋 演化核在 xi = [0.3, 0.1] 处的变换: {dt_nslct(params, a, [0.3, 0.1]):.6f}")

    try:
        min_det, argmin_xi, _ = stability_scan(a, lat, params, 64)
        print(f"✅ 稳定性扫描: min|det A| = {min_det:.10f} @ {argmin_xi}")

        c = random_signal(7, SupportBox((0, 0), (8, 8)))
        meas = acquire(c, a, lat, params)
        print(f"✅ 获取 {meas.m} 层测量, 每层 {meas.y[0].extent}")

        recovered = reconstruct(meas, a, lat, params, 32, c.box)
        print(f"✅ 重构相对误差: {relative_error(recovered, c):.3e}")
    except LCTError as e:
        print(f"❌ 错误: {e}")

    print("\n💾 c2 = 0 的反例:")
    singular = example_kernel(1.0, 0.0)
    try:
        c = random_signal(7, SupportBox((0, 0), (4, 4)))
        reconstruct(acquire(c, singular, lat, params), singular, lat, params, 16, c.box)
    except UnstableSystem as e:
        print(f"  ✓ 按预期拒绝: {e}")


def example_shift_invariant():
    """平移不变空间动态采样示例"""
    print("\n" + "=" * 60)
    print("平移不变空间动态采样示例")
    print("=" * 60)

    params = SymplecticParams.example()
    lat = build_lattice(2 * np.eye(2, dtype=int))
    gen = Generator.bump(h=0.1, radius=0.3)
    kernel = bump_kernel([((0, 0), 1.0), ((1, 0), 0.5), ((0, 1), 0.25)], 0.1, 0.2)

    try:
        eta1, eta2 = riesz_bounds(params, gen, 8, 1)
        print(f"✅ Riesz 界: [{eta1:.6f}, {eta2:.6f}]")

        s = random_signal(11, SupportBox((0, 0), (4, 4)))
        meas = si_acquire(s, gen, kernel, lat, params)
        print(f"✅ 获取 {meas.m} 层 SI 测量")

        recovered, f = reconstruct_si(meas, gen, kernel, lat, params, 8, s.box)
        print(f"✅ 系数相对误差: {relative_error(recovered, s):.3e}")
        print(f"  函数网格: 原点 {f.origin}, 步长 {f.h}, 尺寸 {f.extent}")
    except LCTError as e:
        print(f"❌ 错误: {e}")


def main():
    """主函数"""
    print("lctds 使用示例")
    print("=" * 60)

    example_sequence_space()
    example_shift_invariant()

    stats = get_worker_pool().stats()
    print(f"\n📊 工作池: {stats['tasks_done']} 行, {stats['batches']} 批, {stats['max_workers']} 线程")
    get_worker_pool().shutdown()


if __name__ == "__main__":
    main()
