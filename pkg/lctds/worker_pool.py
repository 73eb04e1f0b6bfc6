"""
网格扫描线程池
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from threading import Lock
from typing import Callable, Dict, List, Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")


def _default_workers() -> int:
    env = os.getenv("LCTDS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            logger.warning(f"LCTDS_THREADS 无法解析: {env!r}, 使用默认值")
    return min(4, os.cpu_count() or 1)


class GridWorkerPool:
    """按行并行的网格工作池"""

    def __init__(self, max_workers: Optional[int] = None):
        """
        初始化工作池

        Args:
            max_workers: 最大线程数，默认读取 LCTDS_THREADS
        """
        self.max_workers = max_workers or _default_workers()
        self._executor: Optional[ThreadPoolExecutor] = None
        self._lock = Lock()
        self._tasks_done = 0
        self._batches = 0

    def _get_executor(self) -> ThreadPoolExecutor:
        with self._lock:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=self.max_workers,
                                                    thread_name_prefix="lctds-grid")
            return self._executor

    def map_rows(self, fn: Callable[[int], T], n_rows: int) -> List[T]:
        """
        对 0..n_rows-1 逐行求值

        Returns:
            按行号排序的结果列表（与调度顺序无关）
        """
        if n_rows <= 0:
            return []
        if self.max_workers == 1 or n_rows == 1:
            results = [fn(i) for i in range(n_rows)]
        else:
            results = list(self._get_executor().map(fn, range(n_rows)))
        with self._lock:
            self._tasks_done += n_rows
            self._batches += 1
        return results

    @contextmanager
    def session(self):
        """批处理上下文，退出时记录统计"""
        start = self.stats()["tasks_done"]
        try:
            yield self
        finally:
            logger.debug(f"工作池本批完成 {self.stats()['tasks_done'] - start} 行")

    def shutdown(self) -> None:
        """关闭线程池"""
        with self._lock:
            if self._executor is not None:
                self._executor.shutdown(wait=True)
                self._executor = None

    def stats(self) -> Dict:
        """获取工作池统计信息"""
        with self._lock:
            return {
                "max_workers": self.max_workers,
                "started": self._executor is not None,
                "tasks_done": self._tasks_done,
                "batches": self._batches,
            }


# 全局工作池实例
_pool_instance = None
_pool_lock = Lock()


def get_worker_pool(max_workers: Optional[int] = None) -> GridWorkerPool:
    """
    获取全局工作池实例（单例模式）

    Args:
        max_workers: 首次创建时使用的线程数

    Returns:
        工作池实例
    """
    global _pool_instance

    with _pool_lock:
        if _pool_instance is None:
            _pool_instance = GridWorkerPool(max_workers)

        return _pool_instance


def reset_worker_pool() -> None:
    """关闭并丢弃全局实例（测试与线程数变更时使用）"""
    global _pool_instance

    with _pool_lock:
        if _pool_instance is not None:
            _pool_instance.shutdown()
        _pool_instance = None
