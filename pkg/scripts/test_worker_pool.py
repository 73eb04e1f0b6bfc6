#!/usr/bin/env python3
"""
网格工作池测试
"""

import sys
import os
import time

import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)) + '/../')
from lctds.worker_pool import GridWorkerPool, get_worker_pool, reset_worker_pool


@pytest.fixture(autouse=True)
def fresh_pool():
    reset_worker_pool()
    yield
    reset_worker_pool()


def test_map_rows_keeps_order():
    pool = GridWorkerPool(4)

    def slow_square(i):
        time.sleep(0.001 * (8 - i))
        return i * i

    assert pool.map_rows(slow_square, 8) == [i * i for i in range(8)]
    assert pool.map_rows(slow_square, 0) == []
    pool.shutdown()


def test_serial_pool_never_starts_threads():
    pool = GridWorkerPool(1)
    assert pool.map_rows(lambda i: -i, 5) == [0, -1, -2, -3, -4]
    assert pool.stats()["started"] is False


def test_stats_and_session():
    pool = GridWorkerPool(2)
    with pool.session() as active:
        active.map_rows(lambda i: i, 3)
        active.map_rows(lambda i: i, 4)
    stats = pool.stats()
    assert stats["tasks_done"] == 7
    assert stats["batches"] == 2
    assert stats["max_workers"] == 2
    assert stats["started"] is True
    pool.shutdown()
    assert pool.stats()["started"] is False


def test_singleton_and_reset():
    first = get_worker_pool(3)
    assert get_worker_pool() is first
    assert first.max_workers == 3
    reset_worker_pool()
    assert get_worker_pool() is not first


def test_thread_count_from_env(monkeypatch):
    monkeypatch.setenv("LCTDS_THREADS", "2")
    assert GridWorkerPool().max_workers == 2
    monkeypatch.setenv("LCTDS_THREADS", "lots")
    assert GridWorkerPool().max_workers >= 1
