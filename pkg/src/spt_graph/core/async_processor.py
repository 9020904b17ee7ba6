"""
并行处理器
为训练、批量分类与评估提供保序的并行 map，jobs=1 时在当前进程串行执行
"""

import concurrent.futures
import logging
import time
from typing import Any, Callable, Iterable, List

from spt_graph.core.monitoring import RunMonitor


logger = logging.getLogger(__name__)


class ParallelProcessor:
    """保序并行执行器，结果与 jobs 取值无关"""

    def __init__(self, jobs: int = 1, name: str = "parallel"):
        self.jobs = max(1, int(jobs))
        self.name = name
        self._monitor = RunMonitor.get_instance()

    def map(self, func: Callable[[Any], Any], items: Iterable[Any]) -> List[Any]:
        """
        对 items 逐个调用 func，返回与输入同序的结果列表

        func 需可被 pickle（模块级函数或其 functools.partial）
        """
        items = list(items)
        start = time.perf_counter()
        success = False
        try:
            if self.jobs == 1 or len(items) <= 1:
                results = [func(item) for item in items]
            else:
                workers = min(self.jobs, len(items))
                chunksize = max(1, len(items) // (workers * 4))
                with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
                    results = list(executor.map(func, items, chunksize=chunksize))
            success = True
            return results
        finally:
            duration = time.perf_counter() - start
            self._monitor.record(self.name, duration, success)
            logger.debug(f"{self.name}: {len(items)} 项, jobs={self.jobs}, 耗时 {duration:.3f}s")
