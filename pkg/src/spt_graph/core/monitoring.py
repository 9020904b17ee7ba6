"""
分阶段计时
训练、交叉验证各折、训练比例扫描各点的耗时汇总到 timing.json，与确定性的报告文件分开存放
"""

import json
import threading
import time
from dataclasses import asdict, dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional


@dataclass
class StageTiming:
    count: int = 0
    failures: int = 0
    total_seconds: float = 0.0
    max_seconds: float = 0.0

    @property
    def mean_seconds(self) -> float:
        return self.total_seconds / self.count if self.count else 0.0

    def as_dict(self) -> Dict[str, Any]:
        return {**asdict(self), "mean_seconds": self.mean_seconds}


@dataclass(frozen=True)
class StageError:
    stage: str
    message: str


class RunMonitor:
    """阶段名形如 cmd_train、cv:fold=2:train、sweep:ratio=0.3:train"""

    _instance = None
    _lock = threading.RLock()

    def __init__(self):
        self.stages: Dict[str, StageTiming] = {}
        self.errors: List[StageError] = []
        self._timers: Dict[str, float] = {}

    @classmethod
    def get_instance(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = cls()
        return cls._instance

    def record(self, stage: str, seconds: float, success: bool = True):
        with self._lock:
            timing = self.stages.setdefault(stage, StageTiming())
            timing.count += 1
            timing.failures += 0 if success else 1
            timing.total_seconds += seconds
            timing.max_seconds = max(timing.max_seconds, seconds)

    def record_error(self, stage: str, message: str):
        with self._lock:
            self.errors.append(StageError(stage, message))

    def start_timer(self, stage: str):
        self._timers[stage] = time.perf_counter()

    def stop_timer(self, stage: str, success: bool = True) -> float:
        """结束计时并记入该阶段，未开始的计时返回 0"""
        start = self._timers.pop(stage, None)
        if start is None:
            return 0.0
        seconds = time.perf_counter() - start
        self.record(stage, seconds, success)
        return seconds

    def get_metrics(self, stage: Optional[str] = None) -> Dict[str, Any]:
        with self._lock:
            if stage:
                return self.stages.get(stage, StageTiming()).as_dict()
            return {name: timing.as_dict() for name, timing in sorted(self.stages.items())}

    def reset(self):
        with self._lock:
            self.stages.clear()
            self.errors.clear()
            self._timers.clear()

    def export_metrics(self, path):
        data = {
            "stages": self.get_metrics(),
            "errors": [asdict(e) for e in self.errors],
            "export_time": datetime.now().isoformat(),
        }
        Path(path).write_text(json.dumps(data, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
