import logging
import sys
import threading
import time
import traceback
from datetime import datetime

from spt_graph.utils import utils


class FileLoggingHandler:
    """统一的文件日志处理器"""

    def __init__(self, log_file_path):
        self.log_file_path = log_file_path
        self._lock = threading.Lock()

    def write_log(self, msg_dict):
        """
        写入日志到文件

        Args:
            msg_dict: 包含type, message, timestamp的字典
        """
        try:
            with self._lock:
                timestamp = msg_dict.get("timestamp", time.time())
                msg_type = msg_dict.get("type", "info")
                message = msg_dict.get("message", "")

                log_entry = f"[{datetime.fromtimestamp(timestamp).strftime('%Y-%m-%d %H:%M:%S')}] [{msg_type.upper()}]: {message}"  # noqa 501

                with open(self.log_file_path, "a", encoding="utf-8") as f:
                    f.write(log_entry + "\n")
                    f.flush()
        except Exception:
            # 静默处理文件写入错误
            pass


class LogManager:
    """
    日志管理器 - 负责日志的输出目标与静默模式
    完全独立于配置系统，避免循环依赖
    """

    _instance = None
    _lock = threading.Lock()

    def __init__(self):
        if hasattr(self, "_initialized"):
            return
        self._initialized = True
        self._quiet = False
        self._file_handler = None

    @classmethod
    def get_instance(cls):
        """get the single instance of LogManager"""
        with cls._lock:
            if cls._instance is None:
                cls._instance = cls()
            return cls._instance

    def set_file_handler(self, log_file_path):
        """设置文件日志处理器，传入 None 表示关闭"""
        self._file_handler = FileLoggingHandler(log_file_path) if log_file_path else None

    def get_file_handler(self):
        return self._file_handler

    def set_quiet(self, quiet: bool):
        self._quiet = quiet

    def is_quiet(self) -> bool:
        return self._quiet


# 全局日志管理器实例
_log_manager = LogManager.get_instance()


def init_cli_mode(log_file_path=None, verbose=False, quiet=False):
    """初始化命令行日志：终端输出 + 可选的运行日志文件"""
    _log_manager.set_file_handler(log_file_path)
    _log_manager.set_quiet(quiet)

    root_logger = logging.getLogger("spt_graph")
    root_logger.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("[%(asctime)s][%(levelname)s][%(name)s]: %(message)s"))
    root_logger.addHandler(handler)
    root_logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    root_logger.propagate = False


def print_log(msg, msg_type="status"):
    """
    统一日志接口函数：终端打印，并在设置了文件处理器时追加到运行日志

    Args:
        msg: 日志消息
        msg_type: 消息类型
    """
    file_handler = _log_manager.get_file_handler()
    if file_handler is not None:
        file_handler.write_log({"type": msg_type, "message": msg, "timestamp": time.time()})

    if _log_manager.is_quiet() and msg_type not in ("error", "warning"):
        return

    print(utils.format_log_message(msg, msg_type))


def print_traceback(what, e):
    """统一错误追踪接口函数"""
    error_traceback = traceback.format_exc()
    tb = e.__traceback__
    if tb is not None:
        while tb.tb_next is not None:
            tb = tb.tb_next
        location = f"{tb.tb_frame.f_code.co_filename}:{tb.tb_lineno}"
    else:
        location = "unknown"

    ret = f"{what}发生错误: {str(e)}\n错误位置: {location}\n错误详情:{error_traceback}"

    print_log(ret, "error")
    return ret
