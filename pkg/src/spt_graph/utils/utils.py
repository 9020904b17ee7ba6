import re
import time
import hashlib
from typing import Optional


def format_real(value: Optional[float]) -> str:
    """浮点数的全精度文本表示，None 记为 undefined"""
    if value is None:
        return "undefined"
    return repr(float(value))


def parse_real(text: str) -> float:
    return float(text)


def file_sha256(path, chunk_size=65536) -> str:
    """计算文件的 SHA-256，用于运行清单"""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()


def format_log_message(msg: str, msg_type: str = "info") -> str:
    """
    统一日志格式化接口，检测并避免重复格式化

    Args:
        msg: 原始消息
        msg_type: 消息类型

    Returns:
        格式化后的消息
    """
    # 检测是否已经包含时间戳格式 [HH:MM:SS]
    timestamp_pattern = r"^\[\d{2}:\d{2}:\d{2}\]"
    if re.match(timestamp_pattern, msg.strip()):
        return msg

    # 只有类型没有时间戳，补上时间戳
    type_pattern = r"\[([A-Z]+)\]:"
    if re.search(type_pattern, msg):
        timestamp = time.strftime("%H:%M:%S")
        return f"[{timestamp}] {msg}"

    timestamp = time.strftime("%H:%M:%S")
    return f"[{timestamp}] [{msg_type.upper()}]: {msg}"
