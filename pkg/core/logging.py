"""
日志配置模块
统一日志格式和输出方式，全项目共用 logger 实例。
标准输出留给 CLI 的结果行，日志一律写 stderr。
"""

import os
import sys
import logging

logger = logging.getLogger("mscodec")
logger.setLevel(os.environ.get("MSCODEC_LOG_LEVEL", "INFO").upper())

_stderr_handler = logging.StreamHandler(sys.stderr)
_stderr_handler.setFormatter(logging.Formatter(
    "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
))
logger.addHandler(_stderr_handler)
logger.propagate = False


def set_verbosity(verbose: bool) -> None:
    """CLI 启动时切换日志级别：verbose → DEBUG，否则 INFO"""
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
