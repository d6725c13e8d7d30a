"""
命令行统一异常处理
业务异常（CodecError）保留具体错误信息，退出码 1；
其余异常记录完整 traceback，只向用户输出泛化信息，退出码 1。
"""

import functools
import sys
import traceback

from core.errors import CodecError, ConfigError
from core.logging import logger

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def codec_error_handler(exc: CodecError) -> int:
    """业务异常原样输出，便于区分是哪一类错误"""
    if isinstance(exc, ConfigError) and len(exc.errors) > 1:
        print(f"错误 [{type(exc).__name__}]:", file=sys.stderr)
        for msg in exc.errors:
            print(f"  - {msg}", file=sys.stderr)
    else:
        print(f"错误 [{type(exc).__name__}]: {exc}", file=sys.stderr)
    return EXIT_FAILURE


def global_exception_handler(exc: Exception) -> int:
    """兜底：traceback 写日志，不向用户泄露内部细节"""
    logger.error("未处理异常: %s\n%s", str(exc), traceback.format_exc())
    print("错误: 内部错误，详情见日志", file=sys.stderr)
    return EXIT_FAILURE


def handle_errors(func):
    """命令函数装饰器：把异常映射为退出码"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except CodecError as e:
            return codec_error_handler(e)
        except OSError as e:
            print(f"错误 [文件]: {e}", file=sys.stderr)
            return EXIT_FAILURE
        except Exception as e:
            return global_exception_handler(e)

    return wrapper
