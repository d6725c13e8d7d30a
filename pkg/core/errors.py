"""
异常层级定义
全项目共用一个根异常 CodecError，CLI 层据此统一映射退出码和提示信息。
每种需要"区分报告"的错误都对应一个独立子类。
"""


class CodecError(Exception):
    """编解码器所有业务异常的根类"""


# --- 图像 / PGM ---

class PgmError(CodecError):
    """PGM 文件解析失败"""


class PgmHeaderError(PgmError):
    """文件头格式非法（魔数、宽高或 maxval 字段缺失/非数字）"""


class PgmMaxvalError(PgmError):
    """maxval 不等于 255（仅支持 8 位灰度）"""


class PgmTruncatedError(PgmError):
    """像素数据长度不足 width × height"""


class ImageValueError(CodecError):
    """像素数组长度与尺寸不符，或存在超出 [0, 255] 的样本"""


class DimensionMismatchError(CodecError):
    """两幅图像尺寸不一致"""


# --- 参数 ---

class InvalidDensityError(CodecError):
    """掩码密度不在 (0, 1] 范围内"""


class ConfigError(CodecError):
    """配置预检失败，errors 属性保存全部问题描述"""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# --- 分割 ---

class NotAdjacentError(CodecError):
    """对两个不相邻的区域请求合并增益"""


# --- 码流 / 容器 ---

class MalformedStreamError(CodecError):
    """码流损坏或不符合容器格式"""


class BadMagicError(MalformedStreamError):
    """容器魔数不是 MSCC"""


class UnsupportedVersionError(MalformedStreamError):
    """容器版本号不受支持"""


class BodyLengthMismatchError(MalformedStreamError):
    """熵解码后的正文长度与文件头记录不一致（含截断）"""


class ChainOutOfBoundsError(MalformedStreamError):
    """链码行走越出图像内部裂缝边范围"""


class PayloadExhaustedError(MalformedStreamError):
    """读取区域数据时正文已耗尽"""


class PayloadAlignmentError(MalformedStreamError):
    """区域数量与文件头或数据记录数不一致，或正文存在多余字节"""


class EntropyStreamError(MalformedStreamError):
    """熵解码器读到压缩流末尾之后"""


# --- 编码器 ---

class EncoderError(CodecError):
    """编码流程拒绝执行"""


class ImageTooLargeError(EncoderError):
    """图像宽高超出 16 位文件头字段"""


class DegenerateRateError(EncoderError):
    """区域数超过像素数的 1/4，逐区域数据已超过原始存储"""
