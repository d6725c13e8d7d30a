"""
逐区域数据记录
  多项式算子：(n+2 choose n) 个 IEEE 754 binary32 大端系数，单项式顺序 1, x, y, x², xy, y²
  修复类算子：1 字节标志
    0 → 区域内网格像素的量化索引，按行优先顺序每个 1 字节
    1 → 空掩码回退，随后 1 字节常数量化索引
"""

import struct

import numpy as np

from core.errors import MalformedStreamError, PayloadAlignmentError, PayloadExhaustedError

FLAG_MASK = 0
FLAG_FALLBACK = 1


def poly_record(coefficients) -> bytes:
    coefficients = np.asarray(coefficients, dtype=np.float64)
    return struct.pack(f">{coefficients.size}f", *coefficients.tolist())


def mask_record(indices) -> bytes:
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() > 255):
        raise ValueError("量化索引必须落在单字节范围内")
    return bytes([FLAG_MASK]) + bytes(indices.astype(np.uint8).tolist())


def fallback_record(index: int) -> bytes:
    return bytes([FLAG_FALLBACK, int(index)])


class PayloadReader:
    """按顺序读取区域数据段，越界统一报 PayloadExhaustedError"""

    def __init__(self, body: bytes, offset: int = 0):
        self.body = body
        self.offset = offset

    def _take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.body):
            raise PayloadExhaustedError(f"读取{what}时正文已耗尽（需要 {n} 字节，剩余 "
                                        f"{len(self.body) - self.offset} 字节）")
        chunk = self.body[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def read_poly(self, count: int) -> np.ndarray:
        chunk = self._take(4 * count, "多项式系数")
        return np.array(struct.unpack(f">{count}f", chunk), dtype=np.float64)

    def read_mask(self, grid_count: int, levels: int) -> tuple:
        """返回 (标志, 索引数组)；回退记录的索引数组只有一个元素"""
        flag = self._take(1, "区域标志")[0]
        if flag == FLAG_MASK:
            if grid_count == 0:
                raise MalformedStreamError("区域内没有网格像素，却标记为带掩码数据")
            indices = np.frombuffer(self._take(grid_count, "掩码量化索引"), dtype=np.uint8)
        elif flag == FLAG_FALLBACK:
            indices = np.frombuffer(self._take(1, "回退量化索引"), dtype=np.uint8)
        else:
            raise MalformedStreamError(f"未知区域标志: {flag}")
        indices = indices.astype(np.int64)
        if indices.size and indices.max() >= levels:
            raise MalformedStreamError(f"量化索引 {int(indices.max())} 超出 {levels} 级")
        return flag, indices

    def finish(self) -> None:
        if self.offset != len(self.body):
            raise PayloadAlignmentError(f"区域数据读取完毕后正文仍有 {len(self.body) - self.offset} 字节")
