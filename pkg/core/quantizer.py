"""
灰度量化器
quantize(v) = round(v·(q−1)/255)，dequantize(i) = round(i·255/(q−1))，
取整统一为"0.5 向上"，保证跨平台确定。
"""

import numpy as np

from core.errors import ConfigError


class Quantizer:
    """q 级均匀量化，q ∈ [2, 256]；0 与 255 在两个方向上都映射到自身"""

    def __init__(self, levels: int):
        if not isinstance(levels, (int, np.integer)) or not 2 <= levels <= 256:
            raise ConfigError(f"量化级数必须为 [2, 256] 内的整数，当前: {levels!r}")
        self.levels = int(levels)

    def __repr__(self):
        return f"Quantizer(levels={self.levels})"

    def __eq__(self, other):
        return isinstance(other, Quantizer) and other.levels == self.levels

    def __hash__(self):
        return hash(self.levels)

    def quantize(self, v):
        """灰度 → 量化索引；输入截断到 [0, 255]，标量输入返回 int"""
        arr = np.clip(np.asarray(v, dtype=np.float64), 0.0, 255.0)
        idx = np.floor(arr * (self.levels - 1) / 255.0 + 0.5).astype(np.int64)
        return int(idx) if idx.ndim == 0 else idx

    def dequantize(self, i):
        """量化索引 → 灰度；输入截断到 [0, q−1]，标量输入返回 float"""
        arr = np.clip(np.asarray(i, dtype=np.int64), 0, self.levels - 1)
        val = np.floor(arr * 255.0 / (self.levels - 1) + 0.5)
        return float(val) if val.ndim == 0 else val

    def requantize(self, v):
        """dequantize(quantize(v))：量化后可重建的灰度"""
        return self.dequantize(self.quantize(v))


def quantize(v, q: Quantizer):
    return q.quantize(v)


def dequantize(i, q: Quantizer):
    return q.dequantize(i)
