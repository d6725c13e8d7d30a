"""
灰度图像与 PGM 读写
Image 以实数保存像素，仅在 PGM 输出和量化时取整。
只支持二进制 P5、maxval = 255 的单通道格式。
"""

from dataclasses import dataclass

import numpy as np

from core.errors import (
    ImageValueError,
    PgmHeaderError,
    PgmMaxvalError,
    PgmTruncatedError,
)

_WHITESPACE = b" \t\n\r\v\f"


@dataclass
class Image:
    """
    矩形灰度图像。
    samples 为 (height, width) 的 float64 数组，按行优先存储，取值范围 [0, 255]。
    """

    width: int
    height: int
    samples: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ImageValueError(f"图像尺寸必须为正整数，当前: {self.width}×{self.height}")
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.size != self.width * self.height:
            raise ImageValueError(
                f"像素个数 {arr.size} 与尺寸 {self.width}×{self.height} 不符"
            )
        arr = arr.reshape(self.height, self.width)
        if arr.size and (arr.min() < 0.0 or arr.max() > 255.0 or not np.all(np.isfinite(arr))):
            raise ImageValueError("像素值必须位于 [0, 255]")
        self.samples = arr

    @classmethod
    def from_array(cls, array) -> "Image":
        """由二维数组构造图像（行 = y，列 = x）"""
        arr = np.asarray(array, dtype=np.float64)
        if arr.ndim != 2:
            raise ImageValueError(f"需要二维数组，当前维数: {arr.ndim}")
        return cls(width=arr.shape[1], height=arr.shape[0], samples=arr)

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    def rounded(self) -> np.ndarray:
        """就近取整（0.5 向上）并截断到 [0, 255] 的 uint8 数组"""
        return np.clip(np.floor(self.samples + 0.5), 0, 255).astype(np.uint8)


# --- PGM 解析 ---

def _next_token(data: bytes, pos: int) -> tuple:
    """跳过空白和注释，返回 (token, 结束位置)"""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c in _WHITESPACE and c:
            pos += 1
        elif c == b"#":
            end = data.find(b"\n", pos)
            pos = n if end < 0 else end + 1
        else:
            break
    start = pos
    while pos < n and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PgmHeaderError("文件头字段缺失")
    return data[start:pos], pos


def _parse_positive_int(token: bytes, field: str) -> int:
    if not token.isdigit():
        raise PgmHeaderError(f"文件头字段 {field} 不是十进制整数: {token[:16]!r}")
    return int(token)


def read_pgm(data: bytes) -> Image:
    """解析二进制 PGM（P5, maxval 255）字节串"""
    if data[:2] != b"P5":
        raise PgmHeaderError(f"魔数必须为 P5，当前: {data[:2]!r}")

    pos = 2
    width_tok, pos = _next_token(data, pos)
    height_tok, pos = _next_token(data, pos)
    maxval_tok, pos = _next_token(data, pos)
    width = _parse_positive_int(width_tok, "width")
    height = _parse_positive_int(height_tok, "height")
    maxval = _parse_positive_int(maxval_tok, "maxval")
    if width == 0 or height == 0:
        raise PgmHeaderError(f"宽高必须为正: {width}×{height}")
    if maxval != 255:
        raise PgmMaxvalError(f"仅支持 maxval 255，当前: {maxval}")

    # maxval 之后恰好一个空白字节，随后是像素数据
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise PgmTruncatedError("文件头后缺少像素数据")
    pos += 1

    expected = width * height
    payload = data[pos:pos + expected]
    if len(payload) < expected:
        raise PgmTruncatedError(f"像素数据不足: 需要 {expected} 字节，实际 {len(payload)}")

    samples = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    return Image(width=width, height=height, samples=samples)


def write_pgm(img: Image) -> bytes:
    """输出二进制 PGM，文件头固定为 "P5\\n<w> <h>\\n255\\n"，像素就近取整"""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.rounded().tobytes()


def load_pgm(path: str) -> Image:
    with open(path, "rb") as f:
        return read_pgm(f.read())


def save_pgm(img: Image, path: str) -> None:
    with open(path, "wb") as f:
        f.write(write_pgm(img))
