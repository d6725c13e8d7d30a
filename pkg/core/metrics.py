"""
质量与码率指标
MSE / PSNR / bpp。完全相同的两幅图像 PSNR 记为 LOSSLESS（正无穷）哨兵值。
"""

import math

import numpy as np

from core.errors import DimensionMismatchError
from core.image import Image

LOSSLESS = math.inf


def _check_dims(a: Image, b: Image) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatchError(
            f"图像尺寸不一致: {a.width}×{a.height} vs {b.width}×{b.height}"
        )


def mse(a: Image, b: Image) -> float:
    """逐像素平方差的均值"""
    _check_dims(a, b)
    diff = a.samples - b.samples
    return float(np.mean(diff * diff))


def psnr(a: Image, b: Image) -> float:
    """10·log10(255² / mse)，mse = 0 时返回 LOSSLESS"""
    err = mse(a, b)
    if err == 0.0:
        return LOSSLESS
    return 10.0 * math.log10(255.0 * 255.0 / err)


def is_lossless(value: float) -> bool:
    return math.isinf(value) and value > 0


def format_psnr(value: float) -> str:
    """CLI 输出格式：无损时输出 lossless"""
    return "lossless" if is_lossless(value) else f"{value:.2f}"


def bits_per_pixel(stream_length_bytes: int, img: Image) -> float:
    """8·字节数 / 像素数，字节数按整个容器（含文件头）计"""
    return 8.0 * stream_length_bytes / (img.width * img.height)
