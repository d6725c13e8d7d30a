"""
规则网格掩码
掩码只由 (width, height, d) 决定，解码端凭文件头里的定点密度即可重建同一组像素。
判定规则：⌊(x+1)·√d⌋ > ⌊x·√d⌋ 且 ⌊(y+1)·√d⌋ > ⌊y·√d⌋。
为避免浮点开方在边界处的平台差异，统一按定点密度 D = round(d·10000) 做整数运算：
⌊x·√(D/10000)⌋ = isqrt(⌊x²·D / 10000⌋)。
"""

import math
from math import isqrt

import numpy as np

from core.config import DENSITY_SCALE
from core.errors import InvalidDensityError


def density_to_fixed(d: float) -> int:
    """密度 → 定点整数 round(d·10000)；d 必须在 (0, 1] 内且舍入后不为 0"""
    try:
        d = float(d)
    except (TypeError, ValueError):
        raise InvalidDensityError(f"密度必须为实数，当前: {d!r}") from None
    if not (0.0 < d <= 1.0):
        raise InvalidDensityError(f"密度必须在 (0, 1] 范围内，当前: {d}")
    fixed = math.floor(d * DENSITY_SCALE + 0.5)
    if fixed == 0:
        raise InvalidDensityError(f"密度 {d} 低于定点精度 1/{DENSITY_SCALE}")
    return fixed


def fixed_to_density(fixed: int) -> float:
    if not 1 <= int(fixed) <= DENSITY_SCALE:
        raise InvalidDensityError(f"定点密度必须在 [1, {DENSITY_SCALE}] 内，当前: {fixed}")
    return int(fixed) / DENSITY_SCALE


def quantize_density(d: float) -> float:
    """编码端实际使用的密度（经过一次定点往返）"""
    return fixed_to_density(density_to_fixed(d))


def _axis_hits(n: int, fixed: int) -> np.ndarray:
    """单个坐标轴上被选中的位置"""
    return np.array(
        [isqrt((x + 1) * (x + 1) * fixed // DENSITY_SCALE) > isqrt(x * x * fixed // DENSITY_SCALE)
         for x in range(n)],
        dtype=bool,
    )


def build_grid_mask(width: int, height: int, d: float) -> np.ndarray:
    """
    返回 (height, width) 布尔数组，True 为掩码像素。
    d = 1/k² 时两个方向的网格间距恰好为 k。
    """
    fixed = density_to_fixed(d)
    return np.outer(_axis_hits(height, fixed), _axis_hits(width, fixed))


def grid_positions(grid: np.ndarray) -> list:
    """掩码像素坐标列表 [(x, y), ...]，行优先顺序"""
    ys, xs = np.nonzero(grid)
    return list(zip(xs.tolist(), ys.tolist()))
