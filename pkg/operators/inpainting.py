"""
修复类算子公共部分
全局网格掩码与区域求交得到已知像素，灰度按 q 级量化后参与重建；
区域内没有网格点时退化为常数重建，取值为区域均值的量化值。
"""

from abc import abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.image import Image
from core.quantizer import Quantizer
from mask.grid import build_grid_mask, quantize_density
from operators.base import ReconstructionOperator
from operators.region import MaskData, RegionView, region_mask_positions


@dataclass
class InpaintingStats:
    """
    合并阶段缓存的区域状态。
    flat 为升序扁平索引，u 为与之对齐的当前重建值；mask_flat 为区域内的网格像素（升序），
    为空时 u 是常数回退值。total / total_sq 为区域灰度的一阶、二阶和。
    """

    flat: np.ndarray
    u: np.ndarray
    mask_flat: np.ndarray
    total: float
    total_sq: float
    sse: float

    @property
    def count(self) -> int:
        return int(self.flat.size)

    @property
    def has_mask(self) -> bool:
        return self.mask_flat.size > 0


class InpaintingOperator(ReconstructionOperator):
    """
    修复类算子基类。
    合并阶段的统计量是 InpaintingStats：两侧都没有网格像素时并集误差直接由灰度和算出，
    否则由子类决定如何复用两侧已有的重建结果。
    """

    _stats_type = InpaintingStats

    def __init__(self, width: int, height: int, density: float, levels: int):
        self.width = int(width)
        self.height = int(height)
        self.density = quantize_density(density)
        self.quantizer = Quantizer(levels)
        self.grid = build_grid_mask(self.width, self.height, self.density)
        self._grid_flat = self.grid.ravel()

    def __repr__(self):
        return (f"{type(self).__name__}(width={self.width}, height={self.height}, "
                f"density={self.density}, levels={self.quantizer.levels})")

    # ── 已知数据 ──

    def known_data(self, region: RegionView, f: Image,
                   indices: Optional[np.ndarray] = None) -> MaskData:
        """区域内网格像素及其量化值；indices 缺省时取 quantize(f)"""
        positions = region_mask_positions(region, self.grid)
        if indices is None:
            indices = self.quantizer.quantize(region.values(f.samples)[positions])
        indices = np.asarray(indices, dtype=np.int64)
        return MaskData(positions, self.quantizer.dequantize(indices), self.density, indices)

    def fallback_index(self, region: RegionView, f: Image) -> int:
        """空掩码区域的常数量化索引：quantize(区域均值)"""
        values = region.values(f.samples)
        return self.quantizer.quantize(float(np.sum(values)) / values.size)

    def fallback_value(self, index: int) -> float:
        return self.quantizer.dequantize(int(index))

    # ── 重建 ──

    @abstractmethod
    def reconstruct(self, region: RegionView, mask: MaskData) -> np.ndarray:
        """非空掩码下的区域重建，返回按区域行优先顺序排列的取值"""

    def reconstruct_region(self, region: RegionView, f: Image) -> np.ndarray:
        """编码端视角的重建：量化掩码值，空掩码时用常数退化"""
        mask = self.known_data(region, f)
        if mask.is_empty:
            return np.full(region.size, self.fallback_value(self.fallback_index(region, f)))
        return self.reconstruct(region, mask)

    def region_sse(self, region: RegionView, f: Image, known: Optional[MaskData] = None) -> float:
        if known is None:
            u = self.reconstruct_region(region, f)
        elif known.is_empty:
            u = np.full(region.size, self.fallback_value(self.fallback_index(region, f)))
        else:
            u = self.reconstruct(region, known)
        diff = u - region.values(f.samples)
        return float(diff @ diff)

    # ── 合并统计量 ──

    def _mask_values(self, f: Image, mask_flat: np.ndarray) -> np.ndarray:
        """网格像素的编码端取值 dequantize(quantize(f))"""
        return self.quantizer.requantize(f.samples.ravel()[mask_flat])

    def _constant_fit(self, count: int, total: float, total_sq: float) -> tuple:
        """无网格像素区域的 (常数重建值, 误差)，误差由一阶、二阶和直接算出"""
        c = self.fallback_value(self.quantizer.quantize(total / count))
        return c, max(0.0, total_sq - 2.0 * c * total + count * c * c)

    def _constant_stats(self, flat: np.ndarray, total: float, total_sq: float) -> InpaintingStats:
        c, sse = self._constant_fit(flat.size, total, total_sq)
        return self._stats_type(
            flat=flat, u=np.full(flat.size, c), mask_flat=flat[:0],
            total=total, total_sq=total_sq, sse=sse,
        )

    def region_stats(self, f: Image, flat: np.ndarray) -> InpaintingStats:
        flat = np.sort(np.asarray(flat, dtype=np.int64))
        values = f.samples.ravel()[flat]
        total, total_sq = float(np.sum(values)), float(values @ values)
        mask_flat = flat[self._grid_flat[flat]]
        if mask_flat.size == 0:
            return self._constant_stats(flat, total, total_sq)
        return self._reconstruct_stats(f, flat, mask_flat, total, total_sq)

    def merge_stats(self, f: Image, a: InpaintingStats, b: InpaintingStats) -> InpaintingStats:
        total, total_sq = a.total + b.total, a.total_sq + b.total_sq
        if not a.has_mask and not b.has_mask:
            return self._constant_stats(np.sort(np.concatenate([a.flat, b.flat])), total, total_sq)
        return self._merge_masked(f, a, b, total, total_sq)

    def stats_sse(self, f: Image, stats: InpaintingStats) -> float:
        return stats.sse

    @abstractmethod
    def _reconstruct_stats(self, f: Image, flat: np.ndarray, mask_flat: np.ndarray,
                           total: float, total_sq: float) -> InpaintingStats:
        """至少含一个网格像素的区域：完整重建"""

    @abstractmethod
    def _merge_masked(self, f: Image, a: InpaintingStats, b: InpaintingStats,
                      total: float, total_sq: float) -> InpaintingStats:
        """至少一侧含网格像素时的并集统计量"""
