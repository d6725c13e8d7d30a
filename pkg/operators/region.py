"""
区域视图与掩码数据
RegionView 持有一个分割区域的像素坐标（内部统一按行优先排序），
MaskData 持有区域内的掩码像素位置及其（反量化后的）灰度值。
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from core.errors import ImageValueError


class RegionView:
    """
    单个区域 Ω_i 的像素集合。
    像素按 y·width + x 升序保存，因此同一像素集合无论输入顺序如何都得到同一视图。
    """

    def __init__(self, xs, ys, width: int, height: int):
        xs = np.asarray(xs, dtype=np.int64).ravel()
        ys = np.asarray(ys, dtype=np.int64).ravel()
        if xs.shape != ys.shape:
            raise ImageValueError("区域坐标 xs / ys 长度不一致")
        if xs.size and (xs.min() < 0 or ys.min() < 0 or xs.max() >= width or ys.max() >= height):
            raise ImageValueError("区域坐标超出图像范围")
        flat = ys * width + xs
        order = np.argsort(flat, kind="stable")
        flat = flat[order]
        if flat.size > 1 and np.any(flat[1:] == flat[:-1]):
            raise ImageValueError("区域坐标存在重复像素")
        self.width = int(width)
        self.height = int(height)
        self.flat = flat
        self.xs = xs[order]
        self.ys = ys[order]

    # ── 构造 ──

    @classmethod
    def from_flat(cls, flat, width: int, height: int) -> "RegionView":
        flat = np.asarray(flat, dtype=np.int64)
        return cls(flat % width, flat // width, width, height)

    @classmethod
    def from_mask(cls, member: np.ndarray) -> "RegionView":
        """由 (height, width) 布尔数组构造"""
        ys, xs = np.nonzero(member)
        return cls(xs, ys, member.shape[1], member.shape[0])

    @classmethod
    def full(cls, width: int, height: int) -> "RegionView":
        return cls.from_flat(np.arange(width * height), width, height)

    # ── 基本属性 ──

    def __len__(self):
        return int(self.flat.size)

    @property
    def size(self) -> int:
        return int(self.flat.size)

    @cached_property
    def bbox(self) -> tuple:
        """(x0, y0, 宽, 高) 外接矩形"""
        x0, y0 = int(self.xs.min()), int(self.ys.min())
        return x0, y0, int(self.xs.max()) - x0 + 1, int(self.ys.max()) - y0 + 1

    @cached_property
    def member(self) -> np.ndarray:
        """全图尺寸的成员布尔数组"""
        m = np.zeros(self.width * self.height, dtype=bool)
        m[self.flat] = True
        return m.reshape(self.height, self.width)

    @cached_property
    def local_index(self) -> np.ndarray:
        """外接矩形内的局部索引表：区域像素为其序号，其余为 -1"""
        x0, y0, bw, bh = self.bbox
        grid = np.full((bh, bw), -1, dtype=np.int64)
        grid[self.ys - y0, self.xs - x0] = np.arange(self.size)
        return grid

    def centroid(self) -> tuple:
        return float(self.xs.mean()), float(self.ys.mean())

    def values(self, samples: np.ndarray) -> np.ndarray:
        """取出区域像素在 (height, width) 数组中的值（行优先顺序）"""
        return samples[self.ys, self.xs]


@dataclass
class MaskData:
    """
    区域内的已知数据：掩码像素位置（索引集 M_i）及其灰度值。
    positions 以区域像素序号表示，values 与之一一对应。
    """

    positions: np.ndarray
    values: np.ndarray
    density: float
    indices: Optional[np.ndarray] = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.positions.shape != self.values.shape:
            raise ImageValueError("掩码位置与取值个数不一致")

    def __len__(self):
        return int(self.positions.size)

    @property
    def is_empty(self) -> bool:
        return self.positions.size == 0


def region_mask_positions(region: RegionView, grid: np.ndarray) -> np.ndarray:
    """全局网格掩码与区域的交集，返回区域内序号（行优先）"""
    return np.nonzero(grid[region.ys, region.xs])[0]
