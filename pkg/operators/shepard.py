"""
Shepard 插值
u_j = Σ w(x_k − x_j)·f_k / Σ w(x_k − x_j)，只对同一区域内的掩码像素求和。
w 为截断高斯，σ = 1/√(π·d)，截断窗口以目标像素为中心、半宽 ⌈2σ⌉。

高斯核可分离，分子分母都用 scipy.ndimage.correlate1d 在区域外接矩形上做两次一维相关，
区域外的位置既不是掩码也不参与求和，因此与逐像素加权平均完全等价。

区域合并时并集的重建值只在对侧掩码窗口覆盖到的像素上变化（另加原来走最近点回退的像素），
其余像素直接沿用两侧缓存的结果。
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import correlate1d, maximum_filter, minimum_filter

from core.image import Image
from operators.base import OperatorId
from operators.inpainting import InpaintingOperator, InpaintingStats
from operators.region import MaskData, RegionView

# 最近邻回退按块计算距离矩阵，限制单次内存
_NEAREST_CHUNK = 4096


def shepard_window(density: float) -> tuple:
    """返回 (σ, 半宽 r, 一维核)，核长度 2r+1"""
    sigma = 1.0 / math.sqrt(math.pi * density)
    half = math.ceil(2.0 * sigma)
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    return sigma, half, np.exp(-offsets * offsets / (2.0 * sigma * sigma))


def _nearest_mask(px: np.ndarray, py: np.ndarray, mx: np.ndarray, my: np.ndarray) -> np.ndarray:
    """
    每个目标像素的最近掩码像素序号（欧氏距离）。
    掩码按行优先排列，argmin 取第一个最小值，即平局时行优先靠前者胜出。
    """
    out = np.empty(px.size, dtype=np.int64)
    for start in range(0, px.size, _NEAREST_CHUNK):
        sl = slice(start, start + _NEAREST_CHUNK)
        dx = px[sl, None] - mx[None, :]
        dy = py[sl, None] - my[None, :]
        out[sl] = np.argmin(dx * dx + dy * dy, axis=1)
    return out


class ShepardField:
    """
    单个区域的 Shepard 重建状态。
    除一次性重建外，还支持修改单个掩码值后只在其窗口内做增量更新，供色调优化使用。
    """

    def __init__(self, region: RegionView, positions: np.ndarray, values: np.ndarray, density: float):
        positions = np.asarray(positions, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if positions.size == 0:
            raise ValueError("Shepard 插值需要非空掩码")
        order = np.argsort(positions, kind="stable")
        self.region = region
        self.positions = positions[order]
        self.values = values[order].copy()
        self.sigma, self.half, self.kernel = shepard_window(density)

        x0, y0, bw, bh = region.bbox
        self.local_index = region.local_index
        self.lx = region.xs - x0
        self.ly = region.ys - y0
        self.mask_lx = self.lx[self.positions]
        self.mask_ly = self.ly[self.positions]

        self.mask_of_pixel = np.full(region.size, -1, dtype=np.int64)
        self.mask_of_pixel[self.positions] = np.arange(self.positions.size)

        value_grid = np.zeros((bh, bw))
        weight_grid = np.zeros((bh, bw))
        value_grid[self.mask_ly, self.mask_lx] = self.values
        weight_grid[self.mask_ly, self.mask_lx] = 1.0
        self.num = self._smooth(value_grid)
        self.den = self._smooth(weight_grid)

        self.hi = np.full((bh, bw), -np.inf)
        self.lo = np.full((bh, bw), np.inf)
        self.hi[self.mask_ly, self.mask_lx] = self.values
        self.lo[self.mask_ly, self.mask_lx] = self.values

        # 窗口内没有掩码像素的区域像素：取最近掩码像素的值
        empty = (self.den[self.ly, self.lx] <= 0.0) & (self.mask_of_pixel < 0)
        self.nearest = np.full(region.size, -1, dtype=np.int64)
        fallback = np.nonzero(empty)[0]
        if fallback.size:
            self.nearest[fallback] = _nearest_mask(
                region.xs[fallback], region.ys[fallback],
                region.xs[self.positions], region.ys[self.positions],
            )
        self.fallback_by_mask = {}
        for pixel in fallback.tolist():
            self.fallback_by_mask.setdefault(int(self.nearest[pixel]), []).append(pixel)

        self.u = self._assemble(0, bh, 0, bw, self.num, self.hi, self.lo, self.values)

    def _smooth(self, grid: np.ndarray) -> np.ndarray:
        out = correlate1d(grid, self.kernel, axis=0, mode="constant", cval=0.0)
        return correlate1d(out, self.kernel, axis=1, mode="constant", cval=0.0)

    def _extrema(self, hi: np.ndarray, lo: np.ndarray, r0: int, r1: int, c0: int, c1: int) -> tuple:
        """矩形 [r0, r1) × [c0, c1) 内每个像素窗口中的掩码最大值 / 最小值"""
        h = self.half
        bh, bw = hi.shape
        e0, e1 = max(0, r0 - h), min(bh, r1 + h)
        f0, f1 = max(0, c0 - h), min(bw, c1 + h)
        size = 2 * h + 1
        wmax = maximum_filter(hi[e0:e1, f0:f1], size=size, mode="constant", cval=-np.inf)
        wmin = minimum_filter(lo[e0:e1, f0:f1], size=size, mode="constant", cval=np.inf)
        crop = (slice(r0 - e0, r1 - e0), slice(c0 - f0, c1 - f0))
        return wmax[crop], wmin[crop]

    def _assemble(self, r0, r1, c0, c1, num, hi, lo, values) -> np.ndarray:
        """
        计算矩形内区域像素的重建值，返回与矩形内区域像素（行优先）对应的数组。
        num 为该矩形范围的分子；分母取自 self.den。
        """
        den = self.den[r0:r1, c0:c1]
        wmax, wmin = self._extrema(hi, lo, r0, r1, c0, c1)
        u = np.zeros(den.shape)
        pos = den > 0.0
        u[pos] = np.clip(num[pos] / den[pos], wmin[pos], wmax[pos])

        li = self.local_index[r0:r1, c0:c1]
        ords = li[li >= 0]
        out = u[li >= 0]
        own = self.mask_of_pixel[ords]
        is_mask = own >= 0
        out[is_mask] = values[own[is_mask]]
        near = self.nearest[ords]
        is_fb = near >= 0
        out[is_fb] = values[near[is_fb]]
        return out

    def values_array(self) -> np.ndarray:
        return self.u.copy()

    def _window_rect(self, m: int) -> tuple:
        h = self.half
        bh, bw = self.den.shape
        ly, lx = int(self.mask_ly[m]), int(self.mask_lx[m])
        return ly, lx, max(0, ly - h), min(bh, ly + h + 1), max(0, lx - h), min(bw, lx + h + 1)

    def trial(self, m: int, value: float) -> tuple:
        """
        把第 m 个掩码像素改为 value 后受影响的像素：返回 (区域序号, 新重建值)，不修改状态。
        受影响范围是以该掩码像素为中心的窗口，外加以它为最近点的回退像素。
        """
        return self._update(m, float(value), commit=False)

    def apply(self, m: int, value: float) -> None:
        self._update(m, float(value), commit=True)

    def _update(self, m: int, value: float, commit: bool) -> tuple:
        old = float(self.values[m])
        ly, lx, r0, r1, c0, c1 = self._window_rect(m)
        h = self.half
        delta = value - old
        bump = delta * np.outer(self.kernel[r0 - ly + h:r1 - ly + h], self.kernel[c0 - lx + h:c1 - lx + h])
        num = self.num[r0:r1, c0:c1] + bump

        values = self.values.copy()
        values[m] = value
        self.hi[ly, lx] = value
        self.lo[ly, lx] = value
        try:
            local = self._assemble(r0, r1, c0, c1, num, self.hi, self.lo, values)
        finally:
            if not commit:
                self.hi[ly, lx] = old
                self.lo[ly, lx] = old

        li = self.local_index[r0:r1, c0:c1]
        ords = li[li >= 0]
        extra = np.asarray(self.fallback_by_mask.get(m, []), dtype=np.int64)
        if extra.size:
            ords = np.concatenate([ords, extra])
            local = np.concatenate([local, np.full(extra.size, value)])
            ords, first = np.unique(ords, return_index=True)
            local = local[first]

        if commit:
            self.num[r0:r1, c0:c1] = num
            self.values = values
            self.u[ords] = local
        return ords, local


def shepard_reconstruct(region: RegionView, mask: MaskData) -> np.ndarray:
    """按区域行优先顺序返回重建值；掩码像素取自身的值"""
    return ShepardField(region, mask.positions, mask.values, mask.density).values_array()


def _within_window(xs: np.ndarray, ys: np.ndarray, mx: np.ndarray, my: np.ndarray, half: int) -> np.ndarray:
    """每个像素的 (2·half+1)² 方窗内是否有给定掩码像素"""
    out = np.zeros(xs.size, dtype=bool)
    cand = np.nonzero((xs >= mx.min() - half) & (xs <= mx.max() + half)
                      & (ys >= my.min() - half) & (ys <= my.max() + half))[0]
    if cand.size == 0:
        return out
    cx, cy = xs[cand], ys[cand]
    x0, y0 = int(cx.min()) - half, int(cy.min()) - half
    x1, y1 = int(cx.max()) + half, int(cy.max()) + half
    keep = (mx >= x0) & (mx <= x1) & (my >= y0) & (my <= y1)
    hit = np.zeros((y1 - y0 + 1, x1 - x0 + 1), dtype=np.uint8)
    hit[my[keep] - y0, mx[keep] - x0] = 1
    reach = maximum_filter(hit, size=2 * half + 1, mode="constant", cval=0)
    out[cand] = reach[cy - y0, cx - x0] > 0
    return out


def shepard_at(px: np.ndarray, py: np.ndarray, mx: np.ndarray, my: np.ndarray,
               mv: np.ndarray, half: int, kernel: np.ndarray) -> tuple:
    """
    在任意一组非掩码像素上求 Shepard 重建值。
    mx / my / mv 为掩码像素坐标与取值，必须按行优先排列（最近点平局规则依赖这一顺序）。
    返回 (取值, 是否走了最近点回退)。
    """
    x0, y0 = int(px.min()) - half, int(py.min()) - half
    x1, y1 = int(px.max()) + half, int(py.max()) + half
    keep = (mx >= x0) & (mx <= x1) & (my >= y0) & (my <= y1)
    ky, kx, kv = my[keep] - y0, mx[keep] - x0, mv[keep]
    shape = (y1 - y0 + 1, x1 - x0 + 1)
    value_grid = np.zeros(shape)
    weight_grid = np.zeros(shape)
    hi = np.full(shape, -np.inf)
    lo = np.full(shape, np.inf)
    value_grid[ky, kx] = kv
    weight_grid[ky, kx] = 1.0
    hi[ky, kx] = kv
    lo[ky, kx] = kv

    def smooth(grid):
        out = correlate1d(grid, kernel, axis=0, mode="constant", cval=0.0)
        return correlate1d(out, kernel, axis=1, mode="constant", cval=0.0)

    ly, lx = py - y0, px - x0
    num = smooth(value_grid)[ly, lx]
    den = smooth(weight_grid)[ly, lx]
    size = 2 * half + 1
    wmax = maximum_filter(hi, size=size, mode="constant", cval=-np.inf)[ly, lx]
    wmin = minimum_filter(lo, size=size, mode="constant", cval=np.inf)[ly, lx]

    out = np.empty(px.size)
    pos = den > 0.0
    out[pos] = np.clip(num[pos] / den[pos], wmin[pos], wmax[pos])
    fallback = ~pos
    if fallback.any():
        out[fallback] = mv[_nearest_mask(px[fallback], py[fallback], mx, my)]
    return out, fallback


@dataclass
class ShepardStats(InpaintingStats):
    """fallback 标记窗口内没有掩码像素、取最近点值的像素；无网格像素区域全部为 True"""

    fallback: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.fallback is None:
            self.fallback = np.ones(self.flat.size, dtype=bool)


class ShepardOperator(InpaintingOperator):
    """Shepard 插值修复算子"""

    op_id = OperatorId.SHEPARD
    _stats_type = ShepardStats

    def __init__(self, width: int, height: int, density: float, levels: int):
        super().__init__(width, height, density, levels)
        _, self.half, self.kernel = shepard_window(self.density)

    def reconstruct(self, region: RegionView, mask: MaskData) -> np.ndarray:
        return shepard_reconstruct(region, mask)

    def field(self, region: RegionView, mask: MaskData) -> ShepardField:
        return ShepardField(region, mask.positions, mask.values, mask.density)

    # ── 合并统计量 ──

    def _reconstruct_stats(self, f: Image, flat: np.ndarray, mask_flat: np.ndarray,
                           total: float, total_sq: float) -> ShepardStats:
        region = RegionView.from_flat(flat, self.width, self.height)
        positions = np.searchsorted(flat, mask_flat)
        field = ShepardField(region, positions, self._mask_values(f, mask_flat), self.density)
        diff = field.u - region.values(f.samples)
        return ShepardStats(flat=flat, u=field.values_array(), mask_flat=mask_flat, total=total,
                            total_sq=total_sq, sse=float(diff @ diff), fallback=field.nearest >= 0)

    def _affected(self, side: ShepardStats, other: ShepardStats) -> np.ndarray:
        """
        并入 other 后重建值会改变的 side 像素（side 内序号）：
        other 掩码窗口覆盖到的非网格像素，以及原先走最近点回退的像素。
        """
        if not other.has_mask:
            return np.empty(0, dtype=np.int64)
        if not side.has_mask:
            return np.arange(side.count)
        w = self.width
        near = _within_window(side.flat % w, side.flat // w,
                              other.mask_flat % w, other.mask_flat // w, self.half)
        return np.nonzero((near | side.fallback) & ~self._grid_flat[side.flat])[0]

    def _seam(self, f: Image, a: ShepardStats, b: ShepardStats) -> tuple:
        """返回 (a 中变化序号, b 中变化序号, 新值, 新回退标记, 误差变化量)"""
        ia = self._affected(a, b)
        ib = self._affected(b, a)
        if ia.size == 0 and ib.size == 0:
            return ia, ib, np.empty(0), np.empty(0, dtype=bool), 0.0
        mask_flat = np.sort(np.concatenate([a.mask_flat, b.mask_flat]))
        flat = np.concatenate([a.flat[ia], b.flat[ib]])
        w = self.width
        new, fallback = shepard_at(flat % w, flat // w, mask_flat % w, mask_flat // w,
                                   self._mask_values(f, mask_flat), self.half, self.kernel)
        target = f.samples.ravel()[flat]
        old = np.concatenate([a.u[ia], b.u[ib]]) - target
        new_err = new - target
        return ia, ib, new, fallback, float(new_err @ new_err) - float(old @ old)

    def union_sse(self, f: Image, a: ShepardStats, b: ShepardStats) -> float:
        if not a.has_mask and not b.has_mask:
            return self._constant_fit(a.count + b.count, a.total + b.total, a.total_sq + b.total_sq)[1]
        return a.sse + b.sse + self._seam(f, a, b)[4]

    def _merge_masked(self, f: Image, a: ShepardStats, b: ShepardStats,
                      total: float, total_sq: float) -> ShepardStats:
        ia, ib, new, fallback, delta = self._seam(f, a, b)
        flat = np.concatenate([a.flat, b.flat])
        u = np.concatenate([a.u, b.u])
        flags = np.concatenate([a.fallback, b.fallback])
        changed = np.concatenate([ia, ib + a.count])
        u[changed] = new
        flags[changed] = fallback
        order = np.argsort(flat, kind="stable")
        return ShepardStats(
            flat=flat[order], u=u[order],
            mask_flat=np.sort(np.concatenate([a.mask_flat, b.mask_flat])),
            total=total, total_sq=total_sq, sse=a.sse + b.sse + delta, fallback=flags[order],
        )
