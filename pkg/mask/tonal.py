"""
色调优化
分割完成后、序列化之前，对每个区域的掩码量化索引做贪心坐标下降：
按行优先顺序扫描掩码像素，尝试相邻两个量化级 i−1 / i+1，
区域误差严格下降才接受；一轮扫描无改动或达到轮数上限即停止。
结果不回馈分割。
"""

from dataclasses import dataclass

import numpy as np

from core.image import Image
from core.logging import logger
from core.quantizer import Quantizer
from operators.diffusion import DiffusionOperator
from operators.inpainting import InpaintingOperator
from operators.region import MaskData, RegionView
from operators.shepard import ShepardOperator


@dataclass
class TonalResult:
    indices: np.ndarray
    mask: MaskData
    initial_sse: float
    final_sse: float
    sweeps: int
    changes: int


class _FullSearch:
    """通用路径：每次候选都完整重建一次"""

    def __init__(self, op: InpaintingOperator, region: RegionView, mask: MaskData, f: Image):
        self.op = op
        self.region = region
        self.positions = mask.positions
        self.density = mask.density
        self.values = mask.values.copy()
        self.target = region.values(f.samples)
        self.sse = self._sse(self.values)

    def _sse(self, values: np.ndarray) -> float:
        u = self.op.reconstruct(self.region, MaskData(self.positions, values, self.density))
        diff = u - self.target
        return float(diff @ diff)

    def delta(self, m: int, value: float) -> float:
        values = self.values.copy()
        values[m] = value
        return self._sse(values) - self.sse

    def accept(self, m: int, value: float, delta: float) -> None:
        self.values[m] = value
        self.sse += delta


class _ShepardSearch:
    """Shepard：只重算被修改掩码像素窗口内的像素"""

    def __init__(self, op: ShepardOperator, region: RegionView, mask: MaskData, f: Image):
        self.field = op.field(region, mask)
        self.target = region.values(f.samples)
        diff = self.field.u - self.target
        self.sse = float(diff @ diff)

    def delta(self, m: int, value: float) -> float:
        ords, new = self.field.trial(m, value)
        t = self.target[ords]
        old = self.field.u[ords]
        return float(np.sum((new - t) ** 2) - np.sum((old - t) ** 2))

    def accept(self, m: int, value: float, delta: float) -> None:
        self.field.apply(m, value)
        self.sse += delta


class _DiffusionSearch:
    """扩散：系统矩阵只组装一次，每个候选以上一次的解为初值重新求解"""

    def __init__(self, op: DiffusionOperator, region: RegionView, mask: MaskData, f: Image):
        self.op = op
        self.region = region
        self.system = op.system(region, mask)
        self.values = mask.values.copy()
        self.target = region.values(f.samples)
        self.u = self._solve(self.values, None).values
        self.sse = self._sse(self.u)
        self._pending = None

    def _solve(self, values, x0):
        result = self.system.solve(values, self.op.tol, self.op.max_iter(self.system.unknown.size), x0)
        return self.op.note(result, self.region)

    def _sse(self, u: np.ndarray) -> float:
        diff = u - self.target
        return float(diff @ diff)

    def delta(self, m: int, value: float) -> float:
        values = self.values.copy()
        values[m] = value
        u = self._solve(values, self.u).values
        self._pending = (m, value, u)
        return self._sse(u) - self.sse

    def accept(self, m: int, value: float, delta: float) -> None:
        pm, pv, u = self._pending
        if (pm, pv) != (m, value):
            values = self.values.copy()
            values[m] = value
            u = self._solve(values, self.u).values
        self.values[m] = value
        self.u = u
        self.sse = self._sse(u)


def _search_for(op, region, mask, f):
    if isinstance(op, ShepardOperator):
        return _ShepardSearch(op, region, mask, f)
    if isinstance(op, DiffusionOperator):
        return _DiffusionSearch(op, region, mask, f)
    return _FullSearch(op, region, mask, f)


def tonal_optimize(op: InpaintingOperator, region: RegionView, mask: MaskData, q: Quantizer,
                   budget: int, f: Image) -> TonalResult:
    """
    返回调整后的量化索引及优化前后的区域误差（均为完整重建的结果）。
    最终误差若因增量计算的浮点漂移反而高于初始值，则退回初始索引。
    """
    if mask.indices is None:
        indices = q.quantize(region.values(f.samples)[mask.positions])
        mask = MaskData(mask.positions, q.dequantize(indices), mask.density, indices)
    order = np.argsort(mask.positions, kind="stable")
    if np.any(order != np.arange(order.size)):
        mask = MaskData(mask.positions[order], mask.values[order], mask.density, mask.indices[order])
    indices = np.asarray(mask.indices, dtype=np.int64).copy()
    initial_sse = op.region_sse(region, f, mask)
    if mask.is_empty or budget <= 0:
        return TonalResult(indices, mask, initial_sse, initial_sse, 0, 0)

    search = _search_for(op, region, mask, f)
    sweeps = changes = 0
    while sweeps < budget:
        sweeps += 1
        changed = 0
        for m in range(indices.size):
            best = None
            for cand in (indices[m] - 1, indices[m] + 1):
                if cand < 0 or cand >= q.levels:
                    continue
                delta = search.delta(m, q.dequantize(int(cand)))
                if delta < -1e-12 * (1.0 + search.sse) and (best is None or delta < best[1]):
                    best = (int(cand), delta)
            if best is not None:
                search.accept(m, q.dequantize(best[0]), best[1])
                indices[m] = best[0]
                changed += 1
        changes += changed
        if changed == 0:
            break

    optimized = MaskData(mask.positions, q.dequantize(indices), mask.density, indices)
    final_sse = op.region_sse(region, f, optimized)
    if final_sse > initial_sse:
        logger.debug("色调优化结果劣于初始值（%.6g > %.6g），退回初始索引", final_sse, initial_sse)
        return TonalResult(np.asarray(mask.indices, dtype=np.int64).copy(), mask,
                           initial_sse, initial_sse, sweeps, 0)
    return TonalResult(indices, optimized, initial_sse, final_sse, sweeps, changes)
