"""
齐次扩散修复
在 区域∖掩码 上解五点离散 Laplace 方程：掩码像素为 Dirichlet 值，
区域边界处缺失的邻居直接从模板中去掉（反射 / Neumann 边界）。
线性系统对称正定，用共轭梯度求解，系统矩阵以 scipy.sparse CSR 格式保存。
区域合并时并集的 CG 以两侧缓存的解为初值。
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from core.config import CG_MAX_ITER_FACTOR, CG_TOL
from core.image import Image
from core.logging import logger
from operators.base import OperatorId
from operators.inpainting import InpaintingOperator, InpaintingStats
from operators.region import MaskData, RegionView


@dataclass
class SolveResult:
    """values 覆盖整个区域（行优先），converged 为 False 时 values 是最后一次迭代的结果"""
    values: np.ndarray
    converged: bool
    iterations: int


def conjugate_gradient(A, b: np.ndarray, x0: np.ndarray, tol: float, max_iter: int) -> tuple:
    """
    共轭梯度法，停止条件为相对残差 ‖r‖ / ‖b‖ ≤ tol（b = 0 时按绝对残差）。
    返回 (x, converged, iterations)。
    """
    x = np.array(x0, dtype=np.float64)
    r = b - A @ x
    bnorm = float(np.linalg.norm(b))
    threshold = tol * (bnorm if bnorm > 0.0 else 1.0)

    rr = float(r @ r)
    if np.sqrt(rr) <= threshold:
        return x, True, 0
    d = r.copy()
    k = 0
    while k < max_iter:
        k += 1
        Ad = A @ d
        dAd = float(d @ Ad)
        if dAd <= 0.0:
            # 奇异分量（没有掩码约束的连通块）上残差已为零，方向退化
            break
        alpha = rr / dAd
        x += alpha * d
        r -= alpha * Ad
        rr_next = float(r @ r)
        if np.sqrt(rr_next) <= threshold:
            return x, True, k
        d = r + (rr_next / rr) * d
        rr = rr_next
    return x, bool(np.sqrt(rr) <= threshold), k


class DiffusionSystem:
    """
    区域 + 掩码位置固定后的线性系统 A·u = B·g。
    A 为未知像素上的图 Laplacian（对角为区域内邻居个数），B 为未知像素与掩码像素的耦合。
    同一区域多次换掩码值（色调优化）时只需组装一次。
    """

    def __init__(self, region: RegionView, positions: np.ndarray):
        positions = np.asarray(positions, dtype=np.int64)
        n = region.size
        li = region.local_index

        right = (li[:, :-1] >= 0) & (li[:, 1:] >= 0)
        down = (li[:-1, :] >= 0) & (li[1:, :] >= 0)
        a = np.concatenate([li[:, :-1][right], li[:-1, :][down]])
        b = np.concatenate([li[:, 1:][right], li[1:, :][down]])
        src = np.concatenate([a, b])
        dst = np.concatenate([b, a])
        degree = np.bincount(src, minlength=n).astype(np.float64)

        is_mask = np.zeros(n, dtype=bool)
        is_mask[positions] = True
        self.size = n
        self.positions = positions
        self.unknown = np.nonzero(~is_mask)[0]

        # 区域序号 → 未知量序号 / 掩码序号
        slot = np.full(n, -1, dtype=np.int64)
        slot[self.unknown] = np.arange(self.unknown.size)
        slot[positions] = np.arange(positions.size)
        rows = ~is_mask[src]
        inner = rows & ~is_mask[dst]
        coupled = rows & is_mask[dst]

        m = self.unknown.size
        diag = np.arange(m)
        self.A = sp.csr_matrix(
            (np.concatenate([degree[self.unknown], -np.ones(int(inner.sum()))]),
             (np.concatenate([diag, slot[src[inner]]]), np.concatenate([diag, slot[dst[inner]]]))),
            shape=(m, m),
        )
        self.B = sp.csr_matrix(
            (np.ones(int(coupled.sum())), (slot[src[coupled]], slot[dst[coupled]])),
            shape=(m, positions.size),
        )

    def solve(self, values: np.ndarray, tol: float, max_iter: Optional[int] = None,
              x0: Optional[np.ndarray] = None) -> SolveResult:
        """values 与 positions 一一对应；x0 为整个区域上的初值，缺省时未知像素取掩码均值"""
        values = np.asarray(values, dtype=np.float64)
        u = np.empty(self.size)
        u[self.positions] = values
        if self.unknown.size == 0:
            return SolveResult(u, True, 0)

        if max_iter is None:
            max_iter = CG_MAX_ITER_FACTOR * self.unknown.size
        if x0 is None:
            start = np.full(self.unknown.size, float(values.mean()))
        else:
            start = np.asarray(x0, dtype=np.float64)[self.unknown]

        x, converged, iterations = conjugate_gradient(self.A, self.B @ values, start, tol, max_iter)
        # 离散极值原理：解落在掩码值范围内，截断只消除迭代误差
        u[self.unknown] = np.clip(x, values.min(), values.max())
        return SolveResult(u, converged, iterations)


def diffusion_reconstruct(region: RegionView, mask: MaskData, tol: float = CG_TOL,
                          max_iter: Optional[int] = None,
                          x0: Optional[np.ndarray] = None) -> SolveResult:
    if mask.is_empty:
        raise ValueError("扩散修复需要非空掩码")
    order = np.argsort(mask.positions, kind="stable")
    system = DiffusionSystem(region, mask.positions[order])
    return system.solve(mask.values[order], tol, max_iter, x0)


class DiffusionOperator(InpaintingOperator):
    """齐次扩散修复算子；CG 未收敛时记 WARNING 并计数，不抛异常"""

    op_id = OperatorId.DIFFUSION

    def __init__(self, width: int, height: int, density: float, levels: int,
                 tol: Optional[float] = None, max_iter_factor: Optional[int] = None):
        super().__init__(width, height, density, levels)
        self.tol = CG_TOL if tol is None else float(tol)
        self.max_iter_factor = CG_MAX_ITER_FACTOR if max_iter_factor is None else int(max_iter_factor)
        self.nonconverged = 0

    def max_iter(self, unknowns: int) -> int:
        return self.max_iter_factor * unknowns

    def note(self, result: SolveResult, region: RegionView) -> SolveResult:
        if not result.converged:
            self.nonconverged += 1
            logger.warning("CG 在 %d 次迭代内未收敛（区域 %d 像素），使用当前迭代值",
                           result.iterations, region.size)
        return result

    def solve(self, region: RegionView, mask: MaskData, x0: Optional[np.ndarray] = None) -> SolveResult:
        unknowns = region.size - len(mask)
        return self.note(
            diffusion_reconstruct(region, mask, self.tol, self.max_iter(unknowns), x0), region)

    def reconstruct(self, region: RegionView, mask: MaskData) -> np.ndarray:
        return self.solve(region, mask).values

    def system(self, region: RegionView, mask: MaskData) -> DiffusionSystem:
        return DiffusionSystem(region, mask.positions)

    # ── 合并统计量 ──

    def _reconstruct_stats(self, f: Image, flat: np.ndarray, mask_flat: np.ndarray,
                           total: float, total_sq: float,
                           x0: Optional[np.ndarray] = None) -> InpaintingStats:
        region = RegionView.from_flat(flat, self.width, self.height)
        system = DiffusionSystem(region, np.searchsorted(flat, mask_flat))
        result = self.note(
            system.solve(self._mask_values(f, mask_flat), self.tol,
                         self.max_iter(system.unknown.size), x0),
            region)
        diff = result.values - f.samples.ravel()[flat]
        return InpaintingStats(flat=flat, u=result.values, mask_flat=mask_flat,
                               total=total, total_sq=total_sq, sse=float(diff @ diff))

    def _merge_masked(self, f: Image, a: InpaintingStats, b: InpaintingStats,
                      total: float, total_sq: float) -> InpaintingStats:
        """并集整体重解，CG 以两侧已有的解为初值"""
        flat = np.concatenate([a.flat, b.flat])
        start = np.concatenate([a.u, b.u])
        order = np.argsort(flat, kind="stable")
        mask_flat = np.sort(np.concatenate([a.mask_flat, b.mask_flat]))
        return self._reconstruct_stats(f, flat[order], mask_flat, total, total_sq, x0=start[order])
