"""
广义 Mumford-Shah 能量的贪心区域合并
E = Σ 区域误差 + λ·len(K)

初始划分为每像素一个区域（或 b×b 块），区域邻接图记录共同边界长度。
合并增益 λ_ij = (sse(Ωi ∪ Ωj) − sse(Ωi) − sse(Ωj)) / len(∂(Ωi, Ωj))，
每次取全局最小的有效增益，小于 λ 就合并，否则停止。

优先队列采用惰性删除：候选项带两侧区域的版本号，出队时版本过期即丢弃。
同增益时按 (较小 id, 较大 id) 字典序优先，区域 id 为其首个像素（行优先）所在初始块的序号。

合并序列不依赖 λ：较小 λ 的结果是较大 λ 合并历史的前缀，region_merge_ladder 借此一次得到整条 λ 阶梯。
"""

import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from core.config import MERGE_PROGRESS_EVERY
from core.errors import NotAdjacentError
from core.image import Image
from core.logging import logger
from operators.base import ReconstructionOperator
from operators.region import RegionView
from segmentation.boundary import boundary_length, canonical_labels


@dataclass(frozen=True)
class MergeRecord:
    """
    一次被接受的合并。
    能量按 lam 计算：同一合并序列换一个 λ 只需 dataclasses.replace(record, lam=...)。
    """
    kept: int
    absorbed: int
    gain: float
    boundary: int
    sse_kept: float
    sse_absorbed: float
    sse_union: float
    sse_total_before: float
    boundary_total_before: int
    lam: float

    @property
    def energy_before(self) -> float:
        return self.sse_total_before + self.lam * self.boundary_total_before

    @property
    def energy_after(self) -> float:
        sse_after = self.sse_total_before + (self.sse_union - self.sse_kept - self.sse_absorbed)
        return sse_after + self.lam * (self.boundary_total_before - self.boundary)


@dataclass
class SegmentRegion:
    """最终分割中的单个区域（id 为规范编号）"""
    id: int
    region: RegionView
    sse: float
    stats: object = None


@dataclass
class Segmentation:
    width: int
    height: int
    labels: np.ndarray
    regions: list
    adjacency: dict
    history: list = field(default_factory=list)

    @property
    def region_count(self) -> int:
        return len(self.regions)

    @property
    def sse(self) -> float:
        return float(sum(r.sse for r in self.regions))

    @property
    def boundary_total(self) -> int:
        return int(sum(self.adjacency.values()))

    def energy(self, lam: float) -> float:
        return self.sse + lam * self.boundary_total


def initial_labels(width: int, height: int, block: int = 1) -> np.ndarray:
    """b×b 块初始划分，块按行优先编号"""
    if block < 1:
        raise ValueError(f"初始块大小必须 ≥ 1，当前: {block}")
    cols = math.ceil(width / block)
    ys, xs = np.mgrid[0:height, 0:width]
    return (ys // block) * cols + xs // block


def merge_gain(region_i: RegionView, region_j: RegionView, op: ReconstructionOperator, f: Image) -> float:
    """
    直接由像素集合计算合并增益（不依赖缓存）。
    已知数据由算子自身决定：多项式按次数，修复类按全局网格掩码与并集的交集。
    """
    member_i = region_i.member
    member_j = region_j.member
    if np.any(member_i & member_j):
        raise ValueError("两个区域存在公共像素")
    labels = np.where(member_i, 1, np.where(member_j, 2, 0))
    length = boundary_length(labels)[1].get((1, 2), 0)
    if length == 0:
        raise NotAdjacentError("两个区域不相邻，无法计算合并增益")
    union = RegionView.from_flat(np.concatenate([region_i.flat, region_j.flat]), f.width, f.height)
    numerator = op.region_sse(union, f) - op.region_sse(region_i, f) - op.region_sse(region_j, f)
    if op.monotone_union:
        numerator = max(numerator, 0.0)
    return numerator / length


class RegionMerger:
    """
    区域合并器。
    并查集的根总是集合中最小的 id；像素列表小并入大；
    合并后对新区域与每个邻居重新计算一次候选增益。
    """

    def __init__(self, f: Image, op: ReconstructionOperator, lam: float, block: int = 1,
                 observer: Optional[Callable[[MergeRecord], None]] = None):
        if lam < 0 or math.isnan(lam):
            raise ValueError(f"λ 必须非负，当前: {lam}")
        self.f = f
        self.op = op
        self.lam = float(lam)
        self.block = int(block)
        self.observer = observer
        self.history = []

        labels = initial_labels(f.width, f.height, self.block)
        flat_labels = labels.ravel()
        count = int(flat_labels.max()) + 1
        order = np.argsort(flat_labels, kind="stable")
        splits = np.cumsum(np.bincount(flat_labels, minlength=count))[:-1]

        self.parent = list(range(count))
        self.version = [0] * count
        self.members = {i: pix.tolist() for i, pix in enumerate(np.split(order, splits))}
        self.stats = {}
        self.sse = {}
        for i, pix in self.members.items():
            self.stats[i] = op.region_stats(f, np.asarray(pix, dtype=np.int64))
            self.sse[i] = float(op.stats_sse(f, self.stats[i]))

        total, pairs = boundary_length(labels)
        self.boundary_total = total
        self.adjacency = {i: {} for i in range(count)}
        for (i, j), length in pairs.items():
            self.adjacency[i][j] = length
            self.adjacency[j][i] = length

        self.total_sse = float(sum(self.sse.values()))
        self.heap = []
        for (i, j) in sorted(pairs):
            self._push(i, j)

    # ── 并查集 ──

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    # ── 候选 ──

    def gain(self, i: int, j: int) -> tuple:
        """返回 (增益, 并集误差)；i、j 必须是相邻的存活区域"""
        length = self.adjacency.get(i, {}).get(j)
        if not length:
            raise NotAdjacentError(f"区域 {i} 与 {j} 不相邻")
        sse_union = float(self.op.union_sse(self.f, self.stats[i], self.stats[j]))
        numerator = sse_union - self.sse[i] - self.sse[j]
        if self.op.monotone_union:
            numerator = max(numerator, 0.0)
        return numerator / length, sse_union

    def _push(self, i: int, j: int) -> None:
        i, j = min(i, j), max(i, j)
        g, sse_union = self.gain(i, j)
        heapq.heappush(self.heap, (g, i, j, self.version[i], self.version[j], sse_union))

    def _valid(self, i: int, j: int, vi: int, vj: int) -> bool:
        return (self.parent[i] == i and self.parent[j] == j
                and self.version[i] == vi and self.version[j] == vj)

    # ── 能量 ──

    def energy(self) -> float:
        return self.total_sse + self.lam * self.boundary_total

    # ── 合并 ──

    def _merge(self, i: int, j: int, g: float, sse_union: float) -> None:
        shared = self.adjacency[i].pop(j)
        del self.adjacency[j][i]
        record = MergeRecord(i, j, g, shared, self.sse[i], self.sse[j], sse_union,
                             self.total_sse, self.boundary_total, self.lam)
        sse_i, sse_j = self.sse[i], self.sse[j]

        if len(self.members[i]) < len(self.members[j]):
            self.members[i], self.members[j] = self.members[j], self.members[i]
        self.members[i].extend(self.members.pop(j))
        self.stats[i] = self.op.merge_stats(self.f, self.stats[i], self.stats.pop(j))
        self.sse[i] = sse_union
        del self.sse[j]
        self.parent[j] = i
        self.version[i] += 1
        self.version[j] += 1

        for k, length in self.adjacency.pop(j).items():
            del self.adjacency[k][j]
            merged = self.adjacency[i].get(k, 0) + length
            self.adjacency[i][k] = merged
            self.adjacency[k][i] = merged

        self.boundary_total -= shared
        self.total_sse += sse_union - sse_i - sse_j
        self.history.append(record)
        if self.observer is not None:
            self.observer(record)

        for k in sorted(self.adjacency[i]):
            self._push(i, k)

    def run(self) -> Segmentation:
        return self.run_ladder([self.lam])[0]

    def run_ladder(self, lambdas) -> list:
        """
        一次合并得到多个 λ 下的分割，返回顺序与 lambdas 一致。
        合并顺序与 λ 无关，λ 只决定在第一个增益 ≥ λ 的有效候选处停止，
        因此按 self.lam 合并，途中在每个 λ 的停止点保存快照；每个 λ 都不能超过 self.lam。
        """
        lambdas = [float(lam) for lam in lambdas]
        for lam in lambdas:
            if lam < 0 or math.isnan(lam) or lam > self.lam:
                raise ValueError(f"λ 阶梯中的 {lam} 不在 [0, {self.lam:g}] 内")
        pending = sorted(range(len(lambdas)), key=lambda k: lambdas[k])
        snapshots = [None] * len(lambdas)
        cursor = 0
        merges = 0
        while self.heap:
            g, i, j, vi, vj, sse_union = heapq.heappop(self.heap)
            if not self._valid(i, j, vi, vj):
                continue
            while cursor < len(pending) and g >= lambdas[pending[cursor]]:
                snapshots[pending[cursor]] = self.result(lambdas[pending[cursor]])
                cursor += 1
            if g >= self.lam:
                break
            self._merge(i, j, g, sse_union)
            merges += 1
            if merges % MERGE_PROGRESS_EVERY == 0:
                logger.debug("已合并 %d 次，剩余 %d 个区域，当前能量 %.6g",
                             merges, len(self.members), self.energy())
        for k in pending[cursor:]:
            snapshots[k] = self.result(lambdas[k])
        logger.debug("合并结束：%d 次合并，%d 个区域", merges, len(self.members))
        return snapshots

    def result(self, lam: Optional[float] = None) -> Segmentation:
        """当前状态的分割；lam 给定时合并记录的能量按该 λ 重算"""
        w, h = self.f.width, self.f.height
        roots = sorted(self.members)
        labels = np.empty(w * h, dtype=np.int64)
        for root in roots:
            labels[np.asarray(self.members[root], dtype=np.int64)] = root
        labels = canonical_labels(labels.reshape(h, w))

        # 根 id 的升序与区域首像素的行优先顺序一致
        regions = []
        canon = {}
        for new_id, root in enumerate(sorted(roots, key=lambda r: min(self.members[r]))):
            canon[root] = new_id
            region = RegionView.from_flat(self.members[root], w, h)
            regions.append(SegmentRegion(new_id, region, self.sse[root], self.stats[root]))

        adjacency = {}
        for i, nbrs in self.adjacency.items():
            for k, length in nbrs.items():
                a, b = canon[i], canon[k]
                if a < b:
                    adjacency[(a, b)] = length
        history = list(self.history)
        if lam is not None and lam != self.lam:
            history = [replace(r, lam=lam) for r in history]
        return Segmentation(w, h, labels, regions, adjacency, history)


def region_merge(f: Image, op: ReconstructionOperator, lam: float, block: int = 1,
                 observer: Optional[Callable[[MergeRecord], None]] = None) -> Segmentation:
    """执行贪心合并直到最小有效增益 ≥ λ 或只剩一个区域"""
    return RegionMerger(f, op, lam, block, observer).run()


def region_merge_ladder(f: Image, op: ReconstructionOperator, lambdas, block: int = 1) -> list:
    """同一图像、算子、初始块下多个 λ 的分割，结果与逐个调用 region_merge 相同"""
    lambdas = list(lambdas)
    if not lambdas:
        return []
    return RegionMerger(f, op, max(lambdas), block).run_ladder(lambdas)
