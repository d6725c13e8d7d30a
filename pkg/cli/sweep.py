"""
率失真网格搜索
对 λ 阶梯 × 密度 × 量化级数 × 算子的全部组合逐一编码、解码并记录码率与质量；
多项式算子没有密度和量化级数，只随 λ 变化。
同一 (算子, 密度, 量化级数) 下的整条 λ 阶梯共用一次区域合并。
"""

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from codec.decoder import decode
from codec.encoder import encode_detailed
from codec.schemas import EncoderConfig
from core.config import PSNR_PLOT_CAP
from core.errors import CodecError
from core.image import Image
from core.logging import logger
from core.metrics import bits_per_pixel, format_psnr, psnr
from operators.base import OperatorId, get_operator
from segmentation.merge import Segmentation, region_merge_ladder

CSV_COLUMNS = ["operator", "lambda", "density", "q", "bpp", "psnr", "encode_ms", "decode_ms", "status"]


def lambda_ladder(lam_min: float, lam_max: float, steps: int) -> list:
    """对数等距 λ 阶梯"""
    if steps == 1:
        return [float(lam_min)]
    return [float(v) for v in np.geomspace(lam_min, lam_max, steps)]


@dataclass(frozen=True)
class GridPoint:
    op: str
    lam: float
    density: Optional[float] = None
    q: Optional[int] = None


@dataclass
class SweepGrid:
    lambdas: list
    densities: list
    qs: list
    ops: list

    @classmethod
    def from_config(cls, config) -> "SweepGrid":
        return cls(
            lambdas=lambda_ladder(config["lambda_min"], config["lambda_max"], config["lambda_steps"]),
            densities=list(config["densities"]),
            qs=list(config["qs"]),
            ops=[OperatorId.parse(o).cli_name for o in config["ops"]],
        )

    def points(self) -> list:
        """按声明顺序展开：算子 → λ → 密度 → 量化级数"""
        out = []
        for op in self.ops:
            inpainting = OperatorId.parse(op).is_inpainting
            for lam in self.lambdas:
                if not inpainting:
                    out.append(GridPoint(op, lam))
                    continue
                for d in self.densities:
                    for q in self.qs:
                        out.append(GridPoint(op, lam, float(d), int(q)))
        return out

    def __len__(self):
        return len(self.points())


def run_point(img: Image, point: GridPoint, block: int = 1, tonal_budget: int = 0,
              segmentation: Optional[Segmentation] = None, merge_ms: float = 0.0) -> dict:
    """
    单个网格点：失败时记录状态而不抛出。
    segmentation 为 λ 阶梯上已经算好的分割，merge_ms 为其合并耗时，计入 encode_ms。
    """
    row = {
        "operator": point.op, "lambda": point.lam,
        "density": "" if point.density is None else point.density,
        "q": "" if point.q is None else point.q,
        "bpp": "", "psnr": "", "encode_ms": "", "decode_ms": "", "status": "ok",
    }
    try:
        cfg = EncoderConfig.build(op=point.op, lam=point.lam, density=point.density, q=point.q,
                                  block=block, tonal_budget=tonal_budget)
        t = time.perf_counter()
        data = encode_detailed(img, cfg, segmentation=segmentation).data
        row["encode_ms"] = round((time.perf_counter() - t) * 1000 + merge_ms, 3)
        t = time.perf_counter()
        decoded = decode(data)
        row["decode_ms"] = round((time.perf_counter() - t) * 1000, 3)
        rounded = Image.from_array(decoded.rounded())
        row["bpp"] = round(bits_per_pixel(len(data), img), 6)
        row["psnr"] = format_psnr(psnr(img, rounded))
    except CodecError as e:
        row["status"] = f"error: {type(e).__name__}: {e}"
    except Exception as e:
        logger.error("网格点 %s 执行异常: %s", point, e)
        row["status"] = f"error: {type(e).__name__}"
    return row


def run_group(img: Image, points: list, block: int = 1, tonal_budget: int = 0) -> list:
    """
    同一 (算子, 密度, 量化级数) 的一组 λ：一次合并得到整条阶梯的分割，再逐点编码。
    每个点的 encode_ms 都计入整条阶梯的合并耗时；阶梯合并失败时退回逐点编码，由 run_point 记录错误。
    """
    first = points[0]
    try:
        op = get_operator(first.op, img.width, img.height, first.density, first.q)
        t = time.perf_counter()
        segmentations = region_merge_ladder(img, op, [p.lam for p in points], block)
        merge_ms = (time.perf_counter() - t) * 1000
    except Exception as e:
        logger.warning("λ 阶梯合并失败 (%s)，改为逐点编码: %s", first, e)
        return [run_point(img, p, block, tonal_budget) for p in points]
    return [run_point(img, p, block, tonal_budget, seg, merge_ms)
            for p, seg in zip(points, segmentations)]


def _run_group_args(args):
    return run_group(*args)


def run_grid(img: Image, grid: SweepGrid, block: int = 1, tonal_budget: int = 0, workers: int = 1) -> list:
    """按 (算子, 密度, 量化级数) 分组执行；CSV 行按网格顺序返回，与并发完成顺序无关"""
    points = grid.points()
    groups = {}
    for index, p in enumerate(points):
        groups.setdefault((p.op, p.density, p.q), []).append(index)
    logger.info("网格搜索: %d 个网格点, %d 条 λ 阶梯, workers=%d", len(points), len(groups), workers)
    jobs = [(img, [points[k] for k in members], block, tonal_budget) for members in groups.values()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_group_args, jobs))
    else:
        results = [_run_group_args(j) for j in jobs]

    rows = [None] * len(points)
    for members, group_rows in zip(groups.values(), results):
        for k, row in zip(members, group_rows):
            rows[k] = row
    failed = sum(1 for r in rows if r["status"] != "ok")
    if failed:
        logger.warning("网格搜索中 %d 个网格点失败（已记录在 status 列）", failed)
    return rows


def write_csv(rows: list, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def _psnr_value(text) -> float:
    return math.inf if text == "lossless" else float(text)


def ok_points(rows: list) -> dict:
    """{算子: [(bpp, psnr), ...]}，只取成功的行"""
    series = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        series.setdefault(row["operator"], []).append((float(row["bpp"]), _psnr_value(row["psnr"])))
    return series


def upper_envelope(points: list, bucket_width: float) -> list:
    """
    按 bpp 分桶取每桶最高 PSNR，再沿 bpp 递增方向取前缀最大值，
    得到的折线 PSNR 随 bpp 单调不减。
    """
    if not points:
        return []
    best = {}
    for bpp, value in points:
        key = math.floor(bpp / bucket_width)
        if key not in best or value > best[key][1] or (value == best[key][1] and bpp < best[key][0]):
            best[key] = (bpp, value)
    envelope = []
    running = -math.inf
    for key in sorted(best):
        bpp, value = best[key]
        running = max(running, value)
        envelope.append((bpp, running))
    return envelope


def compare_in_window(rows: list, bpp_low: float, bpp_high: float) -> dict:
    """bpp 窗口内每个算子的最佳 PSNR；窗口内没有点的算子不出现"""
    result = {}
    for op, pts in ok_points(rows).items():
        inside = [p for b, p in pts if bpp_low <= b <= bpp_high]
        if inside:
            result[op] = max(inside)
    for op, value in result.items():
        logger.info("bpp ∈ [%.4f, %.4f] 内 %s 的最佳 PSNR: %s", bpp_low, bpp_high, op, format_psnr(value))
    return result


def shared_window(rows: list) -> Optional[tuple]:
    """所有算子 bpp 范围的公共区间；不存在时返回 None"""
    series = ok_points(rows)
    if not series:
        return None
    low = max(min(b for b, _ in pts) for pts in series.values())
    high = min(max(b for b, _ in pts) for pts in series.values())
    return (low, high) if low <= high else None


@dataclass
class MatchedGap:
    """两组算子上包络在公共 bpp 区间内等距取样点处的 PSNR（无损按 PSNR_PLOT_CAP 计）"""
    window: tuple
    bpp: np.ndarray
    psnr_a: np.ndarray
    psnr_b: np.ndarray

    @property
    def gaps(self) -> np.ndarray:
        return self.psnr_a - self.psnr_b

    @property
    def min_gap(self) -> float:
        return float(self.gaps.min())

    @property
    def mean_gap(self) -> float:
        return float(self.gaps.mean())


def _capped(envelope: list) -> tuple:
    xs = np.array([b for b, _ in envelope])
    ys = np.array([min(v, PSNR_PLOT_CAP) for _, v in envelope])
    return xs, ys


def matched_gap(rows: list, ops_a, ops_b, bucket_width: float, samples: int = 11) -> Optional[MatchedGap]:
    """
    匹配码率比较：两组算子各自把成功的点合并成一条上包络，
    在两条包络 bpp 范围的公共区间内取 samples 个等距码率，PSNR 沿包络线性插值。
    任一组没有点或没有公共区间时返回 None。
    """
    series = ok_points(rows)
    pts_a = [pt for op in ops_a for pt in series.get(op, [])]
    pts_b = [pt for op in ops_b for pt in series.get(op, [])]
    if not pts_a or not pts_b:
        return None
    xa, ya = _capped(upper_envelope(pts_a, bucket_width))
    xb, yb = _capped(upper_envelope(pts_b, bucket_width))
    low, high = max(xa[0], xb[0]), min(xa[-1], xb[-1])
    if low > high:
        return None
    bpp = np.linspace(low, high, samples)
    gap = MatchedGap((float(low), float(high)), bpp, np.interp(bpp, xa, ya), np.interp(bpp, xb, yb))
    logger.info("bpp ∈ [%.4f, %.4f] 匹配码率 PSNR 差 (%s − %s): 最小 %.2f dB, 平均 %.2f dB",
                low, high, ",".join(ops_a), ",".join(ops_b), gap.min_gap, gap.mean_gap)
    return gap
