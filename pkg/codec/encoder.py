"""
编码流水线
  1. 参数校验
  2. 区域合并（广义 Mumford-Shah 能量）
  3. 边界链码
  4. 逐区域数据（多项式系数 / 掩码量化索引 + 色调优化）
  5. 熵编码 + 组装容器
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from chaincode.chains import ChainSet, encode_boundaries
from codec.container import pack_container, serialize_chains
from codec.payload import fallback_record, mask_record, poly_record
from codec.report import EncodeReport
from codec.schemas import ContainerHeader, EncoderConfig
from core.config import MAX_DIMENSION
from core.errors import DegenerateRateError, ImageTooLargeError
from core.image import Image
from core.logging import logger
from entropy.range_coder import entropy_encode
from mask.grid import density_to_fixed
from mask.tonal import tonal_optimize
from operators.base import get_operator
from operators.polynomial import fit_polynomial
from segmentation.merge import Segmentation, region_merge


@dataclass
class EncodeResult:
    data: bytes
    header: ContainerHeader
    segmentation: Segmentation
    chains: ChainSet
    tonal: list = field(default_factory=list)


def _check_dimensions(img: Image) -> None:
    if img.width > MAX_DIMENSION or img.height > MAX_DIMENSION:
        raise ImageTooLargeError(
            f"图像尺寸 {img.width}×{img.height} 超出文件头 16 位字段上限 {MAX_DIMENSION}")


def encode_detailed(img: Image, cfg: EncoderConfig, report: Optional[EncodeReport] = None,
                    segmentation: Optional[Segmentation] = None) -> EncodeResult:
    """
    编码并返回中间结果（分割、链码、色调优化记录），供统计和测试使用。
    segmentation 为同一图像、算子、λ 下已有的合并结果（网格搜索的 λ 阶梯），给定时跳过合并。
    """
    report = report if report is not None else EncodeReport()
    t0 = time.perf_counter()

    # ── Step 1: 参数校验 ──
    logger.info("[1/5] 参数校验: op=%s λ=%g density=%s q=%s block=%d",
                cfg.op.cli_name, cfg.lam, cfg.density, cfg.q, cfg.block)
    _check_dimensions(img)
    op = get_operator(cfg.op, img.width, img.height, cfg.density, cfg.q)

    # ── Step 2: 区域合并 ──
    logger.info("[2/5] 区域合并 (%d×%d)", img.width, img.height)
    t = time.perf_counter()
    seg = segmentation if segmentation is not None else region_merge(img, op, cfg.lam, cfg.block)
    report.add_timing("merge", (time.perf_counter() - t) * 1000)
    pixels = img.width * img.height
    if seg.region_count > pixels / 4:
        raise DegenerateRateError(
            f"分割得到 {seg.region_count} 个区域，超过像素数的 1/4（{pixels / 4:g}），"
            f"逐区域数据将超过原始存储；请增大 λ 或初始块大小")
    report.add_metric("region_count", seg.region_count)
    report.add_metric("boundary_length", seg.boundary_total)
    report.add_metric("merge_count", len(seg.history))
    report.add_metric("energy", seg.energy(cfg.lam))

    # ── Step 3: 边界链码 ──
    logger.info("[3/5] 边界链码 (%d 个区域)", seg.region_count)
    chains = encode_boundaries(seg.labels, img.width, img.height)
    chain_bytes = serialize_chains(chains)
    report.add_metric("chain_count", len(chains))
    report.add_metric("chain_moves", chains.move_count)
    report.add_metric("chains_section_bytes", len(chain_bytes))

    # ── Step 4: 逐区域数据 ──
    logger.info("[4/5] 逐区域数据 (%s)", cfg.op.cli_name)
    t = time.perf_counter()
    records = []
    tonal_results = []
    empty_regions = 0
    for seg_region in seg.regions:
        region = seg_region.region
        if not op.is_inpainting:
            coeffs, _ = fit_polynomial(region, img, op.degree)
            records.append(poly_record(coeffs.coefficients))
            continue
        mask = op.known_data(region, img)
        if mask.is_empty:
            empty_regions += 1
            records.append(fallback_record(op.fallback_index(region, img)))
            continue
        result = tonal_optimize(op, region, mask, op.quantizer, cfg.tonal_budget, img)
        tonal_results.append(result)
        records.append(mask_record(result.indices))
    payload = b"".join(records)
    report.add_timing("payload", (time.perf_counter() - t) * 1000)
    report.add_metric("payload_section_bytes", len(payload))
    if op.is_inpainting:
        report.add_metric("empty_mask_regions", empty_regions)
        report.add_metric("tonal_initial_sse", float(sum(r.initial_sse for r in tonal_results)))
        report.add_metric("tonal_final_sse", float(sum(r.final_sse for r in tonal_results)))
        report.add_metric("tonal_changes", int(sum(r.changes for r in tonal_results)))
        nonconverged = getattr(op, "nonconverged", 0)
        if nonconverged:
            report.add_warning(f"CG 未收敛 {nonconverged} 次（已使用当前迭代值）")

    # ── Step 5: 熵编码 + 容器 ──
    logger.info("[5/5] 熵编码")
    body = chain_bytes + payload
    t = time.perf_counter()
    compressed = entropy_encode(body)
    report.add_timing("entropy", (time.perf_counter() - t) * 1000)
    header = ContainerHeader(
        width=img.width, height=img.height, op=cfg.op,
        q_byte=(cfg.q % 256) if op.is_inpainting else 0,
        density_fixed=density_to_fixed(cfg.density) if op.is_inpainting else 0,
        chain_count=len(chains), region_count=seg.region_count, body_length=len(body),
    )
    data = pack_container(header, compressed)
    report.add_metric("container_bytes", len(data))
    report.add_metric("bpp", 8.0 * len(data) / pixels)
    report.add_timing("total", (time.perf_counter() - t0) * 1000)
    logger.info("编码完成: %d 个区域, %d 字节", seg.region_count, len(data))
    return EncodeResult(data, header, seg, chains, tonal_results)


def encode(img: Image, cfg: EncoderConfig, report: Optional[EncodeReport] = None) -> bytes:
    return encode_detailed(img, cfg, report).data
