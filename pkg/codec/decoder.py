"""
解码流水线
文件头 → 熵解码正文 → 链码恢复标签图 → 按规范区域顺序分配区域数据 → 逐区域重建 → 截断到 [0, 255]。
相同字节总是得到相同图像。
"""

from dataclasses import dataclass

import numpy as np

from chaincode.chains import decode_boundaries
from codec.container import parse_chains, unpack_container
from codec.payload import FLAG_FALLBACK, PayloadReader
from codec.schemas import ContainerHeader
from core.errors import BodyLengthMismatchError, EntropyStreamError, PayloadAlignmentError
from core.image import Image
from core.logging import logger
from entropy.range_coder import entropy_decode
from operators.base import get_operator
from operators.polynomial import PolyCoefficients, coefficient_count, eval_polynomial
from operators.region import MaskData, RegionView, region_mask_positions


@dataclass
class DecodeResult:
    image: Image
    labels: np.ndarray
    header: ContainerHeader


def label_regions(labels: np.ndarray) -> list:
    """规范标签图 → 按 id 排列的 RegionView 列表"""
    height, width = labels.shape
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat)
    return [RegionView.from_flat(pix, width, height)
            for pix in np.split(order, np.cumsum(counts)[:-1])]


def decode_with_labels(data: bytes) -> DecodeResult:
    header, compressed = unpack_container(data)
    try:
        body = entropy_decode(compressed, header.body_length)
    except EntropyStreamError as e:
        logger.warning("正文熵解码失败: %s", e)
        raise BodyLengthMismatchError(
            f"压缩正文（{len(compressed)} 字节）与文件头记录的正文长度 {header.body_length} 不一致"
        ) from e

    w, h = header.width, header.height
    chains, offset = parse_chains(body, header.chain_count, w, h)
    labels = decode_boundaries(chains, w, h)
    regions = label_regions(labels)
    if len(regions) != header.region_count:
        raise PayloadAlignmentError(
            f"链码恢复出 {len(regions)} 个区域，文件头记录 {header.region_count} 个")

    reader = PayloadReader(body, offset)
    out = np.empty(w * h)
    if header.op.is_inpainting:
        op = get_operator(header.op, w, h, header.density, header.levels)
        for region in regions:
            positions = region_mask_positions(region, op.grid)
            flag, indices = reader.read_mask(positions.size, header.levels)
            if flag == FLAG_FALLBACK:
                out[region.flat] = op.fallback_value(int(indices[0]))
                continue
            mask = MaskData(positions, op.quantizer.dequantize(indices), op.density, indices)
            out[region.flat] = op.reconstruct(region, mask)
    else:
        degree = int(header.op)
        count = coefficient_count(degree)
        for region in regions:
            coeffs = PolyCoefficients(degree, reader.read_poly(count), region.centroid())
            out[region.flat] = eval_polynomial(coeffs, region)
    reader.finish()

    image = Image(width=w, height=h, samples=np.clip(out, 0.0, 255.0))
    return DecodeResult(image, labels, header)


def decode(data: bytes) -> Image:
    return decode_with_labels(data).image
