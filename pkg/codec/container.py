"""
容器格式
  文件头（明文，大端）：
    magic "MSCC" | version u8 | width u16 | height u16 | op u8 | q u8 (0 = 256)
    | density u16 (d·10000) | chain_count u32 | region_count u32 | body_length u32
  正文（熵编码前）：
    链码段：每条链 cx u16 | cy u16 | 初始方向 u8 | 移动数 u32 | 每个移动 1 字节 (0/1/2)
    区域数据段：按规范区域顺序逐条存放（见 codec.payload）
"""

import struct

from chaincode.chains import Chain, ChainSet
from codec.schemas import ContainerHeader
from core.config import CONTAINER_MAGIC, CONTAINER_VERSION
from core.errors import (
    BadMagicError, MalformedStreamError, PayloadExhaustedError, UnsupportedVersionError,
)
from core.logging import logger

HEADER_FORMAT = ">4sBHHBBHIII"
HEADER_SIZE = struct.calcsize(HEADER_FORMAT)
_CHAIN_FORMAT = ">HHBI"
_CHAIN_SIZE = struct.calcsize(_CHAIN_FORMAT)


def pack_header(header: ContainerHeader) -> bytes:
    return struct.pack(
        HEADER_FORMAT, CONTAINER_MAGIC, header.version, header.width, header.height,
        int(header.op), header.q_byte, header.density_fixed,
        header.chain_count, header.region_count, header.body_length,
    )


def unpack_header(data: bytes) -> ContainerHeader:
    """解析文件头；魔数、版本、字段取值错误分别报告"""
    magic = bytes(data[:len(CONTAINER_MAGIC)])
    if magic != CONTAINER_MAGIC:
        logger.warning("容器魔数错误: %r", magic)
        raise BadMagicError(f"魔数应为 {CONTAINER_MAGIC!r}，实际为 {magic!r}")
    if len(data) < HEADER_SIZE:
        logger.warning("容器长度 %d 字节，不足以容纳文件头", len(data))
        raise MalformedStreamError(f"文件头不完整：需要 {HEADER_SIZE} 字节，实际 {len(data)} 字节")
    _, version, width, height, op, q_byte, density, chains, regions, body_len = \
        struct.unpack_from(HEADER_FORMAT, data, 0)
    if version != CONTAINER_VERSION:
        logger.warning("不支持的容器版本: %d", version)
        raise UnsupportedVersionError(f"不支持的容器版本 {version}（当前支持 {CONTAINER_VERSION}）")
    return ContainerHeader.parse(
        version=version, width=width, height=height, op=op, q_byte=q_byte,
        density_fixed=density, chain_count=chains, region_count=regions, body_length=body_len,
    )


def pack_container(header: ContainerHeader, compressed_body: bytes) -> bytes:
    return pack_header(header) + bytes(compressed_body)


def unpack_container(data: bytes) -> tuple:
    """返回 (文件头, 压缩正文)"""
    data = bytes(data)
    header = unpack_header(data)
    return header, data[HEADER_SIZE:]


# --- 链码段 ---

def serialize_chains(chains: ChainSet) -> bytes:
    out = bytearray()
    for chain in chains.chains:
        out += struct.pack(_CHAIN_FORMAT, chain.cx, chain.cy, int(chain.direction), len(chain.moves))
        out += bytes(chain.moves)
    return bytes(out)


def parse_chains(body: bytes, count: int, width: int, height: int, offset: int = 0) -> tuple:
    """从正文 offset 处读取 count 条链，返回 (ChainSet, 新偏移)；方向与移动码的合法性由链码解码检查"""
    chains = []
    for k in range(count):
        if offset + _CHAIN_SIZE > len(body):
            raise PayloadExhaustedError(f"读取第 {k} 条链的链头时正文已耗尽")
        cx, cy, direction, n_moves = struct.unpack_from(_CHAIN_FORMAT, body, offset)
        offset += _CHAIN_SIZE
        if offset + n_moves > len(body):
            raise PayloadExhaustedError(f"第 {k} 条链声明 {n_moves} 个移动，正文剩余不足")
        chains.append(Chain(cx, cy, direction, list(body[offset:offset + n_moves])))
        offset += n_moves
    return ChainSet(width, height, chains), offset
