"""
自适应二进制区间编码器
逐字节、逐比特（高位在前）编码。上下文 = 前一个字节 × 256 + 当前字节已编码比特构成的节点号（1..255），
节点号同时隐含比特位置。每个上下文一个 12 位定点概率（比特为 0 的概率），
按 1/16 的速率自适应。全部为整数运算，跨平台结果一致。

区间编码采用 32 位 low/range 与 cache + carry 进位传播；
编码结束写 5 个刷新字节，解码开始先读 5 个字节。
"""

from core.config import PROB_BITS, PROB_SHIFT, RANGE_TOP
from core.errors import EntropyStreamError

_PROB_ONE = 1 << PROB_BITS
_PROB_INIT = _PROB_ONE // 2
_CONTEXTS = 256 * 256
_MASK32 = 0xFFFFFFFF


class RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = _MASK32
        self.cache = 0
        self.cache_size = 1
        self.out = bytearray()

    def _shift_low(self):
        if self.low < 0xFF000000 or self.low > _MASK32:
            carry = self.low >> 32
            temp = self.cache
            while True:
                self.out.append((temp + carry) & 0xFF)
                temp = 0xFF
                self.cache_size -= 1
                if self.cache_size == 0:
                    break
            self.cache = (self.low >> 24) & 0xFF
        self.cache_size += 1
        self.low = (self.low & 0x00FFFFFF) << 8

    def encode_bit(self, probs: list, ctx: int, bit: int) -> None:
        p = probs[ctx]
        bound = (self.range >> PROB_BITS) * p
        if bit:
            self.low += bound
            self.range -= bound
            probs[ctx] = p - (p >> PROB_SHIFT)
        else:
            self.range = bound
            probs[ctx] = p + ((_PROB_ONE - p) >> PROB_SHIFT)
        while self.range < RANGE_TOP:
            self.range <<= 8
            self._shift_low()

    def finish(self) -> bytes:
        for _ in range(5):
            self._shift_low()
        return bytes(self.out)


class RangeDecoder:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.range = _MASK32
        self.code = 0
        for _ in range(5):
            self.code = ((self.code << 8) | self._next_byte()) & _MASK32

    def _next_byte(self) -> int:
        if self.pos >= len(self.data):
            raise EntropyStreamError("熵解码读到压缩流末尾之后")
        b = self.data[self.pos]
        self.pos += 1
        return b

    def decode_bit(self, probs: list, ctx: int) -> int:
        p = probs[ctx]
        bound = (self.range >> PROB_BITS) * p
        if self.code < bound:
            self.range = bound
            probs[ctx] = p + ((_PROB_ONE - p) >> PROB_SHIFT)
            bit = 0
        else:
            self.code -= bound
            self.range -= bound
            probs[ctx] = p - (p >> PROB_SHIFT)
            bit = 1
        while self.range < RANGE_TOP:
            self.range <<= 8
            self.code = ((self.code << 8) | self._next_byte()) & _MASK32
        return bit

    @property
    def exhausted(self) -> bool:
        return self.pos == len(self.data)


def entropy_encode(s: bytes) -> bytes:
    """空输入只产生 5 个刷新字节"""
    probs = [_PROB_INIT] * _CONTEXTS
    enc = RangeEncoder()
    prev = 0
    for byte in bytes(s):
        node = 1
        base = prev << 8
        for shift in range(7, -1, -1):
            bit = (byte >> shift) & 1
            enc.encode_bit(probs, base | node, bit)
            node = (node << 1) | bit
        prev = byte
    return enc.finish()


def entropy_decode(s: bytes, original_length: int) -> bytes:
    """
    解码 original_length 个字节。
    压缩流不足或解码结束后仍有未读字节，都视为码流损坏。
    """
    if original_length < 0:
        raise EntropyStreamError(f"原始长度不能为负: {original_length}")
    probs = [_PROB_INIT] * _CONTEXTS
    dec = RangeDecoder(bytes(s))
    out = bytearray()
    prev = 0
    for _ in range(original_length):
        node = 1
        base = prev << 8
        for _ in range(8):
            node = (node << 1) | dec.decode_bit(probs, base | node)
        prev = node & 0xFF
        out.append(prev)
    if not dec.exhausted:
        raise EntropyStreamError(f"熵解码结束后剩余 {len(dec.data) - dec.pos} 个未读字节")
    return bytes(out)
