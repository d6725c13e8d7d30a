"""
裂缝边链码
分割边界 K 由像素之间的单位裂缝边组成。链码从一个格点角出发，
第一步给出绝对方向，之后每一步只记录相对当前朝向的左转 / 直行 / 右转。

坐标约定：格点角 (cx, cy)，cx ∈ [0, width]，cy ∈ [0, height]；y 轴向下。
方向 N=0, E=1, S=2, W=3（顺时针），相对移动 LEFT=0, STRAIGHT=1, RIGHT=2，
新朝向 = (朝向 + 移动 − 1) mod 4。图像外边框上的裂缝边从不存储。
"""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from core.errors import ChainOutOfBoundsError, MalformedStreamError
from segmentation.boundary import canonical_labels


class Direction(IntEnum):
    N = 0
    E = 1
    S = 2
    W = 3


class Move(IntEnum):
    LEFT = 0
    STRAIGHT = 1
    RIGHT = 2


_DX = (0, 1, 0, -1)
_DY = (-1, 0, 1, 0)

# 行走时的候选顺序：直行优先，其次左转、右转
_PREFERENCE = (Move.STRAIGHT, Move.LEFT, Move.RIGHT)


def turn(heading: int, move: int) -> int:
    return (heading + move - 1) % 4


@dataclass
class Chain:
    cx: int
    cy: int
    direction: Direction
    moves: list = field(default_factory=list)

    @property
    def edge_count(self) -> int:
        """初始一步 + 每个相对移动一步"""
        return 1 + len(self.moves)


@dataclass
class ChainSet:
    width: int
    height: int
    chains: list = field(default_factory=list)

    def __len__(self):
        return len(self.chains)

    @property
    def edge_count(self) -> int:
        return sum(c.edge_count for c in self.chains)

    @property
    def move_count(self) -> int:
        return sum(len(c.moves) for c in self.chains)


class CrackEdges:
    """
    内部裂缝边集合。
    vert[y, x]：格点角 (x, y) 与 (x, y+1) 之间的竖直边，分隔像素 (x−1, y) 和 (x, y)；
    horiz[y, x]：格点角 (x, y) 与 (x+1, y) 之间的水平边，分隔像素 (x, y−1) 和 (x, y)。
    """

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.vert = np.zeros((height, width + 1), dtype=bool)
        self.horiz = np.zeros((height + 1, width), dtype=bool)

    @classmethod
    def from_labels(cls, labels: np.ndarray) -> "CrackEdges":
        labels = np.asarray(labels)
        height, width = labels.shape
        edges = cls(width, height)
        edges.vert[:, 1:width] = labels[:, 1:] != labels[:, :-1]
        edges.horiz[1:height, :] = labels[1:, :] != labels[:-1, :]
        return edges

    def count(self) -> int:
        return int(self.vert.sum() + self.horiz.sum())

    def edge_slot(self, cx: int, cy: int, d: int):
        """从 (cx, cy) 沿方向 d 的内部裂缝边位置 (数组, y, x)；越界或落在外边框上返回 None"""
        w, h = self.width, self.height
        if d == Direction.N:
            if 1 <= cx <= w - 1 and 1 <= cy <= h:
                return self.vert, cy - 1, cx
        elif d == Direction.S:
            if 1 <= cx <= w - 1 and 0 <= cy <= h - 1:
                return self.vert, cy, cx
        elif d == Direction.E:
            if 1 <= cy <= h - 1 and 0 <= cx <= w - 1:
                return self.horiz, cy, cx
        elif d == Direction.W:
            if 1 <= cy <= h - 1 and 1 <= cx <= w:
                return self.horiz, cy, cx - 1
        return None

    def has(self, cx: int, cy: int, d: int) -> bool:
        slot = self.edge_slot(cx, cy, d)
        return slot is not None and bool(slot[0][slot[1], slot[2]])

    def take(self, cx: int, cy: int, d: int) -> None:
        arr, y, x = self.edge_slot(cx, cy, d)
        arr[y, x] = False

    def corners(self) -> list:
        """至少有一条内部边的格点角，行优先顺序"""
        touched = np.zeros((self.height + 1, self.width + 1), dtype=bool)
        touched[:-1, :] |= self.vert
        touched[1:, :] |= self.vert
        touched[:, :-1] |= self.horiz
        touched[:, 1:] |= self.horiz
        ys, xs = np.nonzero(touched)
        return list(zip(xs.tolist(), ys.tolist()))


def encode_boundaries(labels: np.ndarray, width: int, height: int) -> ChainSet:
    """
    把分割边界分解为边不相交的链。
    按行优先扫描格点角，在第一个仍有未走边的角起链，初始方向取编号最小的未走边，
    之后依次尝试直行、左转、右转，当前角无路可走时结束该链。
    """
    labels = np.asarray(labels)
    if labels.shape != (height, width):
        raise ValueError(f"标签图尺寸 {labels.shape} 与 {width}×{height} 不一致")
    remaining = CrackEdges.from_labels(labels)
    chains = []
    for cx, cy in remaining.corners():
        while True:
            start = next((d for d in Direction if remaining.has(cx, cy, d)), None)
            if start is None:
                break
            remaining.take(cx, cy, start)
            x, y, heading = cx + _DX[start], cy + _DY[start], int(start)
            moves = []
            while True:
                for move in _PREFERENCE:
                    nd = turn(heading, move)
                    if remaining.has(x, y, nd):
                        remaining.take(x, y, nd)
                        moves.append(int(move))
                        x, y, heading = x + _DX[nd], y + _DY[nd], nd
                        break
                else:
                    break
            chains.append(Chain(cx, cy, Direction(start), moves))
    return ChainSet(width, height, chains)


def chain_edges(chains: ChainSet) -> CrackEdges:
    """标记链码走过的全部裂缝边；越出内部边范围时报错"""
    edges = CrackEdges(chains.width, chains.height)
    for k, chain in enumerate(chains.chains):
        if not (0 <= chain.cx <= chains.width and 0 <= chain.cy <= chains.height):
            raise ChainOutOfBoundsError(f"第 {k} 条链的起点 ({chain.cx}, {chain.cy}) 越界")
        if int(chain.direction) not in (0, 1, 2, 3):
            raise MalformedStreamError(f"第 {k} 条链的初始方向非法: {int(chain.direction)}")
        x, y, heading = chain.cx, chain.cy, int(chain.direction)
        steps = [heading]
        for move in chain.moves:
            if move not in (0, 1, 2):
                raise MalformedStreamError(f"第 {k} 条链含非法移动码: {move}")
            heading = turn(heading, move)
            steps.append(heading)
        for d in steps:
            slot = edges.edge_slot(x, y, d)
            if slot is None:
                raise ChainOutOfBoundsError(
                    f"第 {k} 条链在 ({x}, {y}) 处沿 {Direction(d).name} 走出内部裂缝边范围")
            arr, ey, ex = slot
            arr[ey, ex] = True
            x, y = x + _DX[d], y + _DY[d]
    return edges


def decode_boundaries(chains: ChainSet, width: int, height: int) -> np.ndarray:
    """
    由链码恢复标签图：未被裂缝边隔开的 4 邻域像素相连，按连通分量编号，
    再按各区域首个像素（行优先）规范化。
    """
    if (chains.width, chains.height) != (width, height):
        chains = ChainSet(width, height, chains.chains)
    edges = chain_edges(chains)
    n = width * height
    idx = np.arange(n).reshape(height, width)

    h_open = ~edges.vert[:, 1:width]
    v_open = ~edges.horiz[1:height, :]
    src = np.concatenate([idx[:, :-1][h_open], idx[:-1, :][v_open]])
    dst = np.concatenate([idx[:, 1:][h_open], idx[1:, :][v_open]])
    graph = coo_matrix((np.ones(src.size, dtype=np.int8), (src, dst)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return canonical_labels(labels.reshape(height, width))
