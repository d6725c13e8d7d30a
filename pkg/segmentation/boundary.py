"""
边界长度与标签规范化
边界以 4 邻域裂缝边计：水平、竖直方向上标签不同的相邻像素对各算一条，图像外边框不计。
"""

import numpy as np


def _unequal_pairs(labels: np.ndarray) -> tuple:
    """所有标签不同的 4 邻域像素对 (a, b)，a < b"""
    h_a, h_b = labels[:, :-1], labels[:, 1:]
    v_a, v_b = labels[:-1, :], labels[1:, :]
    hm = h_a != h_b
    vm = v_a != v_b
    a = np.concatenate([h_a[hm], v_a[vm]])
    b = np.concatenate([h_b[hm], v_b[vm]])
    return np.minimum(a, b), np.maximum(a, b)


def boundary_length(labels: np.ndarray) -> tuple:
    """
    返回 (总长度, {(i, j): 共同边界长度})，i < j。
    总长度等于各相邻区域对长度之和，即 len(K)。
    """
    labels = np.asarray(labels)
    lo, hi = _unequal_pairs(labels)
    if lo.size == 0:
        return 0, {}
    pairs, counts = np.unique(np.stack([lo, hi], axis=1), axis=0, return_counts=True)
    per_pair = {(int(i), int(j)): int(c) for (i, j), c in zip(pairs.tolist(), counts.tolist())}
    return int(lo.size), per_pair


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """按每个区域第一个像素（行优先）的出现顺序把区域重新编号为 0..n−1"""
    labels = np.asarray(labels)
    flat = labels.ravel()
    _, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.ravel()].reshape(labels.shape)


def same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    """两个标签图是否描述同一划分（忽略编号）"""
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and bool(np.array_equal(canonical_labels(a), canonical_labels(b)))
