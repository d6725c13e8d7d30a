"""
pytest 共享 fixture
提供小尺寸测试图像（台阶 / 常数 / 随机）和随机连通划分工厂。
"""

import numpy as np
import pytest

from core.image import Image
from segmentation.boundary import canonical_labels


@pytest.fixture
def step_image():
    """4×4 竖直台阶：左两列 0，右两列 255"""
    return Image.from_array(np.array([[0, 0, 255, 255]] * 4, dtype=np.float64))


@pytest.fixture
def constant_image():
    """16×16 常数图像，灰度 117"""
    return Image.from_array(np.full((16, 16), 117.0))


@pytest.fixture
def random_image():
    """随机 8 位灰度图像工厂：random_image(width, height, seed)"""

    def _make(width: int, height: int, seed: int = 0, low: int = 0, high: int = 256) -> Image:
        rng = np.random.default_rng(seed)
        return Image.from_array(rng.integers(low, high, size=(height, width)).astype(np.float64))

    return _make


@pytest.fixture
def random_partition():
    """
    随机 4 连通划分工厂：random_partition(width, height, seed, merges)。
    从每像素一个区域出发，随机挑选相邻像素对做并查集合并，返回规范标签图。
    """

    def _make(width: int, height: int, seed: int = 0, merges: int = None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        n = width * height
        if merges is None:
            merges = n // 2
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for _ in range(merges):
            x, y = int(rng.integers(0, width)), int(rng.integers(0, height))
            if rng.random() < 0.5:
                nx, ny = x + 1, y
            else:
                nx, ny = x, y + 1
            if nx >= width or ny >= height:
                continue
            a, b = find(y * width + x), find(ny * width + nx)
            if a != b:
                parent[max(a, b)] = min(a, b)

        labels = np.array([find(i) for i in range(n)]).reshape(height, width)
        return canonical_labels(labels)

    return _make
