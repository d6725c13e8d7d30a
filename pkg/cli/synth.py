"""
合成分段光滑测试图像
三种生成器均由 numpy.random.default_rng(seed) 驱动，同一参数总是得到相同图像：
  - steps:          分段常数，左右两半 0 / 255 的台阶，较大图像上叠加随机常数矩形
  - ramps:          分段线性斜坡，区域边界为正弦曲线与圆
  - voronoi-smooth: Voronoi 单元内填充光滑二次曲面，只在单元边界处有跳变
"""

import numpy as np

from core.image import Image

SYNTH_KINDS = ("steps", "ramps", "voronoi-smooth")


def _finish(values: np.ndarray) -> Image:
    """就近取整到 8 位灰度，保证 PGM 往返无损"""
    return Image.from_array(np.clip(np.floor(values + 0.5), 0, 255))


def synth_steps(width: int, height: int, rng: np.random.Generator) -> Image:
    ys, xs = np.mgrid[0:height, 0:width]
    img = np.where(xs < width // 2, 0.0, 255.0)
    if min(width, height) >= 16:
        for _ in range(int(rng.integers(2, 6))):
            x0, x1 = np.sort(rng.integers(0, width, size=2))
            y0, y1 = np.sort(rng.integers(0, height, size=2))
            img[y0:y1 + 1, x0:x1 + 1] = float(rng.integers(0, 256))
    return _finish(img)


def synth_ramps(width: int, height: int, rng: np.random.Generator) -> Image:
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    amp = rng.uniform(0.1, 0.25) * height
    period = rng.uniform(0.5, 1.5) * width
    phase = rng.uniform(0, 2 * np.pi)
    curve = height / 2 + amp * np.sin(2 * np.pi * xs / period + phase)
    cx, cy = rng.uniform(0.25, 0.75) * width, rng.uniform(0.25, 0.75) * height
    radius = rng.uniform(0.15, 0.3) * min(width, height)
    piece = (ys > curve).astype(np.int64) + 2 * ((xs - cx) ** 2 + (ys - cy) ** 2 < radius ** 2)

    img = np.empty((height, width))
    scale = max(width, height)
    for k in range(4):
        base = rng.uniform(30, 225)
        gx, gy = rng.uniform(-80, 80, size=2) / scale
        sel = piece == k
        img[sel] = base + gx * (xs[sel] - width / 2) + gy * (ys[sel] - height / 2)
    return _finish(img)


def synth_voronoi_smooth(width: int, height: int, rng: np.random.Generator) -> Image:
    cells = max(2, min(32, (width * height) // 512))
    sx = rng.uniform(0, width, size=cells)
    sy = rng.uniform(0, height, size=cells)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    dist = (xs[..., None] - sx) ** 2 + (ys[..., None] - sy) ** 2
    owner = np.argmin(dist, axis=-1)

    img = np.empty((height, width))
    scale = float(max(width, height))
    for k in range(cells):
        sel = owner == k
        dx = (xs[sel] - sx[k]) / scale
        dy = (ys[sel] - sy[k]) / scale
        c = rng.uniform(-1, 1, size=6) * np.array([0, 120, 120, 200, 200, 200])
        c[0] = rng.uniform(40, 215)
        img[sel] = c[0] + c[1] * dx + c[2] * dy + c[3] * dx * dx + c[4] * dx * dy + c[5] * dy * dy
    return _finish(img)


_GENERATORS = {
    "steps": synth_steps,
    "ramps": synth_ramps,
    "voronoi-smooth": synth_voronoi_smooth,
}


def synthesize(kind: str, width: int, height: int, seed: int) -> Image:
    if kind not in _GENERATORS:
        raise ValueError(f"未知合成图像类型: {kind!r}，可选: {', '.join(SYNTH_KINDS)}")
    if width <= 0 or height <= 0:
        raise ValueError(f"图像尺寸必须为正: {width}×{height}")
    return _GENERATORS[kind](width, height, np.random.default_rng(seed))
