"""
修复类算子单元测试
齐次扩散（CG 求解）与 Shepard 插值的重建值、边界情形和增量更新。
Shepard 的对照实现为逐像素加权平均的暴力计算。
"""

import math

import numpy as np
import pytest

from core.config import CG_TOL
from core.image import Image
from operators.base import region_sse
from operators.diffusion import (
    DiffusionOperator, DiffusionSystem, conjugate_gradient, diffusion_reconstruct,
)
from operators.region import MaskData, RegionView
from operators.shepard import ShepardField, ShepardOperator, shepard_reconstruct, shepard_window
from segmentation.boundary import boundary_length


def _blob_region(width, height, seed):
    """随机 4 连通区域：从中心像素出发的随机生长"""
    rng = np.random.default_rng(seed)
    member = np.zeros((height, width), dtype=bool)
    frontier = [(width // 2, height // 2)]
    target = int(width * height * 0.6)
    while frontier and member.sum() < target:
        x, y = frontier.pop(int(rng.integers(0, len(frontier))))
        if member[y, x]:
            continue
        member[y, x] = True
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < width and 0 <= ny < height and not member[ny, nx]:
                frontier.append((nx, ny))
    return RegionView.from_mask(member)


def _random_mask(region, seed, count, density=0.04):
    rng = np.random.default_rng(seed)
    positions = np.sort(rng.choice(region.size, size=count, replace=False))
    values = rng.integers(0, 256, size=count).astype(np.float64)
    return MaskData(positions, values, density)


def _shepard_brute_force(region, mask):
    sigma, half, _ = shepard_window(mask.density)
    mx, my = region.xs[mask.positions], region.ys[mask.positions]
    out = np.empty(region.size)
    for j in range(region.size):
        hit = np.nonzero(mask.positions == j)[0]
        if hit.size:
            out[j] = mask.values[hit[0]]
            continue
        dx = mx - region.xs[j]
        dy = my - region.ys[j]
        near = (np.abs(dx) <= half) & (np.abs(dy) <= half)
        if near.any():
            w = np.exp(-(dx[near] ** 2 + dy[near] ** 2) / (2 * sigma * sigma))
            out[j] = float(w @ mask.values[near]) / float(w.sum())
        else:
            out[j] = mask.values[np.argmin(dx * dx + dy * dy)]
    return out


# ═══════════════════════════════════════
#  共轭梯度 / 齐次扩散
# ═══════════════════════════════════════

class TestConjugateGradient:
    """conjugate_gradient 基本正确性"""

    def test_matches_dense_solve(self):
        """5×5 对称正定系统 → 与 numpy 直接解一致"""
        rng = np.random.default_rng(0)
        m = rng.normal(size=(5, 5))
        a = m @ m.T + 5 * np.eye(5)
        b = rng.normal(size=5)
        x, converged, iterations = conjugate_gradient(a, b, np.zeros(5), 1e-12, 100)
        assert converged
        assert iterations <= 10
        assert np.allclose(x, np.linalg.solve(a, b), atol=1e-9)

    def test_exact_start(self):
        """初值即为解 → 0 次迭代"""
        a = np.diag([2.0, 3.0])
        x, converged, iterations = conjugate_gradient(a, np.array([2.0, 3.0]), np.ones(2), 1e-9, 10)
        assert converged and iterations == 0
        assert np.array_equal(x, np.ones(2))


class TestDiffusionReconstruct:
    """diffusion_reconstruct 重建值"""

    def test_three_pixel_line(self):
        """1×3 区域，两端掩码 0 / 100 → 中间 50"""
        region = RegionView.full(3, 1)
        result = diffusion_reconstruct(region, MaskData([0, 2], [0.0, 100.0], 1.0))
        assert result.converged
        assert result.values[1] == pytest.approx(50.0, abs=1e-4)
        assert result.values[0] == 0.0 and result.values[2] == 100.0

    def test_full_mask_exact(self):
        """全部像素都是掩码 → 重建值即掩码值，不需要迭代"""
        region = RegionView.full(3, 2)
        values = np.array([1.0, 5.0, 9.0, 2.0, 7.0, 3.0])
        result = diffusion_reconstruct(region, MaskData(np.arange(6), values, 1.0))
        assert np.array_equal(result.values, values)
        assert result.iterations == 0

    def test_constant_mask(self):
        """掩码值全为 c → 每个像素都是 c"""
        region = _blob_region(12, 12, seed=1)
        mask = _random_mask(region, seed=2, count=5)
        mask = MaskData(mask.positions, np.full(len(mask), 77.0), mask.density)
        u = diffusion_reconstruct(region, mask).values
        assert np.allclose(u, 77.0, atol=77.0 * 1e-6)

    @pytest.mark.parametrize("seed", range(50))
    def test_maximum_principle(self, seed):
        """
        未截断的 CG 迭代值：线性系统的精确解落在掩码值 [min, max] 内，
        迭代值与精确解之差不超过 ‖r‖₂ / λmin(A)。
        """
        region = _blob_region(14, 10, seed=seed)
        mask = _random_mask(region, seed=seed + 100, count=6)
        system = DiffusionSystem(region, mask.positions)
        b = system.B @ mask.values
        start = np.full(system.unknown.size, float(mask.values.mean()))
        x, converged, _ = conjugate_gradient(system.A, b, start, CG_TOL, 10 * system.unknown.size)
        assert converged

        dense = system.A.toarray()
        lo, hi = mask.values.min(), mask.values.max()
        exact = np.linalg.solve(dense, b)
        assert exact.min() >= lo - 1e-9 * 255
        assert exact.max() <= hi + 1e-9 * 255
        residual = np.linalg.norm(b - dense @ x)
        assert residual <= 1.01 * CG_TOL * np.linalg.norm(b)
        slack = residual / np.linalg.eigvalsh(dense).min()
        assert x.min() >= lo - slack - 1e-9 * 255
        assert x.max() <= hi + slack + 1e-9 * 255
    @pytest.mark.parametrize("seed", range(3))
    def test_discrete_laplace_satisfied(self, seed):
        """未知像素满足五点 Laplace 方程（相对残差 ≤ 求解容差量级）"""
        region = _blob_region(12, 12, seed=seed)
        mask = _random_mask(region, seed=seed + 7, count=4)
        system = DiffusionSystem(region, mask.positions)
        u = diffusion_reconstruct(region, mask, tol=1e-10).values
        b = system.B @ mask.values
        residual = system.A @ u[system.unknown] - b
        assert np.linalg.norm(residual) <= 1e-8 * max(np.linalg.norm(b), 1.0)

    def test_pixel_order_invariant(self):
        """同一像素集合以不同顺序给出 → 重建相同"""
        region = _blob_region(10, 10, seed=4)
        rng = np.random.default_rng(9)
        perm = rng.permutation(region.size)
        shuffled = RegionView(region.xs[perm], region.ys[perm], 10, 10)
        mask = _random_mask(region, seed=3, count=5)
        a = diffusion_reconstruct(region, mask).values
        b = diffusion_reconstruct(shuffled, mask).values
        assert np.array_equal(a, b)

    def test_empty_mask_rejected(self):
        """空掩码 → ValueError（回退由上层处理）"""
        with pytest.raises(ValueError):
            diffusion_reconstruct(RegionView.full(2, 2), MaskData([], [], 0.25))


class TestDiffusionOperator:
    """DiffusionOperator 未收敛处理"""

    def test_nonconvergence_counted(self):
        """迭代上限为 0 → 返回初值、标记未收敛并计数，不抛异常"""
        op = DiffusionOperator(8, 8, 0.25, 256, max_iter_factor=0)
        region = RegionView.full(8, 8)
        result = op.solve(region, MaskData([0, 63], [0.0, 255.0], op.density))
        assert not result.converged
        assert op.nonconverged == 1
        assert np.all((result.values >= 0.0) & (result.values <= 255.0))

    def test_converged_not_counted(self):
        """正常求解 → 不计数"""
        op = DiffusionOperator(8, 8, 0.25, 256)
        f = Image.from_array(np.tile(np.arange(8.0) * 30, (8, 1)))
        op.reconstruct_region(RegionView.full(8, 8), f)
        assert op.nonconverged == 0


# ═══════════════════════════════════════
#  Shepard 插值
# ═══════════════════════════════════════

class TestShepardWindow:
    """σ 与截断窗口"""

    def test_quarter_density(self):
        """d = 0.25 → σ ≈ 1.12838，半宽 3，核长度 7"""
        sigma, half, kernel = shepard_window(0.25)
        assert sigma == pytest.approx(1.0 / math.sqrt(math.pi * 0.25))
        assert sigma == pytest.approx(1.12838, abs=1e-5)
        assert half == 3
        assert kernel.size == 7 and kernel[3] == 1.0

    def test_symmetric_kernel(self):
        """核左右对称"""
        _, _, kernel = shepard_window(0.04)
        assert np.array_equal(kernel, kernel[::-1])


class TestShepardReconstruct:
    """shepard_reconstruct 重建值"""

    def test_single_mask_pixel(self):
        """窗口内唯一掩码像素 42 → 全部像素 42"""
        region = RegionView.full(5, 5)
        u = shepard_reconstruct(region, MaskData([12], [42.0], 0.25))
        assert np.all(u == 42.0)

    def test_equidistant_average(self):
        """两个等距掩码像素 10 / 30 → 中点 20"""
        region = RegionView.full(3, 1)
        u = shepard_reconstruct(region, MaskData([0, 2], [10.0, 30.0], 0.25))
        assert u[1] == pytest.approx(20.0)

    def test_full_density_zero_error(self, random_image):
        """d = 1、q = 256 → 每个像素都是掩码像素，误差 0"""
        f = random_image(6, 6, seed=5)
        op = ShepardOperator(6, 6, 1.0, 256)
        assert region_sse(op, RegionView.full(6, 6), f) == 0.0

    def test_nearest_fallback(self):
        """窗口内没有掩码像素 → 取最近掩码像素的值"""
        region = RegionView.full(10, 1)
        u = shepard_reconstruct(region, MaskData([0, 9], [7.0, 99.0], 1.0))
        assert u.tolist() == [7.0] * 5 + [99.0] * 5

    def test_nearest_tie_row_major(self):
        """与两个掩码像素等距 → 行优先靠前者胜出"""
        region = RegionView.full(9, 1)
        u = shepard_reconstruct(region, MaskData([0, 8], [7.0, 99.0], 1.0))
        assert u[4] == 7.0

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_brute_force(self, seed):
        """随机区域与掩码 → 与逐像素加权平均一致"""
        region = _blob_region(16, 14, seed=seed)
        mask = _random_mask(region, seed=seed + 50, count=8, density=0.1)
        u = shepard_reconstruct(region, mask)
        assert np.allclose(u, _shepard_brute_force(region, mask), rtol=1e-9, atol=1e-9)

    @pytest.mark.parametrize("seed", range(50))
    def test_convex_combination_bound(self, seed):
        """非掩码像素：未截断的加权平均落在窗口内掩码值的 [min, max] 内，重建值与之一致"""
        region = _blob_region(16, 16, seed=seed)
        mask = _random_mask(region, seed=seed + 30, count=10, density=0.05)
        sigma, half, _ = shepard_window(mask.density)
        u = shepard_reconstruct(region, mask)
        mx, my = region.xs[mask.positions], region.ys[mask.positions]
        is_mask = np.zeros(region.size, dtype=bool)
        is_mask[mask.positions] = True
        checked = 0
        for j in np.nonzero(~is_mask)[0]:
            dx = mx - region.xs[j]
            dy = my - region.ys[j]
            near = (np.abs(dx) <= half) & (np.abs(dy) <= half)
            if not near.any():
                continue
            w = np.exp(-(dx[near] ** 2 + dy[near] ** 2) / (2 * sigma * sigma))
            ratio = float(w @ mask.values[near]) / float(w.sum())
            lo, hi = mask.values[near].min(), mask.values[near].max()
            assert lo - 1e-9 <= ratio <= hi + 1e-9
            assert u[j] == pytest.approx(ratio, rel=1e-9, abs=1e-9)
            checked += 1
        assert checked > 0
    def test_mask_values_reproduced(self):
        """掩码像素上的重建值即掩码值"""
        region = _blob_region(12, 12, seed=8)
        mask = _random_mask(region, seed=1, count=6)
        u = shepard_reconstruct(region, mask)
        assert np.array_equal(u[mask.positions], mask.values)


class TestShepardField:
    """增量更新与整体重建一致"""

    def test_apply_matches_fresh(self):
        """连续修改若干掩码值后，状态与重新整体重建一致"""
        region = _blob_region(18, 18, seed=2)
        mask = _random_mask(region, seed=4, count=12, density=0.05)
        op = ShepardOperator(18, 18, 0.05, 256)
        field = op.field(region, mask)
        values = mask.values.copy()
        rng = np.random.default_rng(0)
        for _ in range(6):
            m = int(rng.integers(0, len(mask)))
            values[m] = float(rng.integers(0, 256))
            field.apply(m, values[m])
        fresh = shepard_reconstruct(region, MaskData(mask.positions, values, mask.density))
        assert np.allclose(field.values_array(), fresh, rtol=1e-9, atol=1e-9)

    def test_trial_does_not_mutate(self):
        """trial 返回受影响像素的新值，但不改变状态"""
        region = _blob_region(14, 14, seed=6)
        mask = _random_mask(region, seed=5, count=8, density=0.05)
        field = ShepardField(region, mask.positions, mask.values, mask.density)
        before = field.values_array()
        ords, new = field.trial(3, 255.0)
        assert np.array_equal(field.values_array(), before)
        values = mask.values.copy()
        values[3] = 255.0
        fresh = shepard_reconstruct(region, MaskData(mask.positions, values, mask.density))
        assert np.allclose(new, fresh[ords], rtol=1e-9, atol=1e-9)
        untouched = np.setdiff1d(np.arange(region.size), ords)
        assert np.allclose(before[untouched], fresh[untouched], rtol=1e-9, atol=1e-9)


# ═══════════════════════════════════════
#  公共部分：已知数据与空掩码回退
# ═══════════════════════════════════════

class TestInpaintingCommon:
    """InpaintingOperator 的网格求交、量化与回退"""

    def test_known_data_grid(self):
        """4×4、d = 0.25 → 掩码为 (1,1) (3,1) (1,3) (3,3)"""
        f = Image.from_array(np.arange(16.0).reshape(4, 4))
        op = ShepardOperator(4, 4, 0.25, 256)
        mask = op.known_data(RegionView.full(4, 4), f)
        assert mask.positions.tolist() == [5, 7, 13, 15]
        assert mask.values.tolist() == [5.0, 7.0, 13.0, 15.0]

    def test_quantized_values(self):
        """q = 16 时掩码值为 requantize(f)"""
        f = Image.from_array(np.full((4, 4), 100.0))
        op = DiffusionOperator(4, 4, 0.25, 16)
        mask = op.known_data(RegionView.full(4, 4), f)
        assert np.all(mask.indices == 6)
        assert np.all(mask.values == 102.0)

    @pytest.mark.parametrize("cls", [ShepardOperator, DiffusionOperator])
    def test_empty_mask_fallback(self, cls):
        """区域内没有网格像素 → 常数 requantize(区域均值)"""
        f = Image.from_array(np.full((4, 4), 100.0))
        op = cls(4, 4, 0.25, 16)
        region = RegionView([0, 0], [0, 1], 4, 4)
        assert op.known_data(region, f).is_empty
        assert np.all(op.reconstruct_region(region, f) == 102.0)
        assert region_sse(op, region, f) == pytest.approx(8.0)

    @pytest.mark.parametrize("cls", [ShepardOperator, DiffusionOperator])
    def test_constant_region_zero(self, cls, constant_image):
        """常数图像、q = 256 → 任意区域误差 0"""
        op = cls(16, 16, 0.04, 256)
        region = _blob_region(16, 16, seed=3)
        assert region_sse(op, region, constant_image) == pytest.approx(0.0, abs=1e-9)

    def test_merge_stats_sorted(self):
        """并集统计量的像素为两侧扁平索引的有序合并"""
        op = ShepardOperator(4, 4, 0.25, 256)
        f = Image.from_array(np.zeros((4, 4)))
        merged = op.merge_stats(f, op.region_stats(f, [9, 1]), op.region_stats(f, [4, 0]))
        assert merged.flat.tolist() == [0, 1, 4, 9]


# ═══════════════════════════════════════
#  合并统计量：缓存路径与直接重建一致
# ═══════════════════════════════════════

def _stats_operator(cls, width, height, density=0.05, levels=32):
    if cls is DiffusionOperator:
        return cls(width, height, density, levels, tol=1e-12)
    return cls(width, height, density, levels)


class TestMergeStatistics:
    """region_stats / merge_stats / union_sse 与逐像素重建的对照"""

    @pytest.mark.parametrize("cls", [ShepardOperator, DiffusionOperator])
    @pytest.mark.parametrize("seed", range(4))
    def test_union_matches_direct(self, cls, seed, random_image, random_partition):
        """随机划分中的相邻区域对：并集误差、像素与重建值都与直接重建一致"""
        f = random_image(20, 16, seed=seed)
        labels = random_partition(20, 16, seed=seed, merges=280)
        op = _stats_operator(cls, 20, 16)
        flat_labels = labels.ravel()
        _, pairs = boundary_length(labels)
        for a, b in sorted(pairs)[:20]:
            fa = np.nonzero(flat_labels == a)[0]
            fb = np.nonzero(flat_labels == b)[0]
            sa, sb = op.region_stats(f, fa), op.region_stats(f, fb)
            union = RegionView.from_flat(np.concatenate([fa, fb]), 20, 16)
            merged = op.merge_stats(f, sa, sb)
            assert merged.flat.tolist() == union.flat.tolist()
            assert op.union_sse(f, sa, sb) == op.stats_sse(f, merged)
            assert op.union_sse(f, sa, sb) == pytest.approx(op.region_sse(union, f), rel=1e-6, abs=1e-6)
            assert np.allclose(merged.u, op.reconstruct_region(union, f), rtol=1e-6, atol=1e-6)

    @pytest.mark.parametrize("cls", [ShepardOperator, DiffusionOperator])
    def test_maskless_pair_constant(self, cls):
        """两侧都没有网格像素 → 并集为 requantize(均值) 常数"""
        f = Image.from_array(np.array([[10.0, 20.0, 30.0, 41.0]] * 4))
        op = cls(4, 4, 0.25, 256)
        sa, sb = op.region_stats(f, [0, 4]), op.region_stats(f, [2, 8])
        assert not sa.has_mask and not sb.has_mask
        merged = op.merge_stats(f, sa, sb)
        assert np.all(merged.u == 15.0)
        assert op.union_sse(f, sa, sb) == pytest.approx(25 + 25 + 225 + 25)

    @pytest.mark.parametrize("cls", [ShepardOperator, DiffusionOperator])
    def test_chained_merges(self, cls, random_image):
        """逐行累积合并 12 次后，缓存的误差与重建值仍与整体直接重建一致"""
        f = random_image(12, 12, seed=3)
        op = _stats_operator(cls, 12, 12, density=0.06)
        rows = [np.arange(12) + 12 * y for y in range(12)]
        stats = op.region_stats(f, rows[0])
        for row in rows[1:]:
            stats = op.merge_stats(f, stats, op.region_stats(f, row))
        whole = RegionView.full(12, 12)
        assert op.stats_sse(f, stats) == pytest.approx(op.region_sse(whole, f), rel=1e-6)
        assert np.allclose(stats.u, op.reconstruct_region(whole, f), rtol=1e-6, atol=1e-6)

    def test_far_masks_leave_side_untouched(self, random_image):
        """对侧掩码窗口覆盖不到的像素沿用原重建值"""
        f = random_image(40, 4, seed=1)
        op = ShepardOperator(40, 4, 0.25, 256)
        left = np.array([x + 40 * y for y in range(4) for x in range(20)])
        right = np.array([x + 40 * y for y in range(4) for x in range(20, 40)])
        sa, sb = op.region_stats(f, left), op.region_stats(f, right)
        merged = op.merge_stats(f, sa, sb)
        far = (sa.flat % 40) < 20 - 2 * op.half - 1
        assert far.any()
        position = np.searchsorted(merged.flat, sa.flat[far])
        assert np.array_equal(merged.u[position], sa.u[far])
