"""
掩码层单元测试
规则网格掩码（定点密度、网格间距）与逐区域色调优化。
"""

import numpy as np
import pytest

from core.errors import InvalidDensityError
from core.image import Image
from core.quantizer import Quantizer
from mask.grid import (
    build_grid_mask, density_to_fixed, fixed_to_density, grid_positions, quantize_density,
)
from mask.tonal import tonal_optimize
from operators.diffusion import DiffusionOperator
from operators.region import MaskData, RegionView
from operators.shepard import ShepardOperator, shepard_reconstruct


# ═══════════════════════════════════════
#  规则网格
# ═══════════════════════════════════════

class TestGridMask:
    """build_grid_mask 判定规则"""

    def test_full_density(self):
        """d = 1 → 全部像素"""
        assert build_grid_mask(5, 3, 1.0).all()

    def test_quarter_on_4x4(self):
        """d = 0.25、4×4 → x, y ∈ {1, 3} 的 4 个像素"""
        grid = build_grid_mask(4, 4, 0.25)
        assert grid_positions(grid) == [(1, 1), (3, 1), (1, 3), (3, 3)]

    def test_quarter_on_8x8(self):
        """d = 0.25、8×8 → 16 个像素"""
        assert int(build_grid_mask(8, 8, 0.25).sum()) == 16

    @pytest.mark.parametrize("k", [2, 4, 5, 10])
    def test_exact_spacing(self, k):
        """d = 1/k²（定点可精确表示）→ 两个方向间距恰为 k"""
        size = 6 * k
        grid = build_grid_mask(size, size, 1.0 / (k * k))
        ys, xs = np.nonzero(grid)
        assert sorted(set(xs.tolist())) == list(range(k - 1, size, k))
        assert sorted(set(ys.tolist())) == list(range(k - 1, size, k))

    def test_shape_and_dtype(self):
        """输出为 (height, width) 布尔数组"""
        grid = build_grid_mask(7, 3, 0.04)
        assert grid.shape == (3, 7)
        assert grid.dtype == bool

    def test_separable(self):
        """掩码是行选择与列选择的外积"""
        grid = build_grid_mask(20, 13, 0.07)
        rows = grid.any(axis=1)
        cols = grid.any(axis=0)
        assert np.array_equal(grid, np.outer(rows, cols))

    def test_prefix_stable(self):
        """小尺寸图像的掩码是大尺寸掩码的左上角"""
        big = build_grid_mask(40, 30, 0.03)
        small = build_grid_mask(17, 11, 0.03)
        assert np.array_equal(small, big[:11, :17])

    @pytest.mark.parametrize("d", [0.0, -0.1, 1.5, float("nan"), 0.00001])
    def test_invalid_density(self, d):
        """密度不在 (0, 1] 或低于定点精度 → InvalidDensityError"""
        with pytest.raises(InvalidDensityError):
            build_grid_mask(4, 4, d)


class TestFixedDensity:
    """密度定点表示"""

    @pytest.mark.parametrize("d, fixed", [(0.04, 400), (0.25, 2500), (1.0, 10000), (0.0625, 625)])
    def test_to_fixed(self, d, fixed):
        """round(d·10000)"""
        assert density_to_fixed(d) == fixed

    def test_round_trip(self):
        """定点往返后为 4 位小数"""
        assert quantize_density(0.123456) == 0.1235
        assert fixed_to_density(400) == 0.04

    def test_fixed_out_of_range(self):
        """定点值 0 → InvalidDensityError"""
        with pytest.raises(InvalidDensityError):
            fixed_to_density(0)


# ═══════════════════════════════════════
#  色调优化
# ═══════════════════════════════════════

class TestTonalOptimize:
    """tonal_optimize 贪心 ±1 搜索"""

    def test_exact_reconstruction_unchanged(self, random_image):
        """q = 256、d = 1 → 误差已为 0，索引不变"""
        f = random_image(6, 6, seed=1)
        op = ShepardOperator(6, 6, 1.0, 256)
        region = RegionView.full(6, 6)
        mask = op.known_data(region, f)
        result = tonal_optimize(op, region, mask, op.quantizer, 5, f)
        assert result.changes == 0
        assert np.array_equal(result.indices, mask.indices)
        assert result.final_sse == 0.0

    def test_single_mask_pixel_stays(self):
        """常数区域单掩码像素：索引已是最接近均值的量化级 → 不变"""
        f = Image.from_array(np.full((5, 5), 100.0))
        op = ShepardOperator(5, 5, 0.04, 16)
        q = op.quantizer
        mask = MaskData([12], [q.dequantize(6)], op.density, np.array([6]))
        result = tonal_optimize(op, RegionView.full(5, 5), mask, q, 5, f)
        assert result.indices.tolist() == [6]
        assert result.changes == 0
        assert result.sweeps == 1

    def test_single_mask_pixel_descends(self):
        """从偏离两级的索引出发 → 逐级走回最接近均值的量化级"""
        f = Image.from_array(np.full((5, 5), 100.0))
        op = ShepardOperator(5, 5, 0.04, 16)
        q = op.quantizer
        mask = MaskData([12], [q.dequantize(4)], op.density, np.array([4]))
        result = tonal_optimize(op, RegionView.full(5, 5), mask, q, 5, f)
        assert result.indices.tolist() == [6]
        assert result.changes == 2
        assert result.sweeps == 3
        assert result.final_sse == pytest.approx(25 * 4.0)
        assert result.initial_sse == pytest.approx(25 * 32.0 ** 2)

    def test_budget_limits_sweeps(self):
        """轮数上限 1 → 只走一步"""
        f = Image.from_array(np.full((5, 5), 100.0))
        op = ShepardOperator(5, 5, 0.04, 16)
        q = op.quantizer
        mask = MaskData([12], [q.dequantize(4)], op.density, np.array([4]))
        result = tonal_optimize(op, RegionView.full(5, 5), mask, q, 1, f)
        assert result.indices.tolist() == [5]
        assert result.sweeps == 1

    def test_zero_budget(self, random_image):
        """轮数上限 0 → 原样返回"""
        f = random_image(8, 8, seed=2)
        op = ShepardOperator(8, 8, 0.25, 16)
        region = RegionView.full(8, 8)
        mask = op.known_data(region, f)
        result = tonal_optimize(op, region, mask, op.quantizer, 0, f)
        assert np.array_equal(result.indices, mask.indices)
        assert result.final_sse == result.initial_sse

    @pytest.mark.parametrize("seed", range(3))
    def test_shepard_random_region(self, random_image, seed):
        """随机 16×16、Shepard、q = 16、5 轮 → 报告误差等于独立重建误差且不大于初始值"""
        f = random_image(16, 16, seed=seed)
        op = ShepardOperator(16, 16, 0.1, 16)
        region = RegionView.full(16, 16)
        mask = op.known_data(region, f)
        result = tonal_optimize(op, region, mask, op.quantizer, 5, f)
        u = shepard_reconstruct(region, MaskData(mask.positions, op.quantizer.dequantize(result.indices),
                                                 op.density))
        oracle = float(np.sum((u - region.values(f.samples)) ** 2))
        assert result.final_sse == pytest.approx(oracle, rel=1e-9)
        assert result.final_sse <= result.initial_sse
        assert np.all((result.indices >= 0) & (result.indices < 16))

    @pytest.mark.parametrize("seed", range(2))
    def test_diffusion_random_region(self, random_image, seed):
        """随机 12×12、扩散、q = 8 → 误差不增加，索引合法"""
        f = random_image(12, 12, seed=seed + 10)
        op = DiffusionOperator(12, 12, 0.1, 8)
        region = RegionView.full(12, 12)
        mask = op.known_data(region, f)
        result = tonal_optimize(op, region, mask, op.quantizer, 3, f)
        assert result.final_sse <= result.initial_sse
        assert result.final_sse == pytest.approx(op.region_sse(region, f, result.mask), rel=1e-9)
        assert np.all((result.indices >= 0) & (result.indices < 8))

    def test_each_sweep_monotone(self, random_image):
        """逐轮增加上限 → 最终误差单调不增"""
        f = random_image(12, 12, seed=4)
        op = ShepardOperator(12, 12, 0.1, 16)
        region = RegionView.full(12, 12)
        mask = op.known_data(region, f)
        errors = [tonal_optimize(op, region, mask, op.quantizer, b, f).final_sse for b in range(5)]
        assert all(b <= a * (1 + 1e-9) for a, b in zip(errors, errors[1:]))

    def test_indices_default_to_quantized(self, random_image):
        """掩码未带索引 → 以 quantize(f) 为初值"""
        f = random_image(8, 8, seed=5)
        op = ShepardOperator(8, 8, 0.25, 16)
        region = RegionView.full(8, 8)
        bare = op.known_data(region, f)
        mask = MaskData(bare.positions, bare.values, bare.density)
        result = tonal_optimize(op, region, mask, Quantizer(16), 0, f)
        assert np.array_equal(result.indices, bare.indices)
