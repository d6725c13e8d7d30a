"""
二元多项式逼近算子（P0 / P1 / P2）
在区域质心处中心化的单项式 1, x, y, x², xy, y² 上做最小二乘拟合，
通过正规方程求解；正规矩阵秩亏时退回到单项式线性无关的最高次数，其余系数补零。

分割合并时使用矩向量：坐标矩以 Python 整数精确累加，
中心化正规矩阵由整数运算得到，只有灰度相关的右端项存在浮点舍入。
"""

from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np

from core.image import Image
from operators.base import OperatorId, ReconstructionOperator
from operators.region import RegionView

# 固定单项式顺序：(x 指数, y 指数)
MONOMIALS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))

# 归一化正规矩阵最小特征值低于此值视为秩亏
RANK_TOL = 1e-10

# 坐标矩需要的全部 (p, q)，p + q ≤ 4
_COORD_EXPONENTS = tuple((p, s - p) for s in range(5) for p in range(s, -1, -1))
_COORD_INDEX = {e: k for k, e in enumerate(_COORD_EXPONENTS)}
_MONOMIAL_INDEX = {e: k for k, e in enumerate(MONOMIALS)}


def _binomial_terms(p: int, q: int) -> tuple:
    """(x − a)^p (y − b)^q 的展开项 (系数, k, l)，对应 x^k y^l a^(p−k) b^(q−l)"""
    return tuple((comb(p, k) * comb(q, l), k, l) for k in range(p + 1) for l in range(q + 1))


# 中心化展开表：(p, q) → 展开项
_CENTERED_TERMS = {e: _binomial_terms(*e) for e in _COORD_EXPONENTS}
_RHS_TERMS = {e: _binomial_terms(*e) for e in MONOMIALS}


def coefficient_count(degree: int) -> int:
    """(n+2 choose n)：n = 0, 1, 2 时分别为 1, 3, 6"""
    return comb(degree + 2, degree)


@dataclass
class PolyCoefficients:
    """多项式系数（长度恒为 coefficient_count(degree)，秩亏时尾部为 0）与中心化点"""
    degree: int
    coefficients: np.ndarray
    center: tuple

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if self.coefficients.size != coefficient_count(self.degree):
            raise ValueError(
                f"{self.degree} 次多项式需要 {coefficient_count(self.degree)} 个系数，"
                f"当前 {self.coefficients.size} 个"
            )


def design_matrix(dx: np.ndarray, dy: np.ndarray, degree: int) -> np.ndarray:
    """中心化坐标上的设计矩阵，列顺序与 MONOMIALS 一致"""
    m = coefficient_count(degree)
    cols = [dx ** p * dy ** q for p, q in MONOMIALS[:m]]
    return np.stack(cols, axis=1) if cols else np.empty((dx.size, 0))


def solve_normal_equations(normal: np.ndarray, rhs: np.ndarray, degree: int, count: int) -> tuple:
    """
    解正规方程 N c = b。
    从 degree 开始逐级降阶，取主子矩阵满秩的最高次数；返回 (补零后的系数, 实际次数)。
    """
    full = coefficient_count(degree)
    for k in range(degree, -1, -1):
        m = coefficient_count(k)
        if count < m:
            continue
        sub = normal[:m, :m]
        diag = np.diag(sub)
        if np.any(diag <= 0.0):
            continue
        scale = 1.0 / np.sqrt(diag)
        if np.linalg.eigvalsh(sub * np.outer(scale, scale)).min() <= RANK_TOL:
            continue
        coeffs = np.zeros(full)
        coeffs[:m] = np.linalg.solve(sub, rhs[:m])
        return coeffs, k
    return np.zeros(full), 0


def fit_polynomial(region: RegionView, f: Image, n: int) -> tuple:
    """最小二乘拟合 n 次多项式，返回 (PolyCoefficients, sse)"""
    if region.size == 0:
        raise ValueError("区域不能为空")
    cx, cy = region.centroid()
    dx = region.xs - cx
    dy = region.ys - cy
    values = region.values(f.samples)

    g = design_matrix(dx, dy, n)
    coeffs, _ = solve_normal_equations(g.T @ g, g.T @ values, n, region.size)
    residual = values - g @ coeffs
    sse = float(residual @ residual)
    return PolyCoefficients(degree=n, coefficients=coeffs, center=(cx, cy)), sse


def eval_polynomial(c: PolyCoefficients, region: RegionView) -> np.ndarray:
    """在区域像素的中心化坐标处求值（不截断，截断只在最终拼图时进行）"""
    cx, cy = c.center
    g = design_matrix(region.xs - cx, region.ys - cy, c.degree)
    return g @ c.coefficients


# --- 合并用矩向量 ---

def _int_moment(xs: np.ndarray, ys: np.ndarray, p: int, q: int) -> int:
    """Σ x^p y^q 的精确整数值"""
    if xs.size == 0:
        return 0
    bound = max(int(np.abs(xs).max()), int(np.abs(ys).max()), 1) ** (p + q) * xs.size
    if bound < (1 << 62):
        return int(np.sum(xs ** p * ys ** q))
    return sum(int(x) ** p * int(y) ** q for x, y in zip(xs.tolist(), ys.tolist()))


class PolyMoments:
    """
    区域的矩向量：
    - coord: Σ x^p y^q（p + q ≤ 4），Python 整数，精确；
    - fmom:  Σ f·x^p y^q（p + q ≤ 2），float64；
    - f2:    Σ f²。
    坐标即像素整数坐标，并集的矩向量由两侧直接相加。
    """

    __slots__ = ("coord", "fmom", "f2")

    def __init__(self, coord: list, fmom: np.ndarray, f2: float):
        self.coord = coord
        self.fmom = fmom
        self.f2 = f2

    @classmethod
    def from_pixels(cls, xs: np.ndarray, ys: np.ndarray, values: np.ndarray) -> "PolyMoments":
        coord = [_int_moment(xs, ys, p, q) for p, q in _COORD_EXPONENTS]
        xf = xs.astype(np.float64)
        yf = ys.astype(np.float64)
        fmom = np.array([float(np.sum(values * xf ** p * yf ** q)) for p, q in MONOMIALS])
        return cls(coord, fmom, float(np.sum(values * values)))

    def __add__(self, other: "PolyMoments") -> "PolyMoments":
        return PolyMoments(
            [a + b for a, b in zip(self.coord, other.coord)],
            self.fmom + other.fmom,
            self.f2 + other.f2,
        )

    @property
    def count(self) -> int:
        return self.coord[0]

    def centered_normal(self, degree: int) -> tuple:
        """
        返回 (中心化正规矩阵, 中心化右端项)。
        n^(p+q)·Σ(x−x̄)^p(y−ȳ)^q = Σ(n·x − Sx)^p (n·y − Sy)^q 用整数展开，最后一次除法取整。
        """
        n = self.count
        coord = self.coord
        sx = coord[_COORD_INDEX[(1, 0)]]
        sy = coord[_COORD_INDEX[(0, 1)]]
        top = 2 * degree
        n_pow = [n ** k for k in range(top + 1)]
        sx_pow = [(-sx) ** k for k in range(top + 1)]
        sy_pow = [(-sy) ** k for k in range(top + 1)]

        centered = {}
        for p, q in _COORD_EXPONENTS:
            if p + q > top:
                continue
            total = 0
            for c, k, l in _CENTERED_TERMS[(p, q)]:
                total += c * n_pow[k + l] * sx_pow[p - k] * sy_pow[q - l] * coord[_COORD_INDEX[(k, l)]]
            centered[(p, q)] = total / n_pow[p + q]

        m = coefficient_count(degree)
        normal = np.empty((m, m))
        for i, (pi, qi) in enumerate(MONOMIALS[:m]):
            for j, (pj, qj) in enumerate(MONOMIALS[:m]):
                normal[i, j] = centered[(pi + pj, qi + qj)]

        mx, my = sx / n, sy / n
        rhs = np.empty(m)
        for i, e in enumerate(MONOMIALS[:m]):
            acc = 0.0
            for c, k, l in _RHS_TERMS[e]:
                acc += c * (-mx) ** (e[0] - k) * (-my) ** (e[1] - l) * self.fmom[_MONOMIAL_INDEX[(k, l)]]
            rhs[i] = acc
        return normal, rhs

    def sse(self, degree: int) -> float:
        """最小误差 Σf² − cᵀb（由 N c = b 推出），截断到非负"""
        normal, rhs = self.centered_normal(degree)
        coeffs, _ = solve_normal_equations(normal, rhs, degree, self.count)
        m = coefficient_count(degree)
        return max(0.0, self.f2 - float(coeffs[:m] @ rhs))


class PolynomialOperator(ReconstructionOperator):
    """P0 / P1 / P2 逼近算子"""

    monotone_union = True

    def __init__(self, degree: int):
        if degree not in (0, 1, 2):
            raise ValueError(f"多项式次数必须为 0、1 或 2，当前: {degree}")
        self.degree = degree
        self.op_id = OperatorId(degree)

    def __repr__(self):
        return f"PolynomialOperator(degree={self.degree})"

    def region_stats(self, f: Image, flat: np.ndarray) -> PolyMoments:
        flat = np.asarray(flat, dtype=np.int64)
        xs, ys = flat % f.width, flat // f.width
        return PolyMoments.from_pixels(xs, ys, f.samples[ys, xs])

    def merge_stats(self, f: Image, a: PolyMoments, b: PolyMoments) -> PolyMoments:
        return a + b

    def stats_sse(self, f: Image, stats: PolyMoments) -> float:
        return stats.sse(self.degree)

    def region_sse(self, region: RegionView, f: Image, known: Optional[int] = None) -> float:
        degree = self.degree if known is None else int(known)
        return fit_polynomial(region, f, degree)[1]
