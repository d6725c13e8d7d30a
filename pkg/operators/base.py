"""
重建算子抽象（Strategy Pattern）
分割、色调优化和编解码层只依赖这里的统一接口，不区分具体算子类型。
"""

from abc import ABC, abstractmethod
from enum import IntEnum
from typing import Any, Optional

import numpy as np

from core.errors import ConfigError
from core.image import Image
from operators.region import RegionView


class OperatorId(IntEnum):
    """算子编号，同时作为容器文件头中的算子字节"""
    P0 = 0
    P1 = 1
    P2 = 2
    DIFFUSION = 3
    SHEPARD = 4

    @property
    def cli_name(self) -> str:
        return self.name.lower()

    @property
    def is_inpainting(self) -> bool:
        return self in (OperatorId.DIFFUSION, OperatorId.SHEPARD)

    @classmethod
    def parse(cls, name) -> "OperatorId":
        """接受 CLI 名称（p0/p1/p2/diffusion/shepard）、枚举名或编号"""
        if isinstance(name, OperatorId):
            return name
        if isinstance(name, (int, np.integer)):
            try:
                return cls(int(name))
            except ValueError:
                raise ConfigError(f"未知算子编号: {name}") from None
        try:
            return cls[str(name).strip().upper()]
        except KeyError:
            raise ConfigError(f"未知算子: {name!r}") from None


class ReconstructionOperator(ABC):
    """
    重建算子基类。

    两套入口：
    - 像素入口 region_sse()：给定区域和图像，重建并返回平方误差和；
    - 统计量入口 region_stats() / merge_stats() / stats_sse() / union_sse()：
      分割合并时缓存每个区域的"重建相关统计量"，并集的统计量由两侧直接合成；
      union_sse() 只需要误差时可以跳过完整的并集统计量。
    """

    op_id: OperatorId

    # 多项式最小二乘保证并集误差不小于两侧之和，合并增益的分子可截断到 0
    monotone_union: bool = False

    @property
    def is_inpainting(self) -> bool:
        return self.op_id.is_inpainting

    @abstractmethod
    def region_stats(self, f: Image, flat: np.ndarray) -> Any:
        pass

    @abstractmethod
    def merge_stats(self, f: Image, a: Any, b: Any) -> Any:
        pass

    @abstractmethod
    def stats_sse(self, f: Image, stats: Any) -> float:
        pass

    def union_sse(self, f: Image, a: Any, b: Any) -> float:
        """并集误差；必须与 stats_sse(f, merge_stats(f, a, b)) 完全相同"""
        return float(self.stats_sse(f, self.merge_stats(f, a, b)))

    @abstractmethod
    def region_sse(self, region: RegionView, f: Image, known: Optional[Any] = None) -> float:
        pass


def region_sse(op: ReconstructionOperator, region: RegionView, f: Image, known=None) -> float:
    """
    以指定算子重建区域并返回 Σ(u − f)²。
    known 为 MaskData（修复类）或多项式次数（多项式类），缺省时由算子自身参数决定。
    """
    if region.size == 0:
        raise ValueError("区域不能为空")
    return op.region_sse(region, f, known)


def get_operator(op, width: int, height: int, density: Optional[float] = None,
                 levels: Optional[int] = None, tol: Optional[float] = None,
                 max_iter_factor: Optional[int] = None) -> ReconstructionOperator:
    """根据算子编号返回具体算子实例（修复类算子需要密度和量化级数）"""
    from operators.polynomial import PolynomialOperator
    from operators.diffusion import DiffusionOperator
    from operators.shepard import ShepardOperator

    op_id = OperatorId.parse(op)
    if not op_id.is_inpainting:
        return PolynomialOperator(int(op_id))
    if density is None or levels is None:
        raise ConfigError(f"修复类算子 {op_id.cli_name} 需要 density 和 q 参数")
    if op_id == OperatorId.DIFFUSION:
        return DiffusionOperator(width, height, density, levels, tol=tol, max_iter_factor=max_iter_factor)
    return ShepardOperator(width, height, density, levels)


