"""
Pydantic 配置与文件头模型
编码参数与容器文件头都在这里集中做字段约束校验，校验失败统一转换为 ConfigError / MalformedStreamError。
"""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.config import CONTAINER_VERSION, DEFAULT_TONAL_BUDGET, DENSITY_SCALE, MAX_DIMENSION
from core.errors import ConfigError, MalformedStreamError
from operators.base import OperatorId


def _messages(exc: ValidationError) -> list:
    out = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err.get("loc", ())) or "config"
        out.append(f"'{loc}': {err.get('msg')}")
    return out


class EncoderConfig(BaseModel):
    """编码参数；density / q 当且仅当算子为修复类时给出"""

    model_config = ConfigDict(frozen=True)

    op: OperatorId = Field(description="重建算子")
    lam: float = Field(ge=0.0, allow_inf_nan=False, description="边界长度权重 λ")
    density: Optional[float] = Field(default=None, gt=0.0, le=1.0, description="网格掩码密度 d")
    q: Optional[int] = Field(default=None, ge=2, le=256, description="量化级数")
    tonal_budget: int = Field(default=DEFAULT_TONAL_BUDGET, ge=0, description="色调优化最多扫描轮数")
    block: int = Field(default=1, ge=1, description="初始块边长")

    @field_validator("op", mode="before")
    @classmethod
    def _parse_op(cls, v):
        return OperatorId.parse(v)

    @model_validator(mode="after")
    def _inpainting_params(self):
        if self.op.is_inpainting:
            missing = [name for name in ("density", "q") if getattr(self, name) is None]
            if missing:
                raise ValueError(f"修复类算子 {self.op.cli_name} 缺少参数: {', '.join(missing)}")
        else:
            given = [name for name in ("density", "q") if getattr(self, name) is not None]
            if given:
                raise ValueError(f"多项式算子 {self.op.cli_name} 不接受参数: {', '.join(given)}")
        return self

    @classmethod
    def build(cls, **kwargs) -> "EncoderConfig":
        """构造并校验；全部问题汇总为一个 ConfigError"""
        try:
            return cls(**kwargs)
        except ValidationError as e:
            raise ConfigError(_messages(e)) from None


class ContainerHeader(BaseModel):
    """
    25 字节明文文件头（不含魔数之外的校验信息）。
    q_byte 为 0 表示 256 级；多项式算子的 q_byte 与 density_fixed 均为 0。
    """

    model_config = ConfigDict(frozen=True)

    version: int = Field(default=CONTAINER_VERSION, ge=0, le=255)
    width: int = Field(ge=1, le=MAX_DIMENSION)
    height: int = Field(ge=1, le=MAX_DIMENSION)
    op: OperatorId
    q_byte: int = Field(default=0, ge=0, le=255)
    density_fixed: int = Field(default=0, ge=0, le=DENSITY_SCALE)
    chain_count: int = Field(ge=0, le=0xFFFFFFFF)
    region_count: int = Field(ge=1, le=0xFFFFFFFF)
    body_length: int = Field(ge=0, le=0xFFFFFFFF)

    @field_validator("op", mode="before")
    @classmethod
    def _parse_op(cls, v):
        try:
            return OperatorId.parse(v)
        except ConfigError as e:
            raise ValueError(str(e)) from None

    @model_validator(mode="after")
    def _inpainting_fields(self):
        if self.op.is_inpainting:
            if self.q_byte == 1:
                raise ValueError("量化级数至少为 2")
            if self.density_fixed == 0:
                raise ValueError("修复类算子的定点密度不能为 0")
        return self

    @property
    def levels(self) -> Optional[int]:
        if not self.op.is_inpainting:
            return None
        return 256 if self.q_byte == 0 else self.q_byte

    @property
    def density(self) -> Optional[float]:
        if not self.op.is_inpainting:
            return None
        return self.density_fixed / DENSITY_SCALE

    @classmethod
    def parse(cls, **fields) -> "ContainerHeader":
        try:
            return cls(**fields)
        except ValidationError as e:
            raise MalformedStreamError("文件头字段非法: " + "; ".join(_messages(e))) from None
