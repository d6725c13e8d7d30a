"""
扫描配置管理器
负责网格搜索参数的加载（默认值 → config.json → 命令行覆盖）和预检校验。
"""

import json
import os

from core.config import SWEEP_DEFAULTS
from core.errors import ConfigError
from core.logging import logger
from operators.base import OperatorId


class SweepConfigManager:
    """网格搜索参数加载与校验"""

    def __init__(self, config_path="config.json", overrides=None):
        self.config_path = config_path
        self.config = self._load_config(overrides or {})
        self._validate_config()

    # ── 配置加载 ──

    def _load_config(self, overrides: dict) -> dict:
        """加载配置：默认值 / 环境变量，其次 config.json 中的 sweep_* 键，最后是显式覆盖"""
        base_config = {k: (list(v) if isinstance(v, list) else v) for k, v in SWEEP_DEFAULTS.items()}

        if self.config_path and os.path.exists(self.config_path):
            try:
                with open(self.config_path, "r", encoding="utf-8") as f:
                    ext_cfg = json.load(f)
                for key, value in ext_cfg.items():
                    if key.startswith("sweep_") and key[len("sweep_"):] in base_config:
                        base_config[key[len("sweep_"):]] = value
            except Exception as e:
                logger.warning("未能加载外部 %s，回退到环境/默认配置: %s", self.config_path, e)

        for key, value in overrides.items():
            if value is not None:
                base_config[key] = value
        return base_config

    # ── 配置预检 ──

    def _validate_config(self):
        """收集全部问题后一次性报错"""
        cfg = self.config
        errors = []

        lam_min, lam_max = cfg.get("lambda_min"), cfg.get("lambda_max")
        if not isinstance(lam_min, (int, float)) or lam_min <= 0:
            errors.append(f"'lambda_min' 必须为正数（对数刻度），当前值: {lam_min!r}")
        if not isinstance(lam_max, (int, float)) or (
                isinstance(lam_min, (int, float)) and lam_max < lam_min):
            errors.append(f"'lambda_max' 必须 ≥ lambda_min，当前值: {lam_max!r}")

        for key, low in (("lambda_steps", 1), ("block", 1), ("workers", 1), ("tonal_budget", 0)):
            val = cfg.get(key)
            if not isinstance(val, int) or isinstance(val, bool) or val < low:
                errors.append(f"'{key}' 必须为 ≥ {low} 的整数，当前值: {val!r}")

        densities = cfg.get("densities")
        if not isinstance(densities, list) or not densities:
            errors.append(f"'densities' 必须为非空列表，当前值: {densities!r}")
        else:
            for d in densities:
                if not isinstance(d, (int, float)) or not 0 < d <= 1:
                    errors.append(f"'densities' 中的 {d!r} 不在 (0, 1] 范围内")

        qs = cfg.get("qs")
        if not isinstance(qs, list) or not qs:
            errors.append(f"'qs' 必须为非空列表，当前值: {qs!r}")
        else:
            for q in qs:
                if not isinstance(q, int) or not 2 <= q <= 256:
                    errors.append(f"'qs' 中的 {q!r} 不在 [2, 256] 范围内")

        ops = cfg.get("ops")
        if not isinstance(ops, list) or not ops:
            errors.append(f"'ops' 必须为非空列表，当前值: {ops!r}")
        else:
            for name in ops:
                try:
                    OperatorId.parse(name)
                except ConfigError:
                    errors.append(f"'ops' 中的 {name!r} 不是已知算子")

        width = cfg.get("bucket_width")
        if not isinstance(width, (int, float)) or width <= 0:
            errors.append(f"'bucket_width' 必须为正数，当前值: {width!r}")

        if errors:
            for e in errors:
                logger.error("[CONFIG ERROR] %s", e)
            raise ConfigError(errors)

        logger.debug("扫描配置预检通过")

    # ── 访问 ──

    def __getitem__(self, key):
        return self.config[key]

    def get(self, key, default=None):
        return self.config.get(key, default)
