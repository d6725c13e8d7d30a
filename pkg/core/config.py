"""
配置常量模块
集中管理所有配置参数，便于统一维护和环境切换。
"""

import os

# --- 容器格式 ---

CONTAINER_MAGIC = b"MSCC"
CONTAINER_VERSION = 1

# 文件头宽高为 16 位无符号整数
MAX_DIMENSION = 0xFFFF

# 密度以定点数 d·10000 存储，编解码双方由同一个整数重建网格
DENSITY_SCALE = 10000

# --- 迭代求解器 ---

# CG 停止条件：相对残差 2-范数 ≤ CG_TOL，或迭代次数达到 CG_MAX_ITER_FACTOR × 未知数个数
CG_TOL = float(os.environ.get("MSCODEC_CG_TOL", "1e-6"))
CG_MAX_ITER_FACTOR = int(os.environ.get("MSCODEC_CG_MAX_ITER_FACTOR", "10"))

# --- 色调优化 ---

DEFAULT_TONAL_BUDGET = int(os.environ.get("MSCODEC_TONAL_BUDGET", "3"))

# --- 熵编码模型 ---

PROB_BITS = 12          # 概率精度（12 位定点）
PROB_SHIFT = 4          # 自适应计数器更新速率 1/16
RANGE_TOP = 1 << 24     # 区间归一化阈值

# --- 分割 ---

# 每合并多少次输出一条 DEBUG 进度日志
MERGE_PROGRESS_EVERY = 1000

# --- 率失真绘图 ---

# SVG 中无损点（PSNR 为无穷）按此值绘制
PSNR_PLOT_CAP = 99.0


# --- 扫描默认参数 ---

# 只读环境变量；config.json 由 cli.config_manager.SweepConfigManager 按 --config 路径叠加
def _env_list(name, default):
    raw = os.environ.get(name)
    return [s.strip() for s in raw.split(",")] if raw else default


SWEEP_DEFAULTS = {
    "lambda_min": float(os.environ.get("SWEEP_LAMBDA_MIN", "10")),
    "lambda_max": float(os.environ.get("SWEEP_LAMBDA_MAX", "100000")),
    "lambda_steps": int(os.environ.get("SWEEP_LAMBDA_STEPS", "6")),
    "densities": [float(v) for v in _env_list("SWEEP_DENSITIES", ["0.01", "0.02", "0.04", "0.08"])],
    "qs": [int(v) for v in _env_list("SWEEP_QS", ["16", "32", "64"])],
    "ops": _env_list("SWEEP_OPS", ["p0", "p1", "p2", "diffusion", "shepard"]),
    "block": int(os.environ.get("SWEEP_BLOCK", "2")),
    "tonal_budget": int(os.environ.get("SWEEP_TONAL_BUDGET", "2")),
    "bucket_width": float(os.environ.get("SWEEP_BUCKET_WIDTH", "0.02")),
    "workers": int(os.environ.get("SWEEP_WORKERS", "1")),
}
