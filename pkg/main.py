"""
Mumford-Shah 分段图像编解码器命令行入口
子命令：encode / decode / eval / synth / sweep / info / bench
"""

import argparse
import sys

from cli.commands import (
    cli_encode_config_error, cmd_bench, cmd_decode, cmd_encode, cmd_eval, cmd_info, cmd_sweep, cmd_synth,
)
from cli.synth import SYNTH_KINDS
from core.logging import set_verbosity

OP_CHOICES = ["p0", "p1", "p2", "diffusion", "shepard"]


def _float_list(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def _str_list(text: str) -> list:
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mscodec", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="输出 DEBUG 日志")
    sub = parser.add_subparsers(dest="command", required=True)

    # --- encode ---
    p = sub.add_parser("encode", help="PGM → 容器")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--op", required=True, choices=OP_CHOICES)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--density", type=float)
    p.add_argument("--q", type=int)
    p.add_argument("--block", type=int, default=1)
    p.add_argument("--tonal-budget", dest="tonal_budget", type=int)
    p.add_argument("--report", action="store_true", help="在 stderr 输出编码报告")

    # --- decode ---
    p = sub.add_parser("decode", help="容器 → PGM")
    p.add_argument("input")
    p.add_argument("output")

    # --- eval ---
    p = sub.add_parser("eval", help="输出 bpp 与 PSNR")
    p.add_argument("original")
    p.add_argument("decoded")
    p.add_argument("container")

    # --- synth ---
    p = sub.add_parser("synth", help="生成合成测试图像")
    p.add_argument("kind", choices=SYNTH_KINDS)
    p.add_argument("width", type=int)
    p.add_argument("height", type=int)
    p.add_argument("seed", type=int)
    p.add_argument("output")

    # --- sweep ---
    p = sub.add_parser("sweep", help="率失真网格搜索")
    p.add_argument("input")
    p.add_argument("csv")
    p.add_argument("svg")
    p.add_argument("--config", default="config.json")
    p.add_argument("--lambda-min", dest="lambda_min", type=float)
    p.add_argument("--lambda-max", dest="lambda_max", type=float)
    p.add_argument("--lambda-steps", dest="lambda_steps", type=int)
    p.add_argument("--densities", type=_float_list)
    p.add_argument("--qs", type=_int_list)
    p.add_argument("--ops", type=_str_list)
    p.add_argument("--block", type=int)
    p.add_argument("--tonal-budget", dest="tonal_budget", type=int)
    p.add_argument("--bucket-width", dest="bucket_width", type=float)
    p.add_argument("--workers", type=int)

    # --- info ---
    p = sub.add_parser("info", help="显示容器文件头与分割统计")
    p.add_argument("input")

    # --- bench ---
    p = sub.add_parser("bench", help="Shepard / 扩散整图重建计时")
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    set_verbosity(args.verbose)

    if args.command == "encode":
        problem = cli_encode_config_error(args.op, args.density, args.q)
        if problem:
            parser.error(problem)
        return cmd_encode(args.input, args.output, args.op, args.lam, args.density, args.q,
                          args.block, args.tonal_budget, args.report)
    if args.command == "decode":
        return cmd_decode(args.input, args.output)
    if args.command == "eval":
        return cmd_eval(args.original, args.decoded, args.container)
    if args.command == "synth":
        return cmd_synth(args.kind, args.width, args.height, args.seed, args.output)
    if args.command == "sweep":
        keys = ["lambda_min", "lambda_max", "lambda_steps", "densities", "qs", "ops",
                "block", "tonal_budget", "bucket_width", "workers"]
        overrides = {k: getattr(args, k) for k in keys if getattr(args, k) is not None}
        return cmd_sweep(args.input, args.csv, args.svg, args.config, overrides)
    if args.command == "info":
        return cmd_info(args.input)
    if args.command == "bench":
        return cmd_bench(args.width, args.height, args.density, args.seed)
    parser.error(f"未知子命令: {args.command}")


# --- 启动入口 ---

if __name__ == "__main__":
    sys.exit(main())
