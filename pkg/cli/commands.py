"""
命令实现
每个命令返回进程退出码；标准输出只写结果行，日志和错误信息写 stderr。
"""

import os
import time

from cli.config_manager import SweepConfigManager
from cli.error_handlers import EXIT_OK, handle_errors
from cli.svg import render_rd_svg
from cli.sweep import (
    SweepGrid, compare_in_window, matched_gap, ok_points, run_grid, shared_window, upper_envelope,
    write_csv,
)
from cli.synth import synthesize
from codec.decoder import decode, decode_with_labels
from codec.encoder import encode
from codec.report import EncodeReport
from codec.schemas import EncoderConfig
from core.image import load_pgm, save_pgm
from core.logging import logger
from core.metrics import bits_per_pixel, format_psnr, psnr
from operators.base import OperatorId
from operators.diffusion import DiffusionOperator
from operators.region import RegionView
from operators.shepard import ShepardOperator
from segmentation.boundary import boundary_length


def _read_bytes(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


@handle_errors
def cmd_encode(input_path: str, output_path: str, op: str, lam: float, density=None, q=None,
               block: int = 1, tonal_budget=None, report: bool = False) -> int:
    kwargs = {"op": op, "lam": lam, "density": density, "q": q, "block": block}
    if tonal_budget is not None:
        kwargs["tonal_budget"] = tonal_budget
    cfg = EncoderConfig.build(**kwargs)
    img = load_pgm(input_path)
    encode_report = EncodeReport()

    t = time.perf_counter()
    data = encode(img, cfg, encode_report)
    elapsed_ms = (time.perf_counter() - t) * 1000

    with open(output_path, "wb") as f:
        f.write(data)
    if report:
        encode_report.print_report()
    print(f"bpp={bits_per_pixel(len(data), img):.4f} time_ms={elapsed_ms:.1f}")
    return EXIT_OK


@handle_errors
def cmd_decode(input_path: str, output_path: str) -> int:
    img = decode(_read_bytes(input_path))
    save_pgm(img, output_path)
    return EXIT_OK


@handle_errors
def cmd_eval(original_path: str, decoded_path: str, container_path: str) -> int:
    original = load_pgm(original_path)
    decoded = load_pgm(decoded_path)
    size = os.path.getsize(container_path)
    value = psnr(original, decoded)
    print(f"bpp={bits_per_pixel(size, original):.4f} psnr={format_psnr(value)}")
    return EXIT_OK


@handle_errors
def cmd_synth(kind: str, width: int, height: int, seed: int, output_path: str) -> int:
    save_pgm(synthesize(kind, width, height, seed), output_path)
    return EXIT_OK


@handle_errors
def cmd_sweep(input_path: str, csv_path: str, svg_path: str, config_path: str = "config.json",
              overrides=None) -> int:
    config = SweepConfigManager(config_path, overrides)
    grid = SweepGrid.from_config(config)
    img = load_pgm(input_path)

    rows = run_grid(img, grid, block=config["block"], tonal_budget=config["tonal_budget"],
                    workers=config["workers"])
    write_csv(rows, csv_path)

    envelopes = {op: upper_envelope(pts, config["bucket_width"]) for op, pts in ok_points(rows).items()}
    with open(svg_path, "w", encoding="utf-8") as f:
        f.write(render_rd_svg(envelopes, title=os.path.basename(input_path)))

    window = shared_window(rows)
    if window is not None:
        compare_in_window(rows, *window)
    inpainting = [op for op in grid.ops if OperatorId.parse(op).is_inpainting]
    polynomial = [op for op in grid.ops if not OperatorId.parse(op).is_inpainting]
    if inpainting and polynomial:
        matched_gap(rows, inpainting, polynomial, config["bucket_width"])
    logger.info("网格搜索完成: %d 行写入 %s", len(rows), csv_path)
    return EXIT_OK


@handle_errors
def cmd_info(input_path: str) -> int:
    data = _read_bytes(input_path)
    result = decode_with_labels(data)
    header = result.header
    total, _ = boundary_length(result.labels)
    fields = [
        ("version", header.version),
        ("width", header.width),
        ("height", header.height),
        ("op", header.op.cli_name),
        ("q", header.levels if header.levels is not None else "-"),
        ("density", header.density if header.density is not None else "-"),
        ("chain_count", header.chain_count),
        ("region_count", header.region_count),
        ("body_length", header.body_length),
        ("boundary_length", total),
        ("mean_region_size", f"{header.width * header.height / header.region_count:.2f}"),
        ("container_bytes", len(data)),
        ("bpp", f"{8.0 * len(data) / (header.width * header.height):.4f}"),
    ]
    for key, value in fields:
        print(f"{key}={value}")
    return EXIT_OK


def benchmark_reconstruction(width: int, height: int, density: float, seed: int, repeats: int = 3) -> dict:
    """
    整幅图作为单一区域、规则网格掩码、q = 256，
    分别计时 Shepard 与扩散重建，各取多次中的最短耗时。
    """
    img = synthesize("voronoi-smooth", width, height, seed)
    region = RegionView.full(width, height)
    timings = {}
    for name, op in (("shepard", ShepardOperator(width, height, density, 256)),
                     ("diffusion", DiffusionOperator(width, height, density, 256))):
        mask = op.known_data(region, img)
        best = float("inf")
        for _ in range(max(1, repeats)):
            t = time.perf_counter()
            op.reconstruct(region, mask)
            best = min(best, (time.perf_counter() - t) * 1000)
        timings[name] = best
    timings["ratio"] = timings["diffusion"] / max(timings["shepard"], 1e-9)
    return timings


@handle_errors
def cmd_bench(width: int, height: int, density: float, seed: int) -> int:
    t = benchmark_reconstruction(width, height, density, seed)
    print(f"shepard_ms={t['shepard']:.1f} diffusion_ms={t['diffusion']:.1f} ratio={t['ratio']:.2f}")
    return EXIT_OK


def cli_encode_config_error(op: str, density, q) -> str:
    """修复类算子缺少参数时的用法提示；参数齐全返回空串"""
    if OperatorId.parse(op).is_inpainting:
        missing = [flag for flag, v in (("--density", density), ("--q", q)) if v is None]
        if missing:
            return f"--op {op} 需要参数: {' '.join(missing)}"
    return ""

