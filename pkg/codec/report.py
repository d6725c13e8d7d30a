"""
编码报告收集器
贯穿编码全流程，收集区域 / 链码 / 码流规模指标、色调优化效果、求解告警和各步骤耗时。
"""

import datetime
import json
import sys


class EncodeReport:
    """收集编码过程中的指标，在流程结束时输出统一报告"""

    def __init__(self):
        self.metrics = {}
        self.warnings = []
        self.timings = {}
        self.start_time = datetime.datetime.now()

    def add_metric(self, name: str, value):
        self.metrics[name] = value

    def add_warning(self, message: str):
        self.warnings.append(message)

    def add_timing(self, step: str, ms: float):
        self.timings[step] = round(ms, 3)

    def print_report(self, stream=None):
        """输出完整的编码报告（默认写 stderr，标准输出留给结果行）"""
        stream = stream or sys.stderr
        elapsed = datetime.datetime.now() - self.start_time
        print("\n" + "=" * 70, file=stream)
        print("编码报告 (Encode Report)", file=stream)
        print("=" * 70, file=stream)
        print(f"  执行耗时: {elapsed}", file=stream)

        print("\n  码流指标:", file=stream)
        for name, value in self.metrics.items():
            if isinstance(value, int):
                print(f"    • {name}: {value:,}", file=stream)
            elif isinstance(value, float):
                print(f"    • {name}: {value:.6g}", file=stream)
            else:
                print(f"    • {name}: {value}", file=stream)

        if self.timings:
            print("\n  步骤耗时 (ms):", file=stream)
            for step, ms in self.timings.items():
                print(f"    • {step}: {ms}", file=stream)

        if self.warnings:
            print(f"\n  告警 ({len(self.warnings)} 条):", file=stream)
            for i, w in enumerate(self.warnings, 1):
                print(f"    {i}. {w}", file=stream)
        else:
            print("\n  无告警", file=stream)

        print("=" * 70 + "\n", file=stream)

    def to_json_dict(self):
        """导出为 JSON 可序列化字典"""
        elapsed = (datetime.datetime.now() - self.start_time).total_seconds()
        return {
            "run_time": datetime.datetime.now().strftime('%Y-%m-%d %H:%M:%S'),
            "elapsed_seconds": elapsed,
            "metrics": json.dumps(self.metrics, ensure_ascii=False, default=str),
            "warnings": json.dumps(self.warnings, ensure_ascii=False),
            "timings": json.dumps(self.timings, ensure_ascii=False),
        }
