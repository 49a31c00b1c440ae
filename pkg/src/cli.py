"""Command-line entry point: ``kmu-bench <command> --config FILE``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage or
config errors.
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from src.config import ConfigError, load_model_config
from src.processor import RunProcessor
from src.report import RunReport
from src.tensors import GeometryError

COMMANDS = ("validate", "fit", "descend", "para", "lift", "sweep")

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmu-bench",
        description="Numerical checks for (κ,μ)-contact metric manifolds and their base spaces.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path, help="model config (.toml or .json)")
    parser.add_argument("--seed", type=int, help="override sampling.seed")
    parser.add_argument("--samples", type=int, help="override sampling.samples")
    parser.add_argument("--json", type=Path, dest="json_path", help="write the run report as JSON")
    parser.add_argument("--tol-algebraic", type=float, help="override tolerances.algebraic")
    parser.add_argument("--tol-fd", type=float, help="override tolerances.finite_difference")
    return parser


def execute(
    command: str,
    config_path: Path,
    seed: Optional[int] = None,
    samples: Optional[int] = None,
    json_path: Optional[Path] = None,
    tol_algebraic: Optional[float] = None,
    tol_fd: Optional[float] = None,
) -> tuple[int, Optional[RunReport]]:
    if command not in COMMANDS:
        print(f"[CLI] 未知命令: {command}", file=sys.stderr)
        return EXIT_USAGE, None
    try:
        config = load_model_config(config_path).with_overrides(
            seed=seed, samples=samples, tol_algebraic=tol_algebraic, tol_fd=tol_fd
        )
        processor = RunProcessor(config)
    except ConfigError as e:
        print(f"[CONFIG] 配置错误: {e}", file=sys.stderr)
        return EXIT_USAGE, None
    except GeometryError as e:
        print(f"[CONFIG] 模型无法构建: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE, None

    print(f"[CLI] 运行 {command}，配置 {config_path}", file=sys.stderr)
    report: RunReport = getattr(processor, command)()
    print(report.render_table())
    if json_path is not None:
        try:
            json_path.parent.mkdir(parents=True, exist_ok=True)
            json_path.write_text(report.to_json() + "\n", encoding="utf-8")
        except OSError as e:
            print(f"[CLI] 无法写入报告 {json_path}: {e}", file=sys.stderr)
            return EXIT_USAGE, report
        print(f"[CLI] 报告已写入 {json_path}", file=sys.stderr)
    return (EXIT_PASSED if report.passed else EXIT_FAILED), report


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASSED
    code, _ = execute(
        args.command,
        args.config,
        seed=args.seed,
        samples=args.samples,
        json_path=args.json_path,
        tol_algebraic=args.tol_algebraic,
        tol_fd=args.tol_fd,
    )
    return code


if __name__ == "__main__":
    sys.exit(main())
