#!/usr/bin/env python3
"""Write one Milnor config per (lambda2, lambda3) pair of a base config's sweep grid."""

import sys
from pathlib import Path

import tomli_w

from src.config import ConfigError, load_model_config


def generate_configs(base_path: Path, out_dir: Path) -> list[Path]:
    """Every generated file is a complete config that loads on its own."""
    base = load_model_config(base_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for lambda2 in base.sweep_values:
        for lambda3 in base.sweep_values:
            config = base.with_overrides(kind="milnor", lambda2=lambda2, lambda3=lambda3)
            path = out_dir / f"milnor_{lambda2:g}_{lambda3:g}.toml"
            with open(path, "wb") as f:
                tomli_w.dump(config.to_document(), f)
            written.append(path)
    return written


def main():
    if len(sys.argv) < 2:
        print("Usage: generate_sweep_configs.py BASE_CONFIG [OUT_DIR]")
        return 2
    base_path = Path(sys.argv[1])
    out_dir = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("sweep_configs")

    try:
        written = generate_configs(base_path, out_dir)
    except ConfigError as e:
        print(f"Error: {e}")
        return 2

    print(f"Wrote {len(written)} config(s) to {out_dir}")
    print(f"Run: kmu-bench fit --config {written[0]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
