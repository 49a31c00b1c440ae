import sys

from src.config import load_model_config
from src.nullity import PARA, RIEMANNIAN
from src.processor import RunProcessor


def main():
    config = load_model_config("config.toml")
    processor = RunProcessor(config)

    report = processor.fit()
    print(f"模型: {processor.structure.label}")
    print(f"拟合: {report.fit}")
    print(f"区域: {report.regime}")
    for check in (c for c in report.checks if not c.passed):
        print(f"未通过: {check.name} 残差 {check.residual:.3e}")

    # 按区域运行对应的底空间构造
    if report.regime == RIEMANNIAN:
        follow_up = processor.descend()
    elif report.regime == PARA:
        follow_up = processor.para()
    else:
        print("没有可用的底空间构造")
        return 0 if report.passed else 1
    print(follow_up.render_table())
    return 0 if report.passed and follow_up.passed else 1


if __name__ == "__main__":
    sys.exit(main())
