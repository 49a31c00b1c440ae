#!/usr/bin/env python3
"""Step-by-step diagnosis of a single Milnor model: axioms, h, nullity fit, regime."""

import sys

from src.contact import compute_h, k_contact_defect, validate_contact_metric
from src.descent import riemannian_eigenvalues
from src.models import build_milnor_model
from src.nullity import PARA, RIEMANNIAN, fit_nullity
from src.para import para_intersection_points

LAMBDA2 = 1.0
LAMBDA3 = 2.0
SAMPLES = 40


def check_axioms(S):
    print("=" * 60)
    print("测试1: 接触度量公理")
    print("=" * 60)
    report = validate_contact_metric(S, [None])
    for check in report.checks:
        mark = "✓" if check.passed else "✗"
        print(f"{mark} {check.name}: {check.residual:.3e}")
    return report.passed


def check_h(S):
    print("\n" + "=" * 60)
    print("测试2: h 张量")
    print("=" * 60)
    try:
        data = compute_h(S)
        print(f"✓ λ_h = {data.lam:.6g}")
        print(f"  K-contact 缺陷: {k_contact_defect(S, [None]):.3e}")
        return data.lam
    except Exception as e:
        print(f"✗ h 张量计算失败: {e}")
        return None


def check_fit(S):
    print("\n" + "=" * 60)
    print("测试3: (κ,μ) 拟合")
    print("=" * 60)
    try:
        fit = fit_nullity(S, count=SAMPLES)
    except Exception as e:
        print(f"✗ 拟合失败: {e}")
        return None
    mark = "✓" if fit.accepted else "✗"
    mu = "indeterminate" if fit.mu is None else f"{fit.mu:.6g}"
    print(f"{mark} κ = {fit.kappa:.6g}, μ = {mu}, 残差 {fit.residual:.3e}")
    if not fit.accepted:
        print("⚠ 警告: 残差超过接受阈值，结构不是 (κ,μ) 空间")
    return fit


def check_regime(fit):
    print("\n" + "=" * 60)
    print("测试4: 区域判定")
    print("=" * 60)
    print(f"I_M = {fit.index:.6g}, 区域 {fit.regime}")
    if fit.regime == RIEMANNIAN:
        lam_pos, lam_neg = riemannian_eigenvalues(fit.index, 1.0)
        print(f"✓ 误差张量特征值 ({lam_pos:.6g}, {lam_neg:.6g})")
    elif fit.regime == PARA:
        points = para_intersection_points(fit.index)
        print(f"✓ 交点 p1 = {points.p1}, p2 = {points.p2}")
    else:
        print("⚠ 该区域没有底空间构造")


def main():
    lambda2 = float(sys.argv[1]) if len(sys.argv) > 1 else LAMBDA2
    lambda3 = float(sys.argv[2]) if len(sys.argv) > 2 else LAMBDA3
    print(f"开始诊断 Milnor 模型 ({lambda2:g}, {lambda3:g})\n")

    S = build_milnor_model(lambda2, lambda3)
    if not check_axioms(S):
        print("\n✗ 公理检查未通过，停止诊断")
        return 1
    if check_h(S) is not None:
        fit = check_fit(S)
        if fit is not None and fit.accepted:
            check_regime(fit)

    print("\n" + "=" * 60)
    print("诊断完成")
    print("=" * 60)
    return 0


if __name__ == "__main__":
    sys.exit(main())
