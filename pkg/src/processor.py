import sys
import traceback
from typing import Callable, Optional

import numpy as np

from src.config import ModelConfig
from src.contact import (
    ContactMetricStructure,
    compute_h,
    contact_identity_report,
    k_contact_defect,
    validate_contact_metric,
)
from src.descent import (
    base_complex_structure,
    base_kahler_check,
    build_error_tensor,
    build_lifted_structure,
    canonical_base_metric,
    commutation_orthogonality_report,
    conformal_feasibility,
    error_tensor_report,
    metric_factors,
    metric_from_error_tensor,
    sasakian_nullity_residual,
)
from src.models import build_from_config, build_milnor_model
from src.nullity import (
    PARA,
    REGIMES,
    RIEMANNIAN,
    NullityFit,
    d_homothety_constants,
    fit_nullity,
    lie_xi_h_report,
)
from src.para import (
    enumerate_para_solutions,
    para_compatibility_report,
    para_infeasible_for_riemannian_metric,
    semi_error_tensor,
)
from src.report import ResidualReport, RunReport
from src.tensors import ChartModel, GeometryError

K_CONTACT_TOLERANCE = 1e-8
UNIQUENESS_TOLERANCE = 1e-9
# points used by stages that nest finite differences on chart models
CHART_STAGE_POINTS = 5


def log(tag: str, message: str) -> None:
    print(f"[{tag}] {message}", file=sys.stderr)


class RunProcessor:
    def __init__(self, config: ModelConfig):
        self.config = config
        self.structure, self.synthetic = build_from_config(config)
        self.tag = f"MODEL:{self.structure.label}"
        self._fit: Optional[NullityFit] = None
        log(self.tag, f"模型已构建，维度 {self.structure.dimension}")

    @property
    def is_chart(self) -> bool:
        return isinstance(self.structure.model, ChartModel)

    @property
    def tolerance(self) -> float:
        """Tolerance for checks that involve differentiation of the structure tensors."""
        return self.config.tol_fd if self.is_chart else self.config.tolerance

    def points(self, structure: Optional[ContactMetricStructure] = None, limit: Optional[int] = None):
        structure = structure or self.structure
        count = self.config.samples if limit is None else min(limit, self.config.samples)
        return structure.sample_points(count, self.config.seed)

    def _stage_points(self):
        return self.points(limit=CHART_STAGE_POINTS if self.is_chart else None)

    def _new_report(self, command: str) -> RunReport:
        return RunReport(command, self.config.descriptor())

    def _run_stage(self, report: RunReport, name: str, stage: Callable):
        try:
            return stage()
        except GeometryError as e:
            log(name.upper(), f"{type(e).__name__}: {e}")
            report.fail(name, str(e))
        except Exception as e:
            log(name.upper(), f"未预期的错误 {type(e).__name__}: {e}")
            traceback.print_exc(file=sys.stderr)
            report.fail(name, f"{type(e).__name__}: {e}")
        return None

    def nullity_fit(self) -> NullityFit:
        if self._fit is not None:
            return self._fit
        config = self.config
        if self.synthetic is not None:
            kappa, mu = self.synthetic.kappa, self.synthetic.mu
            if config.homothety is not None:
                kappa, mu = d_homothety_constants(kappa, mu, config.homothety)
            self._fit = NullityFit.declared(kappa, mu, config.nullity_acceptance)
            log("FIT", f"合成结构，使用声明常数 κ={kappa:.6g}, μ={mu:.6g}")
        else:
            log("FIT", f"最小二乘拟合，样本数 {config.samples}")
            self._fit = fit_nullity(
                self.structure,
                count=config.samples,
                seed=config.seed,
                acceptance=config.nullity_acceptance,
            )
        fit = self._fit
        mu = "indeterminate" if fit.mu is None else f"{fit.mu:.6g}"
        log("FIT", f"κ={fit.kappa:.6g}, μ={mu}, 残差 {fit.residual:.3e}, 区域 {fit.regime}")
        return fit

    def _record_fit(self, report: RunReport, fit: NullityFit) -> None:
        report.fit = fit.as_dict()
        report.regime = fit.regime
        report.add_check("nullity_residual", fit.residual, fit.acceptance)

    def validate(self) -> RunReport:
        report = self._new_report("validate")
        S = self.structure
        tol = self.config.tol_fd if self.is_chart else self.config.tol_algebraic
        log("VALIDATE", f"检查接触度量公理，{self.config.samples} 个采样点")
        axioms = self._run_stage(report, "axioms", lambda: validate_contact_metric(S, self.points(), tol))
        if axioms is not None:
            report.add(axioms)
        identities = self._run_stage(
            report, "identities", lambda: contact_identity_report(S, self._stage_points(), tolerance=self.tolerance)
        )
        if identities is not None:
            report.add(identities)
        lam = self._run_stage(report, "h_tensor", lambda: max(compute_h(S, p).lam for p in self._stage_points()))
        if lam is not None:
            report.artifacts["lambda_h"] = lam
        defect = self._run_stage(report, "k_contact", lambda: k_contact_defect(S, self._stage_points()))
        if defect is not None:
            report.artifacts["k_contact_defect"] = defect
        return report

    def fit(self) -> RunReport:
        report = self._new_report("fit")
        fit = self._run_stage(report, "nullity_fit", self.nullity_fit)
        if fit is None:
            return report
        self._record_fit(report, fit)
        if not fit.accepted:
            log("FIT", "残差超过接受阈值，结构不是 (κ,μ) 空间")
            return report
        S = self.structure
        identities = self._run_stage(
            report,
            "identities",
            lambda: contact_identity_report(S, self._stage_points(), kappa=fit.kappa, tolerance=self.tolerance),
        )
        if identities is not None:
            report.add(identities)
        if not S.is_pointwise:
            lie_h = self._run_stage(
                report, "lie_xi_h", lambda: lie_xi_h_report(S, fit, self._stage_points(), self.config.tol_fd)
            )
            if lie_h is not None:
                report.add(lie_h)
        return report

    def _require_regime(self, report: RunReport, fit: NullityFit, regime: str, condition: str) -> bool:
        if fit.regime == regime:
            return True
        log(report.command.upper(), f"指数条件不满足: I_M = {fit.index:.6g}, 区域 {fit.regime}")
        report.fail("index_condition", f"{condition} required, got I_M = {fit.index:.6g} ({fit.regime})")
        return False

    def descend(self) -> RunReport:
        report = self._new_report("descend")
        fit = self._run_stage(report, "nullity_fit", self.nullity_fit)
        if fit is None:
            return report
        self._record_fit(report, fit)
        verdict = self._run_stage(report, "conformal", lambda: conformal_feasibility(self.structure, self._stage_points()))
        if verdict is not None:
            report.artifacts.update(
                forced_conformal_factor=verdict.forced_factor,
                forced_f=verdict.f,
                conformal_submersion_feasible=verdict.feasible,
            )
        if not self._require_regime(report, fit, RIEMANNIAN, "|I_M| > 1"):
            return report

        S = self.structure
        config = self.config
        p0 = self.points(limit=1)[0]
        log("DESCEND", f"构造误差张量，e^(2f) = {config.scale:g}")
        sol = self._run_stage(report, "error_tensor", lambda: build_error_tensor(S, fit, config.scale, p0))
        if sol is None:
            return report
        report.artifacts["eigenvalues"] = [sol.lam_pos, sol.lam_neg]
        report.artifacts["metric_factors"] = list(metric_factors(fit.index))

        checks = self._run_stage(
            report,
            "error_tensor_identities",
            lambda: error_tensor_report(
                S, sol, points=self._stage_points(), tolerance=self.tolerance, algebraic_tolerance=config.tol_algebraic
            ),
        )
        if checks is not None:
            report.add(checks)

        def base_structure():
            g = canonical_base_metric(S, fit)
            J = base_complex_structure(S, fit)
            kahler = base_kahler_check(
                S, g, J, self._stage_points(), tolerance=config.tol_algebraic if not self.is_chart else config.tol_fd
            )
            spread = max(
                float(np.max(np.abs(metric_from_error_tensor(S, build_error_tensor(S, fit, s, p0)) - g.at(p0))))
                for s in config.uniqueness_scales
            )
            orthogonality = commutation_orthogonality_report(S, sol.T, sol.scale, p0, config.tol_algebraic)
            return kahler.merge(orthogonality), spread

        base = self._run_stage(report, "base_structure", base_structure)
        if base is not None:
            kahler, spread = base
            report.add(kahler)
            report.add_check("uniqueness_across_scales", spread, UNIQUENESS_TOLERANCE)
        return report

    def lift(self) -> RunReport:
        report = self._new_report("lift")
        fit = self._run_stage(report, "nullity_fit", self.nullity_fit)
        if fit is None:
            return report
        self._record_fit(report, fit)
        if not self._require_regime(report, fit, RIEMANNIAN, "|I_M| > 1"):
            return report

        S = self.structure
        config = self.config

        def lifted():
            g = canonical_base_metric(S, fit)
            J = base_complex_structure(S, fit)
            return build_lifted_structure(S, g, J, points=self._stage_points())

        lifted_structure = self._run_stage(report, "lifted_structure", lifted)
        if lifted_structure is None:
            return report
        log("LIFT", f"提升结构 {lifted_structure.label}")
        tol = config.tol_fd if self.is_chart else config.tol_algebraic
        axioms = self._run_stage(
            report,
            "lifted_axioms",
            lambda: validate_contact_metric(lifted_structure, self.points(lifted_structure), tol),
        )
        if axioms is not None:
            report.add(axioms, prefix="lifted_")
        defect = self._run_stage(
            report,
            "lifted_k_contact",
            lambda: k_contact_defect(lifted_structure, self.points(lifted_structure, CHART_STAGE_POINTS)),
        )
        if defect is not None:
            report.add_check("lifted_k_contact_defect", defect, K_CONTACT_TOLERANCE)
        if not lifted_structure.is_pointwise:
            residual = self._run_stage(
                report,
                "lifted_sasakian",
                lambda: sasakian_nullity_residual(lifted_structure, config.samples, config.seed),
            )
            if residual is not None:
                report.add_check("lifted_sasakian_nullity", residual, config.nullity_acceptance)
            original = self._run_stage(
                report, "original_sasakian", lambda: sasakian_nullity_residual(S, config.samples, config.seed)
            )
            if original is not None:
                report.artifacts["original_sasakian_nullity"] = original
        return report

    def para(self) -> RunReport:
        report = self._new_report("para")
        fit = self._run_stage(report, "nullity_fit", self.nullity_fit)
        if fit is None:
            return report
        self._record_fit(report, fit)
        if not self._require_regime(report, fit, PARA, "|I_M| < 1"):
            return report

        S = self.structure
        p0 = self.points(limit=1)[0]
        solutions = self._run_stage(report, "para_solutions", lambda: enumerate_para_solutions(S, fit.index, p=p0))
        if solutions is None:
            return report
        log("PARA", f"共 {len(solutions)} 个近仿 Kähler 结构")
        tol = self.config.tol_algebraic
        report.add(ResidualReport.merge_all(para_compatibility_report(sol, tolerance=tol) for sol in solutions))
        n = solutions.basis.n
        full = 2**n - 1
        report.add_check(
            "complement_symmetry",
            max(float(np.max(np.abs(sol.g + solutions[full ^ sol.mask].g))) for sol in solutions),
            tol,
        )
        distinct = {np.round(sol.g_basis, 12).tobytes() for sol in solutions}
        report.add_check("solution_count", float(abs(len(distinct) - 2**n)), 0.5)

        canonical = solutions.canonical
        recovered = self._run_stage(
            report, "semi_error_tensor", lambda: semi_error_tensor(S, fit.index, ["p1"] * n, basis=solutions.basis, p=p0)
        )
        if recovered is not None:
            report.add_check(
                "semi_error_recovers_canonical",
                float(np.max(np.abs(recovered.g_basis - canonical.g_basis))),
                tol,
            )
        report.add(para_infeasible_for_riemannian_metric(S, solutions, p0))
        report.artifacts.update(
            solution_count=len(solutions),
            subsets=[list(sol.subset) for sol in solutions],
            a0=solutions.a0,
            intersection_points=[list(canonical.eigenpairs[0]), list(solutions[0].eigenpairs[0])],
        )
        return report

    def sweep(self) -> RunReport:
        report = self._new_report("sweep")
        config = self.config
        grid = []
        worst = 0.0
        for lambda2 in config.sweep_values:
            for lambda3 in config.sweep_values:
                S = build_milnor_model(lambda2, lambda3)
                fit = self._run_stage(
                    report,
                    f"fit({lambda2:g},{lambda3:g})",
                    lambda: fit_nullity(S, count=config.samples, seed=config.seed, acceptance=config.nullity_acceptance),
                )
                if fit is None:
                    continue
                worst = max(worst, fit.residual)
                grid.append(
                    {
                        "lambda2": lambda2,
                        "lambda3": lambda3,
                        "kappa": fit.kappa,
                        "mu": "indeterminate" if fit.mu is None else fit.mu,
                        "index": fit.index,
                        "regime": fit.regime,
                    }
                )
                log("SWEEP", f"({lambda2:g}, {lambda3:g}) → {fit.regime}")
        report.add_check("sweep_fit_residual", worst, config.nullity_acceptance)
        counts = dict.fromkeys(REGIMES, 0)
        for row in grid:
            counts[row["regime"]] += 1
        report.artifacts.update(grid=grid, regime_counts=counts)
        return report
