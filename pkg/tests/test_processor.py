import pytest

from src.config import ModelConfig
from src.processor import RunProcessor
from src.tensors import GeometryError

RIEMANNIAN_MILNOR = ModelConfig(kind="milnor", lambda2=1.0, lambda3=2.0, samples=20)
PARA_MILNOR = ModelConfig(kind="milnor", lambda2=-1.0, lambda3=2.0, samples=20)


class _ExplodingProcessor(RunProcessor):
    def nullity_fit(self):
        raise GeometryError("no curvature today")


def test_validate_milnor():
    report = RunProcessor(RIEMANNIAN_MILNOR).validate()
    assert report.passed, report.render_table()
    assert report.artifacts["lambda_h"] == pytest.approx(0.5)
    assert report.artifacts["k_contact_defect"] == pytest.approx(1.0)


def test_fit_heisenberg_is_sasakian():
    report = RunProcessor(ModelConfig(kind="heisenberg", samples=20)).fit()
    assert report.passed, report.render_table()
    assert report.regime == "sasakian"
    assert report.fit["kappa"] == pytest.approx(1.0, abs=1e-6)
    assert report.fit["mu"] == "indeterminate"


def test_fit_milnor():
    report = RunProcessor(RIEMANNIAN_MILNOR).fit()
    assert report.passed, report.render_table()
    assert report.regime == "riemannian"
    assert report.fit["index"] == pytest.approx(3.0)


def test_descend_milnor():
    report = RunProcessor(RIEMANNIAN_MILNOR).descend()
    assert report.passed, report.render_table()
    names = [check.name for check in report.checks]
    assert "uniqueness_across_scales" in names
    assert "eigendistribution_orthogonality" in names
    assert not report.artifacts["conformal_submersion_feasible"]


def test_descend_refuses_para_model():
    report = RunProcessor(PARA_MILNOR).descend()
    assert not report.passed
    assert any(error.startswith("index_condition") for error in report.artifacts["errors"])


def test_para_refuses_riemannian_model():
    report = RunProcessor(RIEMANNIAN_MILNOR).para()
    assert not report.passed
    assert report.regime == "riemannian"


@pytest.mark.parametrize("config", [RIEMANNIAN_MILNOR, PARA_MILNOR])
def test_descend_and_para_are_exclusive(config):
    processor = RunProcessor(config)
    assert processor.descend().passed != processor.para().passed


def test_para_on_synthetic_n2():
    report = RunProcessor(ModelConfig(kind="synthetic", n=2, kappa=0.0, mu=1.0)).para()
    assert report.passed, report.render_table()
    assert report.artifacts["solution_count"] == 4
    assert report.artifacts["subsets"] == [[], [1], [2], [1, 2]]


def test_descend_on_synthetic_uses_declared_constants():
    report = RunProcessor(ModelConfig(kind="synthetic", n=2, kappa=0.75, mu=-1.0)).descend()
    assert report.passed, report.render_table()
    assert report.fit["index"] == pytest.approx(3.0)
    assert report.artifacts["eigenvalues"] == pytest.approx([1 - 2**0.5, 1 - 2**-0.5])


def test_synthetic_homothety_transforms_declared_constants():
    processor = RunProcessor(ModelConfig(kind="synthetic", n=1, kappa=0.0, mu=0.0, homothety=2.0))
    fit = processor.nullity_fit()
    assert (fit.kappa, fit.mu) == pytest.approx((0.75, 1.0))


def test_lift_milnor():
    report = RunProcessor(RIEMANNIAN_MILNOR).lift()
    assert report.passed, report.render_table()
    assert report.artifacts["original_sasakian_nullity"] > 1e-5


def test_sweep_records_regimes():
    config = ModelConfig(kind="milnor", samples=10, sweep_values=(-1.0, 1.0, 2.0))
    report = RunProcessor(config).sweep()
    assert report.passed
    grid = {(row["lambda2"], row["lambda3"]): row["regime"] for row in report.artifacts["grid"]}
    assert len(grid) == 9
    assert grid[(1.0, 2.0)] == "riemannian"
    assert grid[(-1.0, 2.0)] == "para"
    assert grid[(2.0, 2.0)] == "sasakian"
    assert sum(report.artifacts["regime_counts"].values()) == 9


def test_stage_errors_become_failed_rows(capsys):
    report = _ExplodingProcessor(RIEMANNIAN_MILNOR).descend()
    assert not report.passed
    assert report.artifacts["errors"] == ["nullity_fit: no curvature today"]
    assert "[NULLITY_FIT]" in capsys.readouterr().err


def test_reports_are_deterministic():
    first = RunProcessor(RIEMANNIAN_MILNOR).fit().to_json()
    second = RunProcessor(RIEMANNIAN_MILNOR).fit().to_json()
    assert first == second
