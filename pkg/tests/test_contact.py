import numpy as np
import pytest

from src.contact import (
    ContactMetricStructure,
    ContactStructureError,
    HorizontalDomainError,
    SasakianDegenerateError,
    adapted_phi_basis,
    compute_h,
    contact_identity_report,
    d_eta,
    eigendistributions,
    k_contact_defect,
    kernel_basis,
    legendrian_residual,
    lie_xi_metric,
    phi_basis,
    sample_tangent_pairs,
    validate_contact_metric,
)
from src.models import build_heisenberg_chart, build_milnor_model, synthetic_pointwise_structure
from src.tensors import GeometryError, TangentSpaceModel
from tests.oracles import milnor_nullity

MILNOR_PAIRS = [(1.0, 2.0), (-1.0, 2.0), (0.5, -0.5), (2.0, 0.25)]


def _perturbed_milnor(lambda2=1.0, lambda3=2.0, bump=0.1):
    S = build_milnor_model(lambda2, lambda3)
    G = np.eye(3)
    G[1, 1] += bump
    return ContactMetricStructure(
        S.model.with_metric(G), eta=S.eta, xi=S.xi, phi=S.phi, label="perturbed"
    )


def test_heisenberg_milnor_frame_is_contact_metric():
    S = build_milnor_model(0.0, 0.0)
    report = validate_contact_metric(S, S.sample_points(10))
    assert report.passed
    assert max(report.residual(name) for name in ("reeb", "phi_squared", "compatibility", "eta_metric_dual")) < 1e-9


@pytest.mark.parametrize("lambda2,lambda3", MILNOR_PAIRS)
def test_milnor_family_passes_axioms(lambda2, lambda3):
    S = build_milnor_model(lambda2, lambda3)
    assert validate_contact_metric(S, [None]).passed


def test_perturbed_metric_fails_compatibility():
    report = validate_contact_metric(_perturbed_milnor(), [None])
    assert not report.passed
    assert report.residual("compatibility") > 0.01


@pytest.mark.parametrize("n,kappa,mu", [(1, 0.0, 0.0), (2, 0.75, -1.0), (3, -2.0, 4.0)])
def test_synthetic_structure_passes_axioms(n, kappa, mu):
    S = synthetic_pointwise_structure(n, kappa, mu).structure
    assert validate_contact_metric(S, [None]).passed


def test_even_dimension_fails_parity_row():
    S = ContactMetricStructure(
        TangentSpaceModel(np.eye(2)), eta=np.zeros(2), xi=np.zeros(2), phi=np.zeros((2, 2)), d_eta_components=np.zeros((2, 2))
    )
    report = validate_contact_metric(S, [None])
    assert "dimension_parity" in report
    assert not report.passed


def test_heisenberg_chart_is_contact_metric():
    S = build_heisenberg_chart()
    assert validate_contact_metric(S, S.sample_points(10), tolerance=1e-6).passed


def test_d_eta_is_halved_exterior_derivative():
    S = build_heisenberg_chart()
    p = np.array([0.2, -0.3, 0.1])
    # eta = (dz - y dx) / 2, so d(eta)(d_x, d_y) = (0 - (-1/2)) / 2 = 1/4
    assert d_eta(S, p)[0, 1] == pytest.approx(0.25, abs=1e-9)


def test_pointwise_structure_needs_explicit_d_eta():
    S = ContactMetricStructure(TangentSpaceModel(np.eye(3)), eta=np.eye(3)[2], xi=np.eye(3)[2], phi=np.zeros((3, 3)))
    with pytest.raises(ContactStructureError):
        d_eta(S)


def test_heisenberg_h_vanishes():
    assert compute_h(build_milnor_model(0.0, 0.0)).lam < 1e-8
    S = build_heisenberg_chart()
    assert max(compute_h(S, p).lam for p in S.sample_points(5)) < 1e-8


@pytest.mark.parametrize("lambda2,lambda3", MILNOR_PAIRS)
def test_milnor_h_matches_symbolic_lambda(lambda2, lambda3):
    S = build_milnor_model(lambda2, lambda3)
    h = compute_h(S)
    _, _, lam = milnor_nullity(lambda2, lambda3)
    assert h.lam == pytest.approx(float(lam), abs=1e-12)
    values = np.sort(np.linalg.eigvals(h.h).real)
    assert np.allclose(values, [-h.lam, 0.0, h.lam], atol=1e-12)
    assert np.allclose(h.h @ S.xi_at(), 0.0)


def test_synthetic_h_spectrum():
    S = synthetic_pointwise_structure(1, 0.0, 0.0).structure
    h = compute_h(S)
    assert h.lam == pytest.approx(1.0)
    assert np.allclose(np.sort(np.linalg.eigvals(h.h).real), [-1.0, 0.0, 1.0])


@pytest.mark.parametrize("lambda2,lambda3", MILNOR_PAIRS)
def test_identities_hold_on_milnor(lambda2, lambda3):
    S = build_milnor_model(lambda2, lambda3)
    kappa, _, _ = milnor_nullity(lambda2, lambda3)
    report = contact_identity_report(S, [None], kappa=float(kappa))
    assert report.passed, report.failures()
    assert report.residual("h_squared") < 1e-7


def test_identities_on_heisenberg_chart():
    S = build_heisenberg_chart()
    report = contact_identity_report(S, S.sample_points(5), kappa=1.0, tolerance=1e-6)
    assert report.passed, report.failures()
    assert report.residual("h_squared") < 1e-8


def test_synthetic_identities_are_algebraic():
    S = synthetic_pointwise_structure(2, 0.0, 1.0).structure
    report = contact_identity_report(S, [None], kappa=0.0)
    assert "lie_xi_metric" not in report
    assert report.residual("h_squared") < 1e-10


def test_phi_basis_from_seed():
    S = build_milnor_model(0.0, 0.0)
    basis = phi_basis(S, seed=np.array([0.0, 1.0, 0.0]))
    assert np.allclose(basis.vectors, np.eye(3)[:, 1:])
    assert np.allclose(basis.vectors.T @ basis.vectors, np.eye(2))


def test_phi_basis_on_synthetic_n2():
    S = synthetic_pointwise_structure(2, 0.5, 0.0).structure
    basis = phi_basis(S)
    assert basis.vectors.shape == (5, 4)
    assert np.allclose(basis.vectors.T @ basis.vectors, np.eye(4), atol=1e-12)
    assert np.allclose(basis.first_half.T @ basis.second_half, 0.0, atol=1e-12)


def test_phi_basis_rejects_vertical_seed():
    S = build_milnor_model(0.0, 0.0)
    with pytest.raises(ContactStructureError, match="Ker"):
        phi_basis(S, seed=np.array([0.3, np.sqrt(0.91), 0.0]))


def test_eigendistributions_of_synthetic_structure():
    S = synthetic_pointwise_structure(1, 0.0, 0.0).structure
    dist = eigendistributions(S)
    h = compute_h(S).h
    assert dist.positive.shape == (3, 1)
    assert np.allclose(h @ dist.positive, dist.positive)
    assert np.allclose(h @ dist.negative, -dist.negative, atol=1e-10)


@pytest.mark.parametrize("n", [2, 3])
def test_eigendistributions_and_reeb_span_tangent_space(n):
    S = synthetic_pointwise_structure(n, 0.75, -1.0).structure
    dist = eigendistributions(S)
    xi = S.xi_at()
    assert dist.positive.shape == dist.negative.shape == (2 * n + 1, n)
    assert np.linalg.matrix_rank(np.column_stack([dist.positive, dist.negative, xi])) == 2 * n + 1

    g = S.metric()
    assert np.max(np.abs(dist.positive.T @ g @ dist.negative)) < 1e-10
    assert np.max(np.abs(dist.positive.T @ g @ xi)) < 1e-10
    assert np.max(np.abs(dist.negative.T @ g @ xi)) < 1e-10


def test_eigendistributions_on_milnor_are_legendrian():
    S = build_milnor_model(1.0, 2.0)
    basis = adapted_phi_basis(S)
    assert np.allclose(basis.vectors.T @ basis.vectors, np.eye(2), atol=1e-12)
    assert legendrian_residual(S) < 1e-12


def test_sasakian_control_has_no_eigendistributions():
    with pytest.raises(SasakianDegenerateError, match="Sasakian degenerate"):
        eigendistributions(build_milnor_model(0.0, 0.0))


def test_k_contact_defect_controls():
    S = build_heisenberg_chart()
    assert k_contact_defect(S, S.sample_points(5)) < 1e-8
    assert k_contact_defect(build_milnor_model(0.0, 0.0), [None]) < 1e-8


@pytest.mark.parametrize("lambda2,lambda3", MILNOR_PAIRS)
def test_k_contact_defect_is_twice_lambda(lambda2, lambda3):
    S = build_milnor_model(lambda2, lambda3)
    assert k_contact_defect(S, [None]) == pytest.approx(2.0 * compute_h(S).lam, abs=1e-7)


def test_lie_xi_metric_kills_xi():
    S = build_milnor_model(1.0, 2.0)
    assert np.allclose(lie_xi_metric(S) @ S.xi_at(), 0.0)


def test_kernel_basis_is_orthonormal_and_horizontal():
    S = build_heisenberg_chart()
    p = np.array([0.4, 0.6, -0.2])
    K = kernel_basis(S, p)
    assert np.allclose(K.T @ S.metric(p) @ K, np.eye(2))
    assert np.allclose(S.eta_at(p) @ K, 0.0)


def test_tangent_pairs_are_orthonormal_and_reproducible():
    S = build_milnor_model(1.0, 2.0)
    pairs = sample_tangent_pairs(S, 10, seed=4)
    again = sample_tangent_pairs(S, 10, seed=4)
    for pair, other in zip(pairs, again):
        assert np.array_equal(pair.X, other.X)
        assert pair.X @ pair.X == pytest.approx(1.0)
        assert pair.X @ pair.Y == pytest.approx(0.0, abs=1e-12)
        assert abs(S.eta_at() @ pair.X) > 0


def test_horizontal_domain_error_is_a_geometry_error():
    assert issubclass(HorizontalDomainError, GeometryError)
