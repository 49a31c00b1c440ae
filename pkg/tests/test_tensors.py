import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from src.models import milnor_structure_constants
from src.tensors import (
    ChartDomainError,
    ChartModel,
    CurvatureUnavailableError,
    FrameModelError,
    HomogeneousModel,
    PointTensor,
    SymmetryError,
    TangentSpaceModel,
    antisymmetry_residual,
    bianchi_residual,
    curvature_tensor,
    levi_civita,
    lie_bracket,
    lie_derivative,
    lie_derivative_by_flow,
    riemann_curvature,
    sample_points,
    sym_eigen,
)
from tests.oracles import (
    COORDS,
    as_field,
    christoffel,
    evaluate_at,
    exact_lie_derivative,
    sphere_metric,
)

x, y = COORDS


def _flat_chart(dimension=2):
    return ChartModel(lambda p: np.eye(dimension), dimension)


def _sphere_chart():
    return ChartModel(as_field(sphere_metric().tolist()), 2, sample_radius=0.5)


def _milnor(lambda2=1.0, lambda3=2.0):
    return HomogeneousModel(milnor_structure_constants(lambda2, lambda3), np.eye(3))


def test_homogeneous_bracket_reads_table():
    model = _milnor(0.0, 0.0)
    e = np.eye(3)
    assert np.allclose(lie_bracket(model, e[1], e[2]), 2.0 * e[0])


def test_coordinate_fields_commute():
    e = np.eye(2)
    assert np.allclose(lie_bracket(_flat_chart(), e[0], e[1], np.array([0.3, 0.1])), 0.0)


def test_chart_bracket_of_linear_field():
    X = lambda p: np.array([0.0, p[0]])  # noqa: E731
    Y = np.array([1.0, 0.0])
    assert np.allclose(lie_bracket(_flat_chart(), X, Y, np.array([0.2, -0.5])), [0.0, -1.0], atol=1e-9)


def test_pointwise_model_has_no_brackets():
    with pytest.raises(CurvatureUnavailableError):
        lie_bracket(TangentSpaceModel(np.eye(3)), np.ones(3), np.ones(3))


def test_rejects_bad_bracket_tables():
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    with pytest.raises(FrameModelError):
        HomogeneousModel(c, np.eye(3))

    c = np.zeros((3, 3, 3))
    for k, i, j in ((1, 0, 1), (0, 1, 2)):
        c[k, i, j] = 1.0
        c[k, j, i] = -1.0
    with pytest.raises(FrameModelError, match="Jacobi"):
        HomogeneousModel(c, np.eye(3))


def test_flat_chart_christoffel_vanishes():
    gamma = levi_civita(_flat_chart(3)).coefficients(np.array([0.1, 0.2, 0.3]))
    assert np.max(np.abs(gamma)) < 1e-12


def test_homogeneous_christoffel_matches_structure_constant_formula():
    model = _milnor(1.0, 2.0)
    c = model.structure_constants
    gamma = levi_civita(model).coefficients()
    for i in range(3):
        for j in range(3):
            for k in range(3):
                expected = 0.5 * (c[k, i, j] - c[i, j, k] + c[j, k, i])
                assert gamma[k, i, j] == pytest.approx(expected, abs=1e-12)


def test_levi_civita_is_torsion_free_and_metric():
    connection = levi_civita(_milnor(-1.0, 3.0))
    assert connection.torsion_residual() < 1e-12
    assert connection.metric_residual() < 1e-12

    chart = levi_civita(_sphere_chart())
    p = np.array([0.3, -0.2])
    assert chart.torsion_residual(p) < 1e-12
    assert chart.metric_residual(p) < 1e-8


@pytest.mark.parametrize("point", [(0.3, -0.2), (-0.4, 0.1), (0.0, 0.0)])
def test_sphere_christoffel_matches_symbolic(point):
    expected = evaluate_at(christoffel(sphere_metric()), point)
    computed = levi_civita(_sphere_chart()).coefficients(np.array(point))
    assert np.max(np.abs(computed - expected)) < 1e-8


def test_sphere_has_unit_sectional_curvature():
    model = _sphere_chart()
    p = np.array([0.3, -0.2])
    X = np.array([1.0, 0.5])
    Y = np.array([-0.2, 1.0])
    g = model.metric(p)
    value = g @ riemann_curvature(model, X, Y, Y, p) @ X
    expected = (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
    assert value == pytest.approx(expected, rel=1e-5)


def test_flat_curvature_vanishes():
    R = curvature_tensor(_flat_chart(3), np.array([0.5, -0.1, 0.2]))
    assert np.max(np.abs(R)) < 1e-8


def test_curvature_symmetries():
    R = curvature_tensor(_milnor(1.0, 2.0))
    assert antisymmetry_residual(R) < 1e-12
    assert bianchi_residual(R) < 1e-12
    X = np.array([0.3, -1.0, 2.0])
    assert np.allclose(riemann_curvature(_milnor(), X, X, np.array([1.0, 0.0, 1.0]), curvature=R), 0.0)


@pytest.mark.parametrize(
    "tensor,valence",
    [
        (np.array([0.2, 1.0, -0.5]), (1, 0)),
        (np.array([1.0, 0.0, 0.3]), (0, 1)),
        (np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]), (1, 1)),
        (np.diag([1.0, 2.0, 3.0]), (0, 2)),
    ],
)
def test_homogeneous_lie_derivative_matches_flow_transport(tensor, valence):
    model = _milnor(1.0, 2.0)
    direction = np.array([1.0, 0.0, 0.0])
    algebraic = lie_derivative(model, direction, tensor, valence=valence).components
    flowed = lie_derivative_by_flow(model, direction, tensor, valence).components
    assert np.max(np.abs(algebraic - flowed)) < 1e-5


def test_lie_derivative_of_metric_along_symmetry_vanishes():
    model = ChartModel(lambda p: np.diag([1.0, np.exp(p[0])]), 2)
    p = np.array([0.4, 0.9])
    value = lie_derivative(model, np.array([0.0, 1.0]), model.metric_field, p, (0, 2)).components
    assert np.max(np.abs(value)) < 1e-12


X_FIELD = [sp.sin(y), sp.cos(x)]
SMOOTH_FIELDS = [
    ([x**2 * y, sp.sin(x * y)], (1, 0)),
    ([sp.exp(x) * y, sp.cos(y)], (0, 1)),
    ([[sp.cos(y), x * y], [sp.sin(x), x * sp.exp(y)]], (1, 1)),
]


@pytest.mark.parametrize("tensor,valence", SMOOTH_FIELDS)
def test_chart_lie_derivative_matches_symbolic(tensor, valence):
    p = np.array([0.4, 0.7])
    expected = evaluate_at(exact_lie_derivative(X_FIELD, tensor, valence), p)
    computed = lie_derivative(_flat_chart(), as_field(X_FIELD), as_field(tensor), p, valence).components
    assert np.max(np.abs(computed - expected)) < 1e-7


@pytest.mark.parametrize("tensor,valence", SMOOTH_FIELDS)
def test_chart_lie_derivative_converges_at_second_order(tensor, valence):
    p = np.array([0.4, 0.7])
    expected = evaluate_at(exact_lie_derivative(X_FIELD, tensor, valence), p)

    def error(step):
        computed = lie_derivative(
            _flat_chart(), as_field(X_FIELD), as_field(tensor), p, valence, step=step
        ).components
        return np.max(np.abs(computed - expected))

    ratio = error(0.02) / error(0.01)
    assert 3.5 < ratio < 4.5


def test_point_tensor_rejects_wrong_shape():
    with pytest.raises(FrameModelError):
        PointTensor((1, 1), np.zeros(3))


def test_chart_domain_is_enforced():
    model = ChartModel(lambda p: np.eye(2), 2, domain=lambda p: p[0] > 0)
    with pytest.raises(ChartDomainError):
        model.metric(np.array([-1.0, 0.0]))
    with pytest.raises(ChartDomainError):
        model.metric(None)
    assert all(point[0] > 0 for point in sample_points(model, 20, seed=3))


def test_sample_points_are_deterministic():
    first = sample_points(_milnor(), 5, seed=7)
    second = sample_points(_milnor(), 5, seed=7)
    assert all(np.array_equal(a, b) for a, b in zip(first, second))


def test_sym_eigen_identity_and_diagonal():
    system = sym_eigen(np.eye(3), np.eye(3))
    assert np.allclose(system.values, 1.0)

    system = sym_eigen(np.diag([0.5, -0.5]), np.eye(2))
    assert np.allclose(system.values, [0.5, -0.5])
    assert np.allclose(system.vectors, np.eye(2))


def test_sym_eigen_rejects_non_symmetric_operator():
    with pytest.raises(SymmetryError):
        sym_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))


def test_sym_eigen_orients_repeated_eigenvalues():
    system = sym_eigen(np.diag([1.0, 1.0, -1.0]), np.eye(3))
    assert np.allclose(system.eigenspace(1.0), np.eye(3)[:, :2])


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1), st.integers(min_value=2, max_value=5))
def test_sym_eigen_returns_metric_orthonormal_eigenvectors(seed, m):
    rng = np.random.default_rng(seed)
    root = rng.standard_normal((m, m))
    metric = root @ root.T + m * np.eye(m)
    symmetric = rng.standard_normal((m, m))
    operator = np.linalg.solve(metric, symmetric + symmetric.T)

    system = sym_eigen(operator, metric)
    V = system.vectors
    assert np.all(np.diff(system.values) <= 1e-12)
    assert np.allclose(V.T @ metric @ V, np.eye(m), atol=1e-8)
    assert np.allclose(operator @ V, V * system.values, atol=1e-8)


def test_covariant_derivative_is_torsion_free():
    model = _milnor(0.5, -1.5)
    nabla = levi_civita(model)
    X, Y = np.array([1.0, 0.3, -0.2]), np.array([0.1, -1.0, 0.7])
    torsion = nabla.covariant_derivative(X, Y) - nabla.covariant_derivative(Y, X) - lie_bracket(model, X, Y)
    assert np.max(np.abs(torsion)) < 1e-12

    chart = _sphere_chart()
    p = np.array([0.2, -0.1])
    nabla = levi_civita(chart)

    def X(q):
        return np.array([np.sin(q[1]), np.cos(q[0])])

    def Y(q):
        return np.array([q[0], 1.0])

    torsion = nabla.covariant_derivative(X, Y, p) - nabla.covariant_derivative(Y, X, p) - lie_bracket(chart, X, Y, p)
    assert np.max(np.abs(torsion)) < 1e-7
