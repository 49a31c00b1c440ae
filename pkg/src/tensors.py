"""Pointwise tensor calculus over frame-represented models.

Three model representations share one interface:

* ``HomogeneousModel``: a left-invariant frame E_1..E_m with a constant bracket
  table and constant metric components. Every operation reduces to algebra on
  the structure constants, so curvature is free of discretization noise.
* ``ChartModel``: the coordinate frame of a chart on real m-space with the
  metric given as a callable. Derivatives are central differences.
* ``TangentSpaceModel``: a single tangent space with no differential data,
  used for pointwise normal forms.

Tangent vectors are component arrays in the active frame; tensor fields are
either constant arrays or callables ``point -> components``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import linalg

Field = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]
Valence = tuple[int, int]

DEFAULT_STEP = 1e-5
DEFAULT_CURVATURE_STEP = 1e-4
SYMMETRY_TOLERANCE = 1e-8
TIE_TOLERANCE = 1e-9


class GeometryError(ValueError):
    """Base class for domain errors raised by the workbench."""


class FrameModelError(GeometryError):
    """Raised when model data violates a structural invariant."""


class ChartDomainError(GeometryError):
    """Raised when a point falls outside the chart domain."""


class SingularMetricError(GeometryError):
    """Raised when the metric is degenerate at an evaluation point."""


class CurvatureUnavailableError(GeometryError):
    """Raised when an operation needs brackets or derivatives the model lacks."""


class SymmetryError(GeometryError):
    """Raised when an operator is not symmetric with respect to the metric."""


def evaluate(field: Field, p: Optional[np.ndarray] = None) -> np.ndarray:
    if callable(field):
        return np.asarray(field(p), dtype=float)
    return np.asarray(field, dtype=float)


def _check_metric(g: np.ndarray, riemannian: bool) -> None:
    scale = max(1.0, float(np.max(np.abs(g))))
    if np.max(np.abs(g - g.T)) > 1e-12 * scale:
        raise FrameModelError("metric components are not symmetric")
    values = np.linalg.eigvalsh(0.5 * (g + g.T))
    if np.min(np.abs(values)) < 1e-12 * scale:
        raise SingularMetricError("metric is degenerate")
    if riemannian and np.min(values) <= 0:
        raise FrameModelError("metric is not positive definite")


def _inverse(g: np.ndarray) -> np.ndarray:
    singular = linalg.svdvals(g)
    if singular.min() < 1e-12 * max(1.0, singular.max()):
        raise SingularMetricError("metric is degenerate, cannot raise indices")
    return linalg.inv(g)


@dataclass(frozen=True, eq=False)
class HomogeneousModel:
    """Left-invariant frame with [E_i, E_j] = sum_k c[k, i, j] E_k."""

    structure_constants: np.ndarray
    metric_components: np.ndarray
    riemannian: bool = True
    jacobi_tolerance: float = 1e-10

    def __post_init__(self):
        c = np.asarray(self.structure_constants, dtype=float)
        g = np.asarray(self.metric_components, dtype=float)
        object.__setattr__(self, "structure_constants", c)
        object.__setattr__(self, "metric_components", g)
        m = g.shape[0]
        if g.shape != (m, m) or c.shape != (m, m, m):
            raise FrameModelError(
                f"bracket table shape {c.shape} does not match metric shape {g.shape}"
            )
        if np.max(np.abs(c + c.transpose(0, 2, 1))) > 1e-12:
            raise FrameModelError("bracket table is not antisymmetric")
        jacobi = self.jacobi_residual()
        if jacobi > self.jacobi_tolerance * max(1.0, float(np.max(np.abs(c))) ** 2):
            raise FrameModelError(f"Jacobi identity residual {jacobi:.3e}")
        _check_metric(g, self.riemannian)

    @property
    def dimension(self) -> int:
        return self.metric_components.shape[0]

    def metric(self, p: Optional[np.ndarray] = None) -> np.ndarray:
        return self.metric_components

    def ad(self, x: np.ndarray) -> np.ndarray:
        """Matrix of Y -> [X, Y] for the left-invariant field X."""
        return np.einsum("kij,i->kj", self.structure_constants, x)

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("kij,i,j->k", self.structure_constants, x, y)

    def jacobi_residual(self) -> float:
        c = self.structure_constants
        cyclic = (
            np.einsum("lij,mlk->mijk", c, c)
            + np.einsum("ljk,mli->mijk", c, c)
            + np.einsum("lki,mlj->mijk", c, c)
        )
        return float(np.max(np.abs(cyclic))) if cyclic.size else 0.0

    def with_metric(self, metric_components: np.ndarray) -> "HomogeneousModel":
        return HomogeneousModel(
            self.structure_constants,
            metric_components,
            riemannian=self.riemannian,
            jacobi_tolerance=self.jacobi_tolerance,
        )


@dataclass(frozen=True, eq=False)
class ChartModel:
    """Coordinate frame of a single chart; metric_field(p) gives g_{mu nu}(p)."""

    metric_field: Callable[[np.ndarray], np.ndarray]
    dimension: int
    step: float = DEFAULT_STEP
    curvature_step: float = DEFAULT_CURVATURE_STEP
    domain: Optional[Callable[[np.ndarray], bool]] = None
    sample_center: Optional[np.ndarray] = None
    sample_radius: float = 1.0
    riemannian: bool = True

    def require(self, p) -> np.ndarray:
        if p is None:
            raise ChartDomainError("chart-mode evaluation needs a point")
        point = np.asarray(p, dtype=float)
        if point.shape != (self.dimension,):
            raise ChartDomainError(
                f"point of shape {point.shape} in a {self.dimension}-dimensional chart"
            )
        if self.domain is not None and not self.domain(point):
            raise ChartDomainError(f"point {point.tolist()} outside chart domain")
        return point

    def metric(self, p: Optional[np.ndarray] = None) -> np.ndarray:
        g = np.asarray(self.metric_field(self.require(p)), dtype=float)
        _check_metric(g, self.riemannian)
        return g

    def with_metric(self, metric_field: Callable[[np.ndarray], np.ndarray]) -> "ChartModel":
        return ChartModel(
            metric_field,
            self.dimension,
            step=self.step,
            curvature_step=self.curvature_step,
            domain=self.domain,
            sample_center=self.sample_center,
            sample_radius=self.sample_radius,
            riemannian=self.riemannian,
        )


@dataclass(frozen=True, eq=False)
class TangentSpaceModel:
    """A single inner-product space; carries no brackets and no curvature."""

    metric_components: np.ndarray
    riemannian: bool = True

    def __post_init__(self):
        g = np.asarray(self.metric_components, dtype=float)
        object.__setattr__(self, "metric_components", g)
        _check_metric(g, self.riemannian)

    @property
    def dimension(self) -> int:
        return self.metric_components.shape[0]

    def metric(self, p: Optional[np.ndarray] = None) -> np.ndarray:
        return self.metric_components

    def with_metric(self, metric_components: np.ndarray) -> "TangentSpaceModel":
        return TangentSpaceModel(metric_components, riemannian=self.riemannian)


FrameModel = Union[HomogeneousModel, ChartModel, TangentSpaceModel]


@dataclass(frozen=True, eq=False)
class PointTensor:
    valence: Valence
    components: np.ndarray
    base_point: Optional[np.ndarray] = None

    def __post_init__(self):
        components = np.asarray(self.components, dtype=float)
        object.__setattr__(self, "components", components)
        rank = sum(self.valence)
        if components.ndim != rank or len(set(components.shape)) > 1:
            raise FrameModelError(
                f"components of shape {components.shape} do not fit valence {self.valence}"
            )


def sample_points(model: FrameModel, count: int, seed: int = 0) -> list[np.ndarray]:
    """Deterministic sample points; chart models draw inside their sampling box."""
    rng = np.random.default_rng(seed)
    m = model.dimension
    if not isinstance(model, ChartModel):
        return [row for row in rng.standard_normal((count, m))]
    center = np.zeros(m) if model.sample_center is None else np.asarray(model.sample_center)
    points = []
    attempts = 0
    while len(points) < count:
        attempts += 1
        if attempts > 100 * count:
            raise ChartDomainError("could not draw sample points inside the chart domain")
        candidate = center + model.sample_radius * rng.uniform(-1.0, 1.0, m)
        if model.domain is None or model.domain(candidate):
            points.append(candidate)
    return points


def _require_differentiable(model: FrameModel, operation: str) -> None:
    if isinstance(model, TangentSpaceModel):
        raise CurvatureUnavailableError(
            f"{operation} needs a frame or chart model; pointwise structures carry no brackets"
        )


def directional_derivative(model: ChartModel, field: Field, p: np.ndarray, direction, step: float):
    forward = model.require(p + step * direction)
    backward = model.require(p - step * direction)
    return (evaluate(field, forward) - evaluate(field, backward)) / (2.0 * step)


def jacobian(model: ChartModel, field: Field, p: np.ndarray, step: float) -> np.ndarray:
    """Array whose last axis is the coordinate derivative index."""
    axes = np.eye(model.dimension)
    return np.stack(
        [directional_derivative(model, field, p, axes[nu], step) for nu in range(model.dimension)],
        axis=-1,
    )


def lie_bracket(
    model: FrameModel, X: Field, Y: Field, p: Optional[np.ndarray] = None, step: Optional[float] = None
) -> np.ndarray:
    _require_differentiable(model, "lie_bracket")
    if isinstance(model, HomogeneousModel):
        return model.bracket(evaluate(X, p), evaluate(Y, p))
    p = model.require(p)
    h = step or model.step
    x = evaluate(X, p)
    y = evaluate(Y, p)
    return jacobian(model, Y, p, h) @ x - jacobian(model, X, p, h) @ y


def _homogeneous_christoffel(model: HomogeneousModel) -> np.ndarray:
    c = model.structure_constants
    g = model.metric_components
    lowered = np.einsum("lij,lk->ijk", c, g)
    # 2 g(nabla_i E_j, E_k) = c_ijk - c_ikj - c_jki
    koszul = lowered - np.einsum("ikj->ijk", lowered) - np.einsum("jki->ijk", lowered)
    return np.einsum("kl,ijl->kij", _inverse(g), 0.5 * koszul)


def _chart_christoffel(model: ChartModel, p: np.ndarray, step: Optional[float] = None) -> np.ndarray:
    g = model.metric(p)
    dg = jacobian(model, model.metric_field, p, step or model.step)
    lowered = 0.5 * (np.einsum("lji->lij", dg) + dg - np.einsum("ijl->lij", dg))
    return np.einsum("kl,lij->kij", _inverse(g), lowered)


@dataclass(frozen=True, eq=False)
class Connection:
    """Levi-Civita connection; coefficients[k, i, j] is the E_k part of nabla_{E_i} E_j."""

    model: FrameModel
    constant_coefficients: Optional[np.ndarray] = None

    def coefficients(self, p: Optional[np.ndarray] = None) -> np.ndarray:
        if self.constant_coefficients is not None:
            return self.constant_coefficients
        return _chart_christoffel(self.model, self.model.require(p))

    def covariant_derivative(self, X: Field, Y: Field, p: Optional[np.ndarray] = None) -> np.ndarray:
        gamma = self.coefficients(p)
        x = evaluate(X, p)
        y = evaluate(Y, p)
        algebraic = np.einsum("kij,i,j->k", gamma, x, y)
        if isinstance(self.model, HomogeneousModel):
            return algebraic
        return directional_derivative(self.model, Y, self.model.require(p), x, self.model.step) + algebraic

    def torsion_residual(self, p: Optional[np.ndarray] = None) -> float:
        gamma = self.coefficients(p)
        torsion = gamma - gamma.transpose(0, 2, 1)
        if isinstance(self.model, HomogeneousModel):
            torsion = torsion - self.model.structure_constants
        return float(np.max(np.abs(torsion)))

    def metric_residual(self, p: Optional[np.ndarray] = None) -> float:
        gamma = self.coefficients(p)
        g = self.model.metric(p)
        lowered = np.einsum("kij,kl->ijl", gamma, g)
        compatibility = lowered + lowered.transpose(0, 2, 1)
        if isinstance(self.model, ChartModel):
            dg = jacobian(self.model, self.model.metric_field, self.model.require(p), self.model.step)
            compatibility = compatibility - np.einsum("jli->ijl", dg)
        return float(np.max(np.abs(compatibility)))


def levi_civita(model: FrameModel) -> Connection:
    _require_differentiable(model, "levi_civita")
    if isinstance(model, HomogeneousModel):
        return Connection(model, _homogeneous_christoffel(model))
    return Connection(model)


def curvature_tensor(
    model: FrameModel, p: Optional[np.ndarray] = None, connection: Optional[Connection] = None
) -> np.ndarray:
    """R[l, k, i, j] is the E_l component of R(E_i, E_j) E_k."""
    _require_differentiable(model, "curvature")
    connection = connection or levi_civita(model)
    m = model.dimension
    if isinstance(model, HomogeneousModel):
        gamma = connection.coefficients()
        c = model.structure_constants
        # nabla_{E_i} acting on frame-constant fields
        nabla = np.transpose(gamma, (1, 0, 2))
        R = np.zeros((m, m, m, m))
        for i in range(m):
            for j in range(m):
                R[:, :, i, j] = (
                    nabla[i] @ nabla[j]
                    - nabla[j] @ nabla[i]
                    - np.einsum("n,nkl->kl", c[:, i, j], nabla)
                )
        return R
    p = model.require(p)
    gamma = _chart_christoffel(model, p)
    dgamma = jacobian(model, lambda q: _chart_christoffel(model, q), p, model.curvature_step)
    return (
        np.einsum("rnsm->rsmn", dgamma)
        - np.einsum("rmsn->rsmn", dgamma)
        + np.einsum("rml,lns->rsmn", gamma, gamma)
        - np.einsum("rnl,lms->rsmn", gamma, gamma)
    )


def riemann_curvature(
    model: FrameModel,
    X: Field,
    Y: Field,
    Z: Field,
    p: Optional[np.ndarray] = None,
    curvature: Optional[np.ndarray] = None,
) -> np.ndarray:
    R = curvature if curvature is not None else curvature_tensor(model, p)
    return np.einsum("lkij,k,i,j->l", R, evaluate(Z, p), evaluate(X, p), evaluate(Y, p))


def antisymmetry_residual(curvature: np.ndarray) -> float:
    return float(np.max(np.abs(curvature + curvature.transpose(0, 1, 3, 2))))


def bianchi_residual(curvature: np.ndarray) -> float:
    cyclic = (
        curvature
        + np.einsum("lijk->lkij", curvature)
        + np.einsum("ljki->lkij", curvature)
    )
    return float(np.max(np.abs(cyclic)))


def _lie_algebraic(ad: np.ndarray, t: np.ndarray, valence: Valence) -> np.ndarray:
    if valence == (1, 0):
        return ad @ t
    if valence == (0, 1):
        return -ad.T @ t
    if valence == (1, 1):
        return ad @ t - t @ ad
    if valence == (0, 2):
        return -(ad.T @ t + t @ ad)
    raise FrameModelError(f"unsupported valence {valence}")


def lie_derivative(
    model: FrameModel,
    direction: Field,
    tensor: Field,
    p: Optional[np.ndarray] = None,
    valence: Valence = (1, 1),
    step: Optional[float] = None,
) -> PointTensor:
    """Lie derivative of a (1,0), (0,1), (1,1) or (0,2) field along ``direction``."""
    _require_differentiable(model, "lie_derivative")
    if isinstance(model, HomogeneousModel):
        ad = model.ad(evaluate(direction, p))
        return PointTensor(valence, _lie_algebraic(ad, evaluate(tensor, p), valence), p)

    p = model.require(p)
    h = step or model.step
    x = evaluate(direction, p)
    t = evaluate(tensor, p)
    dx = jacobian(model, direction, p, h)
    along = directional_derivative(model, tensor, p, x, h)
    if valence == (1, 0):
        components = along - dx @ t
    elif valence == (0, 1):
        components = along + dx.T @ t
    elif valence == (1, 1):
        components = along - dx @ t + t @ dx
    elif valence == (0, 2):
        components = along + dx.T @ t + t @ dx
    else:
        raise FrameModelError(f"unsupported valence {valence}")
    return PointTensor(valence, components, p)


def lie_derivative_by_flow(
    model: FrameModel,
    direction: Field,
    tensor: Field,
    valence: Valence = (1, 1),
    step: float = 1e-3,
    p: Optional[np.ndarray] = None,
) -> PointTensor:
    """Central difference of the pull-back along the flow of a left-invariant field.

    The flow of X is right translation by exp(tX); on left-invariant tensors its
    push-forward acts as exp(-t ad_X).
    """
    if not isinstance(model, HomogeneousModel):
        raise FrameModelError("flow transport is only available for homogeneous models")
    ad = model.ad(evaluate(direction, p))
    t = evaluate(tensor, p)

    def pulled(s: float) -> np.ndarray:
        forward = linalg.expm(s * ad)
        backward = linalg.expm(-s * ad)
        if valence == (1, 0):
            return forward @ t
        if valence == (0, 1):
            return backward.T @ t
        if valence == (1, 1):
            return forward @ t @ backward
        if valence == (0, 2):
            return backward.T @ t @ backward
        raise FrameModelError(f"unsupported valence {valence}")

    return PointTensor(valence, (pulled(step) - pulled(-step)) / (2.0 * step), p)


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues sorted descending; columns of ``vectors`` are metric-orthonormal."""

    values: np.ndarray
    vectors: np.ndarray

    def eigenspace(self, value: float, tolerance: float = 1e-6) -> np.ndarray:
        mask = np.abs(self.values - value) <= tolerance
        return self.vectors[:, mask]


def _positive_first(v: np.ndarray) -> np.ndarray:
    for component in v:
        if abs(component) > 1e-12:
            return v if component > 0 else -v
    return v


def _orient_cluster(vectors: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Canonical basis of span(vectors): Gram-Schmidt of projected frame vectors."""
    k = vectors.shape[1]
    projector = vectors @ vectors.T @ metric
    basis: list[np.ndarray] = []
    for axis in range(metric.shape[0]):
        candidate = projector[:, axis].copy()
        for b in basis:
            candidate -= (b @ metric @ candidate) * b
        norm = np.sqrt(max(candidate @ metric @ candidate, 0.0))
        if norm > 1e-8:
            basis.append(candidate / norm)
        if len(basis) == k:
            break
    return np.column_stack([_positive_first(b) for b in basis])


def sym_eigen(operator: np.ndarray, metric: np.ndarray) -> EigenSystem:
    a = np.asarray(operator, dtype=float)
    g = np.asarray(metric, dtype=float)
    lowered = g @ a
    scale = max(1.0, float(np.max(np.abs(lowered))))
    residual = float(np.max(np.abs(lowered - lowered.T)))
    if residual > SYMMETRY_TOLERANCE * scale:
        raise SymmetryError(f"operator symmetry residual {residual:.3e} exceeds tolerance")
    try:
        linalg.cholesky(g)
    except linalg.LinAlgError as e:
        raise FrameModelError("metric is not positive definite") from e

    values, vectors = linalg.eigh(0.5 * (lowered + lowered.T), g)
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]

    start = 0
    while start < len(values):
        end = start + 1
        while end < len(values) and abs(values[end] - values[start]) <= TIE_TOLERANCE * scale:
            end += 1
        vectors[:, start:end] = _orient_cluster(vectors[:, start:end], g)
        start = end
    return EigenSystem(values, vectors)
