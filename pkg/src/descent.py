"""Riemannian regime |I| > 1: error tensors, the canonical base metric and its Sasakian lift.

Base objects live upstairs as horizontal tensors on Ker(eta). Every operator is
assembled from h through the spectral projectors

    P_plus  = (h^2 / lam^2 + h / lam) / 2     onto D_h(lam)
    P_minus = (h^2 / lam^2 - h / lam) / 2     onto D_h(-lam)

so anything built here commutes with h up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.contact import (
    SASAKIAN_THRESHOLD,
    ContactMetricStructure,
    HorizontalDomainError,
    HTensor,
    SasakianDegenerateError,
    compute_h,
    d_eta,
    eigendistributions,
    horizontal_projector,
    k_contact_defect,
    kernel_basis,
    sample_tangent_pairs,
)
from src.nullity import (
    INDEX_GUARD,
    NullityFit,
    NullityRejectedError,
    nullity_residual,
)
from src.report import Check, ResidualReport
from src.tensors import (
    ChartModel,
    Field,
    GeometryError,
    TangentSpaceModel,
    Valence,
    directional_derivative,
    evaluate,
    lie_derivative,
)


class InfeasibleIndexError(GeometryError):
    """Raised when the Boeckx index lies outside the regime an operation needs."""


class NonProjectableError(GeometryError):
    """Raised when a horizontal tensor is not invariant along the Reeb flow."""


def _require_riemannian_index(index: float) -> None:
    if not np.isfinite(index) or abs(index) <= 1.0 + INDEX_GUARD:
        raise InfeasibleIndexError(
            f"|I_M| > 1 required for a Riemannian base, got I_M = {index:.6g}"
        )


def _require_horizontal(S: ContactMetricStructure, v: np.ndarray, p=None) -> None:
    v = np.asarray(v, dtype=float)
    if abs(S.eta_at(p) @ v) > 1e-9 * max(1.0, float(np.linalg.norm(v))):
        raise HorizontalDomainError("tensor is defined on Ker(eta) only; vector has a xi-component")


def riemannian_eigenvalues(index: float, scale: float) -> tuple[float, float]:
    """Admissible (lam_pos, lam_neg): the line-hyperbola intersection with both values below 1."""
    _require_riemannian_index(index)
    if not scale > 0:
        raise GeometryError(f"scale e^(2f) must be positive, got {scale!r}")
    r = np.sqrt((index + 1.0) / (index - 1.0))
    return float(1.0 - r * scale), float(1.0 - scale / r)


@dataclass(frozen=True)
class IntersectionCandidate:
    lam_pos: float
    lam_neg: float

    @property
    def admissible(self) -> bool:
        return self.lam_pos < 1.0 and self.lam_neg < 1.0


def riemannian_intersection_points(index: float, scale: float) -> tuple[IntersectionCandidate, IntersectionCandidate]:
    lam_pos, lam_neg = riemannian_eigenvalues(index, scale)
    return (
        IntersectionCandidate(lam_pos, lam_neg),
        IntersectionCandidate(2.0 - lam_pos, 2.0 - lam_neg),
    )


def line_residual(index: float, lam_pos: float, lam_neg: float) -> float:
    return abs((index - 1.0) * lam_pos - (1.0 + index) * lam_neg + 2.0)


def metric_factors(index: float) -> tuple[float, float]:
    _require_riemannian_index(index)
    c = abs(index) / np.sqrt(index * index - 1.0)
    return float(c * (1.0 + 1.0 / index)), float(c * (1.0 - 1.0 / index))


def _spectral_projectors(h: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray]:
    if lam < SASAKIAN_THRESHOLD:
        raise SasakianDegenerateError(f"Sasakian degenerate: lambda = {lam:.3e}")
    square = h @ h / (lam * lam)
    return 0.5 * (square + h / lam), 0.5 * (square - h / lam)


def _require_accepted(fit: NullityFit) -> None:
    if not fit.accepted:
        raise NullityRejectedError(
            f"structure not accepted as (κ,μ): residual {fit.residual:.3e} ≥ {fit.acceptance:g}"
        )
    if fit.sasakian:
        raise SasakianDegenerateError("Sasakian degenerate: κ = 1 leaves no eigendistributions")


@dataclass(frozen=True, eq=False)
class ErrorTensorSolution:
    index: float
    scale: float
    lam_pos: float
    lam_neg: float
    T: np.ndarray
    eta: np.ndarray
    point: Optional[np.ndarray] = None

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if abs(self.eta @ v) > 1e-9 * max(1.0, float(np.linalg.norm(v))):
            raise HorizontalDomainError("T is defined on Ker(eta) only; vector has a xi-component")
        return self.T @ v

    @property
    def line_residual(self) -> float:
        return line_residual(self.index, self.lam_pos, self.lam_neg)

    @property
    def hyperbola_residual(self) -> float:
        return abs((1.0 - self.lam_pos) * (1.0 - self.lam_neg) - self.scale**2)


def _error_tensor_matrix(h: np.ndarray, lam: float, lam_pos: float, lam_neg: float) -> np.ndarray:
    plus, minus = _spectral_projectors(h, lam)
    return lam_pos * plus + lam_neg * minus


def build_error_tensor(
    S: ContactMetricStructure,
    fit: NullityFit,
    scale: float = 1.0,
    p=None,
    h: Optional[HTensor] = None,
) -> ErrorTensorSolution:
    """T = lam_pos on D_h(lam) and lam_neg on D_h(-lam), extended by 0 along xi."""
    _require_accepted(fit)
    index = fit.index
    lam_pos, lam_neg = riemannian_eigenvalues(index, scale)
    h = h or compute_h(S, p)
    T = _error_tensor_matrix(h.h, h.lam, lam_pos, lam_neg)
    return ErrorTensorSolution(index, float(scale), lam_pos, lam_neg, T, S.eta_at(p), p)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A conformal exponent f with an optional exact Reeb derivative xi(f).

    Homogeneous and pointwise models have no coordinates to differentiate in, so
    there ``xi_derivative`` is required unless the field is constant.
    """

    value: Callable[[Optional[np.ndarray]], float]
    xi_derivative: Optional[Callable[[Optional[np.ndarray]], float]] = None

    @classmethod
    def constant(cls, f: float) -> "ScalarField":
        return cls(lambda p: f, lambda p: 0.0)

    def reeb_derivative(self, S: ContactMetricStructure, p=None) -> float:
        if self.xi_derivative is not None:
            return float(self.xi_derivative(p))
        if not isinstance(S.model, ChartModel):
            raise GeometryError("xi(f) must be supplied for a non-constant f off a chart")
        point = S.model.require(p)
        return float(
            directional_derivative(S.model, self.value, point, S.xi_at(point), S.model.step)
        )


def _error_tensor_at(S: ContactMetricStructure, index: float, f: ScalarField, p) -> np.ndarray:
    h = compute_h(S, p)
    lam_pos, lam_neg = riemannian_eigenvalues(index, float(np.exp(2.0 * f.value(p))))
    return _error_tensor_matrix(h.h, h.lam, lam_pos, lam_neg)


def _lie_xi_error_tensor(S: ContactMetricStructure, index: float, f: ScalarField, p) -> np.ndarray:
    model = S.model
    if isinstance(model, ChartModel):
        field = lambda q: _error_tensor_at(S, index, f, q)  # noqa: E731
        return lie_derivative(model, S.xi, field, p, (1, 1), step=model.curvature_step).components

    # frame-constant h: the flow acts algebraically and the scale moves through f only
    h = compute_h(S, p)
    scale = float(np.exp(2.0 * f.value(p)))
    r = np.sqrt((index + 1.0) / (index - 1.0))
    plus, minus = _spectral_projectors(h.h, h.lam)
    along_scale = -2.0 * scale * f.reeb_derivative(S, p) * (r * plus + minus / r)
    T = _error_tensor_at(S, index, f, p)
    return lie_derivative(model, S.xi, T, p, (1, 1)).components + along_scale


def error_tensor_report(
    S: ContactMetricStructure,
    sol: ErrorTensorSolution,
    f_field: Optional[ScalarField] = None,
    points=(None,),
    tolerance: float = 1e-6,
    algebraic_tolerance: float = 1e-10,
) -> ResidualReport:
    """Residuals of L_xi T = 2 phi h T - 2 phi h - 2 xi(f)(I - T), hT = Th, and the curve equations.

    The Lie-derivative row rebuilds T at every point with scale e^{2f(p)}; the
    remaining rows read ``sol`` as given.
    """
    f = f_field or ScalarField.constant(0.5 * float(np.log(sol.scale)))
    rows = []
    if not S.is_pointwise:
        worst = 0.0
        for p in points:
            lie_T = _lie_xi_error_tensor(S, sol.index, f, p)
            h = compute_h(S, p).h
            phi = S.phi_at(p)
            T = _error_tensor_at(S, sol.index, f, p)
            rhs = (
                2.0 * phi @ h @ T
                - 2.0 * phi @ h
                - 2.0 * f.reeb_derivative(S, p) * (np.eye(S.dimension) - T)
            )
            worst = max(worst, float(np.max(np.abs((lie_T - rhs) @ kernel_basis(S, p)))))
        rows.append(Check("lie_xi_T", worst, tolerance))

    h = compute_h(S, sol.point).h
    G = S.metric(sol.point)
    rows.extend(
        [
            Check("h_T_commute", float(np.max(np.abs(h @ sol.T - sol.T @ h))), algebraic_tolerance),
            Check("T_symmetric", float(np.max(np.abs(G @ sol.T - (G @ sol.T).T))), algebraic_tolerance),
            Check("eigenvalues_below_one", max(sol.lam_pos, sol.lam_neg), 1.0),
            Check("line", sol.line_residual, algebraic_tolerance),
            Check("hyperbola", sol.hyperbola_residual, algebraic_tolerance),
        ]
    )
    return ResidualReport(tuple(rows))


@dataclass(frozen=True, eq=False)
class ProjectableHorizontalTensor:
    """A base-manifold tensor represented upstairs on Ker(eta)."""

    structure: ContactMetricStructure
    valence: Valence
    field: Field

    def at(self, p=None) -> np.ndarray:
        return evaluate(self.field, p)

    def apply(self, v: np.ndarray, p=None) -> np.ndarray:
        if self.valence != (1, 1):
            raise GeometryError("only (1,1) tensors act on vectors")
        _require_horizontal(self.structure, v, p)
        return self.at(p) @ np.asarray(v, dtype=float)

    def lie_xi(self, p=None) -> np.ndarray:
        model = self.structure.model
        if isinstance(model, TangentSpaceModel):
            raise GeometryError("pointwise structures carry no Reeb flow")
        step = model.curvature_step if isinstance(model, ChartModel) else None
        return lie_derivative(model, self.structure.xi, self.field, p, self.valence, step=step).components

    def projectability_residual(self, points=(None,)) -> float:
        return max(float(np.max(np.abs(self.lie_xi(p)))) for p in points)


def _constant_or_field(S: ContactMetricStructure, build: Callable) -> Field:
    if isinstance(S.model, ChartModel):
        return build
    return build(None)


def canonical_base_metric(S: ContactMetricStructure, fit: NullityFit) -> ProjectableHorizontalTensor:
    """g = c P^T (g~ + g~ h / (1 - mu/2)) P with c = |I| / sqrt(I^2 - 1) and P = I - xi (x) eta."""
    _require_accepted(fit)
    index = fit.index
    _require_riemannian_index(index)
    c = abs(index) / np.sqrt(index * index - 1.0)
    denominator = 1.0 - fit.mu / 2.0

    def build(p):
        G = S.metric(p)
        P = horizontal_projector(S, p)
        h = compute_h(S, p).h
        g = c * P.T @ (G + G @ h / denominator) @ P
        return 0.5 * (g + g.T)

    return ProjectableHorizontalTensor(S, (0, 2), _constant_or_field(S, build))


def base_complex_structure(S: ContactMetricStructure, fit: NullityFit) -> ProjectableHorizontalTensor:
    """J = A phi P_plus + A^{-1} phi P_minus with A = sqrt((I + 1) / (I - 1))."""
    _require_accepted(fit)
    index = fit.index
    _require_riemannian_index(index)
    A = np.sqrt((index + 1.0) / (index - 1.0))

    def build(p):
        h = compute_h(S, p)
        plus, minus = _spectral_projectors(h.h, h.lam)
        phi = S.phi_at(p)
        return A * phi @ plus + phi @ minus / A

    return ProjectableHorizontalTensor(S, (1, 1), _constant_or_field(S, build))


def metric_from_error_tensor(S: ContactMetricStructure, sol: ErrorTensorSolution) -> np.ndarray:
    """g(X, Y) = g~(X - TX, Y) / e^{2f} on horizontals."""
    P = horizontal_projector(S, sol.point)
    G = S.metric(sol.point)
    g = P.T @ G @ (np.eye(S.dimension) - sol.T) @ P / sol.scale
    return 0.5 * (g + g.T)


def commutation_orthogonality_report(
    S: ContactMetricStructure, T: np.ndarray, scale: float, p=None, tolerance: float = 1e-10
) -> ResidualReport:
    """hT - Th and g_T(D_h(lam), D_h(-lam)) for g_T = g~((I - T)., .) / scale; they vanish together."""
    h = compute_h(S, p).h
    dist = eigendistributions(S, p, h)
    G = S.metric(p)
    g_T = G @ (np.eye(S.dimension) - T) / scale
    return ResidualReport(
        (
            Check("h_T_commute", float(np.max(np.abs(h @ T - T @ h))), tolerance),
            Check(
                "eigendistribution_orthogonality",
                float(np.max(np.abs(dist.positive.T @ g_T @ dist.negative))),
                tolerance,
            ),
        )
    )


@dataclass(frozen=True)
class ConformalVerdict:
    forced_factor: float
    f: float
    defect: float
    tolerance: float

    @property
    def feasible(self) -> bool:
        return self.defect < self.tolerance


def conformal_feasibility(
    S: ContactMetricStructure, points, tolerance: float = 1e-8
) -> ConformalVerdict:
    """A conformal submersion forces e^{4f} = 1 and exists exactly when S is K-contact."""
    return ConformalVerdict(1.0, 0.0, k_contact_defect(S, points), tolerance)


def horizontal_metric(S: ContactMetricStructure) -> ProjectableHorizontalTensor:
    def build(p):
        P = horizontal_projector(S, p)
        return P.T @ S.metric(p) @ P

    return ProjectableHorizontalTensor(S, (0, 2), _constant_or_field(S, build))


def horizontal_phi(S: ContactMetricStructure) -> ProjectableHorizontalTensor:
    return ProjectableHorizontalTensor(S, (1, 1), S.phi)


def build_lifted_structure(
    S: ContactMetricStructure,
    g: ProjectableHorizontalTensor,
    J: ProjectableHorizontalTensor,
    points=None,
    require_projectable: bool = True,
    tolerance: float = 1e-8,
) -> ContactMetricStructure:
    """(eta, xi, J, g + eta (x) eta); inputs must be Reeb-invariant unless told otherwise."""
    if require_projectable and not S.is_pointwise:
        sample = points if points is not None else S.sample_points(8)
        for name, tensor in (("g", g), ("J", J)):
            residual = tensor.projectability_residual(sample)
            if residual > tolerance:
                raise NonProjectableError(
                    f"{name} is not projectable: |L_xi {name}| = {residual:.3e} > {tolerance:g}"
                )

    model = S.model
    if isinstance(model, ChartModel):

        def lifted_metric(p):
            eta = S.eta_at(p)
            return g.at(p) + np.outer(eta, eta)

        new_model = model.with_metric(lifted_metric)
    else:
        eta = S.eta_at()
        new_model = model.with_metric(g.at() + np.outer(eta, eta))

    pointwise = isinstance(model, TangentSpaceModel)
    return ContactMetricStructure(
        new_model,
        eta=S.eta,
        xi=S.xi,
        phi=J.field,
        h_components=np.zeros((S.dimension, S.dimension)) if pointwise else None,
        d_eta_components=S.d_eta_components,
        label=f"lift[{S.label}]",
    )


def sasakian_nullity_residual(S: ContactMetricStructure, count: int = 100, seed: int = 0, samples=None) -> float:
    """Max of |R(X,Y)xi - (eta(Y)X - eta(X)Y)| over g-orthonormal pairs."""
    pairs = samples if samples is not None else sample_tangent_pairs(S, count, seed)
    return nullity_residual(S, 1.0, 0.0, pairs)


def base_kahler_check(
    S: ContactMetricStructure,
    g: ProjectableHorizontalTensor,
    J: ProjectableHorizontalTensor,
    points=(None,),
    tolerance: float = 1e-10,
    projectability_tolerance: float = 1e-8,
) -> ResidualReport:
    def at(p) -> ResidualReport:
        K = kernel_basis(S, p)
        gp = g.at(p)
        Jp = J.at(p)
        rows = [
            Check("J_squared", float(np.max(np.abs(Jp @ Jp @ K + K))), tolerance),
            Check("g_J_invariant", float(np.max(np.abs(Jp.T @ gp @ Jp - gp))), tolerance),
            Check("omega_compatibility", float(np.max(np.abs(d_eta(S, p) - gp @ Jp))), tolerance),
            Check("g_positive", float(np.min(np.linalg.eigvalsh(K.T @ gp @ K))), 0.0, "min"),
        ]
        if not S.is_pointwise:
            rows.append(Check("g_projectable", float(np.max(np.abs(g.lie_xi(p)))), projectability_tolerance))
            rows.append(Check("J_projectable", float(np.max(np.abs(J.lie_xi(p)))), projectability_tolerance))
        return ResidualReport(tuple(rows))

    return ResidualReport.merge_all(at(p) for p in points)
