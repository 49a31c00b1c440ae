"""Contact metric structures (eta, xi, phi, g) and the tensor h = L_xi(phi) / 2."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from src.report import Check, ResidualReport
from src.tensors import (
    ChartModel,
    Field,
    FrameModel,
    GeometryError,
    HomogeneousModel,
    TangentSpaceModel,
    evaluate,
    jacobian,
    lie_derivative,
    sample_points,
    sym_eigen,
)

SASAKIAN_THRESHOLD = 1e-6
VOLUME_THRESHOLD = 1e-6


class ContactStructureError(GeometryError):
    """Raised for structure data that cannot be evaluated (bad seed, parity, missing dη)."""


class SasakianDegenerateError(GeometryError):
    """Raised when h vanishes and no eigendistributions exist."""


class HorizontalDomainError(GeometryError):
    """Raised when a horizontal-only tensor is applied to a vector with a ξ-component."""


@dataclass(frozen=True, eq=False)
class ContactMetricStructure:
    """Structure tensors as fields over a frame model; the metric is the model's.

    Pointwise structures on a ``TangentSpaceModel`` supply ``h_components`` and
    ``d_eta_components`` directly since nothing can be differentiated there.
    """

    model: FrameModel
    eta: Field
    xi: Field
    phi: Field
    h_components: Optional[Field] = None
    d_eta_components: Optional[Field] = None
    label: str = "structure"

    @property
    def dimension(self) -> int:
        return self.model.dimension

    @property
    def n(self) -> int:
        return (self.dimension - 1) // 2

    @property
    def is_pointwise(self) -> bool:
        return isinstance(self.model, TangentSpaceModel)

    @property
    def metric_field(self) -> Field:
        if isinstance(self.model, ChartModel):
            return self.model.metric_field
        return self.model.metric_components

    def metric(self, p=None) -> np.ndarray:
        return self.model.metric(p)

    def eta_at(self, p=None) -> np.ndarray:
        return evaluate(self.eta, p)

    def xi_at(self, p=None) -> np.ndarray:
        return evaluate(self.xi, p)

    def phi_at(self, p=None) -> np.ndarray:
        return evaluate(self.phi, p)

    def sample_points(self, count: int, seed: int = 0) -> list:
        return sample_points(self.model, count, seed)


@dataclass(frozen=True, eq=False)
class HTensor:
    h: np.ndarray
    lam: float
    point: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class PhiBasis:
    """Columns e_1..e_n, phi e_1..phi e_n of a g-orthonormal basis of Ker(eta)."""

    vectors: np.ndarray
    n: int

    @property
    def first_half(self) -> np.ndarray:
        return self.vectors[:, : self.n]

    @property
    def second_half(self) -> np.ndarray:
        return self.vectors[:, self.n :]


@dataclass(frozen=True, eq=False)
class Eigendistributions:
    lam: float
    positive: np.ndarray
    negative: np.ndarray

    @property
    def adapted_basis(self) -> PhiBasis:
        return PhiBasis(np.hstack([self.positive, self.negative]), self.positive.shape[1])


@dataclass(frozen=True, eq=False)
class TangentPair:
    point: Optional[np.ndarray]
    X: np.ndarray
    Y: np.ndarray


def d_eta(S: ContactMetricStructure, p=None) -> np.ndarray:
    """Matrix of d(eta) with d(eta)(X, Y) = (X eta(Y) - Y eta(X) - eta([X, Y])) / 2."""
    if S.d_eta_components is not None:
        return evaluate(S.d_eta_components, p)
    model = S.model
    if isinstance(model, HomogeneousModel):
        return -0.5 * np.einsum("kij,k->ij", model.structure_constants, S.eta_at(p))
    if isinstance(model, ChartModel):
        jac = jacobian(model, S.eta, model.require(p), model.step)
        return 0.5 * (jac.T - jac)
    raise ContactStructureError("pointwise structure needs explicit d(eta) components")


def horizontal_projector(S: ContactMetricStructure, p=None) -> np.ndarray:
    return np.eye(S.dimension) - np.outer(S.xi_at(p), S.eta_at(p))


def kernel_basis(S: ContactMetricStructure, p=None) -> np.ndarray:
    """g-orthonormal basis of Ker(eta_p), as columns."""
    raw = linalg.null_space(S.eta_at(p)[np.newaxis, :])
    gram = raw.T @ S.metric(p) @ raw
    lower = linalg.cholesky(0.5 * (gram + gram.T), lower=True)
    return raw @ linalg.inv(lower).T


def _axiom_report(S: ContactMetricStructure, p, tolerance: float) -> ResidualReport:
    G = S.metric(p)
    eta = S.eta_at(p)
    xi = S.xi_at(p)
    phi = S.phi_at(p)
    omega = d_eta(S, p)
    m = S.dimension

    reeb = max(abs(eta @ xi - 1.0), float(np.max(np.abs(omega @ xi))))
    phi_squared = np.max(np.abs(phi @ phi + np.eye(m) - np.outer(xi, eta)))
    compatibility = np.max(np.abs(G @ phi - omega))
    metric_dual = np.max(np.abs(G @ xi - eta))
    K = kernel_basis(S, p)
    volume = np.sqrt(abs(np.linalg.det(K.T @ omega @ K)))
    return ResidualReport(
        (
            Check("reeb", float(reeb), tolerance),
            Check("phi_squared", float(phi_squared), tolerance),
            Check("compatibility", float(compatibility), tolerance),
            Check("eta_metric_dual", float(metric_dual), tolerance),
            Check("contact_volume", float(volume), VOLUME_THRESHOLD, "min"),
        )
    )


def validate_contact_metric(
    S: ContactMetricStructure, points, tolerance: float = 1e-9
) -> ResidualReport:
    if S.dimension % 2 == 0:
        return ResidualReport((Check("dimension_parity", 1.0, 0.5),))
    return ResidualReport.merge_all(_axiom_report(S, p, tolerance) for p in points)


def compute_h(S: ContactMetricStructure, p=None) -> HTensor:
    if S.h_components is not None:
        h = evaluate(S.h_components, p)
    else:
        h = 0.5 * lie_derivative(S.model, S.xi, S.phi, p, (1, 1)).components
    lam = float(np.max(np.abs(np.linalg.eigvals(h)))) if h.size else 0.0
    return HTensor(h, lam, p)


def _h_at(S: ContactMetricStructure, p, h: Optional[Field]) -> np.ndarray:
    if h is None:
        return compute_h(S, p).h
    if isinstance(h, HTensor):
        return h.h
    return evaluate(h, p)


def lie_xi_metric(S: ContactMetricStructure, p=None) -> np.ndarray:
    """L_xi g as a (0,2) matrix; pointwise structures use L_xi g = 2 g(h., phi.)."""
    if S.is_pointwise:
        h = _h_at(S, p, None)
        return 2.0 * h.T @ S.metric(p) @ S.phi_at(p)
    return lie_derivative(S.model, S.xi, S.metric_field, p, (0, 2)).components


def contact_identity_report(
    S: ContactMetricStructure,
    points,
    h: Optional[Field] = None,
    kappa: Optional[float] = None,
    tolerance: float = 1e-7,
) -> ResidualReport:
    def at(p) -> ResidualReport:
        G = S.metric(p)
        phi = S.phi_at(p)
        hp = _h_at(S, p, h)
        rows = [
            Check("h_phi_anticommute", float(np.max(np.abs(hp @ phi + phi @ hp))), tolerance),
            Check("h_xi", float(np.max(np.abs(hp @ S.xi_at(p)))), tolerance),
            Check("h_symmetric", float(np.max(np.abs(G @ hp - (G @ hp).T))), tolerance),
        ]
        if not S.is_pointwise:
            lie_g = lie_derivative(S.model, S.xi, S.metric_field, p, (0, 2)).components
            rows.append(
                Check("lie_xi_metric", float(np.max(np.abs(lie_g - 2.0 * hp.T @ G @ phi))), tolerance)
            )
        if kappa is not None:
            rows.append(
                Check(
                    "h_squared",
                    float(np.max(np.abs(hp @ hp + (1.0 - kappa) * phi @ phi))),
                    tolerance,
                )
            )
        return ResidualReport(tuple(rows))

    return ResidualReport.merge_all(at(p) for p in points)


def phi_basis(S: ContactMetricStructure, p=None, seed: Optional[np.ndarray] = None) -> PhiBasis:
    m = S.dimension
    if m < 3 or m % 2 == 0:
        raise ContactStructureError(f"dimension {m} is not of the form 2n+1")
    n = (m - 1) // 2
    G = S.metric(p)
    eta = S.eta_at(p)
    phi = S.phi_at(p)
    P = horizontal_projector(S, p)

    candidates = []
    if seed is not None:
        seed = np.asarray(seed, dtype=float)
        if abs(eta @ seed) > 1e-9:
            raise ContactStructureError(f"seed is not in Ker(eta): eta(seed) = {eta @ seed:.3g}")
        if abs(np.sqrt(seed @ G @ seed) - 1.0) > 1e-9:
            raise ContactStructureError("seed is not a unit vector")
        candidates.append(seed)
    candidates.extend(P[:, k] for k in range(m))

    firsts: list[np.ndarray] = []
    spanned: list[np.ndarray] = []
    for candidate in candidates:
        v = P @ candidate
        for b in spanned:
            v = v - (b @ G @ v) * b
        norm = np.sqrt(max(v @ G @ v, 0.0))
        if norm < 1e-8:
            continue
        e = v / norm
        firsts.append(e)
        spanned.extend([e, phi @ e])
        if len(firsts) == n:
            break
    return PhiBasis(np.column_stack(firsts + [phi @ e for e in firsts]), n)


def eigendistributions(
    S: ContactMetricStructure, p=None, h: Optional[Field] = None, threshold: float = SASAKIAN_THRESHOLD
) -> Eigendistributions:
    """Bases of D_h(lam) and D_h(-lam); the negative basis is phi applied to the positive one."""
    hp = _h_at(S, p, h)
    lam = float(np.max(np.abs(np.linalg.eigvals(hp))))
    if lam < threshold:
        raise SasakianDegenerateError(f"Sasakian degenerate: lambda = {lam:.3e} below {threshold:g}")
    n = S.n
    system = sym_eigen(hp, S.metric(p))
    positive = system.vectors[:, :n]
    negative = S.phi_at(p) @ positive
    return Eigendistributions(float(np.mean(system.values[:n])), positive, negative)


def adapted_phi_basis(S: ContactMetricStructure, p=None, h: Optional[Field] = None) -> PhiBasis:
    return eigendistributions(S, p, h).adapted_basis


def legendrian_residual(S: ContactMetricStructure, p=None, h: Optional[Field] = None) -> float:
    dist = eigendistributions(S, p, h)
    omega = d_eta(S, p)
    return float(
        max(
            np.max(np.abs(dist.positive.T @ omega @ dist.positive)),
            np.max(np.abs(dist.negative.T @ omega @ dist.negative)),
        )
    )


def k_contact_defect(S: ContactMetricStructure, points) -> float:
    defect = 0.0
    for p in points:
        K = kernel_basis(S, p)
        defect = max(defect, float(np.linalg.norm(K.T @ lie_xi_metric(S, p) @ K, 2)))
    return defect


def sample_tangent_pairs(S: ContactMetricStructure, count: int, seed: int = 0) -> list[TangentPair]:
    """g-orthonormal pairs at deterministic points; both carry a xi-component."""
    rng = np.random.default_rng(seed + 1)
    pairs = []
    for p in S.sample_points(count, seed):
        G = S.metric(p)
        x = rng.standard_normal(S.dimension)
        x = x / np.sqrt(x @ G @ x)
        y = rng.standard_normal(S.dimension)
        y = y - (x @ G @ y) * x
        y = y / np.sqrt(y @ G @ y)
        pairs.append(TangentPair(p, x, y))
    return pairs
