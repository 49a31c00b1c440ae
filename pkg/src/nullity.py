from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from src.contact import (
    SASAKIAN_THRESHOLD,
    ContactMetricStructure,
    TangentPair,
    compute_h,
    sample_tangent_pairs,
)
from src.models import HomothetyError
from src.report import Check, ResidualReport
from src.tensors import (
    CurvatureUnavailableError,
    GeometryError,
    HomogeneousModel,
    curvature_tensor,
    lie_derivative,
)

NULLITY_ACCEPTANCE = 1e-5
# |I| within this distance of 1 is treated as the boundary case
INDEX_GUARD = 1e-6

REGIMES = ("riemannian", "para", "boundary", "sasakian")
RIEMANNIAN, PARA, BOUNDARY, SASAKIAN = REGIMES
# compared against 1 - κ, the scale on which a fit resolves κ
SASAKIAN_KAPPA_TOLERANCE = 1e-6


class IndexUndefinedError(GeometryError):
    """Raised for κ ≥ 1, where the Boeckx index is not defined."""


class InsufficientSamplesError(GeometryError):
    """Raised when the nullity design matrix does not determine (κ, μ)."""


class NullityRejectedError(GeometryError):
    """Raised when an operation needs an accepted (κ, μ) fit and did not get one."""


def boeckx_index(kappa: float, mu: float) -> float:
    if kappa >= 1:
        raise IndexUndefinedError(f"index undefined for κ = {kappa:g} ≥ 1 (Sasakian boundary)")
    return (1.0 - mu / 2.0) / np.sqrt(1.0 - kappa)


def d_homothety_constants(kappa: float, mu: float, a: float) -> tuple[float, float]:
    if a == 0:
        raise HomothetyError("homothety constant a must be nonzero")
    return (kappa + a * a - 1.0) / (a * a), (mu + 2.0 * a - 2.0) / a


@dataclass(frozen=True)
class NullityFit:
    kappa: float
    mu: Optional[float]
    residual: float
    acceptance: float = NULLITY_ACCEPTANCE
    samples: int = 0

    @classmethod
    def declared(cls, kappa: float, mu: float, acceptance: float = NULLITY_ACCEPTANCE) -> "NullityFit":
        """Constants known by construction (pointwise normal forms); nothing is fitted."""
        return cls(float(kappa), float(mu), 0.0, acceptance)

    @property
    def mu_indeterminate(self) -> bool:
        return self.mu is None

    @property
    def lam(self) -> float:
        return float(np.sqrt(max(1.0 - self.kappa, 0.0)))

    @property
    def sasakian(self) -> bool:
        """h vanishes: mu is indeterminate or kappa sits at 1 to fit precision."""
        return self.mu is None or 1.0 - self.kappa < SASAKIAN_KAPPA_TOLERANCE

    @property
    def index(self) -> float:
        if self.sasakian:
            return float("inf")
        return float(boeckx_index(self.kappa, self.mu))

    @property
    def accepted(self) -> bool:
        return self.residual < self.acceptance

    @property
    def regime(self) -> str:
        return classify_regime(self)

    def as_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "mu": "indeterminate" if self.mu is None else self.mu,
            "lambda": self.lam,
            "index": self.index,
            "residual": self.residual,
            "accepted": self.accepted,
        }


def classify_regime(fit: NullityFit) -> str:
    if fit.sasakian:
        return SASAKIAN
    index = abs(fit.index)
    if not np.isfinite(index):
        return BOUNDARY
    if index > 1.0 + INDEX_GUARD:
        return RIEMANNIAN
    if index < 1.0 - INDEX_GUARD:
        return PARA
    return BOUNDARY


@dataclass(frozen=True, eq=False)
class _NullityTerms:
    whitening: np.ndarray
    curvature: np.ndarray
    kappa_term: np.ndarray
    mu_term: np.ndarray
    lam: float


def _terms(S: ContactMetricStructure, pairs: list[TangentPair]) -> list[_NullityTerms]:
    if S.is_pointwise:
        raise CurvatureUnavailableError("pointwise structures carry no curvature to fit")
    constant = None
    if isinstance(S.model, HomogeneousModel):
        constant = (curvature_tensor(S.model), compute_h(S))
    terms = []
    for pair in pairs:
        R, h = constant or (curvature_tensor(S.model, pair.point), compute_h(S, pair.point))
        eta = S.eta_at(pair.point)
        xi = S.xi_at(pair.point)
        G = S.metric(pair.point)
        # R(X, Y) xi = kappa (eta(Y) X - eta(X) Y) + mu h(eta(Y) X - eta(X) Y)
        a = (eta @ pair.Y) * pair.X - (eta @ pair.X) * pair.Y
        terms.append(
            _NullityTerms(
                whitening=linalg.cholesky(0.5 * (G + G.T)),
                curvature=np.einsum("lkij,k,i,j->l", R, xi, pair.X, pair.Y),
                kappa_term=a,
                mu_term=h.h @ a,
                lam=h.lam,
            )
        )
    return terms


def _max_defect(terms: list[_NullityTerms], kappa: float, mu: float) -> float:
    return max(
        float(np.linalg.norm(t.whitening @ (t.curvature - kappa * t.kappa_term - mu * t.mu_term)))
        for t in terms
    )


def fit_nullity(
    S: ContactMetricStructure,
    samples: Optional[list[TangentPair]] = None,
    count: int = 100,
    seed: int = 0,
    acceptance: float = NULLITY_ACCEPTANCE,
    h_threshold: float = SASAKIAN_THRESHOLD,
) -> NullityFit:
    """Least-squares (κ, μ) for R(X,Y)ξ over tangent pairs, measured in the metric norm."""
    pairs = samples if samples is not None else sample_tangent_pairs(S, count, seed)
    if len(pairs) < 2:
        raise InsufficientSamplesError(f"need at least 2 tangent pairs, got {len(pairs)}")
    terms = _terms(S, pairs)
    fit_mu = max(t.lam for t in terms) >= h_threshold

    rows = []
    rhs = []
    for t in terms:
        columns = [t.whitening @ t.kappa_term]
        if fit_mu:
            columns.append(t.whitening @ t.mu_term)
        rows.append(np.column_stack(columns))
        rhs.append(t.whitening @ t.curvature)
    design = np.vstack(rows)
    solution, _, rank, _ = linalg.lstsq(design, np.concatenate(rhs))
    if rank < design.shape[1]:
        raise InsufficientSamplesError("tangent pairs do not determine the nullity constants")

    kappa = float(solution[0])
    mu = float(solution[1]) if fit_mu else None
    residual = _max_defect(terms, kappa, mu or 0.0)
    return NullityFit(kappa, mu, residual, acceptance, len(pairs))


def nullity_residual(
    S: ContactMetricStructure,
    kappa: float,
    mu: Optional[float],
    samples: Optional[list[TangentPair]] = None,
    count: int = 100,
    seed: int = 0,
) -> float:
    pairs = samples if samples is not None else sample_tangent_pairs(S, count, seed)
    if len(pairs) < 1:
        raise InsufficientSamplesError("no tangent pairs to evaluate")
    return _max_defect(_terms(S, pairs), kappa, mu or 0.0)


def lie_xi_h_report(
    S: ContactMetricStructure,
    fit: NullityFit,
    points,
    tolerance: float = 1e-6,
    enforce_acceptance: bool = True,
) -> ResidualReport:
    """Residual of L_ξ h - (2 - μ) φh - 2(1 - κ) φ at each point."""
    if enforce_acceptance and not fit.accepted:
        raise NullityRejectedError(
            f"structure not accepted as (κ,μ): residual {fit.residual:.3e} ≥ {fit.acceptance:g}"
        )
    mu = fit.mu or 0.0
    model = S.model
    if isinstance(model, HomogeneousModel):
        h_field = compute_h(S).h
        step = None
    else:
        h_field = lambda q: compute_h(S, q).h  # noqa: E731
        step = getattr(model, "curvature_step", None)

    worst = 0.0
    for p in points:
        lie_h = lie_derivative(model, S.xi, h_field, p, (1, 1), step=step).components
        phi = S.phi_at(p)
        h = compute_h(S, p).h
        expected = (2.0 - mu) * phi @ h + 2.0 * (1.0 - fit.kappa) * phi
        worst = max(worst, float(np.max(np.abs(lie_h - expected))))
    return ResidualReport((Check("lie_xi_h", worst, tolerance),))
