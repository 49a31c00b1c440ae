from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from src.contact import SASAKIAN_THRESHOLD, ContactMetricStructure, ContactStructureError
from src.tensors import (
    ChartModel,
    Field,
    GeometryError,
    HomogeneousModel,
    TangentSpaceModel,
    evaluate,
)

if TYPE_CHECKING:
    from src.config import ModelConfig


class HomothetyError(GeometryError):
    """Raised for an inadmissible D_a constant."""


@dataclass(frozen=True, eq=False)
class SyntheticPointStructure:
    n: int
    kappa: float
    mu: float
    lam: float
    structure: ContactMetricStructure


def milnor_structure_constants(lambda2: float, lambda3: float) -> np.ndarray:
    """[E2, E3] = 2 E1, [E3, E1] = lambda2 E2, [E1, E2] = lambda3 E3 (frame indices 0, 1, 2)."""
    c = np.zeros((3, 3, 3))
    for k, i, j, value in ((0, 1, 2, 2.0), (1, 2, 0, lambda2), (2, 0, 1, lambda3)):
        c[k, i, j] = value
        c[k, j, i] = -value
    return c


def build_milnor_model(lambda2: float = 0.0, lambda3: float = 0.0) -> ContactMetricStructure:
    model = HomogeneousModel(milnor_structure_constants(lambda2, lambda3), np.eye(3))
    phi = np.zeros((3, 3))
    phi[2, 1] = 1.0
    phi[1, 2] = -1.0
    return ContactMetricStructure(
        model,
        eta=np.array([1.0, 0.0, 0.0]),
        xi=np.array([1.0, 0.0, 0.0]),
        phi=phi,
        label=f"milnor({lambda2:g}, {lambda3:g})",
    )


def _heisenberg_eta(p: np.ndarray) -> np.ndarray:
    return np.array([-0.5 * p[1], 0.0, 0.5])


def _heisenberg_metric(p: np.ndarray) -> np.ndarray:
    eta = _heisenberg_eta(p)
    return np.outer(eta, eta) + 0.25 * np.diag([1.0, 1.0, 0.0])


def _heisenberg_phi(p: np.ndarray) -> np.ndarray:
    return np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, p[1], 0.0]])


def build_heisenberg_chart() -> ContactMetricStructure:
    """Standard Sasakian structure on R^3 in coordinates (x, y, z)."""
    model = ChartModel(_heisenberg_metric, 3)
    return ContactMetricStructure(
        model,
        eta=_heisenberg_eta,
        xi=np.array([0.0, 0.0, 2.0]),
        phi=_heisenberg_phi,
        label="heisenberg-chart",
    )


def synthetic_pointwise_structure(n: int, kappa: float, mu: float) -> SyntheticPointStructure:
    """Normal form on a phi-basis e_1..e_n, phi e_1..phi e_n, xi with h = diag(lam, -lam, 0)."""
    if n < 1:
        raise ContactStructureError(f"n must be at least 1, got {n}")
    if kappa > 1:
        raise ContactStructureError(f"κ ≤ 1 required, got κ = {kappa:g}")
    lam = float(np.sqrt(1.0 - kappa))
    if 0 < lam < SASAKIAN_THRESHOLD:
        raise ContactStructureError(
            f"κ = {kappa!r} is inside the Sasakian guard band; use κ = 1 for the control"
        )
    m = 2 * n + 1
    phi = np.zeros((m, m))
    for i in range(n):
        phi[n + i, i] = 1.0
        phi[i, n + i] = -1.0
    xi = np.zeros(m)
    xi[-1] = 1.0
    h = np.diag([lam] * n + [-lam] * n + [0.0])
    structure = ContactMetricStructure(
        TangentSpaceModel(np.eye(m)),
        eta=xi.copy(),
        xi=xi,
        phi=phi,
        h_components=h,
        d_eta_components=phi.copy(),
        label=f"synthetic(n={n}, κ={kappa:g}, μ={mu:g})",
    )
    return SyntheticPointStructure(n, float(kappa), float(mu), lam, structure)


def _scaled(field: Field, factor: float) -> Field:
    if callable(field):
        return lambda p: factor * evaluate(field, p)
    return factor * np.asarray(field, dtype=float)


def apply_d_homothety(S: ContactMetricStructure, a: float) -> ContactMetricStructure:
    """eta -> a eta, xi -> xi / a, phi -> phi, g -> a g + a(a - 1) eta (x) eta."""
    if a == 0:
        raise HomothetyError("homothety constant a must be nonzero")
    if a < 0 and S.model.riemannian:
        raise HomothetyError(f"a = {a:g} < 0 would make the metric indefinite")

    model = S.model
    if isinstance(model, ChartModel):

        def metric(p, base=model.metric_field, eta=S.eta):
            e = evaluate(eta, p)
            return a * np.asarray(base(p)) + a * (a - 1.0) * np.outer(e, e)

        new_model = model.with_metric(metric)
    else:
        eta = S.eta_at()
        new_model = model.with_metric(a * model.metric_components + a * (a - 1.0) * np.outer(eta, eta))

    return ContactMetricStructure(
        new_model,
        eta=_scaled(S.eta, a),
        xi=_scaled(S.xi, 1.0 / a),
        phi=S.phi,
        h_components=None if S.h_components is None else _scaled(S.h_components, 1.0 / a),
        d_eta_components=None if S.d_eta_components is None else _scaled(S.d_eta_components, a),
        label=f"D_{a:g}[{S.label}]",
    )


def build_from_config(config: "ModelConfig") -> tuple[ContactMetricStructure, SyntheticPointStructure | None]:
    """Structure named by a config; the synthetic record is returned alongside when present."""
    synthetic = None
    if config.kind == "milnor":
        structure = build_milnor_model(config.lambda2, config.lambda3)
    elif config.kind == "heisenberg":
        structure = build_heisenberg_chart()
    else:
        synthetic = synthetic_pointwise_structure(config.n, config.kappa, config.mu)
        structure = synthetic.structure
    if config.homothety is not None:
        structure = apply_d_homothety(structure, config.homothety)
    return structure, synthetic
