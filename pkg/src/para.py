"""Semi-Riemannian regime |I| < 1: the 2^n almost para-Kähler base structures.

All solutions are built on an adapted phi-basis f_1..f_n (in D_h(lam)),
f_{n+1}..f_{2n} = phi f_1..phi f_n (in D_h(-lam)) and carried back to the
active frame. Index i (1-based) belongs to the subset S when bit i-1 of the
mask is set; S selects the intersection point p1 for that pair, its complement p2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from src.contact import ContactMetricStructure, PhiBasis, adapted_phi_basis, d_eta
from src.descent import InfeasibleIndexError, line_residual
from src.nullity import INDEX_GUARD
from src.report import Check, ResidualReport
from src.tensors import GeometryError

ZERO_THRESHOLD = 1e-10


class EigenvalueOneError(GeometryError):
    """Raised when an error tensor would have eigenvalue 1 (the base metric degenerates)."""


def _require_para_index(index: float) -> None:
    if not np.isfinite(index) or abs(index) >= 1.0 - INDEX_GUARD:
        raise InfeasibleIndexError(
            f"|I_M| < 1 required for a para-Kähler base, got I_M = {index:.6g}"
        )


def hyperbola_residual(lam_i: float, lam_ni: float) -> float:
    return abs((1.0 - lam_i) * (1.0 - lam_ni) + 1.0)


@dataclass(frozen=True)
class IntersectionPoints:
    index: float
    a0: float
    p1: tuple[float, float]
    p2: tuple[float, float]

    def max_residual(self) -> float:
        return max(
            max(line_residual(self.index, *point), hyperbola_residual(*point))
            for point in (self.p1, self.p2)
        )


def para_intersection_points(index: float) -> IntersectionPoints:
    _require_para_index(index)
    a0 = float(np.sqrt((1.0 + index) / (1.0 - index)))
    return IntersectionPoints(
        float(index),
        a0,
        (1.0 + a0, 1.0 - 1.0 / a0),
        (1.0 - a0, 1.0 + 1.0 / a0),
    )


def _to_frame_operator(B: np.ndarray, G: np.ndarray, block: np.ndarray) -> np.ndarray:
    return B @ block @ B.T @ G


def _to_frame_form(B: np.ndarray, G: np.ndarray, block: np.ndarray) -> np.ndarray:
    return G @ B @ block @ B.T @ G


@dataclass(frozen=True, eq=False)
class ParaSolution:
    """F_S and g_S in the adapted basis (``*_basis``) and in the active frame."""

    subset: tuple[int, ...]
    mask: int
    a0: float
    index: float
    eigenpairs: tuple[tuple[float, float], ...]
    F_basis: np.ndarray
    g_basis: np.ndarray
    omega_basis: np.ndarray
    F: np.ndarray
    g: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenpairs)

    def signature(self) -> tuple[int, int]:
        values = np.linalg.eigvalsh(self.g_basis)
        return int(np.sum(values > ZERO_THRESHOLD)), int(np.sum(values < -ZERO_THRESHOLD))


@dataclass(frozen=True, eq=False)
class ParaSolutionSet:
    index: float
    a0: float
    basis: PhiBasis
    solutions: tuple[ParaSolution, ...]

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    def __getitem__(self, mask: int) -> ParaSolution:
        return self.solutions[mask]

    @property
    def canonical(self) -> ParaSolution:
        return canonical_para_solution(self)


def _build_solution(
    mask: int, n: int, points: IntersectionPoints, B: np.ndarray, G: np.ndarray, omega: np.ndarray
) -> ParaSolution:
    a0 = points.a0
    F_basis = np.zeros((2 * n, 2 * n))
    g_basis = np.zeros((2 * n, 2 * n))
    pairs = []
    for i in range(n):
        sign = 1.0 if mask >> i & 1 else -1.0
        F_basis[n + i, i] = sign * a0
        F_basis[i, n + i] = sign / a0
        g_basis[i, i] = -sign * a0
        g_basis[n + i, n + i] = sign / a0
        pairs.append(points.p1 if sign > 0 else points.p2)
    return ParaSolution(
        subset=tuple(i + 1 for i in range(n) if mask >> i & 1),
        mask=mask,
        a0=a0,
        index=points.index,
        eigenpairs=tuple(pairs),
        F_basis=F_basis,
        g_basis=g_basis,
        omega_basis=omega,
        F=_to_frame_operator(B, G, F_basis),
        g=_to_frame_form(B, G, g_basis),
    )


def enumerate_para_solutions(
    S: ContactMetricStructure,
    index: float,
    basis: Optional[PhiBasis] = None,
    p=None,
) -> ParaSolutionSet:
    """All 2^n records (F_S, g_S), ordered by increasing subset bitmask."""
    points = para_intersection_points(index)
    basis = basis or adapted_phi_basis(S, p)
    B = basis.vectors
    G = S.metric(p)
    omega = B.T @ d_eta(S, p) @ B
    n = basis.n
    solutions = tuple(_build_solution(mask, n, points, B, G, omega) for mask in range(2**n))
    return ParaSolutionSet(points.index, points.a0, basis, solutions)


def canonical_para_solution(solutions: ParaSolutionSet) -> ParaSolution:
    """The record with S = {1, ..., n}: every pair on p1."""
    return solutions[len(solutions) - 1]


@dataclass(frozen=True, eq=False)
class SemiErrorTensor:
    eigenpairs: tuple[tuple[float, float], ...]
    T_basis: np.ndarray
    T: np.ndarray
    g_basis: np.ndarray
    g: np.ndarray

    def max_hyperbola_residual(self) -> float:
        return max(hyperbola_residual(*pair) for pair in self.eigenpairs)


Choice = Union[str, tuple[float, float]]


def semi_error_tensor(
    S: ContactMetricStructure,
    index: float,
    choice: Sequence[Choice],
    basis: Optional[PhiBasis] = None,
    p=None,
) -> SemiErrorTensor:
    """T diagonal in the adapted basis; g(X, Y) = g~(X - TX, Y) recovers the matching g_S.

    ``choice`` names "p1" or "p2" per pair, or gives an explicit eigenvalue pair.
    Since g~ is positive on horizontals, a g_S with vectors of negative length can
    never come from a semi-Riemannian submersion with g~ upstairs.
    """
    points = para_intersection_points(index)
    basis = basis or adapted_phi_basis(S, p)
    n = basis.n
    if len(choice) != n:
        raise GeometryError(f"choice has {len(choice)} entries for n = {n}")
    pairs = []
    for item in choice:
        if item == "p1":
            pairs.append(points.p1)
        elif item == "p2":
            pairs.append(points.p2)
        else:
            lam_i, lam_ni = (float(v) for v in item)
            pairs.append((lam_i, lam_ni))
    for i, (lam_i, lam_ni) in enumerate(pairs):
        if min(abs(lam_i - 1.0), abs(lam_ni - 1.0)) < 1e-12:
            raise EigenvalueOneError(
                f"pair {i + 1}: an error tensor can not have an eigenvalue equal to 1"
            )

    T_basis = np.diag([pair[0] for pair in pairs] + [pair[1] for pair in pairs])
    g_basis = np.eye(2 * n) - T_basis
    B = basis.vectors
    G = S.metric(p)
    return SemiErrorTensor(
        eigenpairs=tuple(pairs),
        T_basis=T_basis,
        T=_to_frame_operator(B, G, T_basis),
        g_basis=g_basis,
        g=_to_frame_form(B, G, g_basis),
    )


def para_compatibility_report(
    sol: ParaSolution, omega: Optional[np.ndarray] = None, tolerance: float = 1e-12
) -> ResidualReport:
    """F^2 = I, omega = g(., F.), signature (n, n), nondegeneracy, and both curve equations."""
    omega = sol.omega_basis if omega is None else omega
    n = sol.n
    positive, negative = sol.signature()
    eigenvalues = np.array(sol.eigenpairs).ravel()
    return ResidualReport(
        (
            Check("F_squared", float(np.max(np.abs(sol.F_basis @ sol.F_basis - np.eye(2 * n)))), tolerance),
            Check("omega_compatibility", float(np.max(np.abs(omega - sol.g_basis @ sol.F_basis))), tolerance),
            Check("signature", float(abs(positive - n) + abs(negative - n)), 0.5),
            Check("nondegeneracy", float(np.min(np.abs(np.linalg.eigvalsh(sol.g_basis)))), ZERO_THRESHOLD, "min"),
            Check("line", max(line_residual(sol.index, *pair) for pair in sol.eigenpairs), tolerance),
            Check("hyperbola", max(hyperbola_residual(*pair) for pair in sol.eigenpairs), tolerance),
            Check("eigenvalue_one", float(np.min(np.abs(eigenvalues - 1.0))), tolerance, "min"),
        )
    )


def para_infeasible_for_riemannian_metric(
    S: ContactMetricStructure, solutions: ParaSolutionSet, p=None
) -> ResidualReport:
    """Every g_S has a negative-length horizontal vector on which g~ is positive."""
    G = S.metric(p)
    B = solutions.basis.vectors
    worst_base = -np.inf
    least_upstairs = np.inf
    for sol in solutions:
        values, vectors = np.linalg.eigh(sol.g_basis)
        witness = B @ vectors[:, int(np.argmin(values))]
        worst_base = max(worst_base, float(witness @ sol.g @ witness))
        least_upstairs = min(least_upstairs, float(witness @ G @ witness))
    return ResidualReport(
        (
            Check("base_negative_length", worst_base, 0.0),
            Check("upstairs_positive_length", least_upstairs, 0.0, "min"),
        )
    )
