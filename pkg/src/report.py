import json
import math
import numbers
from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Iterable, Optional

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Check:
    """One verification row.

    ``comparison="max"`` rows pass when the residual stays below the tolerance;
    ``comparison="min"`` rows (nondegeneracy bounds) pass when it stays above.
    """

    name: str
    residual: float
    tolerance: float
    comparison: str = "max"

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.residual):
            return False
        if self.comparison == "min":
            return self.residual > self.tolerance
        return self.residual < self.tolerance

    def combine(self, other: "Check") -> "Check":
        pick = min if self.comparison == "min" else max
        return Check(
            self.name,
            pick(self.residual, other.residual),
            self.tolerance,
            self.comparison,
        )


@dataclass(frozen=True)
class ResidualReport:
    checks: tuple[Check, ...] = ()

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def names(self) -> list[str]:
        return [check.name for check in self.checks]

    def __getitem__(self, name: str) -> Check:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def residual(self, name: str) -> float:
        return self[name].residual

    def failures(self) -> list[Check]:
        return [check for check in self.checks if not check.passed]

    def merge(self, other: "ResidualReport") -> "ResidualReport":
        """Row-wise worst case; rows only present in ``other`` are appended."""
        merged = {check.name: check for check in self.checks}
        order = list(merged)
        for check in other.checks:
            if check.name in merged:
                merged[check.name] = merged[check.name].combine(check)
            else:
                merged[check.name] = check
                order.append(check.name)
        return ResidualReport(tuple(merged[name] for name in order))

    @classmethod
    def merge_all(cls, reports: Iterable["ResidualReport"]) -> "ResidualReport":
        return reduce(lambda a, b: a.merge(b), reports, cls())


def _round(value: Any) -> Any:
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, numbers.Integral):
        return int(value)
    if isinstance(value, numbers.Real):
        number = float(value)
        if math.isnan(number):
            return "nan"
        if math.isinf(number):
            return "inf" if number > 0 else "-inf"
        return float(f"{number:.12g}")
    if isinstance(value, dict):
        return {str(k): _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    if hasattr(value, "tolist"):
        return _round(value.tolist())
    return value


@dataclass
class RunReport:
    command: str
    model: dict
    checks: list[Check] = field(default_factory=list)
    fit: Optional[dict] = None
    regime: Optional[str] = None
    artifacts: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, report: ResidualReport, prefix: str = "") -> None:
        for check in report.checks:
            name = f"{prefix}{check.name}" if prefix else check.name
            self.checks.append(Check(name, check.residual, check.tolerance, check.comparison))

    def add_check(self, name: str, residual: float, tolerance: float, comparison: str = "max") -> None:
        self.checks.append(Check(name, residual, tolerance, comparison))

    def fail(self, name: str, message: str) -> None:
        """Record a stage that could not run; the row fails by construction."""
        self.checks.append(Check(name, math.inf, 0.0))
        self.artifacts.setdefault("errors", []).append(f"{name}: {message}")

    def to_dict(self) -> dict:
        return _round(
            {
                "schema_version": self.schema_version,
                "command": self.command,
                "model": self.model,
                "checks": [
                    {
                        "name": check.name,
                        "residual": check.residual,
                        "tolerance": check.tolerance,
                        "comparison": check.comparison,
                        "passed": check.passed,
                    }
                    for check in self.checks
                ],
                "fit": self.fit,
                "regime": self.regime,
                "artifacts": self.artifacts,
                "passed": self.passed,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)

    def render_table(self) -> str:
        model = ", ".join(f"{k}={_round(v)}" for k, v in sorted(self.model.items()))
        lines = [f"{self.command}: {model}"]
        if self.fit is not None:
            fit = ", ".join(f"{k}={_round(v)}" for k, v in sorted(self.fit.items()))
            lines.append(f"  fit: {fit}")
        if self.regime is not None:
            lines.append(f"  regime: {self.regime}")
        width = max([len(check.name) for check in self.checks] + [5])
        lines.append(f"  {'check'.ljust(width)}  {'residual':>12}  {'tolerance':>12}  result")
        for check in self.checks:
            mark = "ok" if check.passed else "FAIL"
            bound = ">" if check.comparison == "min" else "<"
            lines.append(
                f"  {check.name.ljust(width)}  {check.residual:12.4e}  {bound}{check.tolerance:11.1e}  {mark}"
            )
        for key in sorted(self.artifacts):
            lines.append(f"  {key}: {_round(self.artifacts[key])}")
        lines.append(f"  status: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)
