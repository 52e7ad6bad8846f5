"""Parameter containers for the OU-driven stochastic volatility family.

Objective dynamics::

    dS = mu S dt + sigma(Y) S dW1
    dY = alpha (gamma - Y) dt + k rho dW1 + k sqrt(1 - rho^2) dW2

with ``sigma = m exp(Y)`` (ExpOU) or ``sigma = m Y`` (Stein-Stein).  A
market price of volatility risk linear in Y keeps Y an OU process under
the pricing measure, and a first-order expansion of sigma around the
stationary mean gives the Linear model in the rescaled driver Z::

    dX = -(m^2/2) (2Z - 1 + M(t)) dt + m Z dW1
    dZ = alpha (1 - Z) dt + k rho dW1 + k sqrt(1 - rho^2) dW2

``ModelParams`` holds the Linear-model parameters (alpha, k, m, rho, Z0)
plus the risk-free rate.  The same container also parametrises the exact
ExpOU and Stein-Stein dynamics in Z coordinates, where the volatility is
``m exp(Z - 1)`` and ``m Z`` respectively; see :func:`linearize`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import (
    DegenerateGamma,
    InvalidParameters,
    ParseError,
    StationarityViolation,
)

# beta above this is outside the regime where the linear expansion was
# checked against simulation; reported as a warning only
LINEARIZATION_BETA_THRESHOLD = 0.10


class ModelKind(str, enum.Enum):
    LINEAR = "Linear"
    EXPOU = "ExpOU"
    STEIN_STEIN = "SteinStein"

    @classmethod
    def parse(cls, value: str | ModelKind) -> ModelKind:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "linear": cls.LINEAR,
            "lin": cls.LINEAR,
            "expou": cls.EXPOU,
            "steinstein": cls.STEIN_STEIN,
            "s2": cls.STEIN_STEIN,
        }
        try:
            return aliases[key]
        except KeyError:
            raise InvalidParameters(f"unknown model kind {value!r}") from None


@dataclass(frozen=True)
class ObjectiveParams:
    """Parameters of the objective (real-world) dynamics.

    ``mu`` is kept for completeness only.  Pricing always uses the
    risk-free rate as drift, so ``mu`` never enters any price.
    """

    mu: float
    alpha: float
    gamma: float
    k: float
    rho: float
    m: float
    Y0: float
    S0: float = 1.0

    def __post_init__(self):
        problems = []
        if not self.alpha > 0:
            problems.append("alpha must be > 0")
        if not self.k > 0:
            problems.append("k must be > 0")
        if not self.m > 0:
            problems.append("m must be > 0")
        if not -1.0 <= self.rho <= 1.0:
            problems.append("rho must lie in [-1, 1]")
        if not self.S0 > 0:
            problems.append("S0 must be > 0")
        if problems:
            raise InvalidParameters("; ".join(problems))


@dataclass(frozen=True)
class MarketPriceOfRisk:
    """Volatility risk premium ``eta(Y) = eta0 + eta1 * Y``.

    Both coefficients are dimensionless multipliers of k.
    """

    eta0: float = 0.0
    eta1: float = 0.0


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    k: float
    m: float
    rho: float
    z0: float = 1.0
    r: float = 0.0

    @property
    def beta(self) -> float:
        """Stationary variance of the volatility driver, k^2 / (2 alpha)."""
        return self.k**2 / (2.0 * self.alpha)

    def violations(self) -> list[str]:
        out = []
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            out.append("alpha must be > 0")
        if not (math.isfinite(self.k) and self.k > 0):
            out.append("k must be > 0")
        if not (math.isfinite(self.m) and self.m > 0):
            out.append("m must be > 0")
        if not -1.0 <= self.rho <= 1.0:
            out.append("rho must lie in [-1, 1]")
        if not (math.isfinite(self.z0) and self.z0 > 0):
            out.append("z0 must be > 0")
        if not math.isfinite(self.r):
            out.append("r must be finite")
        return out

    def ensure(self) -> ModelParams:
        """Raise unless the parameters can be evaluated.

        ``k == 0`` is accepted here: it is the deterministic-volatility
        limit that the numerical routines support as a test oracle, even
        though :func:`validate` reports it.
        """
        problems = [v for v in self.violations() if not v.startswith("k ")]
        if not (math.isfinite(self.k) and self.k >= 0):
            problems.append("k must be >= 0")
        if problems:
            raise InvalidParameters("; ".join(problems))
        return self

    def with_(self, **changes) -> ModelParams:
        return replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    # flat ``key = value`` text format used by the CLI
    def to_text(self) -> str:
        lines = [f"{key} = {value!r}" for key, value in self.as_dict().items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> ModelParams:
        allowed = {f.name for f in fields(cls)}
        values: dict[str, float] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, _, value = line.partition("=")
            elif ":" in line:
                key, _, value = line.partition(":")
            else:
                raise ParseError(f"expected 'key = value', got {raw!r}", lineno)
            key = key.strip().lower()
            if key not in allowed:
                raise ParseError(f"unknown parameter {key!r}", lineno)
            try:
                values[key] = float(value)
            except ValueError:
                raise ParseError(f"not a number: {value.strip()!r}", lineno) from None
        missing = {"alpha", "k", "m", "rho"} - values.keys()
        if missing:
            raise ParseError(f"missing parameters: {', '.join(sorted(missing))}")
        return cls(**values)

    @classmethod
    def read(cls, path: str | Path) -> ModelParams:
        return cls.from_text(Path(path).read_text())

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())


def risk_neutral_transform(obj: ObjectiveParams, eta: MarketPriceOfRisk) -> ObjectiveParams:
    """Absorb a linear volatility risk premium into (alpha, gamma).

    alpha -> alpha + k eta1 and gamma -> (alpha gamma - k eta0) / (alpha + k eta1).
    """
    alpha_rn = obj.alpha + obj.k * eta.eta1
    if not alpha_rn > 0:
        raise StationarityViolation(
            f"risk-neutral mean reversion alpha + k*eta1 = {alpha_rn:.6g} must be > 0"
        )
    gamma_rn = (obj.alpha * obj.gamma - obj.k * eta.eta0) / alpha_rn
    return replace(obj, alpha=alpha_rn, gamma=gamma_rn)


def linearize(
    obj: ObjectiveParams, kind: ModelKind | str, r: float = 0.0
) -> ModelParams:
    """Map risk-neutral ExpOU or Stein-Stein parameters to the Linear model.

    ``obj`` must already be risk-neutral (see :func:`risk_neutral_transform`).
    """
    kind = ModelKind.parse(kind)
    g = obj.gamma
    if kind is ModelKind.EXPOU:
        return ModelParams(
            alpha=obj.alpha, k=obj.k, m=obj.m * math.exp(g), rho=obj.rho,
            z0=obj.Y0 + 1.0 - g, r=r,
        )
    if kind is ModelKind.STEIN_STEIN:
        if g == 0:
            raise DegenerateGamma("Stein-Stein mapping needs a non-zero stationary mean")
        return ModelParams(
            alpha=obj.alpha, k=obj.k / g, m=obj.m * g, rho=obj.rho, z0=obj.Y0 / g, r=r,
        )
    raise InvalidParameters("linearize expects an ExpOU or Stein-Stein parent model")


@dataclass(frozen=True)
class ValidationReport:
    beta: float
    violations: tuple[str, ...] = ()
    warnings: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def clean(self) -> bool:
        return not self.violations and not self.warnings


def validate(params: ModelParams) -> ValidationReport:
    beta = params.beta if params.alpha > 0 else math.inf
    warnings = []
    if beta > LINEARIZATION_BETA_THRESHOLD:
        warnings.append(
            f"linearization regime warning: beta = {beta:.3g} > {LINEARIZATION_BETA_THRESHOLD}"
        )
    km = params.k * params.m
    if km > 0 and not params.alpha > km * (1.0 + abs(params.rho)):
        # a pole ordinate inside [-1, 1]: no martingale point or pricing contour
        warnings.append("regularity strip too narrow: need alpha > k m (1 + |rho|)")
    return ValidationReport(
        beta=beta, violations=tuple(params.violations()), warnings=tuple(warnings)
    )
