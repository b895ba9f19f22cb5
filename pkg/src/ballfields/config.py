"""JSON experiment configuration, validated with pydantic before any computation.

``ExperimentConfig.model_json_schema()`` is the published schema
(``ballfields --print-schema``).  Every default is filled in by validation
and echoed in the run manifest.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import laws, measures
from .errors import ConfigError
from .regimes import RegimeSpec

ALPHA_MESSAGE = "alpha must lie in (1,2]"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _alpha(v: float) -> float:
    if not (1 < v <= 2):
        raise ValueError(ALPHA_MESSAGE)
    return v


# -- measures ---------------------------------------------------------------------------------


class AtomicSpec(_Strict):
    type: Literal["atomic"]
    points: list[list[float]]
    weights: list[float]


class TakenakaSpec(_Strict):
    type: Literal["takenaka"]
    z: list[float]


class BoxSpec(_Strict):
    type: Literal["box"]
    lower: list[float]
    upper: list[float]
    density: float = 1.0


class IntervalSpec(_Strict):
    type: Literal["interval"]
    t: float = Field(gt=0)


class ImageSpec(_Strict):
    type: Literal["image"]
    base: "MeasureSpec"
    rotation: Optional[Union[float, list[float], list[list[float]]]] = None
    scale: float = Field(1.0, gt=0)
    shift: Optional[list[float]] = None


class TermSpec(_Strict):
    coef: float
    measure: "MeasureSpec"


class CombinationSpec(_Strict):
    type: Literal["combination"]
    terms: list[TermSpec] = Field(min_length=1)


MeasureSpec = Annotated[Union[AtomicSpec, TakenakaSpec, BoxSpec, IntervalSpec, ImageSpec, CombinationSpec],
                        Field(discriminator="type")]
ImageSpec.model_rebuild()
TermSpec.model_rebuild()
CombinationSpec.model_rebuild()


def build_measure(spec) -> measures.Measure:
    if spec.type == "atomic":
        return measures.Atomic(points=tuple(map(tuple, spec.points)), weights=tuple(spec.weights))
    if spec.type == "takenaka":
        return measures.takenaka_measure(spec.z)
    if spec.type == "box":
        return measures.UniformBox(tuple(spec.lower), tuple(spec.upper), spec.density)
    if spec.type == "interval":
        return measures.IntervalLebesgue(spec.t)
    if spec.type == "image":
        base = build_measure(spec.base)
        d = base.dimension
        R = measures.rotation_matrix(d, spec.rotation) if spec.rotation is not None else np.eye(d)
        shift = tuple(spec.shift) if spec.shift is not None else ()
        return measures.Image(base, tuple(map(tuple, R.tolist())), spec.scale, shift)
    return measures.Combination.of(*[(t.coef, build_measure(t.measure)) for t in spec.terms])


# -- laws -------------------------------------------------------------------------------------


class ParetoTailSpec(_Strict):
    type: Literal["pareto_tail"]
    beta: float = Field(gt=0)
    r_min: float = Field(1.0, gt=0)


class SmallPowerSpec(_Strict):
    type: Literal["small_power"]
    beta: float = Field(gt=0)
    r_max: float = Field(1.0, gt=0)
    c: float = Field(1.0, gt=0)


RadiusSpec = Annotated[Union[ParetoTailSpec, SmallPowerSpec], Field(discriminator="type")]


class PointMassSpec(_Strict):
    type: Literal["point_mass"]
    m0: float = 1.0


class GaussianSpec(_Strict):
    type: Literal["gaussian"]
    mean: float = 0.0
    variance: float = Field(1.0, gt=0)


class StableSpec(_Strict):
    type: Literal["stable"]
    alpha: float
    sigma: float = Field(1.0, gt=0)
    b: float = Field(0.0, ge=-1, le=1)
    tau: float = 0.0

    _check_alpha = field_validator("alpha")(_alpha)


class TwoSidedParetoSpec(_Strict):
    type: Literal["two_sided_pareto"]
    alpha: float
    scale: float = Field(1.0, gt=0)
    right_fraction: float = Field(0.5, ge=0, le=1)

    @field_validator("alpha")
    @classmethod
    def _open_alpha(cls, v):
        _alpha(v)
        if v == 2:
            raise ValueError("two-sided Pareto alpha must lie in (1,2)")
        return v


WeightSpec = Annotated[Union[PointMassSpec, GaussianSpec, StableSpec, TwoSidedParetoSpec],
                       Field(discriminator="type")]


def build_radius_law(spec) -> laws.RadiusLaw:
    if spec.type == "pareto_tail":
        return laws.ParetoTail(spec.beta, spec.r_min)
    return laws.SmallPower(spec.beta, spec.r_max, spec.c)


def build_weight_law(spec) -> laws.WeightLaw:
    if spec.type == "point_mass":
        return laws.PointMass(spec.m0)
    if spec.type == "gaussian":
        return laws.Gaussian(spec.mean, spec.variance)
    if spec.type == "stable":
        return laws.ExactStable(spec.alpha, spec.sigma, spec.b, spec.tau)
    return laws.TwoSidedPareto(spec.alpha, spec.scale, spec.right_fraction)


# -- regime, grids, options --------------------------------------------------------------------


class RegimeFields(_Strict):
    alpha: float
    beta: float = Field(gt=0)
    epsilon: Literal[-1, 1] = -1
    lam0: float = Field(1.0, gt=0)
    theta_lam: float = Field(ge=0)
    ladder: Optional[list[float]] = None

    _check_alpha = field_validator("alpha")(_alpha)


class ThetaSpec(_Strict):
    n: int = Field(21, ge=3)
    level: float = Field(0.2, gt=0, lt=1)
    values: Optional[list[float]] = None


class SimulateOptions(_Strict):
    rho: float = Field(gt=0)
    dump_balls: bool = True


class MembershipOptions(_Strict):
    decades: float = Field(3.0, ge=2)
    per_decade: int = Field(8, ge=5)


class BridgeOptions(_Strict):
    kappas: list[float] = Field(default_factory=lambda: [10.0, 100.0, 1000.0, 10000.0], min_length=1)


class ReportOptions(_Strict):
    inputs: list[str] = Field(default_factory=list)


class ExperimentConfig(_Strict):
    seed: int = Field(0, ge=0)
    dimension: int = Field(1, ge=1, le=3)
    measure: Optional[MeasureSpec] = None
    measure2: Optional[MeasureSpec] = None
    radius_law: Optional[RadiusSpec] = None
    weight_law: Optional[WeightSpec] = None
    regime: Optional[RegimeFields] = None
    theta: ThetaSpec = ThetaSpec()
    replicates: int = Field(20000, ge=100)
    budget: Optional[int] = Field(4000, ge=1)
    delta_factor: float = Field(1e-3, gt=0)
    membership_probe: bool = True
    output_dir: str = "out"
    simulate: Optional[SimulateOptions] = None
    membership: MembershipOptions = MembershipOptions()
    bridge: BridgeOptions = BridgeOptions()
    report: ReportOptions = ReportOptions()

    @model_validator(mode="after")
    def _consistent(self):
        if self.regime is not None and self.radius_law is not None:
            if not math.isclose(self.regime.beta, self.radius_law.beta, rel_tol=1e-12):
                raise ValueError("regime.beta and radius_law.beta differ")
        return self

    # builders
    def build_measure(self, which: str = "measure") -> measures.Measure:
        spec = getattr(self, which)
        if spec is None:
            raise ConfigError(f"field '{which}' is required for this subcommand")
        mu = build_measure(spec)
        if mu.dimension != self.dimension:
            raise ConfigError(f"field '{which}': dimension {mu.dimension} differs from dimension={self.dimension}")
        return mu

    def build_laws(self):
        if self.radius_law is None or self.weight_law is None:
            raise ConfigError("fields 'radius_law' and 'weight_law' are required for this subcommand")
        return build_radius_law(self.radius_law), build_weight_law(self.weight_law)

    def build_regime(self) -> RegimeSpec:
        if self.regime is None:
            raise ConfigError("field 'regime' is required for this subcommand")
        r = self.regime
        return RegimeSpec(self.dimension, r.alpha, r.beta, r.epsilon, r.lam0, r.theta_lam,
                          tuple(r.ladder or ()))


def _line_of(text: str, loc) -> int | None:
    """Best-effort line number of the innermost named key of ``loc`` in ``text``."""
    keys = [k for k in loc if isinstance(k, str)]
    for key in reversed(keys):
        needle = json.dumps(key) + ":"
        for i, line in enumerate(text.splitlines(), 1):
            if needle in line.replace('" :', '":'):
                return i
    return None


class ConfigValidationError(ConfigError):
    """Schema violation with the offending field path and line."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        super().__init__(message)
        self.field = field
        self.line = line


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigValidationError(f"invalid JSON: {exc.msg}", None, exc.lineno) from None
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(err["loc"])
        msg = err["msg"].removeprefix("Value error, ")
        field = ".".join(str(k) for k in loc)
        text_msg = f"{field}: {msg}" if field else msg
        raise ConfigValidationError(text_msg, field or None, _line_of(text, loc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigValidationError(f"cannot read config: {exc}") from None
    return parse_config(text)
