"""Weighted random balls fields: simulation, limit laws and scaling regimes."""

__version__ = "0.1.0"

from .errors import (BallfieldsError, ConfigError, NumericalError, QuadratureError, RegimeError,
                     ResourceGuardError)
from .laws import (ExactStable, Gaussian, ParetoTail, PointMass, SmallPower, StableParams, TwoSidedPareto,
                   mean_field)
from .measures import (Atomic, Combination, Image, IntervalLebesgue, UniformBox, dilate, rotate,
                       takenaka_measure, translate)

__all__ = [
    "Atomic", "BallfieldsError", "Combination", "ConfigError", "ExactStable", "Gaussian", "Image",
    "IntervalLebesgue", "NumericalError", "ParetoTail", "PointMass", "QuadratureError", "RegimeError",
    "ResourceGuardError", "SmallPower", "StableParams", "TwoSidedPareto", "UniformBox", "dilate",
    "mean_field", "rotate", "takenaka_measure", "translate",
]
