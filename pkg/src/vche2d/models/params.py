"""
vche2d Parameter Models

Filter, semigroup-time, moment and eigen-coefficient value objects.
"""

import math
from dataclasses import dataclass, field

from ..utils.exceptions import ParameterError


@dataclass(frozen=True)
class FilterParams:
    """Helmholtz filter parameters.

    ``effective_coefficient`` is alpha^2 in the physical frame and
    alpha^2 * exp(-tau) in the scaled frame.
    """
    alpha: float
    effective_coefficient: float

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ParameterError("alpha must be nonnegative", {"alpha": self.alpha})
        if not math.isfinite(self.effective_coefficient) or self.effective_coefficient < 0:
            raise ParameterError("effective coefficient must be nonnegative",
                                 {"effective_coefficient": self.effective_coefficient})

    @classmethod
    def physical(cls, alpha: float) -> "FilterParams":
        return cls(alpha, alpha * alpha)

    @classmethod
    def scaled(cls, alpha: float, tau: float) -> "FilterParams":
        return cls(alpha, alpha * alpha * math.exp(-tau))


@dataclass(frozen=True)
class SemigroupTime:
    """Time argument of e^{tau L} with a(tau) = 1 - e^{-tau} cached."""
    tau: float
    a_of_tau: float = field(init=False)

    def __post_init__(self):
        if not math.isfinite(self.tau) or self.tau < 0:
            raise ParameterError("semigroup time must be nonnegative", {"tau": self.tau})
        object.__setattr__(self, "a_of_tau", -math.expm1(-self.tau))


@dataclass(frozen=True)
class MomentSet:
    """Mass and first moments of a field."""
    a: float
    b1: float
    b2: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a, self.b1, self.b2)):
            raise ParameterError("moments must be finite",
                                 {"a": self.a, "b1": self.b1, "b2": self.b2})


@dataclass(frozen=True)
class EigenCoefficients:
    """Coefficients of the X1 component: a*G + b1*F1 + b2*F2.

    b1, b2 are the multipliers of F1, F2 (so b_i = -int xi_i f).
    """
    a: float
    b1: float = 0.0
    b2: float = 0.0
    m: int = 2

    def __post_init__(self):
        if self.m not in (2, 3):
            raise ParameterError("weight exponent must be 2 or 3", {"m": self.m})
        if self.m == 2 and (self.b1 != 0.0 or self.b2 != 0.0):
            raise ParameterError("X1 is span{G} for m = 2; b1 and b2 must vanish",
                                 {"b1": self.b1, "b2": self.b2})

    @property
    def has_first_order(self) -> bool:
        return self.b1 != 0.0 or self.b2 != 0.0


def validate_weight(m: float) -> float:
    """Check a weight exponent m >= 0."""
    if not math.isfinite(m) or m < 0:
        raise ParameterError("weight exponent must be nonnegative", {"m": m})
    return float(m)
