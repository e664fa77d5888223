"""
Failure-time laws attached to basic blocks, and the spare-block specification.

All laws live on [0, INF). Sampling is by inverse CDF from uniforms drawn off a
numpy Generator, so a block's draws depend only on the stream handed to it.
Density integrals in the reliability formulas run through the quantile
function ppf, which every law provides.
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from drbd.errors import DomainError


class Distribution(ABC):
    """Continuous failure-time law with CDF, PDF, quantile and a vectorized sampler."""

    @abstractmethod
    def cdf(self, t: float) -> float:
        ...

    @abstractmethod
    def pdf(self, t: float) -> float:
        ...

    @abstractmethod
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        ...

    def sf(self, t: float) -> float:
        """Survival function 1 - F(t)."""
        return 1.0 - self.cdf(t)

    def ppf(self, u: float) -> float:
        """
        Quantile inf{t : F(t) >= u}, by bracketing and root finding on the CDF.

        Laws with a closed-form inverse override this.
        """
        if u <= 0.0:
            return 0.0
        if u >= 1.0:
            return math.inf
        hi = 1.0
        while self.cdf(hi) < u:
            hi *= 2.0
            if math.isinf(hi):
                return math.inf
        return brentq(lambda x: self.cdf(x) - u, 0.0, hi, xtol=1e-15)

    def describe(self) -> str:
        """DSL rendering of the law."""
        raise NotImplementedError(f"{type(self).__name__} has no DSL form")


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float

    def __post_init__(self):
        if not (self.rate > 0.0) or math.isinf(self.rate):
            raise DomainError(f"exponential rate must be > 0, got {self.rate}")

    def cdf(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        return -math.expm1(-self.rate * t)

    def sf(self, t: float) -> float:
        if t <= 0.0:
            return 1.0
        return math.exp(-self.rate * t)

    def pdf(self, t: float) -> float:
        if t < 0.0:
            return 0.0
        return self.rate * math.exp(-self.rate * t)

    def ppf(self, u: float) -> float:
        if u >= 1.0:
            return math.inf
        return -math.log1p(-u) / self.rate if u > 0.0 else 0.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random(n)
        return -np.log1p(-u) / self.rate

    def describe(self) -> str:
        return f"exp({self.rate!r})"


@dataclass(frozen=True)
class Weibull(Distribution):
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0.0) or not (self.scale > 0.0):
            raise DomainError(f"weibull shape and scale must be > 0, got ({self.shape}, {self.scale})")

    def cdf(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        return -math.expm1(-((t / self.scale) ** self.shape))

    def sf(self, t: float) -> float:
        if t <= 0.0:
            return 1.0
        return math.exp(-((t / self.scale) ** self.shape))

    def pdf(self, t: float) -> float:
        if t < 0.0:
            return 0.0
        if t == 0.0:
            if self.shape < 1.0:
                return math.inf
            return 1.0 / self.scale if self.shape == 1.0 else 0.0
        z = t / self.scale
        return (self.shape / self.scale) * z ** (self.shape - 1.0) * math.exp(-(z ** self.shape))

    def ppf(self, u: float) -> float:
        if u >= 1.0:
            return math.inf
        return self.scale * (-math.log1p(-u)) ** (1.0 / self.shape) if u > 0.0 else 0.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random(n)
        return self.scale * (-np.log1p(-u)) ** (1.0 / self.shape)

    def describe(self) -> str:
        return f"weibull({self.shape!r}, {self.scale!r})"


@dataclass(frozen=True)
class NeverFails(Distribution):
    """Law of a block that cannot fail (cold spare in dormancy)."""

    def cdf(self, t: float) -> float:
        return 0.0

    def pdf(self, t: float) -> float:
        return 0.0

    def ppf(self, u: float) -> float:
        return math.inf

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, np.inf)


@dataclass(frozen=True)
class PointMass(Distribution):
    """Deterministic failure at a fixed instant. Not continuous; tests only."""
    at: float

    def __post_init__(self):
        if not (self.at >= 0.0):
            raise DomainError(f"point mass must be >= 0, got {self.at}")

    def cdf(self, t: float) -> float:
        return 1.0 if t >= self.at else 0.0

    def pdf(self, t: float) -> float:
        return 0.0

    def ppf(self, u: float) -> float:
        return float(self.at)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, float(self.at))


@dataclass(frozen=True)
class UserDefined(Distribution):
    """Law given by callables. sampler(rng, n) must return n nonnegative draws."""
    cdf_fn: Callable[[float], float]
    pdf_fn: Callable[[float], float]
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    label: str = "user"

    def cdf(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        return float(self.cdf_fn(t))

    def pdf(self, t: float) -> float:
        if t < 0.0:
            return 0.0
        return float(self.pdf_fn(t))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.asarray(self.sampler(rng, n), dtype=float)


@dataclass(frozen=True)
class SpareSpec:
    """
    Spare block: its law in the active state, its law while dormant, and the
    dormancy factor that relates them (0 cold, 1 hot).
    """
    active: Distribution
    dormant: Distribution
    dormancy: Optional[float] = None

    def __post_init__(self):
        if self.dormancy is not None and not (0.0 <= self.dormancy <= 1.0):
            raise DomainError(f"dormancy factor must be in [0, 1], got {self.dormancy}")

    @classmethod
    def from_active(cls, active: Distribution, dormancy: float) -> "SpareSpec":
        """Dormant law attenuated from the active one by the dormancy factor."""
        if not (0.0 <= dormancy <= 1.0):
            raise DomainError(f"dormancy factor must be in [0, 1], got {dormancy}")
        if dormancy == 0.0:
            return cls(active=active, dormant=NeverFails(), dormancy=0.0)
        if dormancy == 1.0:
            return cls(active=active, dormant=active, dormancy=1.0)
        if isinstance(active, Exponential):
            dormant: Distribution = Exponential(dormancy * active.rate)
        elif isinstance(active, Weibull):
            # hazard scaled by the factor: scale / factor^(1/shape)
            dormant = Weibull(active.shape, active.scale / dormancy ** (1.0 / active.shape))
        else:
            raise DomainError("dormancy attenuation needs an exponential or Weibull active law")
        return cls(active=active, dormant=dormant, dormancy=dormancy)

    @classmethod
    def exponential(cls, rate: float, dormancy: float) -> "SpareSpec":
        return cls.from_active(Exponential(rate), dormancy)

    @property
    def is_cold(self) -> bool:
        return isinstance(self.dormant, NeverFails)

    @property
    def is_hot(self) -> bool:
        return self.dormant == self.active
