"""Claim-severity distributions and the distributional functionals used downstream.

Three laws are built in: exponential, Gamma with shape 2, and a finite
discrete law.  Every functional the ruin and bound computations consume
(raw moments, MGF and its stable excess forms, survival and integrated
tail, mean residual life, tilted residual moments and their supremum over
the retention level ``d``) is exact for these three.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, DomainError

_SUM_TOL = 1e-12


def _phi2(z: np.ndarray) -> np.ndarray:
    """(e^z - 1 - z) / z^2 evaluated without cancellation."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-2
    zs = z[small]
    out[small] = 0.5 + zs * (1 / 6 + zs * (1 / 24 + zs * (1 / 120 + zs / 720)))
    zl = z[~small]
    out[~small] = (np.expm1(zl) - zl) / zl**2
    return out


class ClaimDistribution(ABC):
    """A positive claim-severity law with a moment generating function near 0.

    Instances are immutable.  ``mgf_radius`` is the largest ``u0`` such that
    ``E exp(uY)`` is finite on ``(-u0, u0)``.
    """

    kind: str = ""

    @property
    @abstractmethod
    def mgf_radius(self) -> float: ...

    @abstractmethod
    def moment(self, k: int) -> float: ...

    @abstractmethod
    def survival(self, y): ...

    @abstractmethod
    def tail_integral(self, x):
        """Integral of the survival function over ``[x, inf)``, i.e. E(Y - x)^+."""

    @abstractmethod
    def scaled(self, factor: float) -> "ClaimDistribution":
        """Law of ``factor * Y``."""

    @abstractmethod
    def _mgf(self, u: float) -> float: ...

    @abstractmethod
    def mgf_excess2(self, u: float) -> float:
        """``(M(u) - 1 - u E Y) / u^2``, continuous at ``u = 0`` where it is ``E Y^2 / 2``."""

    @abstractmethod
    def mgf_deriv_excess(self, u: float) -> float:
        """``M'(u) - E Y``, i.e. ``E(Y (e^{uY} - 1))``."""

    @abstractmethod
    def tilted_tail_moment(self, d: float, k: int, c: float) -> float: ...

    @abstractmethod
    def sup_tilted_tail_moment(self, k: int, c: float) -> float:
        """Supremum over ``d >= 0`` of ``tilted_tail_moment(d, k, c)`` for ``c >= 0``."""

    @abstractmethod
    def _from_uniforms(self, u: np.ndarray) -> np.ndarray: ...

    @property
    def uniforms_per_draw(self) -> int:
        return 1

    @abstractmethod
    def to_dict(self) -> dict[str, Any]: ...

    # shared behaviour

    @property
    def mean(self) -> float:
        return self.moment(1)

    def cdf(self, y):
        return 1.0 - self.survival(y)

    def _check_tilt(self, u: float) -> None:
        if u >= self.mgf_radius:
            raise DomainError(f"tilt {u} is at or beyond the MGF radius {self.mgf_radius}")

    def mgf(self, u: float) -> float:
        self._check_tilt(u)
        return self._mgf(u)

    def _check_residual(self, d: float) -> None:
        if d < 0:
            raise DomainError("retention level d must be nonnegative")
        if float(self.survival(d)) <= 0.0:
            raise DomainError(f"S_Y({d}) = 0; cannot condition on Y > d")

    def sup_candidates(self) -> tuple[float, ...]:
        """Retention levels at which every residual functional used here peaks."""
        return (0.0,)

    def mean_residual_life(self, d: float) -> float:
        """``E(Y - d | Y > d)``."""
        return self.tilted_tail_moment(d, 1, 0.0)

    def sup_mean_residual_life(self) -> float:
        return self.sup_tilted_tail_moment(1, 0.0)

    def integrated_tail_cdf(self, y):
        """CDF of the integrated-tail (ladder height) law, ``(1/EY) int_0^y S``."""
        y = np.asarray(y, dtype=float)
        return 1.0 - self.tail_integral(np.maximum(y, 0.0)) / self.mean

    def sample(self, rng: np.random.Generator) -> float:
        return float(self._from_uniforms(rng.random((1, self.uniforms_per_draw)))[0])

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self._from_uniforms(rng.random((size, self.uniforms_per_draw)))


@dataclass(frozen=True)
class Exponential(ClaimDistribution):
    beta: float
    kind = "exponential"

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ConfigError("exponential rate beta must be positive and finite")

    @property
    def mgf_radius(self) -> float:
        return self.beta

    def moment(self, k: int) -> float:
        return math.factorial(k) / self.beta**k

    def survival(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y < 0, 1.0, np.exp(-self.beta * np.maximum(y, 0.0)))

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y < 0, 0.0, self.beta * np.exp(-self.beta * np.maximum(y, 0.0)))

    def tail_integral(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-self.beta * x) / self.beta

    def scaled(self, factor: float) -> "Exponential":
        return Exponential(self.beta / factor)

    def _mgf(self, u):
        return self.beta / (self.beta - u)

    def mgf_excess2(self, u):
        self._check_tilt(u)
        return 1.0 / (self.beta * (self.beta - u))

    def mgf_deriv_excess(self, u):
        self._check_tilt(u)
        b = self.beta
        return u * (2 * b - u) / (b * (b - u) ** 2)

    def tilted_tail_moment(self, d, k, c):
        self._check_residual(d)
        self._check_tilt(c)
        # memoryless: the residual is again Exp(beta)
        return math.factorial(k) * self.beta / (self.beta - c) ** (k + 1)

    def sup_tilted_tail_moment(self, k, c):
        return self.tilted_tail_moment(0.0, k, c)

    def _from_uniforms(self, u):
        return -np.log1p(-u[:, 0]) / self.beta

    def to_dict(self):
        return {"kind": "exponential", "beta": self.beta}


@dataclass(frozen=True)
class GammaTwo(ClaimDistribution):
    """Gamma law with shape 2 and rate ``beta`` (mean ``2/beta``)."""

    beta: float
    kind = "gamma2"

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ConfigError("gamma2 rate beta must be positive and finite")

    @property
    def mgf_radius(self) -> float:
        return self.beta

    def moment(self, k: int) -> float:
        return math.factorial(k + 1) / self.beta**k

    def survival(self, y):
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        by = self.beta * y
        return (1.0 + by) * np.exp(-by)

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        yp = np.maximum(y, 0.0)
        return np.where(y < 0, 0.0, self.beta**2 * yp * np.exp(-self.beta * yp))

    def tail_integral(self, x):
        x = np.asarray(x, dtype=float)
        bx = self.beta * x
        return np.exp(-bx) * (2.0 + bx) / self.beta

    def scaled(self, factor: float) -> "GammaTwo":
        return GammaTwo(self.beta / factor)

    def _mgf(self, u):
        return (self.beta / (self.beta - u)) ** 2

    def mgf_excess2(self, u):
        self._check_tilt(u)
        b = self.beta
        return (3 * b - 2 * u) / (b * (b - u) ** 2)

    def mgf_deriv_excess(self, u):
        self._check_tilt(u)
        b = self.beta
        return 2 * u * (3 * b * b - 3 * b * u + u * u) / (b * (b - u) ** 3)

    def _residual_weights(self, d):
        bd = self.beta * d
        return bd / (1.0 + bd), 1.0 / (1.0 + bd)

    def tilted_tail_moment(self, d, k, c):
        # Given Y > d the residual is a mixture of Exp(beta) and Gamma(2, beta).
        self._check_residual(d)
        self._check_tilt(c)
        b = self.beta
        w_exp, w_gam = self._residual_weights(d)
        m_exp = math.factorial(k) * b / (b - c) ** (k + 1)
        m_gam = math.factorial(k + 1) * b * b / (b - c) ** (k + 2)
        return w_exp * m_exp + w_gam * m_gam

    def sup_tilted_tail_moment(self, k, c):
        if c < 0:
            raise DomainError("supremum strategy requires a nonnegative tilt")
        # the Gamma(2) component dominates and its weight decreases in d
        return self.tilted_tail_moment(0.0, k, c)

    @property
    def uniforms_per_draw(self) -> int:
        return 2

    def _from_uniforms(self, u):
        return -(np.log1p(-u[:, 0]) + np.log1p(-u[:, 1])) / self.beta

    def to_dict(self):
        return {"kind": "gamma2", "beta": self.beta}


@dataclass(frozen=True)
class DiscreteEmpirical(ClaimDistribution):
    support: tuple[float, ...]
    probs: tuple[float, ...]
    _y: np.ndarray = field(init=False, repr=False, compare=False)
    _p: np.ndarray = field(init=False, repr=False, compare=False)
    kind = "discrete"

    def __post_init__(self):
        y = np.asarray(self.support, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if y.ndim != 1 or y.shape != p.shape or y.size == 0:
            raise ConfigError("support and probs must be equal-length nonempty sequences")
        if np.any(~np.isfinite(y)) or np.any(y <= 0):
            raise ConfigError("support points must be positive and finite")
        if np.any(p < 0) or abs(p.sum() - 1.0) > _SUM_TOL:
            raise ConfigError("probabilities must be nonnegative and sum to 1")
        order = np.argsort(y)
        y, p = y[order], p[order]
        keep = p > 0
        y, p = y[keep], p[keep]
        if np.unique(y).size != y.size:
            raise ConfigError("support points must be distinct")
        object.__setattr__(self, "support", tuple(y.tolist()))
        object.__setattr__(self, "probs", tuple(p.tolist()))
        y.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "_y", y)
        object.__setattr__(self, "_p", p)

    @classmethod
    def point_mass(cls, y: float) -> "DiscreteEmpirical":
        return cls((y,), (1.0,))

    @property
    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        return self._y, self._p

    @property
    def mgf_radius(self) -> float:
        return math.inf

    def moment(self, k: int) -> float:
        return float(np.dot(self._p, self._y**k))

    def survival(self, y):
        y = np.asarray(y, dtype=float)
        cum = np.concatenate(([0.0], np.cumsum(self._p)))
        idx = np.searchsorted(self._y, y, side="right")
        return np.clip(1.0 - cum[idx], 0.0, 1.0)

    def tail_integral(self, x):
        x = np.asarray(x, dtype=float)
        excess = np.maximum(self._y - x[..., None], 0.0)
        return excess @ self._p

    def scaled(self, factor: float) -> "DiscreteEmpirical":
        return DiscreteEmpirical(tuple((self._y * factor).tolist()), self.probs)

    def _mgf(self, u):
        return float(np.dot(self._p, np.exp(u * self._y)))

    def mgf_excess2(self, u):
        return float(np.dot(self._p, self._y**2 * _phi2(u * self._y)))

    def mgf_deriv_excess(self, u):
        return float(np.dot(self._p, self._y * np.expm1(u * self._y)))

    def tilted_tail_moment(self, d, k, c):
        self._check_residual(d)
        mask = self._y > d
        z = self._y[mask] - d
        w = self._p[mask]
        return float(np.dot(w, z**k * np.exp(c * z)) / w.sum())

    def sup_candidates(self) -> tuple[float, ...]:
        # Between consecutive atoms the conditioning set is fixed and the
        # residual shrinks, so each piece peaks at its left end.
        y = self._y[:-1]
        mids = 0.5 * (self._y[1:] + self._y[:-1])
        return tuple(np.unique(np.concatenate(([0.0], y, mids))).tolist())

    def sup_tilted_tail_moment(self, k, c):
        if c < 0:
            raise DomainError("supremum strategy requires a nonnegative tilt")
        return max(self.tilted_tail_moment(d, k, c) for d in self.sup_candidates())

    def _from_uniforms(self, u):
        cum = np.cumsum(self._p)
        idx = np.searchsorted(cum, u[:, 0], side="right")
        return self._y[np.minimum(idx, self._y.size - 1)]

    def to_dict(self):
        return {"kind": "discrete", "support": list(self.support), "probs": list(self.probs)}


def from_dict(data: Mapping[str, Any]) -> ClaimDistribution:
    """Build a distribution from its JSON description."""
    kind = str(data.get("kind", "")).lower()
    try:
        if kind in ("exponential", "exp"):
            return Exponential(float(data["beta"]))
        if kind in ("gamma2", "gamma"):
            return GammaTwo(float(data["beta"]))
        if kind == "discrete":
            return DiscreteEmpirical(tuple(data["support"]), tuple(data["probs"]))
    except KeyError as exc:
        raise ConfigError(f"distribution description missing field {exc}") from None
    raise ConfigError(f"unknown distribution kind {kind!r}")


# Functional aliases mirroring the operation names used throughout the package.


def moment(dist: ClaimDistribution, k: int) -> float:
    if k < 1:
        raise DomainError("moment order must be >= 1")
    return dist.moment(k)


def mgf(dist: ClaimDistribution, u: float) -> float:
    return dist.mgf(u)


def mean_residual_life(dist: ClaimDistribution, d: float) -> float:
    return dist.mean_residual_life(d)


def tilted_tail_moment(dist: ClaimDistribution, d: float, k: int, c: float) -> float:
    return dist.tilted_tail_moment(d, k, c)


def sample(dist: ClaimDistribution, stream: np.random.Generator) -> float:
    return dist.sample(stream)
