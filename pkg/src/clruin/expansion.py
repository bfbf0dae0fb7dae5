"""Uniform higher-order expansions of psi_n in powers of n^{-1/2}.

For exponential claims ``psi_n(x) = f(theta beta x, theta / sqrt(n))`` with
``f(z, w) = exp(-z/(1+w)) / (1+w)``.  Every w-derivative of ``f`` is a finite
sum ``sum c z^a (1+w)^{-b} f(z, w)``; :func:`derivative_terms` builds those
sums exactly with rational coefficients, and the Taylor polynomial in ``w``
gives the order-k expansion.  For Gamma(2) claims only the first-order
expansion exists and it breaks down at ``x = 0``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np

from .claims import ClaimDistribution, Exponential
from .errors import ConfigError, UnsupportedDistribution

MAX_ORDER = 20
_DPS = 50


@dataclass(frozen=True)
class DerivativeTermSum:
    """``sum_(a,b) c * z^a * (1+w)^(-b) * f(z, w)`` with exact rational ``c``."""

    terms: tuple[tuple[Fraction, int, int], ...]

    def factor(self, z, w):
        """The sum without the trailing ``f(z, w)``."""
        z = np.asarray(z, dtype=float)
        w = np.asarray(w, dtype=float)
        out = np.zeros(np.broadcast(z, w).shape)
        for c, a, b in self.terms:
            out = out + float(c) * z**a * (1.0 + w) ** (-b)
        return out

    def __call__(self, z, w):
        return self.factor(z, w) * f_eval(z, w)

    def evaluate_mp(self, z, w):
        z, w = mpmath.mpf(z), mpmath.mpf(w)
        s = mpmath.fsum(mpmath.mpf(c.numerator) / c.denominator * z**a * (1 + w) ** (-b)
                        for c, a, b in self.terms)
        return s * mpmath.exp(-z / (1 + w)) / (1 + w)

    def __len__(self) -> int:
        return len(self.terms)


def f_eval(z, w):
    """``exp(-z/(1+w)) / (1+w)``."""
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(w <= -1):
        raise ConfigError("w must exceed -1")
    out = np.exp(-z / (1.0 + w)) / (1.0 + w)
    return out if out.ndim else float(out)


def _differentiate(terms: dict[tuple[int, int], Fraction]) -> dict[tuple[int, int], Fraction]:
    # d/dw [z^a (1+w)^-b f] = -(b+1) z^a (1+w)^-(b+1) f + z^(a+1) (1+w)^-(b+2) f
    out: dict[tuple[int, int], Fraction] = {}
    for (a, b), c in terms.items():
        for key, coef in (((a, b + 1), -(b + 1) * c), ((a + 1, b + 2), c)):
            out[key] = out.get(key, Fraction(0)) + coef
    return {k: v for k, v in out.items() if v != 0}


@lru_cache(maxsize=None)
def derivative_terms(k: int) -> DerivativeTermSum:
    """Exact ``d^k f / dw^k`` as a :class:`DerivativeTermSum`."""
    if not 0 <= k <= MAX_ORDER:
        raise ConfigError(f"derivative order must lie in [0, {MAX_ORDER}]")
    terms = {(0, 0): Fraction(1)}
    for _ in range(k):
        terms = _differentiate(terms)
    return DerivativeTermSum(tuple((c, a, b) for (a, b), c in sorted(terms.items())))


def _check_order(k: int) -> None:
    if not 0 <= k <= MAX_ORDER:
        raise ConfigError(f"expansion order must lie in [0, {MAX_ORDER}]")


def _exponential_rate(beta) -> float:
    """Accept a rate or a claim law; only exponential laws have the expansion."""
    if isinstance(beta, ClaimDistribution):
        if not isinstance(beta, Exponential):
            raise UnsupportedDistribution(
                f"higher-order expansion needs exponential claims, got {type(beta).__name__}")
        return beta.beta
    beta = float(beta)
    if not beta > 0:
        raise ConfigError("beta must be positive")
    return beta


def expansion_k(theta: float, beta: float, x, n: float, k: int):
    """Order-k expansion ``sum_m (theta/sqrt(n))^m / m! * d^m f/dw^m (theta beta x, 0)``."""
    _check_order(k)
    beta = _exponential_rate(beta)
    z = theta * beta * np.asarray(x, dtype=float)
    w = theta / math.sqrt(n)
    total = np.zeros_like(z)
    for m in range(k + 1):
        total = total + w**m / math.factorial(m) * derivative_terms(m).factor(z, 0.0)
    out = total * np.exp(-z)
    return out if out.ndim else float(out)


def _residual_mp(theta: float, beta: float, x: float, n: float, k: int):
    z = mpmath.mpf(theta) * beta * mpmath.mpf(x)
    w = mpmath.mpf(theta) / mpmath.sqrt(n)
    exact = mpmath.exp(-z / (1 + w)) / (1 + w)
    approx = mpmath.fsum(w**m / mpmath.factorial(m) * derivative_terms(m).evaluate_mp(z, 0)
                         for m in range(k + 1))
    return exact - approx


def expansion_residual(theta: float, beta: float, x, n: float, k: int) -> np.ndarray:
    """``|psi_n(x) - expansion_k(x)|`` computed at 50 significant digits."""
    _check_order(k)
    beta = _exponential_rate(beta)
    with mpmath.workdps(_DPS):
        return np.array([abs(float(_residual_mp(theta, beta, float(xi), n, k)))
                         for xi in np.atleast_1d(x)])


@dataclass(frozen=True)
class ResidualReport:
    k: int
    ns: tuple[float, ...]
    sup_residuals: tuple[float, ...]
    normalized: tuple[float, ...]
    passed: bool

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "k", "sup_residual", "normalized_residual"])
        for n, r, s in zip(self.ns, self.sup_residuals, self.normalized):
            w.writerow([f"{n:.17g}", self.k, f"{r:.17g}", f"{s:.17g}"])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def bounded_tail(values: Sequence[float], top: int = 3, drift: float = 0.10) -> bool:
    """No more than ``drift`` relative growth between consecutive entries of the last ``top``."""
    tail = list(values)[-top:]
    return all(b <= a * (1.0 + drift) for a, b in zip(tail, tail[1:]))


def default_grid(theta: float, beta: float, x_max: float = 50.0, points: int = 1001) -> np.ndarray:
    return np.linspace(0.0, x_max, points)


def residual_scaling_check(theta: float, beta: float, k: int, ns: Sequence[float],
                           grid: Sequence[float] | None = None) -> ResidualReport:
    """Sup over the grid of the order-k residual, normalized by ``n^((k+1)/2)``."""
    xs = default_grid(theta, beta) if grid is None else np.asarray(grid, dtype=float)
    ns = tuple(float(n) for n in ns)
    sups = tuple(float(expansion_residual(theta, beta, xs, n, k).max()) for n in ns)
    normalized = tuple(r * n ** ((k + 1) / 2) for r, n in zip(sups, ns))
    return ResidualReport(k, ns, sups, normalized, bounded_tail(normalized))


# ------------------------------------------------------------------ Gamma(2)


def gamma2_first_order(theta: float, beta: float, x, n: float):
    """First-order Gamma(2) expansion; the ``x = 0`` branch is ``1 - theta/sqrt(n)``."""
    x = np.asarray(x, dtype=float)
    sn = math.sqrt(n)
    zg = (2.0 / 3.0) * theta * beta * x
    out = np.exp(-zg) * (1.0 + 8.0 * theta / (9.0 * sn) * (zg - 1.0))
    out = np.where(x == 0.0, 1.0 - theta / sn, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class DivergenceReport:
    theta: float
    ns: tuple[float, ...]
    D: tuple[float, ...]
    ratio: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return abs(self.ratio[-1] - 1.0) <= 0.05

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "D", "ratio"])
        for n, d, r in zip(self.ns, self.D, self.ratio):
            w.writerow([f"{n:.17g}", f"{d:.17g}", f"{r:.17g}"])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def divergence_D(theta: float, n: float) -> float:
    """``n (psi_n(0) - (1 - 8 theta / (9 sqrt(n))))`` using ``psi_n(0) = 1/(1 + theta/sqrt(n))``."""
    t = theta / math.sqrt(n)
    # 1/(1+t) - 1 = -t/(1+t), kept in that form to avoid cancellation
    return n * (8.0 * t / 9.0 - t / (1.0 + t))


def gamma2_divergence_demo(theta: float, beta: float, ns: Sequence[float]) -> DivergenceReport:
    """Second-order residual at the origin against its predicted ``-theta sqrt(n)/9`` growth.

    ``psi_n(0)`` does not depend on ``beta``; the argument is kept for a
    uniform call signature.
    """
    ns = tuple(float(n) for n in ns)
    D = tuple(divergence_D(theta, n) for n in ns)
    ratio = tuple(d / (-theta * math.sqrt(n) / 9.0) for d, n in zip(D, ns))
    return DivergenceReport(theta, ns, D, ratio)
