"""n-scaling of the model and its diffusion limit.

The scaled model multiplies the claim rate by ``n``, shrinks claims by
``sqrt(n)`` and keeps the net premium income fixed.  Its ruin probability
satisfies ``psi_n(x) = psi_{theta/sqrt(n)}(sqrt(n) x)`` where the right side
is the base model with loading ``theta/sqrt(n)`` and unscaled claims, so all
numerical methods reuse the base solvers on that model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .claims import ClaimDistribution
from .cramer_lundberg import (
    FOperatorEvaluation,
    GridFunction,
    ModelParams,
    f_operator,
    lundberg_root,
    pk_table,
    psi_closed_form,
    solve_volterra,
)
from .errors import ConfigError, NoRoot

METHODS = ("closed_form", "volterra", "pk")


@dataclass(frozen=True)
class ScaledModel:
    base: ModelParams
    n: float

    def __post_init__(self):
        if not (self.n > 0 and math.isfinite(self.n)):
            raise ConfigError("scaling index n must be positive")

    @property
    def sqrt_n(self) -> float:
        return math.sqrt(self.n)

    @property
    def lam_n(self) -> float:
        return self.n * self.base.lam

    @property
    def theta_n(self) -> float:
        return self.base.theta / self.sqrt_n

    @property
    def c_n(self) -> float:
        return (self.sqrt_n + self.base.theta) * self.base.lam * self.base.dist.mean

    @property
    def claims(self) -> ClaimDistribution:
        """Law of the scaled claim ``Y / sqrt(n)``."""
        return self.base.dist.scaled(1.0 / self.sqrt_n)

    def as_params(self) -> ModelParams:
        """The scaled model written as an ordinary model (rate n lam, claims Y/sqrt(n))."""
        return ModelParams(self.theta_n, self.lam_n, self.claims)

    def equivalent_base(self) -> ModelParams:
        """Base-unit model whose ruin probability at ``sqrt(n) x`` is ``psi_n(x)``."""
        return ModelParams(self.theta_n, self.base.lam, self.base.dist)


@dataclass(frozen=True)
class DiffusionApprox:
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError("diffusion decay rate must be positive")


def gamma_of(dist: ClaimDistribution, theta: float) -> DiffusionApprox:
    return DiffusionApprox(2.0 * theta * dist.moment(1) / dist.moment(2))


def psi_d(approx: DiffusionApprox, x):
    out = np.exp(-approx.gamma * np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


def _default_step(model: ScaledModel) -> float:
    return 0.005 * model.base.dist.mean


def psi_n_function(model: ScaledModel, x_max: float, method: str = "volterra",
                   h: float | None = None, mesh: float = 1e-3) -> GridFunction:
    """Numerical ``psi_n`` on ``[0, x_max]`` (scaled units) as a grid function."""
    base = model.equivalent_base()
    reach = model.sqrt_n * x_max
    if method == "volterra":
        h = h or _default_step(model)
        steps = max(1, math.ceil(reach / h - 1e-9))
        table = solve_volterra(base, steps * h, h)
        return table.as_function().rescaled(model.sqrt_n)
    if method == "pk":
        xs, psi, _ = pk_table(base, reach, mesh)
        return GridFunction(mesh, psi).rescaled(model.sqrt_n)
    raise ConfigError(f"no grid representation for method {method!r}")


def psi_n(model: ScaledModel, x, method: str = "closed_form", h: float | None = None,
          mesh: float = 1e-3):
    """Ruin probability of the n-scaled model at ``x``."""
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    x = np.asarray(x, dtype=float)
    if method == "closed_form":
        out = np.asarray(psi_closed_form(model.equivalent_base(), model.sqrt_n * x))
    else:
        fun = psi_n_function(model, float(np.max(x)) if x.size else 0.0, method, h, mesh)
        out = fun(x)
    return out if out.ndim else float(out)


def rn_scaled(model: ScaledModel) -> float:
    """Adjustment coefficient ``R_n`` of the scaled model (in scaled surplus units)."""
    dist, theta = model.base.dist, model.base.theta
    r = lundberg_root(dist, theta, model.sqrt_n)
    if not r < gamma_of(dist, theta).gamma:
        raise NoRoot("root violates R_n < gamma")
    return r


def cl_asymptotic_constant(model: ScaledModel) -> float:
    """Limit of ``psi_n(x) exp(R_n x)`` as ``x`` grows."""
    dist, theta = model.base.dist, model.base.theta
    rn = rn_scaled(model)
    target = theta * dist.mean
    denom = model.sqrt_n * dist.mgf_deriv_excess(rn / model.sqrt_n) - target
    return target / denom


def fn_operator(model: ScaledModel, u, x: float, du=None, tol: float = 1e-13) -> FOperatorEvaluation:
    """The operator ``F`` of the scaled model (rate ``n lam``, claims ``Y/sqrt(n)``)."""
    return f_operator(model.as_params(), u, x, du, tol)
