"""The unscaled Cramer-Lundberg model.

Ruin probabilities are available three ways: closed forms (exponential and
Gamma(2) claims), a trapezoidal product-integration solver for the renewal
integral equation, and an independent Pollaczeck-Khinchine oracle that
discretizes the ladder-height law and runs a geometric-compound Panjer
recursion.  The integro-differential operator ``F`` and a grid-based
comparison check round the module off.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .claims import ClaimDistribution, DiscreteEmpirical, Exponential, GammaTwo
from .errors import ConfigError, NoRoot, StepTooLarge, TruncationTooSmall, UnsupportedDistribution

#: target for the default truncation point ``e^{-R x_max}``
DEFAULT_TAIL_TARGET = 1e-10


@dataclass(frozen=True)
class ModelParams:
    theta: float
    lam: float
    dist: ClaimDistribution

    def __post_init__(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ConfigError("safety loading theta must be positive")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ConfigError("Poisson rate lambda must be positive")

    @property
    def premium_rate(self) -> float:
        return (1.0 + self.theta) * self.lam * self.dist.mean

    c = premium_rate

    def as_params(self) -> "ModelParams":
        return self


# ---------------------------------------------------------------- closed forms


def _gamma2_roots(theta: float, beta: float) -> tuple[float, float]:
    root = math.sqrt(9.0 + 8.0 * theta)
    # (3 + 4t) - sqrt(9 + 8t) rationalized: it equals 16 t (1 + t) / ((3 + 4t) + sqrt(9 + 8t))
    small = 4.0 * beta * theta / ((3.0 + 4.0 * theta) + root)
    large = beta * ((3.0 + 4.0 * theta) + root) / (4.0 * (1.0 + theta))
    return small, large


def _psi_gamma2(theta: float, beta: float, x):
    r_small, r_large = _gamma2_roots(theta, beta)
    half = 0.5 * (3.0 + 4.0 * theta)

    def coef(r):
        return (2.0 * beta - r) / (2.0 * theta * beta - half * r)

    return theta / (2.0 * (1.0 + theta)) * (
        coef(r_small) * np.exp(-r_small * x) + coef(r_large) * np.exp(-r_large * x)
    )


def _psi_exponential(theta: float, beta: float, x):
    return np.exp(-theta * beta * x / (1.0 + theta)) / (1.0 + theta)


def psi_closed_form(params: ModelParams, x):
    """Exact ruin probability for exponential or Gamma(2) claims."""
    x = np.asarray(x, dtype=float)
    dist = params.dist
    if isinstance(dist, Exponential):
        out = _psi_exponential(params.theta, dist.beta, x)
    elif isinstance(dist, GammaTwo):
        out = _psi_gamma2(params.theta, dist.beta, x)
    else:
        raise UnsupportedDistribution(f"no closed form for {type(dist).__name__} claims")
    return out if out.ndim else float(out)


# ------------------------------------------------------- adjustment coefficient


def lundberg_root(dist: ClaimDistribution, theta: float, sqrt_n: float = 1.0) -> float:
    """Positive root ``r`` of ``E e^{rY/s} = 1 + (1 + theta/s) E(Y/s) r`` with ``s = sqrt_n``.

    Dividing by ``r/s^2`` turns the Lundberg equation into the monotone form
    ``r * mgf_excess2(r/s) = theta * E Y``, which avoids the cancellation
    that the raw form suffers for large ``s``.  The root lies below
    ``gamma = 2 theta EY / EY^2`` for every ``s``.
    """
    target = theta * dist.mean
    gamma = 2.0 * target / dist.moment(2)

    def g(r: float) -> float:
        return r * dist.mgf_excess2(r / sqrt_n) - target

    lo = 1e-12
    hi = min(gamma, sqrt_n * dist.mgf_radius * (1.0 - 1e-9))
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo < 0.0 < g_hi):
        raise NoRoot(f"Lundberg equation has no sign change on ({lo}, {hi})")
    return brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def adjustment_coefficient(params: ModelParams) -> float:
    """``R > 0`` solving ``c R = lambda (M_Y(R) - 1)``."""
    return lundberg_root(params.dist, params.theta)


def lundberg_bound(params: ModelParams, x):
    out = np.exp(-adjustment_coefficient(params) * np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


def default_x_max(params: ModelParams, tail_target: float = DEFAULT_TAIL_TARGET) -> float:
    return -math.log(tail_target) / adjustment_coefficient(params)


# ------------------------------------------------------------- grid functions


class GridFunction:
    """Uniform-grid function with linear interpolation and one-sided derivatives.

    Arguments below zero evaluate to 1, the convention under which ruin-type
    functions are extended to negative surplus.
    """

    def __init__(self, h: float, values, x0: float = 0.0):
        self.h = float(h)
        self.x0 = float(x0)
        self.values = np.asarray(values, dtype=float)

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.values.size)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.xs, self.values)
        return np.where(x < self.x0, 1.0, out)

    def node_right_derivatives(self) -> np.ndarray:
        v, h = self.values, self.h
        d = np.empty_like(v)
        if v.size >= 3:
            d[:-2] = (-3.0 * v[:-2] + 4.0 * v[1:-1] - v[2:]) / (2.0 * h)
            d[-2:] = (v[-1] - v[-2]) / h
        elif v.size == 2:
            d[:] = (v[1] - v[0]) / h
        else:
            d[:] = 0.0
        return d

    def right_derivative(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.xs, self.node_right_derivatives())

    def rescaled(self, factor: float) -> "GridFunction":
        """The function ``x -> self(factor * x)``."""
        return GridFunction(self.h / factor, self.values, self.x0 / factor)


@dataclass(frozen=True)
class RuinTable:
    h: float
    x_max: float
    values: np.ndarray = field(repr=False)
    scheme: str = "trapezoid"

    @property
    def xs(self) -> np.ndarray:
        return self.h * np.arange(self.values.size)

    def __call__(self, x):
        return self.as_function()(x)

    def as_function(self) -> GridFunction:
        return GridFunction(self.h, self.values)

    def to_csv(self, fh=None) -> str:
        return write_xy_csv(self.xs, self.values, ("x", "psi"), fh)


def write_xy_csv(xs, ys, header: Sequence[str], fh=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for x, y in zip(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)):
        w.writerow([f"{x:.17g}", f"{y:.17g}"])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


# ------------------------------------------------------------ Volterra solver


def _snap_atoms(dist: DiscreteEmpirical, h: float) -> DiscreteEmpirical:
    # atoms within rounding of a node sit on it; otherwise the side of the jump is an accident
    y, _ = dist.atoms
    k = np.rint(y / h)
    near = np.abs(y - k * h) <= 1e-9 * np.maximum(y, h)
    if not near.any():
        return dist
    return DiscreteEmpirical(tuple(np.where(near, k * h, y).tolist()), dist.probs)


def _node_survival(dist: ClaimDistribution, xs: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Survival values for interior trapezoid nodes and for the right endpoint.

    With an atom of F_Y on a node, interior nodes take the average of the
    one-sided limits and the endpoint takes the left limit, which keeps the
    scheme second order.
    """
    if not isinstance(dist, DiscreteEmpirical):
        right = dist.survival(xs)
        return right, right
    dist = _snap_atoms(dist, h)
    right = dist.survival(xs)
    left = dist.survival(np.nextafter(xs, -np.inf))
    mid = 0.5 * (left + right)
    mid[0] = right[0]
    left[0] = right[0]
    return mid, left


def solve_volterra(params: ModelParams, x_max: float, h: float,
                   tail_tol: float | None = None) -> RuinTable:
    """Solve ``c v(x) = lam int_0^x v(x-y) S(y) dy + lam int_x^inf S`` on ``[0, x_max]``.

    The march seeds ``v(0) = 1/(1+theta)`` and solves one linear equation per
    node.  ``lam`` cancels, so the table does not depend on it.

    ``tail_tol``: when given, refuse grids whose far end still leaves
    integrated-tail mass ``int_{x_max}^inf S / E Y`` above it.
    """
    if h <= 0 or x_max < 0:
        raise ConfigError("need h > 0 and x_max >= 0")
    steps = int(round(x_max / h))
    if abs(steps * h - x_max) > 1e-9 * max(1.0, x_max):
        raise ConfigError(f"step {h} does not divide x_max {x_max}")
    dist = params.dist
    a = (1.0 + params.theta) * dist.mean
    if a - 0.5 * h * float(dist.survival(0.0)) <= 0.0:
        raise StepTooLarge(f"step {h} makes the per-node equation singular")
    if tail_tol is not None and float(dist.tail_integral(x_max)) / dist.mean > tail_tol:
        raise TruncationTooSmall(f"tail mass beyond x_max={x_max} exceeds {tail_tol}")
    xs = h * np.arange(steps + 1)
    surv, surv_end = _node_survival(dist, xs, h)
    tail = dist.tail_integral(xs)
    v = kernels.volterra_march(surv, surv_end, tail, a, h, 1.0 / (1.0 + params.theta))
    return RuinTable(h=h, x_max=steps * h, values=v, scheme="trapezoid")


# ------------------------------------------------------ Pollaczeck-Khinchine


class PKResult(NamedTuple):
    psi: float
    bias_bound: float


def pk_table(params: ModelParams, x_max: float, mesh: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Lattice ruin probabilities from the geometric-compound ladder representation.

    Returns ``(xs, psi, bias_bound)`` on the lattice ``0, mesh, 2 mesh, ...``.
    """
    if mesh <= 0:
        raise ConfigError("mesh must be positive")
    dist = params.dist
    q = 1.0 / (1.0 + params.theta)
    n = int(math.ceil(x_max / mesh - 1e-9)) + 1
    edges = (np.arange(n) + 0.5) * mesh
    cdf = dist.integrated_tail_cdf(edges)
    f = np.empty(n)
    f[0] = cdf[0]
    f[1:] = np.diff(cdf)
    g = kernels.panjer_geometric(f, q)
    below = np.concatenate(([0.0], np.cumsum(g)[:-1]))
    psi = 1.0 - below - 0.5 * g
    psi[0] = 1.0 - g[0]
    bias = mesh / dist.mean
    return mesh * np.arange(n), np.clip(psi, 0.0, 1.0), bias


def psi_pk_oracle(params: ModelParams, x: float, mesh: float = 1e-3) -> PKResult:
    xs, psi, bias = pk_table(params, x + mesh, mesh)
    return PKResult(float(np.interp(x, xs, psi)), bias)


# ---------------------------------------------------------------- operator F


@dataclass(frozen=True)
class FOperatorEvaluation:
    x: float
    value: float
    error: float


def _romberg(fun: Callable[[np.ndarray], np.ndarray], a: float, b: float,
             tol: float, min_level: int = 6, max_level: int = 18) -> tuple[float, float]:
    """Romberg integration by repeated step halving; returns (value, error estimate)."""
    if b <= a:
        return 0.0, 0.0
    n = 1 << min_level
    x = np.linspace(a, b, n + 1)
    y = fun(x)
    trap = (b - a) / n * (y.sum() - 0.5 * (y[0] + y[-1]))
    rows = [[trap]]
    err = math.inf
    for level in range(min_level + 1, max_level + 1):
        n *= 2
        hstep = (b - a) / n
        mids = a + hstep * (2 * np.arange(n // 2) + 1)
        trap = 0.5 * trap + hstep * fun(mids).sum()
        row = [trap]
        for k, prev in enumerate(rows[-1], start=1):
            row.append(row[-1] + (row[-1] - prev) / (4**k - 1))
        err = abs(row[-1] - rows[-1][-1])
        rows.append(row[:6])
        if err <= tol:
            break
    return rows[-1][-1], err


def _right_derivative(u, du, x: float) -> float:
    if du is not None:
        return float(du(x))
    rd = getattr(u, "right_derivative", None)
    if rd is not None:
        return float(rd(x))
    step = 1e-6 * max(1.0, abs(x))
    return float((-3 * u(x) + 4 * u(x + step) - u(x + 2 * step)) / (2 * step))


def f_operator(params: ModelParams, u, x: float, du=None, tol: float = 1e-13) -> FOperatorEvaluation:
    """``F = -c u'(x+) - lam (int_0^x u(x-y) dF_Y(y) + S_Y(x) - u(x))``.

    ``u`` is a vectorized callable; its right derivative comes from ``du``,
    a ``right_derivative`` attribute, or a one-sided difference, in that order.
    """
    params = params.as_params()
    dist = params.dist
    if isinstance(dist, DiscreteEmpirical):
        y, p = dist.atoms
        hit = y <= x
        integral = float(np.dot(p[hit], u(x - y[hit]))) if hit.any() else 0.0
        qerr = 0.0
    else:
        integral, qerr = _romberg(lambda yy: u(x - yy) * dist.pdf(yy), 0.0, x, tol)
    slope = _right_derivative(u, du, x)
    value = -params.premium_rate * slope - params.lam * (integral + float(dist.survival(x)) - float(u(x)))
    return FOperatorEvaluation(x=float(x), value=float(value), error=params.lam * qerr)


# ---------------------------------------------------------- comparison check


@dataclass
class ComparisonReport:
    strict: bool
    boundary_ok: bool
    far_end_ok: bool
    operator_ok: bool
    conclusion_ok: bool
    violations: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def hypotheses_ok(self) -> bool:
        return self.boundary_ok and self.far_end_ok and self.operator_ok


def comparison_check(model, u, v, grid, strict: bool = True, slack: float = 1e-9,
                     du=None, dv=None) -> ComparisonReport:
    """Check the comparison principle's hypotheses and conclusion on a grid.

    ``grid[0]`` plays the left boundary ``a`` and ``grid[-1]`` stands in for
    ``b``.  Strict mode needs ``F[u] < F[v] - slack`` and ``u < v`` at interior
    nodes; non-strict mode relaxes both to ``<= ... + slack``.  ``model`` is a
    ``ModelParams`` or anything with ``as_params()`` (a scaled model).
    """
    params = model.as_params()
    grid = np.asarray(grid, dtype=float)
    report = ComparisonReport(strict, True, True, True, True)
    u0, v0 = float(u(grid[0])), float(v(grid[0]))
    if u0 > v0 + slack:
        report.boundary_ok = False
        report.violations.append({"kind": "boundary", "x": grid[0], "u": u0, "v": v0})
    ub, vb = float(u(grid[-1])), float(v(grid[-1]))
    if ub > vb + slack:
        report.far_end_ok = False
        report.violations.append({"kind": "far_end", "x": grid[-1], "u": ub, "v": vb})
    for x in grid[1:-1]:
        fu = f_operator(params, u, x, du).value
        fv = f_operator(params, v, x, dv).value
        ok = fu < fv - slack if strict else fu <= fv + slack
        if not ok:
            report.operator_ok = False
            report.violations.append({"kind": "operator", "x": x, "F_u": fu, "F_v": fv})
        ux, vx = float(u(x)), float(v(x))
        ok = ux < vx if strict else ux <= vx + slack
        if not ok:
            report.conclusion_ok = False
            report.violations.append({"kind": "conclusion", "x": x, "u": ux, "v": vx})
    if isinstance(params.dist, DiscreteEmpirical):
        report.notes.append(
            "discrete claims: derivatives near support kinks are one-sided grid "
            "differences, so the check is heuristic there"
        )
    return report
