"""Explicit sub- and super-solutions around the diffusion approximation.

A lower certificate ``(epsilon, m, delta, N_lower)`` makes
``(1 - delta/sqrt(n)) exp(-gamma x)`` a strict lower bound of ``psi_n`` for
``n > N_lower``; an upper certificate ``(alpha, N_upper)`` does the same for
``exp(-(gamma - alpha/sqrt(n)) x)`` from above.  Together they give the
uniform ``C / sqrt(n)`` rate, which :func:`rate_fit` measures.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad

from .claims import ClaimDistribution
from .cramer_lundberg import ModelParams
from .errors import ConditionUnreachable, ConfigError, DomainError, ScalingTooSmall, UnsupportedDistribution
from .scaling import DiffusionApprox, ScaledModel, fn_operator, gamma_of, psi_d, psi_n

N_CAP = 1e12
#: certification sweep ``N * 2^j`` for ``j = 0..SWEEP_DOUBLINGS``
SWEEP_DOUBLINGS = 10
MGF_SUP_LIMIT = 1e6


# ----------------------------------------------------------------- lower bound


@dataclass(frozen=True)
class MGFCheck:
    ok: bool
    sup: float


def check_mgf_condition(dist: ClaimDistribution, theta: float, m: float) -> MGFCheck:
    """Is ``sup_d E((Y-d)^2 exp(gamma (Y-d)/sqrt(m)) | Y > d)`` finite?"""
    if m <= 0:
        raise DomainError("m must be positive")
    tilt = gamma_of(dist, theta).gamma / math.sqrt(m)
    if tilt >= dist.mgf_radius:
        return MGFCheck(False, math.inf)
    sup = dist.sup_tilted_tail_moment(2, tilt)
    return MGFCheck(math.isfinite(sup), sup)


def choose_m(dist: ClaimDistribution, theta: float) -> tuple[float, float]:
    """Smallest ``m = theta^2 2^k`` (k >= 1) whose tilted supremum is below ``MGF_SUP_LIMIT``."""
    for k in range(1, 200):
        m = theta**2 * 2.0**k
        check = check_mgf_condition(dist, theta, m)
        if check.ok and check.sup < MGF_SUP_LIMIT:
            return m, check.sup
    raise ConditionUnreachable("no admissible m found on the doubling grid")


def compute_delta(dist: ClaimDistribution, theta: float, epsilon: float) -> float:
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    gamma = gamma_of(dist, theta).gamma
    return max(theta, gamma * dist.sup_mean_residual_life() + epsilon)


def n_lower_lhs(dist: ClaimDistribution, theta: float, N: float) -> float:
    """``sup_d (gamma^2/sqrt(N)) int_0^1 (1-w) E((Y-d)^2 e^{gamma w (Y-d)/sqrt(N)} | Y>d) dw``."""
    gamma = gamma_of(dist, theta).gamma
    tilt = gamma / math.sqrt(N)
    if tilt >= dist.mgf_radius:
        return math.inf

    def integral(d: float) -> float:
        val, _ = quad(lambda w: (1 - w) * dist.tilted_tail_moment(d, 2, tilt * w), 0.0, 1.0,
                      epsabs=1e-10, epsrel=1e-12)
        return val

    return gamma**2 / math.sqrt(N) * max(integral(d) for d in dist.sup_candidates())


def compute_N_lower(dist: ClaimDistribution, theta: float, epsilon: float, delta: float,
                    m: float, rel_tol: float = 1e-9) -> float:
    """Smallest ``N > max(delta^2, m)`` (doubling then bisection) meeting the ``epsilon`` condition."""
    if not check_mgf_condition(dist, theta, m).ok:
        raise DomainError(f"MGF condition fails for m={m}")
    floor = max(delta**2, m) * (1.0 + 1e-9)

    def ok(N: float) -> bool:
        return n_lower_lhs(dist, theta, N) <= epsilon

    if ok(floor):
        return floor
    lo, hi = floor, 2.0 * floor
    while not ok(hi):
        lo, hi = hi, 2.0 * hi
        if hi > N_CAP:
            raise ConditionUnreachable(f"epsilon={epsilon} not reached by N={N_CAP:g}")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class LowerBoundCert:
    epsilon: float
    m: float
    delta: float
    n_lower: float


def certify_lower(dist: ClaimDistribution, theta: float, epsilon: float = 0.01,
                  m: float | None = None) -> LowerBoundCert:
    if m is None:
        m, _ = choose_m(dist, theta)
    delta = compute_delta(dist, theta, epsilon)
    return LowerBoundCert(epsilon, m, delta, compute_N_lower(dist, theta, epsilon, delta, m))


def lower_bound(cert: LowerBoundCert, approx: DiffusionApprox, n: float, x):
    if n <= cert.n_lower:
        raise ScalingTooSmall(f"lower bound certified only for n > {cert.n_lower}")
    out = (1.0 - cert.delta / math.sqrt(n)) * np.exp(-approx.gamma * np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


# ----------------------------------------------------------------- upper bound


def compute_alpha(dist: ClaimDistribution, theta: float, margin: float = 0.1) -> float:
    if not margin > 0:
        raise DomainError("alpha must exceed its threshold strictly; margin must be > 0")
    gamma = gamma_of(dist, theta).gamma
    return (1.0 + margin) * gamma**2 * dist.moment(3) / (3.0 * dist.moment(2))


def a_n(dist: ClaimDistribution, theta: float, alpha: float, n: float) -> float:
    """The x-independent bracket of ``F_n`` at the upper bound.

    ``(sqrt(n) + theta) EY a - n (M(a/sqrt(n)) - 1)`` with ``a = gamma - alpha/sqrt(n)``,
    rearranged to ``a (theta EY - a * mgf_excess2(a/sqrt(n)))`` so the O(sqrt(n))
    terms cancel exactly.
    """
    gamma = gamma_of(dist, theta).gamma
    if n <= (alpha / gamma) ** 2:
        raise DomainError(f"need n > (alpha/gamma)^2 = {(alpha / gamma) ** 2}")
    sn = math.sqrt(n)
    a = gamma - alpha / sn
    if a / sn >= dist.mgf_radius:
        return -math.inf
    return a * (theta * dist.mean - a * dist.mgf_excess2(a / sn))


def a_n_direct(dist: ClaimDistribution, theta: float, alpha: float, n: float) -> float:
    """Same quantity evaluated literally; loses digits for large n."""
    gamma = gamma_of(dist, theta).gamma
    sn = math.sqrt(n)
    a = gamma - alpha / sn
    return (sn + theta) * dist.mean * a - n * (dist.mgf(a / sn) - 1.0)


def compute_N_upper(dist: ClaimDistribution, theta: float, alpha: float,
                    doublings: int = SWEEP_DOUBLINGS) -> float:
    """``N > (alpha/gamma)^2`` with ``A_n > 0`` on the sweep ``N 2^j``, ``j = 0..doublings``."""
    gamma = gamma_of(dist, theta).gamma
    N = (alpha / gamma) ** 2 * (1.0 + 1e-9)
    while N <= N_CAP:
        if all(a_n(dist, theta, alpha, N * 2.0**j) > 0 for j in range(doublings + 1)):
            return N
        N *= 2.0
    raise ConditionUnreachable(f"A_n not positive on a sweep below N={N_CAP:g}")


@dataclass(frozen=True)
class UpperBoundCert:
    alpha: float
    n_upper: float
    n_verified_max: float


def certify_upper(dist: ClaimDistribution, theta: float, margin: float = 0.1) -> UpperBoundCert:
    alpha = compute_alpha(dist, theta, margin)
    N = compute_N_upper(dist, theta, alpha)
    return UpperBoundCert(alpha, N, N * 2.0**SWEEP_DOUBLINGS)


def upper_bound(cert: UpperBoundCert, approx: DiffusionApprox, n: float, x):
    if n <= cert.n_upper:
        raise ScalingTooSmall(f"upper bound certified only for n > {cert.n_upper}")
    rate = approx.gamma - cert.alpha / math.sqrt(n)
    out = np.exp(-rate * np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


def upper_envelope_max(gamma: float, alpha: float, n: float) -> float:
    """Closed-form bound on ``max_x (e^{-(gamma - alpha/sqrt(n)) x} - e^{-gamma x})``."""
    sn = math.sqrt(n)
    r = alpha / (gamma * sn)
    return math.exp(math.log1p(-r) / r) * (alpha / sn) / (gamma - alpha / sn)


# ---------------------------------------------------------------- certificates


@dataclass(frozen=True)
class BoundCertificates:
    lower: LowerBoundCert
    upper: UpperBoundCert

    @property
    def n_min(self) -> float:
        return max(self.lower.n_lower, self.upper.n_upper)

    def to_json(self) -> str:
        payload = {
            "epsilon": self.lower.epsilon,
            "m": self.lower.m,
            "delta": self.lower.delta,
            "n_lower": self.lower.n_lower,
            "alpha": self.upper.alpha,
            "n_upper": self.upper.n_upper,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BoundCertificates":
        d = json.loads(text)
        try:
            lower = LowerBoundCert(d["epsilon"], d["m"], d["delta"], d["n_lower"])
            upper = UpperBoundCert(d["alpha"], d["n_upper"], d["n_upper"] * 2.0**SWEEP_DOUBLINGS)
        except KeyError as exc:
            raise ConfigError(f"certificate missing field {exc}") from None
        return cls(lower, upper)


def certify(dist: ClaimDistribution, theta: float, epsilon: float = 0.01,
            margin: float = 0.1) -> BoundCertificates:
    return BoundCertificates(certify_lower(dist, theta, epsilon), certify_upper(dist, theta, margin))


@dataclass
class CertificateVerdict:
    mgf_condition: bool
    delta_condition: bool
    n_lower_condition: bool
    alpha_condition: bool
    a_n_positive: bool

    @property
    def ok(self) -> bool:
        return all(asdict(self).values())


def verify_certificates(dist: ClaimDistribution, theta: float, cert: BoundCertificates,
                        rel_tol: float = 1e-12) -> CertificateVerdict:
    """Re-derive every certificate condition from scratch."""
    lo, up = cert.lower, cert.upper
    gamma = gamma_of(dist, theta).gamma
    delta_needed = max(theta, gamma * dist.sup_mean_residual_life() + lo.epsilon)
    alpha_floor = gamma**2 * dist.moment(3) / (3.0 * dist.moment(2))
    n_ok = lo.n_lower > max(lo.delta**2, lo.m) and n_lower_lhs(dist, theta, lo.n_lower) <= lo.epsilon
    a_ok = up.n_upper > (up.alpha / gamma) ** 2 and all(
        a_n(dist, theta, up.alpha, up.n_upper * 2.0**j) > 0 for j in range(SWEEP_DOUBLINGS + 1)
    )
    return CertificateVerdict(
        mgf_condition=check_mgf_condition(dist, theta, lo.m).ok,
        delta_condition=lo.delta >= delta_needed * (1 - rel_tol),
        n_lower_condition=n_ok,
        alpha_condition=up.alpha > alpha_floor,
        a_n_positive=a_ok,
    )


# ------------------------------------------------------------------- sandwich


def _psi_n_values(model: ScaledModel, xs: np.ndarray, method: str) -> np.ndarray:
    if method == "auto":
        try:
            return np.asarray(psi_n(model, xs, "closed_form"))
        except UnsupportedDistribution:
            method = "volterra"
    return np.asarray(psi_n(model, xs, method))


@dataclass
class SandwichReport:
    gamma: float
    ns: list[float]
    xs: np.ndarray
    lower: dict[float, np.ndarray]
    psi: dict[float, np.ndarray]
    upper: dict[float, np.ndarray]
    a_n: dict[float, float]
    violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def sup_error(self, n: float) -> float:
        return float(np.max(np.abs(self.psi[n] - np.exp(-self.gamma * self.xs))))

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "x", "lower", "psi_n", "upper", "abs_error"])
        for n in self.ns:
            err = np.abs(self.psi[n] - np.exp(-self.gamma * self.xs))
            for row in zip(self.xs, self.lower[n], self.psi[n], self.upper[n], err):
                w.writerow([f"{n:.17g}"] + [f"{v:.17g}" for v in row])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def sandwich_report(base: ModelParams, cert: BoundCertificates, ns: Iterable[float],
                    grid: Sequence[float], method: str = "auto", slack: float = 0.0) -> SandwichReport:
    """Check ``lower < psi_n < upper`` and the error envelope for every ``n`` and grid ``x``.

    ``slack`` is an absolute tolerance for numerically computed ``psi_n``; with
    the default 0 the inequalities are checked strictly.
    """
    dist, theta = base.dist, base.theta
    approx = gamma_of(dist, theta)
    xs = np.asarray(grid, dtype=float)
    pd = np.exp(-approx.gamma * xs)
    ns = [float(n) for n in ns]
    report = SandwichReport(approx.gamma, ns, xs, {}, {}, {}, {})
    for n in ns:
        lo = np.asarray(lower_bound(cert.lower, approx, n, xs))
        up = np.asarray(upper_bound(cert.upper, approx, n, xs))
        psi = _psi_n_values(ScaledModel(base, n), xs, method)
        report.lower[n], report.psi[n], report.upper[n] = lo, psi, up
        report.a_n[n] = a_n(dist, theta, cert.upper.alpha, n)
        if not report.a_n[n] > 0:
            report.violations.append({"kind": "a_n", "n": n, "value": report.a_n[n]})
        sn = math.sqrt(n)
        checks = {
            "lower": lo < psi + slack,
            "upper": psi < up + slack,
            "envelope_low": psi - pd >= -cert.lower.delta / sn - slack,
            "envelope_high": psi - pd <= up - pd + slack,
            "relative_low": (psi - pd) / pd > -cert.lower.delta / sn - slack / pd,
            "relative_high": (psi - pd) / pd < np.expm1(cert.upper.alpha * xs / sn) + slack / pd,
        }
        for kind, passed in checks.items():
            for i in np.flatnonzero(~passed):
                report.violations.append(
                    {"kind": kind, "n": n, "x": float(xs[i]), "lower": float(lo[i]),
                     "psi": float(psi[i]), "upper": float(up[i])}
                )
    return report


# ----------------------------------------------------------------------- rate


@dataclass(frozen=True)
class RateReport:
    ns: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float
    C: float
    x_max: float
    step: float

    @property
    def normalized(self) -> tuple[float, ...]:
        return tuple(e * math.sqrt(n) for n, e in zip(self.ns, self.errors))

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "sup_abs_error", "sqrt_n_times_error"])
        for n, e, s in zip(self.ns, self.errors, self.normalized):
            w.writerow([f"{n:.17g}", f"{e:.17g}", f"{s:.17g}"])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def default_rate_grid(gamma: float, x_max_factor: float = 40.0) -> np.ndarray:
    step = 0.01 / gamma
    return step * np.arange(int(round(x_max_factor / 0.01)) + 1)


def rate_fit(base: ModelParams, ns: Sequence[float], grid: Sequence[float] | None = None,
             method: str = "auto") -> RateReport:
    """Sup-norm distance of ``psi_n`` from ``exp(-gamma x)`` and its log-log slope in ``n``."""
    ns = [float(n) for n in ns]
    if len(ns) < 4:
        raise ConfigError("rate fit needs at least four values of n")
    approx = gamma_of(base.dist, base.theta)
    xs = default_rate_grid(approx.gamma) if grid is None else np.asarray(grid, dtype=float)
    pd = psi_d(approx, xs)
    errors = [float(np.max(np.abs(_psi_n_values(ScaledModel(base, n), xs, method) - pd))) for n in ns]
    slope = float(np.polyfit(np.log(ns), np.log(errors), 1)[0])
    C = max(e * math.sqrt(n) for n, e in zip(ns, errors))
    step = float(xs[1] - xs[0]) if xs.size > 1 else 0.0
    return RateReport(tuple(ns), tuple(errors), slope, C, float(xs[-1]), step)


# ------------------------------------------------------- residual split


@dataclass(frozen=True)
class DiffusionResidual:
    """``F_n`` evaluated at ``exp(-gamma x)``, split into its two signed parts."""

    n: float
    x: float
    term1: float
    term2: float
    fn_value: float
    fn_error: float

    @property
    def total(self) -> float:
        return self.term1 + self.term2


def split_diffusion_residual(model: ScaledModel, x: float) -> DiffusionResidual:
    """Split ``F_n(x, psi_d)`` into a negative O(n^-1/2) part and a nonnegative tail part."""
    if x < 0:
        raise DomainError("x must be nonnegative")
    dist, theta, lam = model.base.dist, model.base.theta, model.base.lam
    gamma = gamma_of(dist, theta).gamma
    sn = model.sqrt_n
    tilt = gamma / sn
    inner1, _ = quad(lambda w: (1 - w) ** 2 * dist.tilted_tail_moment(0.0, 3, tilt * w), 0.0, 1.0,
                     epsabs=1e-14, epsrel=1e-13)
    term1 = -lam * math.exp(-gamma * x) * gamma**3 / (2.0 * sn) * inner1
    d = sn * x
    s_d = float(dist.survival(d))
    if s_d > 0.0:
        inner2, _ = quad(lambda w: dist.tilted_tail_moment(d, 1, tilt * w), 0.0, 1.0,
                         epsabs=1e-14, epsrel=1e-13)
        term2 = sn * gamma * lam * s_d * inner2
    else:
        term2 = 0.0
    fn = fn_operator(model, lambda y: np.exp(-gamma * np.asarray(y)), x,
                     du=lambda y: -gamma * np.exp(-gamma * y))
    return DiffusionResidual(model.n, float(x), term1, term2, fn.value, fn.error)
