"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (``pytest tests/test_acceptance.py -v``) or directly with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from clruin.bounds import certify, rate_fit, sandwich_report, split_diffusion_residual
from clruin.claims import DiscreteEmpirical, Exponential, GammaTwo
from clruin.cramer_lundberg import (
    ModelParams,
    adjustment_coefficient,
    psi_closed_form,
    psi_pk_oracle,
    solve_volterra,
)
from clruin.expansion import gamma2_divergence_demo, residual_scaling_check
from clruin.montecarlo import SimConfig, simulate_ruin
from clruin.scaling import ScaledModel, cl_asymptotic_constant, gamma_of, psi_n, rn_scaled

BUILTIN = [Exponential(1.0), Exponential(2.5), GammaTwo(1.0), GammaTwo(0.4),
           DiscreteEmpirical.point_mass(1.0),
           DiscreteEmpirical((0.5, 1.0, 3.0), (0.2, 0.5, 0.3))]

EXP = ModelParams(0.1, 1.0, Exponential(1.0))
GAM = ModelParams(0.1, 1.0, GammaTwo(1.0))


def _sup_vs_closed(params, h):
    table = solve_volterra(params, 20.0, h)
    return float(np.max(np.abs(table.values - psi_closed_form(params, table.xs))))


def check_01():
    t0 = time.perf_counter()
    e1 = _sup_vs_closed(EXP, 0.01)
    elapsed = time.perf_counter() - t0
    e2 = _sup_vs_closed(EXP, 0.005)
    ok = e1 <= 1e-4 and e1 / e2 >= 3.5 and elapsed < 5.0
    return ok, f"sup err {e1:.3e}, halving ratio {e1 / e2:.3f}, runtime {elapsed:.3f}s"


def check_02():
    e = _sup_vs_closed(GAM, 0.01)
    return e <= 1e-4, f"sup err {e:.3e}"


def check_03():
    worst = 0.0
    for params in (EXP, GAM):
        for x in (0.0, 1.0, 5.0, 10.0):
            pk = psi_pk_oracle(params, x, mesh=1e-3).psi
            worst = max(worst, abs(pk - float(psi_closed_form(params, x))))
    return worst <= 5e-3, f"max |pk - closed| {worst:.3e}"


def check_04():
    worst = {"closed": 0.0, "volterra": 0.0, "pk": 0.0}
    ok = True
    for theta in (0.05, 0.1, 0.5):
        for dist in (Exponential(1.0), GammaTwo(1.0)):
            params = ModelParams(theta, 1.0, dist)
            target = 1.0 / (1.0 + theta)
            closed = abs(float(psi_closed_form(params, 0.0)) - target)
            vol = abs(float(solve_volterra(params, 20.0, 0.01).values[0]) - target)
            pk = psi_pk_oracle(params, 0.0, mesh=1e-3)
            pk_err = abs(pk.psi - target)
            ok &= closed <= 1e-15 and vol <= 1e-15 and pk_err <= pk.bias_bound
            worst["closed"] = max(worst["closed"], closed)
            worst["volterra"] = max(worst["volterra"], vol)
            worst["pk"] = max(worst["pk"], pk_err)
    return ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items())


def check_05():
    worst = -math.inf
    for dist in BUILTIN:
        params = ModelParams(0.1, 1.0, dist)
        table = solve_volterra(params, 20.0, 0.01)
        R = adjustment_coefficient(params)
        worst = max(worst, float(np.max(table.values - np.exp(-R * table.xs))))
    return worst <= 1e-9, f"max psi - exp(-Rx) {worst:.3e} over {len(BUILTIN)} laws"


def check_06():
    t0 = time.perf_counter()
    cert = certify(EXP.dist, 0.1, epsilon=0.01, margin=0.1)
    top = math.ceil(cert.n_min)
    ns = [top + 1, 4 * top, 16 * top, 64 * top]
    report = sandwich_report(EXP, cert, ns, np.linspace(0.0, 20.0, 2001))
    elapsed = time.perf_counter() - t0
    ok = report.ok and elapsed < 30.0
    return ok, f"n={ns}, violations {len(report.violations)}, runtime {elapsed:.3f}s"


def check_07():
    ns = [4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0]
    parts, ok = [], True
    for name, params in (("exp", EXP), ("gamma2", GAM)):
        rep = rate_fit(params, ns)
        top = rep.normalized[-3:]
        drift = max(top) / top[0] - 1.0
        ok &= -0.6 <= rep.slope <= -0.4 and drift < 0.05
        parts.append(f"{name} slope {rep.slope:.4f} drift {drift:+.2%}")
    return ok, "; ".join(parts)


def check_08():
    ns = [1e2, 1e3, 1e4, 1e5, 1e6]
    parts, ok = [], True
    for k in (1, 2, 3):
        rep = residual_scaling_check(0.1, 1.0, k, ns)
        ok &= rep.passed
        parts.append(f"k={k} normalized {rep.normalized[0]:.4g}..{rep.normalized[-1]:.4g}")
    return ok, "; ".join(parts)


def check_09():
    rep = gamma2_divergence_demo(0.1, 1.0, [1e8])
    return abs(rep.ratio[-1] - 1.0) <= 0.05, f"ratio at n=1e8 {rep.ratio[-1]:.6f}"


def check_10():
    ok, worst_const = True, 0.0
    for dist in BUILTIN:
        base = ModelParams(0.1, 1.0, dist)
        g = gamma_of(dist, 0.1).gamma
        rs = [rn_scaled(ScaledModel(base, 4.0**k)) for k in range(1, 9)]
        gaps = [abs(r - g) for r in rs]
        ok &= all(r < g for r in rs) and all(b < a for a, b in zip(gaps, gaps[1:]))
        dev = abs(cl_asymptotic_constant(ScaledModel(base, 4.0**8)) - 1.0)
        ok &= dev <= 1e-2
        worst_const = max(worst_const, dev)
    return ok, f"Rn monotone below gamma; max |C_n - 1| at 4^8 {worst_const:.3e}"


def check_11():
    ok, worst = True, 0.0
    for k in range(1, 11):
        model = ScaledModel(EXP, 4.0**k)
        for x in np.linspace(0.0, 20.0, 10):
            r = split_diffusion_residual(model, float(x))
            gap = abs(r.total - r.fn_value)
            ok &= r.term1 < 0.0 <= r.term2 and gap <= 1e-8
            worst = max(worst, gap)
    return ok, f"100 lattice points, max |term1 + term2 - F_n| {worst:.3e}"


def _mc_pass():
    out = {}
    for n in (1.0, 16.0):
        for x in (0.0, 1.0):
            est = simulate_ruin(ScaledModel(EXP, n), x, SimConfig(paths=100_000, seed=2024))
            out[(n, x)] = est
    return out


def check_12():
    t0 = time.perf_counter()
    first = _mc_pass()
    elapsed = time.perf_counter() - t0
    second = _mc_pass()
    ok, worst = elapsed < 60.0, 0.0
    for (n, x), est in first.items():
        z = abs(est.p_hat - float(psi_n(ScaledModel(EXP, n), x))) / est.stderr
        worst = max(worst, z)
        ok &= z <= 4.0 and est.to_json() == second[(n, x)].to_json()
    return ok, f"max |z| {worst:.3f}, reruns identical, runtime {elapsed:.2f}s"


def check_13():
    lam_gap = 0.0
    for dist in BUILTIN:
        ref = solve_volterra(ModelParams(0.1, 1.0, dist), 20.0, 0.01).values
        for lam in (0.3, 5.0, 40.0):
            other = solve_volterra(ModelParams(0.1, lam, dist), 20.0, 0.01).values
            lam_gap = max(lam_gap, float(np.max(np.abs(other - ref))))
    scale_gap = 0.0
    for dist in BUILTIN:
        ref = solve_volterra(ModelParams(0.1, 1.0, dist), 20.0, 0.01)
        for s in (2.0, 10.0):
            # step h/s on Y/s lands on the nodes s x of the base grid
            small = solve_volterra(ModelParams(0.1, 1.0, dist.scaled(1.0 / s)), 20.0 / s, 0.01 / s)
            scale_gap = max(scale_gap, float(np.max(np.abs(small.values - ref.values))))
    ok = lam_gap <= 1e-12 and scale_gap <= 1e-6
    return ok, f"lambda gap {lam_gap:.2e}, scale gap {scale_gap:.2e}"


CRITERIA = [
    (1, "Volterra vs exponential closed form", check_01),
    (2, "Volterra vs Gamma(2) closed form", check_02),
    (3, "ladder-height oracle vs closed forms", check_03),
    (4, "psi(0) = 1/(1+theta) for all methods", check_04),
    (5, "Lundberg bound on solver tables", check_05),
    (6, "sandwich bounds without violations", check_06),
    (7, "uniform rate n^-1/2", check_07),
    (8, "expansion residual scaling k=1..3", check_08),
    (9, "Gamma(2) second-order divergence", check_09),
    (10, "scaled adjustment coefficient limits", check_10),
    (11, "diffusion residual sign split", check_11),
    (12, "Monte Carlo agreement and determinism", check_12),
    (13, "lambda and scale invariance", check_13),
]


def run_criterion(number, label, check):
    ok, detail = check()
    return bool(ok), f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {label}: {detail}"


@pytest.mark.parametrize("number,label,check", CRITERIA, ids=[f"c{n:02d}" for n, _, _ in CRITERIA])
def test_criterion(number, label, check, capsys):
    ok, line = run_criterion(number, label, check)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    raise SystemExit(0 if all(ok for ok, _ in results) else 1)
