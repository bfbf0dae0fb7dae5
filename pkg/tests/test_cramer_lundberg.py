import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from clruin.claims import DiscreteEmpirical, Exponential, GammaTwo
from clruin.cramer_lundberg import (
    GridFunction,
    ModelParams,
    adjustment_coefficient,
    comparison_check,
    default_x_max,
    f_operator,
    lundberg_bound,
    pk_table,
    psi_closed_form,
    psi_pk_oracle,
    solve_volterra,
)
from clruin.errors import ConfigError, StepTooLarge, TruncationTooSmall, UnsupportedDistribution

from conftest import BUILTIN


def volterra_residual(params, psi, x):
    """``c psi(x) - lam int_0^x psi(x-y) S(y) dy - lam int_x^inf S`` by adaptive quadrature."""
    dist = params.dist
    conv, _ = quad(lambda y: psi(x - y) * float(dist.survival(y)), 0, x, epsabs=1e-13, limit=200)
    tail = float(dist.tail_integral(x))
    return params.premium_rate * psi(x) - params.lam * (conv + tail)


class TestClosedForm:
    def test_origin(self, base_exp):
        assert psi_closed_form(base_exp, 0.0) == pytest.approx(1 / 1.1, rel=1e-15)

    def test_vanishes(self, base_exp):
        assert psi_closed_form(base_exp, 1e4) < 1e-300

    @pytest.mark.parametrize("dist", [Exponential(1.0), GammaTwo(1.0), GammaTwo(0.3)])
    @pytest.mark.parametrize("theta", [0.05, 0.1, 0.5, 3.0])
    def test_solves_integral_equation(self, dist, theta):
        params = ModelParams(theta, 2.0, dist)
        psi = lambda x: float(psi_closed_form(params, x))  # noqa: E731
        for x in (0.0, 0.7, 3.0, 12.0):
            assert abs(volterra_residual(params, psi, x)) < 1e-10

    def test_gamma_at_one_matches_solver(self, base_gamma):
        table = solve_volterra(base_gamma, 5.0, 0.005)
        assert abs(table(1.0) - psi_closed_form(base_gamma, 1.0)) < 1e-6

    def test_discrete_unsupported(self):
        with pytest.raises(UnsupportedDistribution):
            psi_closed_form(ModelParams(0.1, 1.0, DiscreteEmpirical.point_mass(1.0)), 1.0)


class TestVolterra:
    def test_exponential_accuracy_and_order(self, base_exp):
        errs = []
        for h in (0.01, 0.005):
            t = solve_volterra(base_exp, 20.0, h)
            errs.append(np.max(np.abs(t.values - psi_closed_form(base_exp, t.xs))))
        assert errs[0] <= 1e-4
        assert errs[0] / errs[1] >= 3.5

    @pytest.mark.parametrize("dist", BUILTIN)
    @pytest.mark.parametrize("theta", [0.05, 0.5])
    def test_origin_and_monotone(self, dist, theta):
        t = solve_volterra(ModelParams(theta, 1.0, dist), 10.0, 0.01)
        assert t.values[0] == pytest.approx(1 / (1 + theta), rel=1e-14)
        assert np.all(np.diff(t.values) <= 1e-15)
        assert np.all((t.values > 0) & (t.values <= 1))

    def test_point_mass_matches_pk(self):
        params = ModelParams(0.2, 1.0, DiscreteEmpirical.point_mass(1.0))
        t = solve_volterra(params, 2.0, 0.001)
        pk = psi_pk_oracle(params, 0.5, mesh=1e-3)
        assert abs(t(0.5) - pk.psi) < 1e-3

    def test_discrete_second_order_at_atoms(self):
        params = ModelParams(0.1, 1.0, DiscreteEmpirical((0.5, 1.0, 3.0), (0.2, 0.5, 0.3)))
        ref = solve_volterra(params, 4.0, 0.00125)(np.array([1.0, 3.0]))
        e1 = np.max(np.abs(solve_volterra(params, 4.0, 0.01)(np.array([1.0, 3.0])) - ref))
        e2 = np.max(np.abs(solve_volterra(params, 4.0, 0.005)(np.array([1.0, 3.0])) - ref))
        assert e1 / e2 > 3.0

    def test_lambda_independence(self, base_gamma):
        a = solve_volterra(base_gamma, 20.0, 0.01).values
        b = solve_volterra(ModelParams(0.1, 7.0, base_gamma.dist), 20.0, 0.01).values
        assert np.max(np.abs(a - b)) <= 1e-12

    @pytest.mark.parametrize("s", [2.0, 10.0])
    def test_scale_invariance(self, s):
        base = ModelParams(0.1, 1.0, GammaTwo(1.0))
        small = ModelParams(0.1, 1.0, GammaTwo(1.0).scaled(1 / s))
        xs = np.linspace(0, 2, 21)
        # a step of h/s on the shrunken claims is a step of h in base units
        fine = solve_volterra(small, 2.0, 0.005 / s)
        ref = solve_volterra(base, 2.0 * s, 0.005)
        assert np.max(np.abs(fine(xs) - ref(s * xs))) <= 1e-12
        assert np.max(np.abs(fine(xs) - psi_closed_form(base, s * xs))) <= 1e-6

    def test_step_must_divide(self, base_exp):
        with pytest.raises(ConfigError):
            solve_volterra(base_exp, 1.0, 0.3)

    def test_step_too_large(self, base_exp):
        with pytest.raises(StepTooLarge):
            solve_volterra(base_exp, 10.0, 5.0)

    def test_atom_rounding_off_node(self):
        # 0.1 + 0.2 is one ulp above the node 300 * 0.001
        a = DiscreteEmpirical((0.05, 0.1, 0.1 + 0.2), (0.2, 0.5, 0.3))
        b = DiscreteEmpirical((0.05, 0.1, 0.3), (0.2, 0.5, 0.3))
        ta = solve_volterra(ModelParams(0.1, 1.0, a), 2.0, 0.001).values
        tb = solve_volterra(ModelParams(0.1, 1.0, b), 2.0, 0.001).values
        assert np.max(np.abs(ta - tb)) <= 1e-14

    def test_truncation_check(self, base_exp):
        with pytest.raises(TruncationTooSmall):
            solve_volterra(base_exp, 1.0, 0.01, tail_tol=1e-6)

    def test_csv(self, base_exp):
        t = solve_volterra(base_exp, 0.02, 0.01)
        buf = io.StringIO()
        text = t.to_csv(buf)
        assert buf.getvalue() == text
        lines = text.split("\n")
        assert lines[0] == "x,psi" and text.endswith("\n") and "\r" not in text
        assert float(lines[1].split(",")[1]) == t.values[0]


class TestPK:
    @pytest.mark.parametrize("dist", BUILTIN)
    def test_origin(self, dist):
        params = ModelParams(0.1, 1.0, dist)
        res = psi_pk_oracle(params, 0.0, 1e-3)
        assert abs(res.psi - 1 / 1.1) <= res.bias_bound

    def test_exponential_at_five(self, base_exp):
        assert abs(psi_pk_oracle(base_exp, 5.0, 1e-3).psi - psi_closed_form(base_exp, 5.0)) <= 5e-3

    def test_large_loading_below_lundberg(self):
        params = ModelParams(10.0, 1.0, Exponential(1.0))
        assert psi_pk_oracle(params, 1.0, 1e-3).psi <= lundberg_bound(params, 1.0)

    @pytest.mark.parametrize("dist", [Exponential(1.0), GammaTwo(1.0)])
    def test_tracks_closed_form_on_range(self, dist):
        params = ModelParams(0.1, 1.0, dist)
        xs, psi, _ = pk_table(params, 20.0, 1e-3)
        assert np.max(np.abs(psi - psi_closed_form(params, xs))) <= 5e-5

    def test_mesh_must_be_positive(self, base_exp):
        with pytest.raises(ConfigError):
            pk_table(base_exp, 1.0, 0.0)


class TestLundberg:
    def test_exponential_root(self, base_exp):
        assert adjustment_coefficient(base_exp) == pytest.approx(1 / 11, rel=1e-12)

    def test_exponential_other(self):
        assert adjustment_coefficient(ModelParams(0.5, 1.0, Exponential(2.0))) == pytest.approx(2 / 3, rel=1e-12)

    def test_gamma_root_solves_equation(self, base_gamma):
        R = adjustment_coefficient(base_gamma)
        # Gamma(2,1): M(r) = 1/(1-r)^2, c = 2.2
        assert 2.2 * R == pytest.approx(1 / (1 - R) ** 2 - 1, rel=1e-12)
        assert R == pytest.approx(0.06125109806824874, rel=1e-12)

    def test_bound_values(self, base_exp):
        assert lundberg_bound(base_exp, 0.0) == 1.0
        assert lundberg_bound(base_exp, 11.0) == pytest.approx(math.exp(-1), rel=1e-12)

    @pytest.mark.parametrize("dist", BUILTIN)
    def test_bound_dominates_solver(self, dist):
        params = ModelParams(0.1, 1.0, dist)
        x_max = math.ceil(default_x_max(params))
        t = solve_volterra(params, float(x_max), 0.01)
        assert np.all(t.values <= lundberg_bound(params, t.xs) + 1e-9)


class TestOperator:
    @pytest.mark.parametrize("dist", BUILTIN)
    def test_vanishes_on_solution(self, dist):
        params = ModelParams(0.1, 1.0, dist)
        u = solve_volterra(params, 30.0, 0.01).as_function()
        for x in (0.5, 1.0, 2.37, 5.0, 10.0):
            assert abs(f_operator(params, u, x).value) <= 1e-4

    @pytest.mark.parametrize("dist", BUILTIN)
    def test_lundberg_supersolution(self, dist):
        params = ModelParams(0.1, 1.0, dist)
        R = adjustment_coefficient(params)
        for x in np.linspace(0.1, 20, 40):
            ev = f_operator(params, lambda y: np.exp(-R * np.asarray(y)), x, du=lambda y: -R * math.exp(-R * y))
            assert ev.value >= -1e-12
            assert ev.error >= 0

    @pytest.mark.parametrize("dist", BUILTIN)
    def test_constant_annihilated(self, dist):
        params = ModelParams(0.3, 2.0, dist)
        one = lambda y: np.ones_like(np.asarray(y, dtype=float))  # noqa: E731
        for x in (0.3, 1.0, 4.0):
            assert abs(f_operator(params, one, x, du=lambda y: 0.0).value) <= 1e-12


class TestComparison:
    def test_identical_functions(self, base_exp):
        u = solve_volterra(base_exp, 10.0, 0.01).as_function()
        grid = np.linspace(0, 10, 21)
        strict = comparison_check(base_exp, u, u, grid, strict=True)
        assert not strict.operator_ok
        loose = comparison_check(base_exp, u, u, grid, strict=False)
        assert loose.hypotheses_ok and loose.conclusion_ok

    def test_solution_below_lundberg(self, base_gamma):
        u = solve_volterra(base_gamma, 60.0, 0.01).as_function()
        R = adjustment_coefficient(base_gamma)
        v = lambda y: np.exp(-R * np.asarray(y))  # noqa: E731
        rep = comparison_check(base_gamma, u, v, np.linspace(0, 60, 31), strict=False,
                               dv=lambda y: -R * math.exp(-R * y))
        assert rep.hypotheses_ok and rep.conclusion_ok and not rep.violations

    def test_discrete_note(self):
        params = ModelParams(0.1, 1.0, DiscreteEmpirical.point_mass(1.0))
        u = solve_volterra(params, 5.0, 0.01).as_function()
        rep = comparison_check(params, u, u, np.linspace(0, 5, 6), strict=False)
        assert rep.notes


class TestGridFunction:
    def test_negative_arguments(self):
        g = GridFunction(0.5, [0.9, 0.8, 0.7])
        assert g(-1.0) == 1.0
        assert g(0.25) == pytest.approx(0.85)

    def test_right_derivative_quadratic(self):
        xs = 0.1 * np.arange(11)
        g = GridFunction(0.1, xs**2)
        assert g.right_derivative(0.5) == pytest.approx(1.0, abs=1e-12)

    def test_rescaled(self):
        g = GridFunction(0.1, np.exp(-0.1 * np.arange(50)))
        r = g.rescaled(2.0)
        assert r(1.2) == pytest.approx(g(2.4))


@settings(max_examples=25, deadline=None)
@given(theta=st.floats(0.02, 5.0), lam=st.floats(0.01, 50.0))
def test_lambda_independence_property(theta, lam):
    dist = GammaTwo(1.0)
    a = solve_volterra(ModelParams(theta, 1.0, dist), 5.0, 0.01).values
    b = solve_volterra(ModelParams(theta, lam, dist), 5.0, 0.01).values
    assert np.max(np.abs(a - b)) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(theta=st.floats(0.02, 5.0), beta=st.floats(0.1, 10.0))
def test_root_solves_lundberg_equation(theta, beta):
    for dist in (Exponential(beta), GammaTwo(beta)):
        params = ModelParams(theta, 1.0, dist)
        R = adjustment_coefficient(params)
        assert 0 < R < dist.mgf_radius
        lhs = params.premium_rate * R
        assert lhs == pytest.approx(dist.mgf(R) - 1.0, rel=1e-10)
