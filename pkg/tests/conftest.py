import pytest

from clruin.claims import DiscreteEmpirical, Exponential, GammaTwo
from clruin.cramer_lundberg import ModelParams


@pytest.fixture
def exp1():
    return Exponential(1.0)


@pytest.fixture
def gam1():
    return GammaTwo(1.0)


@pytest.fixture
def base_exp(exp1):
    return ModelParams(0.1, 1.0, exp1)


@pytest.fixture
def base_gamma(gam1):
    return ModelParams(0.1, 1.0, gam1)


BUILTIN = [Exponential(1.0), Exponential(2.5), GammaTwo(1.0), GammaTwo(0.4),
           DiscreteEmpirical.point_mass(1.0),
           DiscreteEmpirical((0.5, 1.0, 3.0), (0.2, 0.5, 0.3))]
