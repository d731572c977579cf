from fractions import Fraction

import pytest

from nswopt.model import Additive, TwoSidedInstance


@pytest.fixture
def tiny_two_sided():
    """One firm (additive 3, 1) with room for both workers, who value it at 1."""
    return TwoSidedInstance((Additive((3, 1)),), ((1,), (1,)), (2,))


def frac(s):
    return Fraction(s)
