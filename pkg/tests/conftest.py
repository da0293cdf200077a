from fractions import Fraction

import pytest

from sgma.ma_core import ChartKind, GeneratingFunction
from sgma.polyexpr import parse_poly


@pytest.fixture(scope="session")
def fold_gf() -> GeneratingFunction:
    """The canonical fold-deformation solution on the dual-T chart."""
    return GeneratingFunction(
        ChartKind.DUAL_T,
        parse_poly("y^2/2 - x^2*Z/2 + Z^3/6", ("x", "y", "Z")),
        Fraction(1),
    )


@pytest.fixture(scope="session")
def convex_quadratic_gf() -> GeneratingFunction:
    return GeneratingFunction(
        ChartKind.CLASSICAL_P,
        parse_poly("(x^2 + y^2 + z^2)/2", ("x", "y", "z")),
        Fraction(1),
    )
