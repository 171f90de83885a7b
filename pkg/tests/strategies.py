"""Hypothesis strategies for admissible parameter pairs."""

import math

from hypothesis import assume
from hypothesis import strategies as st

from cknlab.params import ParamPoint, felli_schneider


@st.composite
def admissible(draw, a_min=-10.0, a_max=-0.05):
    a = draw(st.floats(a_min, a_max))
    delta = draw(st.floats(0.02, 0.98))
    return ParamPoint(a, a + delta)


@st.composite
def above_fs(draw, a_min=-3.0, a_max=-0.3, k_min=3.0, k_max=40.0, margin=0.01):
    """Strictly above the FS curve, with K = 2/(1 + a - b) in [k_min, k_max]."""
    a = draw(st.floats(a_min, a_max))
    K = math.exp(draw(st.floats(math.log(k_min), math.log(k_max))))
    b = a + 1.0 - 2.0 / K
    assume(b > felli_schneider(a) + margin)
    return ParamPoint(a, b)
