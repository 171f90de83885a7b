import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cknlab import params as P
from cknlab.errors import FitDegenerate, InvalidParams
from cknlab.params import ParamPoint
from cknlab.profiles import (
    Eta0, VPrimeShape, best_constant_S, bubble_U, grad_norm_sq, inner, mode,
    norm_U_sq_closed, normalized_bubble_B, radial,
)
from cknlab.spectrum import third_eigenfunction
from cknlab.stability import (
    _fit_power, deficit_report, degenerate_sequence, dist_direct, dist_to_M, fit_expansion,
    m_of, pair_with_bubble, richardson_limit, spectral_sequence, two_bubble, two_bubble_quantity,
)

from strategies import above_fs

P_MAIN = ParamPoint(-1.0, -0.25)
P_FS = ParamPoint(-1.0, -0.2928932)


@pytest.mark.parametrize("mu", [0.01, 1.0, 50.0])
def test_pairing_of_bubble_with_itself(mu):
    B = radial(P_MAIN, normalized_bubble_B(P_MAIN, mu))
    assert pair_with_bubble(B, mu) == pytest.approx(1.0, rel=1e-10)
    m = m_of(B)
    assert m.interior
    assert m.value == pytest.approx(1.0, rel=1e-10)
    assert m.argmax == pytest.approx(mu, rel=1e-4)


@given(st.floats(-4.0, 4.0), st.floats(-4.0, 4.0))
def test_pairing_depends_on_scale_ratio(lmu, llam):
    p = P_MAIN
    mu, lam = math.exp(lmu), math.exp(llam)
    B_mu = radial(p, normalized_bubble_B(p, mu))
    B_1 = radial(p, normalized_bubble_B(p))
    assert pair_with_bubble(B_mu, lam) == pytest.approx(pair_with_bubble(B_1, lam / mu), rel=1e-9)


@settings(max_examples=15)
@given(above_fs(k_max=25.0), st.floats(-2.0, 2.0), st.floats(0.3, 3.0))
def test_pairing_equals_gradient_inner_product(p, llam, c):
    """Through the equation for B: int B_lam^(q-1) u = <B_lam, u> / S."""
    d = P.derive(p)
    lam = math.exp(llam)
    u = radial(p, Eta0(d.K, c, 1.7)) + radial(p, bubble_U(p, 0.4))
    lhs = pair_with_bubble(u, lam)
    rhs = inner(radial(p, normalized_bubble_B(p, lam)), u) / best_constant_S(p)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-12)


def test_nonradial_pairing_vanishes():
    u = mode(P_MAIN, 1, VPrimeShape(8.0))
    assert pair_with_bubble(u, 1.0) == 0.0
    assert m_of(u).value == 0.0
    assert dist_to_M(u) == pytest.approx(math.sqrt(grad_norm_sq(u)), rel=1e-14)


def test_dilation_tangent_orthogonal_to_bubble():
    d = P.derive(P_MAIN)
    assert inner(radial(P_MAIN, bubble_U(P_MAIN)), radial(P_MAIN, Eta0(d.K))) == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("c,lam", [(1.0, 1.0), (-2.5, 0.03), (0.2, 40.0)])
def test_distance_zero_on_manifold(c, lam):
    u = radial(P_MAIN, bubble_U(P_MAIN, lam)).scale(c)
    n = math.sqrt(grad_norm_sq(u))
    assert dist_to_M(u) <= 1e-5 * n
    assert dist_direct(u) <= 1e-5 * n


def test_distance_of_orthogonal_perturbation():
    e3 = third_eigenfunction(P_MAIN)
    U = radial(P_MAIN, bubble_U(P_MAIN))
    n3 = math.sqrt(grad_norm_sq(e3))
    for eps in (0.5, 0.05):
        u = U + e3.scale(eps)
        assert dist_to_M(u) == pytest.approx(eps * n3, rel=1e-6)
        assert dist_direct(u) == pytest.approx(eps * n3, rel=1e-6)


def test_distance_routes_agree_on_radial_perturbation():
    d = P.derive(P_MAIN)
    u = radial(P_MAIN, bubble_U(P_MAIN, 2.0)) + radial(P_MAIN, Eta0(d.K, 3.0, 0.5))
    assert dist_to_M(u) == pytest.approx(dist_direct(u), rel=1e-6)


@settings(max_examples=10)
@given(above_fs(k_max=20.0), st.floats(0.1, 2.0), st.floats(0.1, 10.0))
def test_deficit_nonnegative_and_E_scale_invariant(p, amp, c):
    d = P.derive(p)
    nU = math.sqrt(norm_U_sq_closed(p))
    v = radial(p, Eta0(d.K, 1.0, 1.3))
    w = mode(p, 2, VPrimeShape(d.K, 1.0, 0.8), "sin")
    u = radial(p, bubble_U(p)) + v.scale(amp * nU / math.sqrt(grad_norm_sq(v))) \
        + w.scale(0.5 * amp * nU / math.sqrt(grad_norm_sq(w)))
    r1 = deficit_report(u)
    r2 = deficit_report(u.scale(c))
    assert r1.deficit >= -1e-10 * r1.grad_sq
    assert r1.E_defined
    assert r2.E == pytest.approx(r1.E, rel=1e-6)


def test_two_bubble_bilinearity():
    p = P_MAIN
    S = best_constant_S(p)
    for lam in (0.3, 1e-3):
        g = two_bubble_quantity(p, "grad_sq", lam)
        cross = S * pair_with_bubble(radial(p, normalized_bubble_B(p, lam)), 1.0)
        assert g == pytest.approx(2.0 * S + 2.0 * cross, rel=1e-10)
    with pytest.raises(InvalidParams):
        two_bubble(p, 1.0)
    with pytest.raises(ValueError):
        two_bubble_quantity(p, "bogus", 0.5)


def test_two_bubble_gradient_fit():
    p = P_MAIN
    S = best_constant_S(p)
    fit = fit_expansion(p, "grad_sq", np.geomspace(1e-10, 1e-8, 8))
    assert fit.limit == pytest.approx(2.0 * S, rel=1e-8)
    assert fit.pinned_limit == pytest.approx(2.0 * S, rel=1e-8)
    assert fit.exponent == pytest.approx(1.0, abs=0.03)
    assert fit.coefficient > 0 and fit.pinned_coefficient > 0
    with pytest.raises(InvalidParams):
        fit_expansion(p, "grad_sq", np.geomspace(1e-3, 0.5, 8))


def test_fit_power_synthetic():
    lams = np.geomspace(1e-6, 1e-3, 8)
    slope, coeff, limit, resid = _fit_power(lams, 3.0 - 2.0 * lams**0.7, 1e-14)
    assert slope == pytest.approx(0.7, rel=1e-10)
    assert coeff == pytest.approx(-2.0, rel=1e-9)
    assert limit == pytest.approx(3.0, rel=1e-12)
    with pytest.raises(FitDegenerate):
        _fit_power(lams, np.full(8, 3.0), 1e-14)
    with pytest.raises(FitDegenerate):
        _fit_power(lams[:5], lams[:5], 1e-14)
    with pytest.raises(FitDegenerate):
        _fit_power(np.linspace(1e-6, 1e-3, 8), np.linspace(1.0, 2.0, 8), 1e-14)


def test_degenerate_sequence_on_fs():
    d = P.derive(P_FS)
    nz = math.sqrt(grad_norm_sq(mode(P_FS, 1, VPrimeShape(d.K))))
    seq = degenerate_sequence(P_FS, [0.2, 0.1, 0.05])
    Es = [rep.E for _, rep in seq]
    assert Es[0] > Es[1] > Es[2] > 0
    for eps, rep in seq:
        assert math.sqrt(rep.dist_sq) == pytest.approx(eps * nz, rel=1e-5)
    with pytest.raises(InvalidParams):
        degenerate_sequence(P_MAIN, [0.1])


def test_spectral_sequence_near_bound():
    e3 = third_eigenfunction(P_MAIN)
    (eps, rep), = spectral_sequence(P_MAIN, e3, [0.01])
    assert rep.E == pytest.approx(P.stability_upper_bound(P_MAIN), abs=5e-3)


def test_richardson_limit():
    eps = np.array([0.1, 0.05, 0.025])
    assert richardson_limit(eps, 2.0 + 3.0 * eps + 5.0 * eps**2, (1, 2)) == pytest.approx(2.0, abs=1e-12)
    assert richardson_limit(eps, 1.0 - eps**2 + 4.0 * eps**4, (2, 4)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        richardson_limit(eps, eps, (1,))
