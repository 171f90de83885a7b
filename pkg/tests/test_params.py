import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cknlab import params as P
from cknlab.errors import InvalidParams, NoRoot
from cknlab.params import ParamPoint, Region

from strategies import above_fs, admissible

SQ2 = math.sqrt(2.0)


def test_derive_main_point():
    d = P.derive(ParamPoint(-1.0, -0.25))
    assert d.q == pytest.approx(8.0 / 3.0, rel=1e-14)
    assert d.K == pytest.approx(8.0, rel=1e-14)
    assert d.tau == pytest.approx(3.0, rel=1e-14)
    assert d.C_ab == pytest.approx((16.0 / 3.0) ** 1.5, rel=1e-13)
    assert d.C_ab == pytest.approx(12.316805, abs=1e-6)
    assert d.region == Region.StrictInterior
    assert d.beta == pytest.approx(3.0)


def test_derive_on_fs_curve():
    d = P.derive(ParamPoint(-1.0, -0.2928932))
    assert d.q == pytest.approx(2.0 * SQ2, abs=1e-6)
    assert d.K == pytest.approx(4.0 + 2.0 * SQ2, abs=1e-5)
    assert d.tau == pytest.approx(1.0 + SQ2, abs=1e-6)
    assert d.tau**2 == pytest.approx(d.K - 1.0, abs=1e-5)
    assert d.region == Region.OnFS


@pytest.mark.parametrize("a,b", [(-1.0, -1.5), (-1.0, -1.0), (-1.0, 0.0), (0.5, 0.7), (0.0, 0.5),
                                 (float("nan"), 0.1)])
def test_invalid_points(a, b):
    with pytest.raises(InvalidParams):
        ParamPoint(a, b)


@pytest.mark.parametrize("a,ref", [(-1.0, -0.292893), (-0.5, -0.052786), (-10.0, -9.004962)])
def test_felli_schneider_table(a, ref):
    assert P.felli_schneider(a) == pytest.approx(ref, abs=2e-6)


@pytest.mark.parametrize("a,ref", [(-1.0, -0.171573), (-0.8, -0.031000), (-2.0, -1.055728)])
def test_felli_schneider_star_table(a, ref):
    assert P.felli_schneider_star(a) == pytest.approx(ref, abs=2e-6)


def test_felli_schneider_star_exact():
    assert P.felli_schneider_star(-1.0) == pytest.approx(2.0 * SQ2 - 3.0, abs=1e-15)


def test_f_curve_values():
    assert P.f_curve(-1.0, P.felli_schneider(-1.0)) == pytest.approx(0.0, abs=1e-14)
    assert P.f_curve(-1.0, -0.25) == pytest.approx(0.100826, abs=1e-6)
    K = 6.0 + 4.0 * SQ2
    assert P.f_curve(-1.0, P.felli_schneider_star(-1.0)) == pytest.approx(4.0 / (K + 4.0), abs=1e-12)
    # 4/(10 + 4 sqrt 2), evaluated in 30-digit arithmetic
    assert 4.0 / (K + 4.0) == pytest.approx(0.255479161794565874, abs=1e-15)


def test_h_curve_values():
    assert P.h_curve(-1.0, -1e-13) == pytest.approx(0.0, abs=1e-12)
    # 2 - 2**0.818072 in 30-digit arithmetic
    assert P.h_curve(-1.0, -0.181928) == pytest.approx(0.236951698640139, abs=1e-13)
    assert P.h_curve(-1.0, -1.0 + 1e-12) == pytest.approx(1.0, abs=1e-11)


def test_mu3_and_bound():
    p = ParamPoint(-1.0, -0.25)
    assert P.mu3_closed(p) == pytest.approx((5.0 / 3.0) / (1.0 - P.f_curve(-1.0, -0.25)), rel=1e-14)
    assert P.mu3_closed(p) == pytest.approx(1.85355, abs=1e-5)
    assert P.stability_upper_bound(p) == pytest.approx(0.100826, abs=1e-6)
    p2 = ParamPoint(-1.0, -0.1)
    assert P.mu3_closed(p2) == pytest.approx(22.0 / 15.0, rel=1e-12)
    assert P.stability_upper_bound(p2) == pytest.approx(1.0 / 6.0, rel=1e-12)


def test_mu3_region_gate():
    with pytest.raises(InvalidParams):
        P.mu3_closed(ParamPoint(-1.0, -0.5))
    with pytest.raises(InvalidParams):
        P.mu3_closed(ParamPoint(-1.0, -0.2928932))


def test_bound_vanishes_at_fs():
    bfs = P.felli_schneider(-1.0)
    vals = [P.stability_upper_bound(ParamPoint(-1.0, bfs + h)) for h in (1e-2, 1e-3, 1e-4)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] < 1e-3


@pytest.mark.parametrize("a,ref", [(-1.0, -0.181928), (-0.7, 0.025795), (-10.0, -9.002933)])
def test_solve_b_star(a, ref):
    assert P.solve_b_star(a) == pytest.approx(ref, abs=1e-5)


def test_solve_b_star_empty_region():
    with pytest.raises(NoRoot):
        P.solve_b_star(-0.5)
    with pytest.raises(NoRoot):
        P.solve_b_star(-0.6)


def test_extended_root_matches_printed_row():
    assert P.solve_b_root_extended(-0.6) == pytest.approx(0.082212, abs=1e-5)


def test_thresholds():
    th = P.solve_thresholds()
    assert th.k_star == pytest.approx(6.698818, abs=1e-5)
    assert th.a_star == pytest.approx(-0.641866, abs=1e-5)
    assert P.threshold_gap(th.k_star) == pytest.approx(0.0, abs=1e-10)
    assert P.threshold_gap(4.0) > 0 > P.threshold_gap(10.0)


def test_threshold_point_is_where_selection_closes():
    # at a* the root b* meets b*_FS
    th = P.solve_thresholds()
    a = th.a_star - 1e-7
    assert P.solve_b_star(a) == pytest.approx(P.felli_schneider_star(a), abs=1e-5)


# ---------------------------------------------------------------------------
# properties


@given(admissible())
def test_exponent_identities(p):
    d = P.derive(p)
    assert d.q == pytest.approx(2.0 * d.K / (d.K - 2.0), rel=1e-12)
    lhs = d.tau**2 * (d.q - 1.0) * d.C_ab ** (d.q - 2.0)
    assert lhs == pytest.approx(d.K * (d.K + 2.0), rel=1e-10)


@given(admissible())
def test_region_consistency(p):
    d = P.derive(p)
    if d.region == Region.BelowFS:
        assert d.b < d.b_fs
        assert d.tau**2 < d.K - 1.0
    elif d.region == Region.OnFS:
        assert abs(d.b - d.b_fs) <= P.ONFS_BAND
    else:
        assert d.b > d.b_fs
        assert d.tau > 1.0
        assert d.tau**2 > d.K - 1.0
        assert (d.b >= d.b_fs_star) == (d.region == Region.AtOrAboveFSStar)


@given(st.floats(-20.0, -0.01))
def test_curve_ordering(a):
    assert a < P.felli_schneider(a) < P.felli_schneider_star(a) < a + 1.0


@given(st.floats(-10.0, -0.05), st.floats(0.001, 0.999))
def test_f_forms_agree(a, frac):
    lo, hi = P.felli_schneider(a), a + 1.0
    b = lo + frac * (hi - lo)
    f = P.f_curve(a, b)
    assert P.f_curve_ratio_form(a, b) == pytest.approx(f, rel=1e-9, abs=1e-12)
    assert P.f_curve_beta_gamma(a, b) == pytest.approx(f, rel=1e-9, abs=1e-12)


@given(st.floats(-10.0, -0.05))
def test_f_at_curves(a):
    assert P.f_curve(a, P.felli_schneider(a)) == pytest.approx(0.0, abs=1e-9)
    bs = P.felli_schneider_star(a)
    K = 2.0 / (1.0 + a - bs)
    assert P.f_curve(a, bs) == pytest.approx(4.0 / (K + 4.0), rel=1e-9)


@given(st.floats(-10.0, -0.05), st.floats(0.01, 0.98), st.floats(0.001, 0.01))
def test_f_increasing_h_decreasing(a, frac, step):
    lo, hi = P.felli_schneider(a), a + 1.0
    b1 = lo + frac * (hi - lo)
    b2 = min(b1 + step * (hi - lo), hi - 1e-9)
    assert P.f_curve(a, b2) > P.f_curve(a, b1)
    assert P.h_curve(a, b2) < P.h_curve(a, b1)


@given(above_fs(k_max=200.0))
def test_mu3_exceeds_q_minus_1(p):
    d = P.derive(p)
    assert P.mu3_closed(p) > d.q - 1.0
    assert 0.0 < P.stability_upper_bound(p) < 1.0


@given(st.floats(-10.0, -0.6419))
def test_b_star_in_selection_interval(a):
    b = P.solve_b_star(a)
    assert P.felli_schneider(a) < b <= P.felli_schneider_star(a)
    assert P.f_curve(a, b) == pytest.approx(P.h_curve(a, b), abs=1e-10)
