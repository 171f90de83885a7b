"""Parameter algebra for the two-dimensional CKN inequality.

Everything here is closed form: the exponents q, K, tau, the bubble constant,
the two symmetry curves b_FS(a) < b*_FS(a), the third-eigenvalue formula and
the scalar threshold equations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import InvalidParams, NoRoot
from .numerics import find_root

__all__ = [
    "ONFS_BAND",
    "ParamPoint",
    "Region",
    "DerivedParams",
    "ThresholdSet",
    "derive",
    "felli_schneider",
    "felli_schneider_star",
    "f_curve",
    "f_curve_ratio_form",
    "f_curve_beta_gamma",
    "h_curve",
    "mu3_closed",
    "stability_upper_bound",
    "two_bubble_bound",
    "solve_b_star",
    "solve_b_root_extended",
    "solve_thresholds",
]

# Half-width of the band |b - b_FS(a)| classified as lying on the FS curve.
ONFS_BAND = 1e-6


@dataclass(frozen=True)
class ParamPoint:
    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise InvalidParams(f"non-finite parameters a={a}, b={b}")
        if not a < 0:
            raise InvalidParams(f"need a < 0, got a={a}")
        if not a < b < a + 1:
            raise InvalidParams(f"need a < b < a+1, got a={a}, b={b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


class Region(str, enum.Enum):
    BelowFS = "BelowFS"
    OnFS = "OnFS"
    StrictInterior = "StrictInterior"
    AtOrAboveFSStar = "AtOrAboveFSStar"


@dataclass(frozen=True)
class DerivedParams:
    a: float
    b: float
    q: float
    K: float
    tau: float
    C_ab: float
    b_fs: float
    b_fs_star: float
    region: Region

    @property
    def beta(self) -> float:
        """Decay exponent (K-2)/2 of the t-space bubble."""
        return 0.5 * (self.K - 2.0)


@dataclass(frozen=True)
class ThresholdSet:
    k_star: float
    a_star: float


def _check_a(a: float) -> float:
    a = float(a)
    if not (math.isfinite(a) and a < 0):
        raise InvalidParams(f"need a < 0, got a={a}")
    return a


def _check_ab(a: float, b: float) -> tuple[float, float]:
    p = ParamPoint(a, b)
    return p.a, p.b


def felli_schneider(a: float) -> float:
    a = _check_a(a)
    return a - a / math.sqrt(a * a + 1.0)


def felli_schneider_star(a: float) -> float:
    a = _check_a(a)
    return -2.0 * a / (-a + math.sqrt(a * a + 1.0)) + a


def classify(a: float, b: float) -> Region:
    bfs = felli_schneider(a)
    if abs(b - bfs) <= ONFS_BAND:
        return Region.OnFS
    if b < bfs:
        return Region.BelowFS
    if b >= felli_schneider_star(a):
        return Region.AtOrAboveFSStar
    return Region.StrictInterior


def derive(p: ParamPoint) -> DerivedParams:
    a, b = _check_ab(p.a, p.b)
    delta = b - a
    q = 2.0 / delta
    K = 2.0 / (1.0 - delta)
    tau = (a - b) / (a * (1.0 - delta))
    C_ab = (K * (K - 2.0) / tau**2) ** ((K - 2.0) / 4.0)
    return DerivedParams(
        a=a, b=b, q=q, K=K, tau=tau, C_ab=C_ab,
        b_fs=felli_schneider(a), b_fs_star=felli_schneider_star(a),
        region=classify(a, b),
    )


def f_curve(a: float, b: float) -> float:
    """f_a(b): the value of 1 - (q-1)/mu_3 on the branch where mode k=1 wins."""
    a, b = _check_ab(a, b)
    d = b - a
    r = math.sqrt(a * a + 1.0)
    return 1.0 + (a * a / r) * (d - 2.0) / ((r + a) * d * d - a * d)


def f_curve_ratio_form(a: float, b: float) -> float:
    """Same function written as the ratio appearing in the b* equation."""
    a, b = _check_ab(a, b)
    r = math.sqrt(a * a + 1.0)
    den = r * (r - a * (1.0 + a - b) / (b - a))
    return (den - a * a * (2.0 + a - b) / (b - a) ** 2) / den


def f_curve_beta_gamma(a: float, b: float) -> float:
    """Same function in the beta/gamma parametrization with a_c = 0."""
    a, b = _check_ab(a, b)
    q = 2.0 / (b - a)
    s = math.sqrt(a * a + 1.0)
    beta = q * (q - 1.0) * a * a / 2.0
    gamma = (q - 2.0) * (-a) / 2.0
    return (s * (s + gamma) - beta) / (s * (s + gamma))


def h_curve(a: float, b: float) -> float:
    a, b = _check_ab(a, b)
    return 2.0 - 2.0 ** (b - a)


def two_bubble_bound(p: ParamPoint) -> float:
    """2 - 2^(2/q), the value of the quotient along separating bubble pairs."""
    return 2.0 - 2.0 ** (2.0 / derive(p).q)


def mu3_closed(p: ParamPoint) -> float:
    d = derive(p)
    if d.region in (Region.BelowFS, Region.OnFS):
        raise InvalidParams(f"mu3 closed form needs b > b_FS(a) = {d.b_fs:.9g}")
    if d.b < d.b_fs_star:
        s = f_curve(d.a, d.b)
    else:
        s = 4.0 / (d.K + 4.0)
    return (d.q - 1.0) / (1.0 - s)


def stability_upper_bound(p: ParamPoint) -> float:
    d = derive(p)
    return 1.0 - (d.q - 1.0) / mu3_closed(p)


def _f_minus_h(a: float):
    return lambda b: f_curve(a, b) - h_curve(a, b)


def solve_b_star(a: float, tol: float = 1e-12) -> float:
    """Unique b in (b_FS, b*_FS) with f_a(b) = h_a(b).

    f is increasing and h decreasing in b, and f(b_FS) = 0 < h, so a root
    exists exactly when f >= h at the upper end b*_FS.
    """
    a = _check_a(a)
    lo, hi = felli_schneider(a), felli_schneider_star(a)
    g = _f_minus_h(a)
    if g(hi) < 0:
        raise NoRoot(f"f_a < h_a on all of (b_FS, b*_FS) for a={a}: selection region is empty")
    return find_root(g, lo, hi, tol)


def solve_b_root_extended(a: float, tol: float = 1e-12) -> float:
    """Root of f_a = h_a on the wider interval (b_FS, a+1).

    Used only to compare against tabulated values in rows where the selection
    region is empty.
    """
    a = _check_a(a)
    lo = felli_schneider(a)
    hi = a + 1.0 - 1e-12
    g = _f_minus_h(a)
    if g(hi) < 0:
        raise NoRoot(f"no root of f_a = h_a on (b_FS, a+1) for a={a}")
    return find_root(g, lo, hi, tol)


def threshold_gap(K: float) -> float:
    """2 - 2^((K-2)/K) - 4/(K+4); positive below K*, negative above."""
    return 2.0 - 2.0 ** ((K - 2.0) / K) - 4.0 / (K + 4.0)


def solve_thresholds(tol: float = 1e-13) -> ThresholdSet:
    k_star = find_root(threshold_gap, 3.0, 10.0, tol)
    a_star = -(k_star - 2.0) * math.sqrt(2.0 * k_star) / (4.0 * k_star)
    return ThresholdSet(k_star=k_star, a_star=a_star)
