"""Radial profiles, harmonic expansions and the weighted norms acting on them.

All radial work happens in the variable t with r = t**tau.  In that variable
the gradient weight becomes t**(K-1) (plus t**(K-3) for the angular part),
the bubble becomes a power of 1 + t**2, and a dilation u -> lam**(-a) u(lam x)
becomes eta -> zeta**((K-2)/2) eta(zeta t) with zeta = lam**(1/tau).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.interpolate import BSpline, make_interp_spline
from scipy.special import gammaln, roots_jacobi

from . import params as _params
from .errors import InvalidParams, NoConvergence
from .numerics import QuadConfig, TailSpec, integrate_halfline
from .params import ParamPoint, Region

__all__ = [
    "RadialProfile", "Bubble", "Eta0", "VPrimeShape", "Grid", "Dilated", "Combo",
    "Term", "HarmonicFunction", "NormReport",
    "radial", "bubble_V", "bubble_U", "normalized_bubble_B", "c_ab", "c_ab_closed",
    "norm_U_sq_closed", "best_constant_S", "grad_norm_sq", "inner", "star_norm",
    "norms", "weighted_l2", "pde_residual", "kernel_elements", "dilation_tangent",
    "overlap_d", "overlap_d_closed", "abs_cos_power_integral",
]


def _pw(base, expo):
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        return np.power(base, expo)


# ---------------------------------------------------------------------------
# radial profiles


class RadialProfile:
    """A radial function of t with power-law ends.

    eta ~ t**p0 as t -> 0 and eta ~ t**(-p_inf) as t -> infinity.  ``centers``
    lists where the profile's mass sits, as hints for quadrature.
    """

    K: float
    p0: float
    p_inf: float

    def __call__(self, t):
        raise NotImplementedError

    def deriv(self, t):
        raise NotImplementedError

    def deriv2(self, t):
        raise NotImplementedError

    @property
    def centers(self) -> tuple:
        return (1.0,)

    @property
    def dp0(self) -> float:
        """Exponent of eta' at t -> 0 (profiles with p0 = 0 are even in t)."""
        return 1.0 if self.p0 == 0 else self.p0 - 1.0

    def dilate(self, zeta: float) -> "RadialProfile":
        return Dilated(self, float(zeta))

    def scale(self, c: float) -> "RadialProfile":
        return Combo(self.K, ((float(c), self),))


class _ScaledForm(RadialProfile):
    """Closed forms zeta**beta * amp * g(zeta t); subclasses supply g, g', g''."""

    def _g(self, x):
        raise NotImplementedError

    def _dg(self, x):
        raise NotImplementedError

    def _ddg(self, x):
        raise NotImplementedError

    @property
    def _pref(self):
        return self.amplitude * self.zeta ** (0.5 * (self.K - 2.0))

    def __call__(self, t):
        return self._pref * self._g(self.zeta * np.asarray(t, dtype=float))

    def deriv(self, t):
        return self._pref * self.zeta * self._dg(self.zeta * np.asarray(t, dtype=float))

    def deriv2(self, t):
        return self._pref * self.zeta**2 * self._ddg(self.zeta * np.asarray(t, dtype=float))

    @property
    def centers(self):
        return (1.0 / self.zeta,)


@dataclass(frozen=True)
class Bubble(_ScaledForm):
    """amp * zeta**beta * (1 + zeta**2 t**2)**(-beta), beta = (K-2)/2.

    ``kind`` records which normalization the amplitude carries: "V" for
    [K(K-2)]**((K-2)/4), "U" for C_ab and "B" for c_ab.
    """

    K: float
    amplitude: float
    zeta: float = 1.0
    kind: str = "V"

    @property
    def p0(self):
        return 0.0

    @property
    def p_inf(self):
        return self.K - 2.0

    def _g(self, x):
        return _pw(1.0 + x * x, -0.5 * (self.K - 2.0))

    def _dg(self, x):
        b = 0.5 * (self.K - 2.0)
        return -2.0 * b * x * _pw(1.0 + x * x, -b - 1.0)

    def _ddg(self, x):
        b = 0.5 * (self.K - 2.0)
        s = 1.0 + x * x
        return -2.0 * b * (_pw(s, -b - 1.0) - 2.0 * (b + 1.0) * x * x * _pw(s, -b - 2.0))

    def dilate(self, zeta):
        return Bubble(self.K, self.amplitude, self.zeta * zeta, self.kind)

    def scale(self, c):
        return Bubble(self.K, self.amplitude * c, self.zeta, self.kind)


@dataclass(frozen=True)
class Eta0(_ScaledForm):
    """Radial kernel element (1 - t**2)/(1 + t**2)**(K/2)."""

    K: float
    zeta: float = 1.0
    amplitude: float = 1.0

    @property
    def p0(self):
        return 0.0

    @property
    def p_inf(self):
        return self.K - 2.0

    def _g(self, x):
        return (1.0 - x * x) * _pw(1.0 + x * x, -0.5 * self.K)

    def _dg(self, x):
        K = self.K
        return -x * ((2.0 + K) + (2.0 - K) * x * x) * _pw(1.0 + x * x, -0.5 * K - 1.0)

    def _ddg(self, x):
        K = self.K
        s = 1.0 + x * x
        P = -(2.0 + K) * x - (2.0 - K) * x**3
        dP = -(2.0 + K) - 3.0 * (2.0 - K) * x * x
        return dP * _pw(s, -0.5 * K - 1.0) - (K + 2.0) * x * P * _pw(s, -0.5 * K - 2.0)

    def dilate(self, zeta):
        return Eta0(self.K, self.zeta * zeta, self.amplitude)

    def scale(self, c):
        return Eta0(self.K, self.zeta, self.amplitude * c)


@dataclass(frozen=True)
class VPrimeShape(_ScaledForm):
    """Unit V'-shape t/(1 + t**2)**(K/2), the radial factor of the k=1 kernel."""

    K: float
    zeta: float = 1.0
    amplitude: float = 1.0

    @property
    def p0(self):
        return 1.0

    @property
    def p_inf(self):
        return self.K - 1.0

    def _g(self, x):
        return x * _pw(1.0 + x * x, -0.5 * self.K)

    def _dg(self, x):
        K = self.K
        return (1.0 + (1.0 - K) * x * x) * _pw(1.0 + x * x, -0.5 * K - 1.0)

    def _ddg(self, x):
        K = self.K
        s = 1.0 + x * x
        return (2.0 * (1.0 - K) * x * _pw(s, -0.5 * K - 1.0)
                - (K + 2.0) * x * (1.0 + (1.0 - K) * x * x) * _pw(s, -0.5 * K - 2.0))

    def dilate(self, zeta):
        return VPrimeShape(self.K, self.zeta * zeta, self.amplitude)

    def scale(self, c):
        return VPrimeShape(self.K, self.zeta, self.amplitude * c)


@dataclass(frozen=True, eq=False)
class Grid(RadialProfile):
    """Sampled profile with power-law tails attached.

    The smooth factor g(s) = eta * t**(-p0) * (1+t**2)**((p0+p_inf)/2), s = ln t,
    is interpolated by a quintic spline and held constant beyond the nodes,
    which continues eta with its leading power laws at both ends.
    """

    K: float
    s_nodes: np.ndarray
    g_values: np.ndarray
    p0: float
    p_inf: float
    _spline: BSpline = field(init=False, repr=False)

    def __post_init__(self):
        s = np.asarray(self.s_nodes, dtype=float)
        if s.ndim != 1 or s.size < 4 or np.any(np.diff(s) <= 0):
            raise ValueError("Grid needs at least 4 strictly increasing nodes")
        object.__setattr__(self, "_spline", make_interp_spline(s, np.asarray(self.g_values, float), k=5))

    @classmethod
    def from_samples(cls, K, t, eta, p0, p_inf):
        t = np.asarray(t, dtype=float)
        eta = np.asarray(eta, dtype=float)
        s = np.log(t)
        c = 0.5 * (p0 + p_inf)
        g = eta * np.exp(-p0 * s + c * np.logaddexp(0.0, 2.0 * s))
        return cls(K, s, g, float(p0), float(p_inf))

    def _parts(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            s = np.log(t)
        lo, hi = self.s_nodes[0], self.s_nodes[-1]
        sc = np.clip(s, lo, hi)
        inside = (s >= lo) & (s <= hi)
        g = self._spline(sc)
        gs = np.where(inside, self._spline(sc, nu=1), 0.0)
        gss = np.where(inside, self._spline(sc, nu=2), 0.0)
        c = 0.5 * (self.p0 + self.p_inf)
        L1p = np.logaddexp(0.0, 2.0 * s)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            phi = np.exp(self.p0 * s - c * L1p)
            t2 = t * t
            dL = self.p0 / t - 2.0 * c * t / (1.0 + t2)
            ddL = -self.p0 / t2 - 2.0 * c * (1.0 - t2) / (1.0 + t2) ** 2
        return t, g, gs, gss, phi, dL, ddL

    def __call__(self, t):
        _, g, _, _, phi, _, _ = self._parts(t)
        return g * phi

    def deriv(self, t):
        t, g, gs, _, phi, dL, _ = self._parts(t)
        with np.errstate(invalid="ignore"):
            out = phi * (gs / t + g * dL)
        return np.nan_to_num(out)

    def deriv2(self, t):
        t, g, gs, gss, phi, dL, ddL = self._parts(t)
        with np.errstate(invalid="ignore", over="ignore"):
            out = phi * ((gss - gs) / t**2 + 2.0 * gs / t * dL + g * (dL * dL + ddL))
        return np.nan_to_num(out)


@dataclass(frozen=True)
class Dilated(RadialProfile):
    base: RadialProfile
    zeta: float

    @property
    def K(self):
        return self.base.K

    @property
    def p0(self):
        return self.base.p0

    @property
    def p_inf(self):
        return self.base.p_inf

    @property
    def centers(self):
        return tuple(c / self.zeta for c in self.base.centers)

    def _pref(self):
        return self.zeta ** (0.5 * (self.base.K - 2.0))

    def __call__(self, t):
        return self._pref() * self.base(self.zeta * np.asarray(t, dtype=float))

    def deriv(self, t):
        return self._pref() * self.zeta * self.base.deriv(self.zeta * np.asarray(t, dtype=float))

    def deriv2(self, t):
        return self._pref() * self.zeta**2 * self.base.deriv2(self.zeta * np.asarray(t, dtype=float))

    def dilate(self, zeta):
        return Dilated(self.base, self.zeta * zeta)


@dataclass(frozen=True)
class Combo(RadialProfile):
    """Linear combination sum(c_i * eta_i) of profiles sharing K."""

    K: float
    parts: tuple

    @property
    def p0(self):
        return min(p.p0 for _, p in self.parts)

    @property
    def dp0(self):
        return min(p.dp0 for _, p in self.parts)

    @property
    def p_inf(self):
        return min(p.p_inf for _, p in self.parts)

    @property
    def centers(self):
        out = []
        for _, p in self.parts:
            out.extend(p.centers)
        return tuple(sorted(set(out)))

    def __call__(self, t):
        return sum(c * p(t) for c, p in self.parts)

    def deriv(self, t):
        return sum(c * p.deriv(t) for c, p in self.parts)

    def deriv2(self, t):
        return sum(c * p.deriv2(t) for c, p in self.parts)

    def dilate(self, zeta):
        return Combo(self.K, tuple((c, p.dilate(zeta)) for c, p in self.parts))

    def scale(self, c):
        return Combo(self.K, tuple((c * ci, p) for ci, p in self.parts))


def _combine(a: RadialProfile, b: RadialProfile) -> RadialProfile:
    pa = a.parts if isinstance(a, Combo) else ((1.0, a),)
    pb = b.parts if isinstance(b, Combo) else ((1.0, b),)
    return Combo(a.K, pa + pb)


# ---------------------------------------------------------------------------
# harmonic expansions


@dataclass(frozen=True)
class Term:
    k: int
    parity: str
    profile: RadialProfile

    def angular(self, theta):
        return np.cos(self.k * theta) if self.parity == "cos" else np.sin(self.k * theta)


@dataclass(frozen=True)
class HarmonicFunction:
    """u(x) = sum over terms of eta(t) * cos(k theta) or sin(k theta), r = t**tau."""

    params: ParamPoint
    terms: tuple = ()

    def __post_init__(self):
        terms = tuple(self.terms)
        seen = set()
        K = _params.derive(self.params).K
        for term in terms:
            if term.k < 0 or int(term.k) != term.k:
                raise InvalidParams(f"angular index must be a nonnegative integer, got {term.k}")
            if term.parity not in ("cos", "sin"):
                raise InvalidParams(f"parity must be 'cos' or 'sin', got {term.parity!r}")
            if term.k == 0 and term.parity != "cos":
                raise InvalidParams("k=0 terms carry the single parity 'cos'")
            key = (term.k, term.parity)
            if key in seen:
                raise InvalidParams(f"duplicate term for (k, parity) = {key}")
            seen.add(key)
            if abs(term.profile.K - K) > 1e-12 * K:
                raise InvalidParams("profile K does not match the parameter point")
            if term.k >= 1 and not term.profile.p0 > 0:
                raise InvalidParams("k>=1 profiles must vanish at t=0")
            if term.k == 0 and term.profile.p0 != 0:
                raise InvalidParams("k=0 profiles must be regular (even) at t=0")
        object.__setattr__(self, "terms", terms)

    def __add__(self, other: "HarmonicFunction") -> "HarmonicFunction":
        if other.params != self.params:
            raise InvalidParams("cannot add functions at different parameter points")
        merged = {(t.k, t.parity): t.profile for t in self.terms}
        for t in other.terms:
            key = (t.k, t.parity)
            merged[key] = _combine(merged[key], t.profile) if key in merged else t.profile
        return HarmonicFunction(self.params, tuple(Term(k, par, prof) for (k, par), prof in merged.items()))

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, c: float) -> "HarmonicFunction":
        return HarmonicFunction(self.params, tuple(Term(t.k, t.parity, t.profile.scale(c)) for t in self.terms))

    def __rmul__(self, c):
        return self.scale(float(c))

    def dilate(self, lam: float) -> "HarmonicFunction":
        """x -> lam**(-a) u(lam x)."""
        tau = _params.derive(self.params).tau
        zeta = float(lam) ** (1.0 / tau)
        return HarmonicFunction(self.params, tuple(Term(t.k, t.parity, t.profile.dilate(zeta)) for t in self.terms))

    def radial_part(self) -> "HarmonicFunction":
        return HarmonicFunction(self.params, tuple(t for t in self.terms if t.k == 0))

    def term(self, k: int, parity: str = "cos"):
        for t in self.terms:
            if t.k == k and t.parity == parity:
                return t.profile
        return None

    def __call__(self, x1, x2):
        """Evaluate in Cartesian coordinates."""
        x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
        tau = _params.derive(self.params).tau
        r = np.hypot(x1, x2)
        theta = np.arctan2(x2, x1)
        t = r ** (1.0 / tau)
        return sum(term.profile(t) * term.angular(theta) for term in self.terms) if self.terms else 0 * r


def radial(p: ParamPoint, profile: RadialProfile) -> HarmonicFunction:
    return HarmonicFunction(p, (Term(0, "cos", profile),))


def mode(p: ParamPoint, k: int, profile: RadialProfile, parity: str = "cos") -> HarmonicFunction:
    return HarmonicFunction(p, (Term(k, parity, profile),))


# ---------------------------------------------------------------------------
# bubbles and constants


def bubble_V(K: float, zeta: float = 1.0) -> Bubble:
    return Bubble(K, (K * (K - 2.0)) ** ((K - 2.0) / 4.0), zeta, "V")


def bubble_U(p: ParamPoint, lam: float = 1.0) -> Bubble:
    d = _params.derive(p)
    if not lam > 0:
        raise InvalidParams(f"scale must be positive, got {lam}")
    return Bubble(d.K, d.C_ab, float(lam) ** (1.0 / d.tau), "U")


def _log_beta_half(K: float) -> float:
    # ln of 2 * int_0^inf t^(K-1) (1+t^2)^(-K) dt = ln B(K/2, K/2)
    return 2.0 * gammaln(0.5 * K) - gammaln(K)


def c_ab_closed(p: ParamPoint) -> float:
    d = _params.derive(p)
    return math.exp(-(math.log(math.pi * d.tau) + _log_beta_half(d.K)) / d.q)


@lru_cache(maxsize=256)
def _c_ab_cached(a: float, b: float) -> float:
    p = ParamPoint(a, b)
    d = _params.derive(p)
    c = c_ab_closed(p)
    prof = Bubble(d.K, c, 1.0, "B")
    val = 2.0 * math.pi * _star_q_radial(d, prof, QuadConfig(rel_tol=1e-12))
    if abs(val - 1.0) > 1e-8:
        raise NoConvergence(f"normalized bubble check failed: ||B||_*^q = {val!r}")
    return c


def c_ab(p: ParamPoint) -> float:
    """Amplitude making the bubble unit in the weighted L^q norm."""
    return _c_ab_cached(p.a, p.b)


def normalized_bubble_B(p: ParamPoint, lam: float = 1.0) -> Bubble:
    d = _params.derive(p)
    if not lam > 0:
        raise InvalidParams(f"scale must be positive, got {lam}")
    return Bubble(d.K, c_ab(p), float(lam) ** (1.0 / d.tau), "B")


def norm_U_sq_closed(p: ParamPoint) -> float:
    """||U||^2 = pi tau^(1-K) [K(K-2)]^(K/2) B(K/2, K/2)."""
    d = _params.derive(p)
    K = d.K
    return math.exp(math.log(math.pi) + (1.0 - K) * math.log(d.tau)
                    + 0.5 * K * math.log(K * (K - 2.0)) + _log_beta_half(K))


def _require_symmetric(p: ParamPoint):
    d = _params.derive(p)
    if d.region == Region.BelowFS:
        raise InvalidParams(f"b={d.b} lies below b_FS(a)={d.b_fs:.9g}; the radial bubble is not extremal")
    return d


def best_constant_S(p: ParamPoint) -> float:
    """S_ab = ||U||^(2 - 4/q) = (||U||^2)^(2/K)."""
    d = _require_symmetric(p)
    return norm_U_sq_closed(p) ** (2.0 / d.K)


def overlap_d_closed(p: ParamPoint) -> float:
    d = _params.derive(p)
    return 2.0 * math.pi * d.tau * c_ab(p) ** (d.q - 1.0) / d.K


def abs_cos_power_integral(q: float) -> float:
    """int_0^{2 pi} |cos theta|**q d theta."""
    return 2.0 * math.sqrt(math.pi) * math.exp(gammaln(0.5 * (q + 1.0)) - gammaln(0.5 * q + 1.0))


# ---------------------------------------------------------------------------
# norms


def _ck(k: int) -> float:
    return 2.0 * math.pi if k == 0 else math.pi


def _scales(*profiles):
    out = []
    for p in profiles:
        out.extend(p.centers)
    return tuple(out)


def _bilinear_grad(d, k, eta, xi, cfg):
    K, tau = d.K, d.tau

    def f(t):
        val = eta.deriv(t) * xi.deriv(t) * t ** (K - 1.0) / tau
        if k:
            val = val + tau * k * k * eta(t) * xi(t) * t ** (K - 3.0)
        return val

    a0 = eta.dp0 + xi.dp0 + K - 1.0
    ainf = eta.p_inf + xi.p_inf + 2.0 - K + 1.0
    if k:
        a0 = min(a0, eta.p0 + xi.p0 + K - 3.0)
        ainf = min(ainf, eta.p_inf + xi.p_inf - K + 3.0)
    return _ck(k) * integrate_halfline(f, TailSpec(a0, ainf), cfg, _scales(eta, xi))


def inner(u: HarmonicFunction, v: HarmonicFunction, cfg: QuadConfig | None = None) -> float:
    """Gradient inner product int |x|^(-2a) grad u . grad v dx."""
    d = _params.derive(u.params)
    total = 0.0
    for tu in u.terms:
        xi = v.term(tu.k, tu.parity)
        if xi is not None:
            total += _bilinear_grad(d, tu.k, tu.profile, xi, cfg)
    return total


def grad_norm_sq(u: HarmonicFunction, cfg: QuadConfig | None = None) -> float:
    d = _params.derive(u.params)
    return sum(_bilinear_grad(d, t.k, t.profile, t.profile, cfg) for t in u.terms)


def weighted_l2(u: HarmonicFunction, cfg: QuadConfig | None = None) -> float:
    """int |x|^(-qb) U^(q-2) u^2 dx."""
    d = _params.derive(u.params)
    U = bubble_U(u.params)
    total = 0.0
    for t_ in u.terms:
        eta = t_.profile

        def f(t, eta=eta):
            return U(t) ** (d.q - 2.0) * eta(t) ** 2 * t ** (d.K - 1.0)

        tails = TailSpec(2 * eta.p0 + d.K - 1.0, 2 * eta.p_inf + 4.0 - d.K + 1.0)
        total += _ck(t_.k) * d.tau * integrate_halfline(f, tails, cfg, _scales(eta))
    return total


def _star_q_radial(d, eta, cfg):
    q = d.q

    def f(t):
        return np.abs(eta(t)) ** q * t ** (d.K - 1.0)

    tails = TailSpec(q * eta.p0 + d.K - 1.0, q * eta.p_inf - d.K + 1.0)
    return d.tau * integrate_halfline(f, tails, cfg, _scales(eta))


_GJ_NODES = 24
_ON_CIRCLE = 1e-7


@lru_cache(maxsize=64)
def _jacobi_rule(alpha: float, beta: float):
    x, w = roots_jacobi(_GJ_NODES, alpha, beta)
    return x, w


def _trig_roots(coef: np.ndarray) -> np.ndarray:
    """Roots in z = exp(i theta) of z**kmax * phi, one row per coefficient row.

    Rows whose leading coefficient vanishes go through np.roots and are
    padded with repeats of their first angle (zero-length pieces).
    """
    n, D1 = coef.shape
    D = D1 - 1
    out = np.empty((n, D), dtype=complex)
    scale = np.max(np.abs(coef), axis=1)
    good = np.abs(coef[:, D]) > 1e-13 * scale
    if np.any(good):
        cg = coef[good]
        comp = np.zeros((cg.shape[0], D, D), dtype=complex)
        comp[:, 0, :] = -cg[:, D - 1::-1] / cg[:, D:D + 1]
        if D > 1:
            idx = np.arange(D - 1)
            comp[:, idx + 1, idx] = 1.0
        out[good] = np.linalg.eigvals(comp)
    for i in np.nonzero(~good)[0]:
        r = np.roots(coef[i, ::-1]) if scale[i] > 0 else np.zeros(0)
        if r.size == 0:
            r = np.array([1.0 + 1.0])  # off the circle, angle 0
        out[i] = np.concatenate([r, np.full(D - r.size, r[0])])
    return out


def _angular_lq(etas: np.ndarray, terms, q: float) -> np.ndarray:
    """int_0^{2pi} |sum_j eta_j(t) Psi_j(theta)|^q d theta for each row of ``etas``.

    The angular function is a real trigonometric polynomial.  Its roots split
    the circle into arcs; each arc is integrated by Gauss-Jacobi with weight
    exponent q at the ends that are true zeros, which absorbs the |.|^q kink.
    """
    kmax = max(t.k for t in terms)
    n = etas.shape[0]
    if kmax == 0:
        return 2.0 * np.pi * np.abs(etas.sum(axis=1)) ** q
    D = 2 * kmax
    coef = np.zeros((n, D + 1), dtype=complex)
    for j, t in enumerate(terms):
        e = etas[:, j]
        if t.k == 0:
            coef[:, kmax] += e
        elif t.parity == "cos":
            coef[:, kmax + t.k] += 0.5 * e
            coef[:, kmax - t.k] += 0.5 * e
        else:
            coef[:, kmax + t.k] += -0.5j * e
            coef[:, kmax - t.k] += 0.5j * e
    roots = _trig_roots(coef)
    ang = np.mod(np.angle(roots), 2.0 * np.pi)
    on = np.abs(np.abs(roots) - 1.0) < _ON_CIRCLE
    order = np.argsort(ang, axis=1)
    ang = np.take_along_axis(ang, order, axis=1)
    on = np.take_along_axis(on, order, axis=1)
    lo = ang
    hi = np.concatenate([ang[:, 1:], ang[:, :1] + 2.0 * np.pi], axis=1)
    on_hi = np.concatenate([on[:, 1:], on[:, :1]], axis=1)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    total = np.zeros(n)
    for a_on in (False, True):
        for b_on in (False, True):
            mask = (on_hi == a_on) & (on == b_on)
            if not mask.any():
                continue
            alpha, beta = (q if a_on else 0.0), (q if b_on else 0.0)
            x, w = _jacobi_rule(alpha, beta)
            rows = np.nonzero(mask)[0]
            theta = mid[mask][:, None] + half[mask][:, None] * x[None, :]
            phi = np.zeros(theta.shape)
            for j, t in enumerate(terms):
                phi += etas[rows, j][:, None] * t.angular(theta)
            g = np.abs(phi) ** q / ((1.0 - x) ** alpha * (1.0 + x) ** beta)[None, :]
            np.add.at(total, rows, half[mask] * (g @ w))
    return total


def star_norm(u: HarmonicFunction, cfg: QuadConfig | None = None) -> float:
    """(int |x|^(-qb) |u|^q dx)^(1/q)."""
    d = _params.derive(u.params)
    q = d.q
    if not u.terms:
        return 0.0
    if len(u.terms) == 1:
        term = u.terms[0]
        ang = 2.0 * math.pi if term.k == 0 else abs_cos_power_integral(q)
        return (ang * _star_q_radial(d, term.profile, cfg)) ** (1.0 / q)

    terms = u.terms

    def f(t):
        t = np.asarray(t, dtype=float)
        etas = np.stack([term.profile(t) for term in terms], axis=1)
        return _angular_lq(etas, terms, q) * t ** (d.K - 1.0)

    p0 = min(term.profile.p0 for term in terms)
    pinf = min(term.profile.p_inf for term in terms)
    tails = TailSpec(q * p0 + d.K - 1.0, q * pinf - d.K + 1.0)
    scales = _scales(*(term.profile for term in terms))
    return (d.tau * integrate_halfline(f, tails, cfg, scales)) ** (1.0 / q)


@dataclass(frozen=True)
class NormReport:
    grad_norm_sq: float
    star_norm: float


def norms(u: HarmonicFunction, cfg: QuadConfig | None = None) -> NormReport:
    return NormReport(grad_norm_sq(u, cfg), star_norm(u, cfg))


def overlap_d(p: ParamPoint, cfg: QuadConfig | None = None) -> float:
    """int |y|^(-qb) B^(q-1) dy by quadrature."""
    d = _params.derive(p)
    B = normalized_bubble_B(p)

    def f(t):
        return B(t) ** (d.q - 1.0) * t ** (d.K - 1.0)

    return 2.0 * math.pi * d.tau * integrate_halfline(f, TailSpec(d.K - 1.0, 3.0), cfg)


# ---------------------------------------------------------------------------
# kernel elements and residuals


def kernel_elements(p: ParamPoint) -> list:
    """[Z0] off the FS curve, [Z0, Z1, Z2] on it."""
    d = _require_symmetric(p)
    out = [radial(p, Eta0(d.K))]
    if d.region == Region.OnFS:
        out.append(mode(p, 1, VPrimeShape(d.K), "cos"))
        out.append(mode(p, 1, VPrimeShape(d.K), "sin"))
    return out


def dilation_tangent(p: ParamPoint) -> HarmonicFunction:
    """d/dlam of U_lam at lam = 1, i.e. -aU + x . grad U."""
    d = _params.derive(p)
    return radial(p, Eta0(d.K, 1.0, d.beta * d.C_ab / d.tau))


def _residual_t(t, eta, d2, d1, K, extra):
    lhs = t ** (K - 1.0) * d2 + (K - 1.0) * t ** (K - 2.0) * d1
    res = lhs + sum(extra)
    scale = np.abs(t ** (K - 1.0) * d2) + np.abs((K - 1.0) * t ** (K - 2.0) * d1) + sum(np.abs(e) for e in extra)
    return np.abs(res) / np.where(scale > 0, scale, 1.0)


def pde_residual(p: ParamPoint, prof: RadialProfile, npts: int = 200) -> float:
    """Largest relative residual of the equation ``prof`` is meant to solve.

    BubbleV: (t^(K-1) V')' + t^(K-1) V^(q-1) = 0 in t.
    BubbleU / BubbleB: the weighted Euler-Lagrange equation in r, evaluated
    from the explicit r-space formula (coefficient 1 for U, S_ab for B).
    Eta0 / VPrimeShape: the linearized operator for k = 0 / k = 1 at mu = q-1.
    """
    t = np.logspace(-3, 3, npts)
    d = _params.derive(p)
    if isinstance(prof, Bubble) and prof.kind == "V":
        K = prof.K
        q = 2.0 * K / (K - 2.0)
        extra = [t ** (K - 1.0) * np.abs(prof(t)) ** (q - 1.0)]
        return float(np.max(_residual_t(t, prof(t), prof.deriv2(t), prof.deriv(t), K, extra)))
    if isinstance(prof, Bubble) and prof.kind in ("U", "B"):
        a, b, q = d.a, d.b, d.q
        lam = prof.zeta ** d.tau
        # r-space amplitude: prof.amplitude * lam^(-a); profile (1 + (lam r)^g)^(-e)
        A = prof.amplitude * lam ** (-a)
        g = -a * (q - 2.0)
        e = 2.0 / (q - 2.0)
        r = t ** d.tau
        y = (lam * r) ** g
        u = A * (1.0 + y) ** (-e)
        du = -A * e * g * lam**g * r ** (g - 1.0) * (1.0 + y) ** (-e - 1.0)
        ddu = -A * e * g * lam**g * ((g - 1.0) * r ** (g - 2.0) * (1.0 + y) ** (-e - 1.0)
                                     - (e + 1.0) * g * lam**g * r ** (2.0 * g - 2.0) * (1.0 + y) ** (-e - 2.0))
        coef = 1.0 if prof.kind == "U" else best_constant_S(p)
        t1 = r ** (1.0 - 2.0 * a) * ddu
        t2 = (1.0 - 2.0 * a) * r ** (-2.0 * a) * du
        t3 = coef * r ** (1.0 - b * q) * u ** (q - 1.0)
        return float(np.max(np.abs(t1 + t2 + t3) / (np.abs(t1) + np.abs(t2) + np.abs(t3))))
    if isinstance(prof, (Eta0, VPrimeShape)):
        K = d.K
        if abs(prof.K - K) > 1e-12 * K:
            raise InvalidParams("profile K does not match the parameter point")
        k = 0 if isinstance(prof, Eta0) else 1
        V = bubble_V(K)
        eta = prof(t)
        extra = [(d.q - 1.0) * V(t) ** (d.q - 2.0) * t ** (K - 1.0) * eta]
        if k:
            extra.append(-d.tau**2 * t ** (K - 3.0) * eta)
        return float(np.max(_residual_t(t, eta, prof.deriv2(t), prof.deriv(t), K, extra)))
    raise TypeError(f"no reference equation for profile of type {type(prof).__name__}")
