"""Deficit quotient, distance to the bubble manifold and test families.

The manifold is M = {c U_lam : c != 0, lam > 0}.  The distance is computed
two ways: through the nonlinear pairing m(u) = sup_lam (u, |x|^(-qb) B_lam^(q-1))^2
(dist^2 = ||u||^2 - S m(u)) and directly, by projecting u onto the line
spanned by U_lam in the gradient inner product and optimizing over lam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import params as _params
from .errors import FitDegenerate, InvalidParams
from .numerics import QuadConfig, TailSpec, integrate_halfline, maximize_log_scale
from .params import ParamPoint, Region
from .profiles import (
    Combo, HarmonicFunction, Term, VPrimeShape, best_constant_S, bubble_U, grad_norm_sq,
    inner, norm_U_sq_closed, normalized_bubble_B, radial, star_norm,
)

__all__ = [
    "LOG_LAM_BRACKET", "MValue", "DeficitReport", "ExpansionFit",
    "pair_with_bubble", "m_of", "dist_to_M", "dist_direct", "deficit_report",
    "two_bubble", "two_bubble_quantity", "fit_expansion", "degenerate_sequence",
    "spectral_sequence", "richardson_limit", "TIGHT_QUAD", "FIT_WINDOW", "DIST_FIT_WINDOW",
]

LOG_LAM_BRACKET = (-12.0, 12.0)
TIGHT_QUAD = QuadConfig(rel_tol=1e-13, abs_tol=1e-300)
# Geometric scale windows for the two-bubble fits.  The remainder in the
# overlap expansion is smaller than the leading term only by lam**(2/tau) |ln lam|,
# so the leading power is visible only at very small lam.
FIT_WINDOW = (1e-10, 1e-8)
DIST_FIT_WINDOW = (1e-6, 1e-4)
_M_NODES = 65
_M_TOL = 1e-7


@dataclass(frozen=True)
class MValue:
    value: float
    argmax: float | None     # None when the supremum escapes to lam -> 0 or infinity
    interior: bool


@dataclass(frozen=True)
class DeficitReport:
    grad_sq: float
    star: float
    m_value: float
    m_argmax: float | None
    dist_sq: float
    deficit: float
    E: float                 # nan when undefined
    E_defined: bool


@dataclass(frozen=True)
class ExpansionFit:
    """Free fit limit + coefficient * lam**exponent, plus a fit with the exponent pinned.

    The pinned fit (exponent fixed to -a) is the cleaner coefficient
    estimate: with a free exponent any small exponent error is absorbed
    into the coefficient through the factor lam**(exponent + a).
    """

    exponent: float
    coefficient: float
    limit: float
    residual: float
    pinned_exponent: float
    pinned_coefficient: float
    pinned_limit: float
    pinned_residual: float
    lams: tuple
    values: tuple


def pair_with_bubble(u: HarmonicFunction, lam: float, cfg: QuadConfig | None = None) -> float:
    """int |x|^(-qb) B_lam^(q-1) u dx; only the k=0 term contributes."""
    eta = u.term(0, "cos")
    if eta is None:
        return 0.0
    d = _params.derive(u.params)
    B = normalized_bubble_B(u.params, lam)
    q1 = d.q - 1.0

    def f(t):
        return B(t) ** q1 * eta(t) * t ** (d.K - 1.0)

    tails = TailSpec(eta.p0 + d.K - 1.0, eta.p_inf + 3.0)
    scales = tuple(eta.centers) + B.centers
    return 2.0 * math.pi * d.tau * integrate_halfline(f, tails, cfg, scales)


def m_of(u: HarmonicFunction, cfg: QuadConfig | None = None) -> MValue:
    if u.term(0, "cos") is None:
        return MValue(0.0, None, False)
    res = maximize_log_scale(lambda lam: pair_with_bubble(u, lam, cfg) ** 2,
                             *LOG_LAM_BRACKET, tol=_M_TOL, nodes=_M_NODES)
    if not res.interior:
        return MValue(res.max, None, False)
    return MValue(res.max, res.argmax, True)


def _dist_sq_from(grad_sq: float, S: float, m: MValue) -> float:
    if m.value <= 0.0:
        return grad_sq
    return max(grad_sq - S * m.value, 0.0)


def dist_to_M(u: HarmonicFunction, cfg: QuadConfig | None = None) -> float:
    S = best_constant_S(u.params)
    return math.sqrt(_dist_sq_from(grad_norm_sq(u, cfg), S, m_of(u, cfg)))


def dist_direct(u: HarmonicFunction, cfg: QuadConfig | None = None) -> float:
    """min over (c, lam) of ||u - c U_lam||, with c eliminated in closed form."""
    p = u.params
    grad_sq = grad_norm_sq(u, cfg)
    if u.term(0, "cos") is None:
        return math.sqrt(grad_sq)
    nU = norm_U_sq_closed(p)

    def proj(lam):
        return inner(u, radial(p, bubble_U(p, lam)), cfg) ** 2 / nU

    res = maximize_log_scale(proj, *LOG_LAM_BRACKET, tol=_M_TOL, nodes=_M_NODES)
    return math.sqrt(max(grad_sq - res.max, 0.0))


def deficit_report(u: HarmonicFunction, cfg: QuadConfig | None = None) -> DeficitReport:
    S = best_constant_S(u.params)
    grad_sq = grad_norm_sq(u, cfg)
    star = star_norm(u, cfg)
    m = m_of(u, cfg)
    dist_sq = _dist_sq_from(grad_sq, S, m)
    deficit = grad_sq - S * star**2
    defined = dist_sq > 1e-12 * grad_sq
    E = deficit / dist_sq if defined else float("nan")
    return DeficitReport(grad_sq, star, m.value, m.argmax, dist_sq, deficit, E, defined)


# ---------------------------------------------------------------------------
# test families


def two_bubble(p: ParamPoint, lam: float) -> HarmonicFunction:
    """B + B_lam as a single radial term."""
    if not 0.0 < lam < 1.0:
        raise InvalidParams(f"two-bubble scale must lie in (0, 1), got {lam}")
    d = _params.derive(p)
    return radial(p, Combo(d.K, ((1.0, normalized_bubble_B(p)), (1.0, normalized_bubble_B(p, lam)))))


def two_bubble_quantity(p: ParamPoint, quantity: str, lam: float, cfg: QuadConfig | None = None) -> float:
    u = two_bubble(p, lam)
    if quantity == "grad_sq":
        return grad_norm_sq(u, cfg)
    if quantity == "star_sq":
        return star_norm(u, cfg) ** 2
    rep = deficit_report(u, cfg)
    if quantity == "dist_sq":
        return rep.dist_sq
    if quantity == "E":
        return rep.E
    raise ValueError(f"unknown quantity {quantity!r}")


def _fit_power(lams, values, noise):
    """Fit values = limit + coeff * lam**p from log-log successive differences."""
    lams = np.asarray(lams, dtype=float)
    values = np.asarray(values, dtype=float)
    if lams.size < 6:
        raise FitDegenerate("need at least 6 sample points")
    ratios = lams[1:] / lams[:-1]
    r = float(np.mean(ratios))
    if not np.allclose(ratios, r, rtol=1e-9) or r == 1.0:
        raise FitDegenerate("sample scales must be geometric")
    dq = np.diff(values)
    if np.any(np.abs(dq) <= noise) or not (np.all(dq > 0) or np.all(dq < 0)):
        raise FitDegenerate("successive differences are below the noise floor or change sign")
    x = np.log(lams[:-1])
    y = np.log(np.abs(dq))
    slope, intercept = np.polyfit(x, y, 1)
    coeff = np.sign(dq[0]) * math.exp(intercept) / (r**slope - 1.0)
    limit = float(np.mean(values - coeff * lams**slope))
    model = limit + coeff * lams**slope
    return float(slope), float(coeff), limit, float(np.max(np.abs(values - model)))


def fit_expansion(p: ParamPoint, quantity: str, lam_grid: Sequence[float],
                  cfg: QuadConfig | None = None) -> ExpansionFit:
    """Fit quantity(lam) = limit + coefficient * lam**exponent over a geometric grid."""
    lams = np.sort(np.asarray(lam_grid, dtype=float))
    if lams[0] < 1e-12 or lams[-1] > 1e-1:
        raise InvalidParams("two-bubble fit scales must lie in [1e-12, 1e-1]")
    cfg = cfg or TIGHT_QUAD
    vals = np.array([two_bubble_quantity(p, quantity, float(lam), cfg) for lam in lams])
    noise = 1e3 * cfg.rel_tol * float(np.max(np.abs(vals)))
    slope, coeff, limit, resid = _fit_power(lams, vals, noise)
    pin = -_params.derive(p).a
    A = np.column_stack([np.ones_like(lams), lams**pin])
    (p_lim, p_coef), *_ = np.linalg.lstsq(A, vals, rcond=None)
    p_res = float(np.max(np.abs(vals - A @ np.array([p_lim, p_coef]))))
    return ExpansionFit(slope, coeff, limit, resid, pin, float(p_coef), float(p_lim), p_res,
                        tuple(lams.tolist()), tuple(vals.tolist()))


def degenerate_sequence(p: ParamPoint, eps_list: Sequence[float],
                        cfg: QuadConfig | None = None) -> list:
    """E(U + eps Z1) on the FS curve, Z1 the k=1 cosine kernel element."""
    d = _params.derive(p)
    if d.region != Region.OnFS:
        raise InvalidParams("the degenerate direction exists only on the FS curve")
    cfg = cfg or TIGHT_QUAD
    U = radial(p, bubble_U(p))
    out = []
    for eps in eps_list:
        u = U + HarmonicFunction(p, (Term(1, "cos", VPrimeShape(d.K, 1.0, float(eps))),))
        out.append((float(eps), deficit_report(u, cfg)))
    return out


def spectral_sequence(p: ParamPoint, e3: HarmonicFunction, eps_list: Sequence[float],
                      cfg: QuadConfig | None = None) -> list:
    """E(U + eps e3) for each eps."""
    cfg = cfg or TIGHT_QUAD
    U = radial(p, bubble_U(p))
    return [(float(eps), deficit_report(U + e3.scale(float(eps)), cfg)) for eps in eps_list]


def richardson_limit(eps: Sequence[float], values: Sequence[float], powers: Sequence[float]) -> float:
    """Extrapolate values(eps) to eps -> 0, eliminating the listed powers of eps.

    Needs len(powers) + 1 samples; solves the small Vandermonde-type system.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    if eps.size != len(powers) + 1:
        raise ValueError("need exactly len(powers) + 1 samples")
    A = np.column_stack([np.ones_like(eps)] + [eps**pw for pw in powers])
    return float(np.linalg.solve(A, values)[0])
