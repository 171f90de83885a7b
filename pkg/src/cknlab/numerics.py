"""Half-line quadrature, bracketed root finding and log-scale maximization.

The default half-line rule is the trapezoid rule in ``x = ln t``.  Every
integrand met in this package is a product of powers of ``t`` and ``1 + t^2``
(possibly dilated), which becomes a function analytic in a strip around the
real ``x`` axis with exponentially decaying ends.  For such functions the
trapezoid rule converges geometrically in ``1/h`` and the difference between
two successive halvings is a very pessimistic error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple

import numpy as np
from scipy import integrate, optimize

from .errors import BadTails, NoBracket, NoConvergence

__all__ = [
    "TailSpec",
    "QuadConfig",
    "LogMax",
    "integrate_halfline",
    "integrate_compactified",
    "find_root",
    "golden_section_max",
    "maximize_log_scale",
]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

_X_LIMIT = 700.0  # |ln t| beyond which exp() overflows
_TAIL_PROBE = 4.0  # width (in ln t) of the window used for the BadTails test


@dataclass(frozen=True)
class TailSpec:
    """Power-law endpoint behaviour of an integrand.

    ``alpha0``: integrand ~ t**alpha0 as t -> 0+.
    ``alpha_inf``: integrand ~ t**(-alpha_inf) as t -> infinity.
    """

    alpha0: float
    alpha_inf: float

    def __post_init__(self):
        if not self.alpha0 > -1.0:
            raise BadTails(f"alpha0={self.alpha0} is not integrable at 0")
        if not self.alpha_inf > 1.0:
            raise BadTails(f"alpha_inf={self.alpha_inf} is not integrable at infinity")


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_refinements: int = 30

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be a positive integer")


DEFAULT_QUAD = QuadConfig()


def _safe_eval(g: Callable, x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        vals = np.asarray(g(x), dtype=float)
    return np.broadcast_to(vals, np.shape(x)).astype(float)


def _extend(g, start: float, direction: int, rate: float, target: float) -> float:
    """Walk outward from ``start`` until the remaining tail is below ``target``.

    The tail beyond x is bounded by |g(x)| / rate, using the declared
    exponential decay rate of g in the log variable.
    """
    x = start
    while True:
        window = x + direction * np.linspace(0.0, 1.0, 5)
        vals = _safe_eval(g, window)
        if not np.all(np.isfinite(vals)):
            raise BadTails(f"non-finite integrand near ln t = {x:.3g}")
        x = float(window[-1])
        if np.max(np.abs(vals)) / rate <= target:
            return x
        if abs(x) > _X_LIMIT:
            raise BadTails("integrand does not decay within the representable range")


def _check_tail(g, x_end: float, direction: int, rate: float) -> None:
    # both samples lie beyond the truncation point, deep in the declared tail
    inner, outer = _safe_eval(g, np.array([x_end, x_end + direction * _TAIL_PROBE]))
    if abs(inner) < 1e-280 or abs(outer) < 1e-280:
        return
    predicted = abs(inner) * math.exp(-rate * _TAIL_PROBE)
    if abs(outer) > 100.0 * predicted:
        raise BadTails(
            f"integrand decays slower than declared beyond ln t = {x_end:.3g} "
            f"(observed {abs(outer):.3e}, predicted {predicted:.3e})"
        )


def integrate_halfline(
    f: Callable[[np.ndarray], np.ndarray],
    tails: TailSpec,
    cfg: QuadConfig | None = None,
    scales: Iterable[float] = (1.0,),
) -> float:
    """Integrate ``f`` over (0, inf) given its power-law tails.

    ``f`` must accept a numpy array of ``t`` values.  ``scales`` lists the
    t-locations of the integrand's features (bubble centres); the truncated
    range always covers all of them, which is how scale-separated integrands
    are handled.
    """
    cfg = cfg or DEFAULT_QUAD

    def g(x):
        t = np.exp(x)
        return f(t) * t

    centers = np.log(np.asarray(list(scales), dtype=float))
    lo, hi = float(centers.min()) - 1.0, float(centers.max()) + 1.0

    # magnitude estimate for the relative part of the truncation target
    probe = np.linspace(lo - 4.0, hi + 4.0, 65)
    pv = _safe_eval(g, probe)
    pv[~np.isfinite(pv)] = 0.0
    magnitude = float(np.sum(np.abs(pv)) * (probe[1] - probe[0]))
    target = 1e-3 * max(cfg.abs_tol, cfg.rel_tol * magnitude)

    rate0 = tails.alpha0 + 1.0
    rate_inf = tails.alpha_inf - 1.0
    lo = _extend(g, lo, -1, rate0, target)
    hi = _extend(g, hi, +1, rate_inf, target)
    _check_tail(g, lo, -1, rate0)
    _check_tail(g, hi, +1, rate_inf)

    n = max(64, int(math.ceil((hi - lo) / 0.5)))
    h = (hi - lo) / n
    x = lo + h * np.arange(n + 1)
    vals = _safe_eval(g, x)
    total = h * (np.sum(vals) - 0.5 * (vals[0] + vals[-1]))
    for level in range(cfg.max_refinements):
        mid = lo + h * (np.arange(n) + 0.5)
        mv = _safe_eval(g, mid)
        if not np.all(np.isfinite(mv)):
            raise NoConvergence("non-finite integrand value during refinement")
        new_total = 0.5 * total + 0.5 * h * np.sum(mv)
        h *= 0.5
        n *= 2
        delta = abs(new_total - total)
        total = new_total
        if level >= 1 and delta <= max(cfg.abs_tol, cfg.rel_tol * abs(total)):
            return float(total)
        if n > 2**24:
            break
    raise NoConvergence(
        f"half-line trapezoid did not reach rel_tol={cfg.rel_tol:g} "
        f"(last change {delta:.3e}, value {total:.6e})"
    )


def integrate_compactified(
    f: Callable[[np.ndarray], np.ndarray],
    tails: TailSpec,
    cfg: QuadConfig | None = None,
) -> float:
    """Independent route: map t -> s = t^2/(1+t^2) and use adaptive Gauss-Kronrod.

    When ``tails`` implies an integrable blow-up s**A or (1-s)**B at an end
    of (0, 1), that algebraic factor is handed to QUADPACK's weighted rule so
    only the bounded remainder is sampled.
    """
    cfg = cfg or DEFAULT_QUAD
    A = 0.5 * (tails.alpha0 - 1.0)
    B = 0.5 * (tails.alpha_inf - 3.0)
    wA = min(A, 0.0)
    wB = min(B, 0.0)

    def smooth(s):
        # the weighted rule samples the endpoints themselves; evaluate just inside
        s = min(max(s, 1e-300), 1.0 - 2.0**-53)
        t = math.sqrt(s / (1.0 - s))
        jac = 0.5 / (math.sqrt(s) * (1.0 - s) ** 1.5)
        val = float(np.asarray(f(np.array([t])))[0]) * jac
        if wA == 0.0 and wB == 0.0:
            return val
        denom = s**wA * (1.0 - s) ** wB
        return val / denom if math.isfinite(denom) else 0.0

    opts = dict(epsabs=cfg.abs_tol, epsrel=max(cfg.rel_tol, 1e-14), limit=400)
    if wA == 0.0 and wB == 0.0:
        val, err = integrate.quad(smooth, 0.0, 1.0, **opts)
    else:
        val, err = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(wA, wB), **opts)
    if not err <= max(cfg.abs_tol, 10 * cfg.rel_tol * abs(val)):
        raise NoConvergence(f"compactified quadrature error estimate {err:.2e} too large")
    return float(val)


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Bracketed root of a continuous scalar function (Brent's method)."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise NoBracket(f"f({lo})={flo:.3e} and f({hi})={fhi:.3e} have the same sign")
    return float(optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))


def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10):
    """Maximize a unimodal ``f`` on [a, b]; returns (x, f(x))."""
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


class LogMax(NamedTuple):
    argmax: float
    max: float
    interior: bool


def maximize_log_scale(
    f: Callable[[float], float],
    log_lo: float,
    log_hi: float,
    tol: float = 1e-9,
    nodes: int = 33,
    edge_cells: int = 2,
) -> LogMax:
    """Maximize ``f(lam)`` over lam in [exp(log_lo), exp(log_hi)].

    A uniform grid in ln(lam) locates the best cell, which is then refined by
    golden-section search.  ``interior`` is False when the grid maximum lies
    within ``edge_cells`` cells of either end (the supremum escapes to 0 or
    infinity); the returned value is then the grid value itself.
    """
    nodes = max(int(nodes), 33)
    xs = np.linspace(log_lo, log_hi, nodes)
    vals = np.array([f(math.exp(x)) for x in xs])
    if np.ptp(vals) <= 1e-300 + 1e-15 * np.max(np.abs(vals)):
        mid = 0.5 * (log_lo + log_hi)
        return LogMax(math.exp(mid), float(vals[nodes // 2]), False)
    i = int(np.argmax(vals))
    if i < edge_cells or i > nodes - 1 - edge_cells:
        return LogMax(math.exp(xs[i]), float(vals[i]), False)
    x, v = golden_section_max(lambda x: f(math.exp(x)), xs[i - 1], xs[i + 1], tol)
    if v < vals[i]:
        x, v = xs[i], vals[i]
    return LogMax(math.exp(x), float(v), True)
