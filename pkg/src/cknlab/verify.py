"""Self-verification suite: one check per acceptance criterion.

Each ``criterion_N`` returns a :class:`CriterionResult`; :func:`run_all`
runs them in order.  ``quick=True`` uses a coarse eigensolver mesh, smaller
randomized suites, and skips the two-bubble expansion fits.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import beta as beta_fn

from . import params as _params
from .errors import CKNError
from .numerics import TailSpec, integrate_compactified, integrate_halfline
from .params import ParamPoint
from .profiles import (
    Eta0, HarmonicFunction, Term, VPrimeShape, best_constant_S, bubble_U, c_ab, grad_norm_sq,
    kernel_elements, mode, normalized_bubble_B, overlap_d, pde_residual, radial, star_norm,
)
from .spectrum import GridConfig, full_spectrum, kernel_dimension, mode_problem, sign_changes, solve_mode, third_eigenfunction
from .stability import (
    FIT_WINDOW, TIGHT_QUAD, deficit_report, degenerate_sequence, dist_direct,
    dist_to_M, fit_expansion, richardson_limit, spectral_sequence, two_bubble_quantity,
)

__all__ = ["CriterionResult", "FIG2_ROWS", "QUICK_GRID", "CRITERIA", "run_all", "random_params"]

# a, b_FS, b*_FS, b*, selection non-empty
FIG2_ROWS = (
    (-0.5, -0.052786, 0.118033, 0.309791, False),
    (-0.6, -0.085504, 0.079428, 0.082212, False),
    (-0.641867, -0.101699, 0.059573, 0.059573, True),
    (-0.7, -0.126537, 0.028917, 0.025795, True),
    (-0.8, -0.175304, -0.031000, -0.037875, True),
    (-1.0, -0.292893, -0.171572, -0.181928, True),
    (-2.0, -1.105572, -1.055728, -1.063273, True),
    (-3.0, -2.051316, -2.026334, -2.030511, True),
    (-4.0, -3.029857, -3.015154, -3.017701, True),
    (-5.0, -4.019419, -4.009804, -4.011497, True),
    (-10.0, -9.004962, -9.002487, -9.002933, True),
)

QUICK_GRID = GridConfig(h_max=0.08, rel_tol=1e-5, min_levels=2, max_levels=4)
SWEEP_SEED = 20240601

P_MAIN = ParamPoint(-1.0, -0.25)
P_K0 = ParamPoint(-1.0, -0.1)
P_FS = ParamPoint(-1.0, -0.2928932)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    skipped: bool = False
    checks: tuple = ()       # (label, ok, info) for every sub-check

    def line(self) -> str:
        tag = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        return f"[{tag}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


class _Checks:
    """Collects named sub-checks of one criterion."""

    def __init__(self):
        self.items = []

    def add(self, label: str, ok: bool, info: str = "") -> bool:
        self.items.append((label, bool(ok), info))
        return bool(ok)

    def close(self, label: str, value: float, ref: float, tol: float, rel: bool = False) -> bool:
        err = abs(value - ref) / (abs(ref) if rel else 1.0)
        kind = "rel" if rel else "abs"
        return self.add(label, err <= tol, f"{value:.9g} vs {ref:.9g} ({kind} err {err:.2e}, tol {tol:g})")

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.items)

    def summary(self) -> str:
        bad = [f"{lab}: {info}" for lab, ok, info in self.items if not ok]
        if bad:
            return "; ".join(bad)
        return f"{len(self.items)} checks"


def _grid(quick: bool) -> GridConfig | None:
    return QUICK_GRID if quick else None


# ---------------------------------------------------------------------------


def criterion_1(quick: bool = False) -> _Checks:
    c = _Checks()
    for a, bfs, bfs_star, bstar, has_sel in FIG2_ROWS:
        c.close(f"b_FS({a})", _params.felli_schneider(a), bfs, 2e-6)
        c.close(f"b*_FS({a})", _params.felli_schneider_star(a), bfs_star, 2e-6)
        if has_sel:
            c.close(f"b*({a})", _params.solve_b_star(a), bstar, 1e-5)
    return c


def criterion_2(quick: bool = False) -> _Checks:
    c = _Checks()
    th = _params.solve_thresholds()
    c.close("K*", th.k_star, 6.698818, 1e-5)
    c.close("a*", th.a_star, -0.641866, 1e-5)
    return c


def criterion_3(quick: bool = False) -> _Checks:
    c = _Checks()
    for K in (3.0, 4.0, 6.828427, 8.0, 11.656854, 20.0):
        ref = 0.5 * beta_fn(K / 2.0, K / 2.0)

        def f(t, K=K):
            return t ** (K - 1.0) * (1.0 + t * t) ** (-K)

        tails = TailSpec(K - 1.0, K + 1.0)
        c.close(f"halfline K={K}", integrate_halfline(f, tails, TIGHT_QUAD), ref, 1e-10, rel=True)
        c.close(f"compactified K={K}", integrate_compactified(f, tails, TIGHT_QUAD), ref, 1e-10, rel=True)
    p = P_MAIN
    S = best_constant_S(p)
    c.close("||B||_*", star_norm(radial(p, normalized_bubble_B(p)), TIGHT_QUAD), 1.0, 1e-8, rel=True)
    for lam in (0.1, 1.0, 10.0):
        B = radial(p, normalized_bubble_B(p, lam))
        c.close(f"||B_{lam}||^2", grad_norm_sq(B, TIGHT_QUAD), S, 1e-8, rel=True)
    return c


def criterion_4(quick: bool = False) -> _Checks:
    c = _Checks()
    p = P_MAIN
    d = _params.derive(p)
    res = pde_residual(p, bubble_U(p))
    c.add("pde_residual(U)", res <= 1e-8, f"{res:.2e}")
    U = radial(p, bubble_U(p))
    g = grad_norm_sq(U, TIGHT_QUAD)
    st = star_norm(U, TIGHT_QUAD)
    c.close("||U||^2 = ||U||_*^q", g, st**d.q, 1e-9, rel=True)
    c.close("S = ||U||^(2-4/q)", best_constant_S(p), g ** (1.0 - 2.0 / d.q), 1e-9, rel=True)
    return c


def criterion_5(quick: bool = False) -> _Checks:
    c = _Checks()
    grid = _grid(quick)
    p = P_MAIN
    d = _params.derive(p)
    m0 = solve_mode(p, 0, 3, grid)
    for n, ref in enumerate((1.0, 5.0 / 3.0, 2.5)):
        c.close(f"k=0 n={n}", m0.eigenvalues[n], ref, 1e-5)
    m1 = solve_mode(p, 1, 1, grid)
    ref1 = (d.q - 1.0) / (1.0 - _params.f_curve(d.a, d.b))
    c.close("k=1 lowest", m1.eigenvalues[0], ref1, 1e-4)
    summ = full_spectrum(p, grid)
    c.add("mu3 mode at (-1,-0.25)", summ.mu3_mode == 1, f"k={summ.mu3_mode}")
    summ2 = full_spectrum(P_K0, grid)
    c.close("mu3 at (-1,-0.1)", summ2.mu3, 22.0 / 15.0, 1e-4)
    c.add("mu3 mode at (-1,-0.1)", summ2.mu3_mode == 0, f"k={summ2.mu3_mode}")
    return c


def criterion_6(quick: bool = False) -> _Checks:
    c = _Checks()
    grid = _grid(quick)
    for p, want in ((P_MAIN, 1), (ParamPoint(-2.0, -1.06), 1), (P_FS, 3)):
        kd = kernel_dimension(p, grid=grid)
        c.add(f"kernel_dim({p.a},{p.b})", kd == want, f"{kd} (want {want})")
    # the k=1 kernel eigenfunction against the explicit V' shape, in the W-norm
    d = _params.derive(P_FS)
    ms = solve_mode(P_FS, 1, 1, grid)
    prob = mode_problem(P_FS, 1)
    eta = ms.eigenfunctions[0]
    vp = VPrimeShape(d.K)
    tails = TailSpec(2.0 * eta.p0 + d.K - 1.0, 2.0 * eta.p_inf - d.K + 5.0)
    wv = math.sqrt(integrate_halfline(lambda t: prob.W(t) * vp(t) ** 2, tails))
    sgn = math.copysign(1.0, integrate_halfline(lambda t: prob.W(t) * vp(t) * eta(t), tails))
    diff = math.sqrt(integrate_halfline(lambda t: prob.W(t) * (eta(t) - sgn * vp(t) / wv) ** 2, tails))
    c.add("k=1 kernel vs V'", diff <= 1e-6, f"W-norm diff {diff:.2e}")
    return c


def _random_direction(p, e3, rng, d):
    """A bubble plus random perturbations along eta0, e3 and Z1 shapes."""
    U = radial(p, bubble_U(p, float(np.exp(rng.uniform(-1.0, 1.0)))))
    u = U.scale(float(rng.uniform(0.5, 2.0)))
    nU = math.sqrt(grad_norm_sq(U))
    pert = [
        radial(p, Eta0(d.K, float(np.exp(rng.uniform(-0.7, 0.7))))),
        e3,
        mode(p, 1, VPrimeShape(d.K, float(np.exp(rng.uniform(-0.7, 0.7)))), str(rng.choice(["cos", "sin"]))),
    ]
    use = rng.random(3) < 0.6
    if not use.any():
        use[rng.integers(3)] = True
    for v, on in zip(pert, use):
        if on:
            eps = float(rng.uniform(0.02, 0.3)) * float(rng.choice([-1.0, 1.0]))
            u = u + v.scale(eps * nU / math.sqrt(grad_norm_sq(v)))
    return u


def criterion_7(quick: bool = False) -> _Checks:
    c = _Checks()
    p = P_MAIN
    d = _params.derive(p)
    e3 = third_eigenfunction(p, _grid(quick))
    rng = np.random.default_rng(SWEEP_SEED)
    n = 6 if quick else 20
    worst = 0.0
    for i in range(n):
        u = _random_direction(p, e3, rng, d)
        d1 = dist_to_M(u, TIGHT_QUAD)
        d2 = dist_direct(u, TIGHT_QUAD)
        rel = abs(d1 - d2) / max(d1, d2)
        worst = max(worst, rel)
        c.add(f"function {i}", rel <= 1e-6, f"{d1:.12g} vs {d2:.12g} (rel {rel:.2e})")
    c.add("worst", True, f"{worst:.2e}")
    return c


def criterion_8(quick: bool = False) -> _Checks | None:
    if quick:
        return None
    c = _Checks()
    p = P_MAIN
    d = _params.derive(p)
    bound = _params.two_bubble_bound(p)
    lams = np.geomspace(*FIT_WINDOW, 8)
    fits = {qn: fit_expansion(p, qn, lams) for qn in ("grad_sq", "star_sq", "E")}
    for qn, f in fits.items():
        c.close(f"exponent {qn}", f.exponent, -d.a, 0.03, rel=True)
    fe = fits["E"]
    c.close("E limit", fe.limit, bound, 1e-3)
    ref_coef = -2.0 * (2.0 ** (2.0 / d.q) - 1.0)
    c.close("E coefficient", fe.pinned_coefficient, ref_coef, 0.05, rel=True)
    scale = c_ab(p) * overlap_d(p)
    c.add("E coefficient / (c d) [info]", True,
          f"{fe.pinned_coefficient / scale:.6g} vs {ref_coef:.6g}")
    sampled = list(fe.values)
    for lam in np.geomspace(1e-3, 3e-2, 8):
        sampled.append(two_bubble_quantity(p, "E", float(lam), TIGHT_QUAD))
    c.add("E < 2 - 2^(2/q)", all(v < bound for v in sampled), f"max {max(sampled):.9f} vs {bound:.9f}")
    return c


def criterion_9(quick: bool = False) -> _Checks:
    c = _Checks()
    p = P_MAIN
    e3 = third_eigenfunction(p, _grid(quick))
    eps = (0.05, 0.025, 0.0125)
    seq = spectral_sequence(p, e3, eps)
    # for k >= 1 the quotient is even in eps (rotation by pi flips e3)
    powers = (2, 4) if e3.terms[0].k >= 1 else (1, 2)
    lim = richardson_limit(eps, [r.E for _, r in seq], powers)
    c.close("E(U + eps e3) -> 1 - (q-1)/mu3", lim, _params.stability_upper_bound(p), 1e-3)
    return c


def criterion_10(quick: bool = False) -> _Checks:
    c = _Checks()
    p = P_FS
    eps = (0.2, 0.1, 0.05, 0.025)
    seq = degenerate_sequence(p, eps)
    Es = [r.E for _, r in seq]
    c.add("E strictly decreasing", all(x > y for x, y in zip(Es, Es[1:])), ", ".join(f"{e:.3e}" for e in Es))
    c.add("min E < 0.02", min(Es) < 0.02, f"{min(Es):.3e}")
    nz = math.sqrt(grad_norm_sq(kernel_elements(p)[1], TIGHT_QUAD))
    for e, r in seq:
        c.close(f"dist at eps={e}", math.sqrt(r.dist_sq), e * nz, 1e-5, rel=True)
    return c


def random_params(rng: np.random.Generator, k_range=(3.0, 40.0), margin: float = 0.02) -> ParamPoint:
    """Random admissible (a, b) strictly above the FS curve with K in ``k_range``."""
    while True:
        a = float(rng.uniform(-3.0, -0.3))
        K = float(np.exp(rng.uniform(math.log(k_range[0]), math.log(k_range[1]))))
        b = a + 1.0 - 2.0 / K
        if b > _params.felli_schneider(a) + margin:
            return ParamPoint(a, b)


def criterion_11(quick: bool = False) -> _Checks:
    c = _Checks()
    rng = np.random.default_rng(SWEEP_SEED + 11)
    n = 12 if quick else 100
    grid = QUICK_GRID

    bad = 0
    for _ in range(n):
        d = _params.derive(random_params(rng))
        lhs = d.tau**2 * (d.q - 1.0) * d.C_ab ** (d.q - 2.0)
        bad += abs(lhs / (d.K * (d.K + 2.0)) - 1.0) > 1e-12
    c.add("tau^2 (q-1) C^(q-2) = K(K+2)", bad == 0, f"{bad}/{n} violations")

    bad, worst = 0, 0.0
    for _ in range(n):
        p = random_params(rng, (3.0, 20.0))
        u = _random_function(p, rng)
        rep_u = deficit_report(u)
        lam = float(np.exp(rng.uniform(-2.0, 2.0)))
        rep_v = deficit_report(u.dilate(lam))
        rel = abs(rep_u.E - rep_v.E) / abs(rep_u.E)
        worst = max(worst, rel)
        bad += not rel <= 1e-6
    c.add("scaling invariance of E", bad == 0, f"{bad}/{n} violations, worst rel {worst:.1e}")

    bad = 0
    for _ in range(n):
        p = random_params(rng, (3.0, 20.0))
        u = _random_function(p, rng)
        g = grad_norm_sq(u)
        bad += g - best_constant_S(p) * star_norm(u) ** 2 < -1e-9 * g
    c.add("deficit >= 0", bad == 0, f"{bad}/{n} violations")

    mono = zeros = ortho = 0
    for _ in range(n):
        p = random_params(rng)
        modes = [solve_mode(p, 0, 3, grid), solve_mode(p, 1, 2, grid), solve_mode(p, 2, 1, grid)]
        lows = [m.eigenvalues[0] for m in modes]
        mono += not all(x < y for x, y in zip(lows, lows[1:]))
        for ms in modes:
            prob = mode_problem(p, ms.k)
            W = ms.w_values
            zeros += any(sign_changes(W[:, j]) != j for j in range(W.shape[1]))
            h = ms.s_nodes[1] - ms.s_nodes[0]
            gram = h * (W * prob.rho(ms.s_nodes)[:, None]).T @ W
            ortho += not np.allclose(gram, np.eye(W.shape[1]), atol=1e-6)
    c.add("mode monotonicity", mono == 0, f"{mono}/{n} violations")
    c.add("Sturm zero counts", zeros == 0, f"{zeros}/{n} violations")
    c.add("W-orthonormality", ortho == 0, f"{ortho}/{n} violations")
    return c


def _random_function(p: ParamPoint, rng: np.random.Generator) -> HarmonicFunction:
    """Scaled bubble plus a radial and a non-radial perturbation.

    Perturbation sizes are relative to the bubble's gradient norm so that the
    distance to the manifold stays well above the cancellation floor.
    """
    d = _params.derive(p)
    U = radial(p, bubble_U(p, float(np.exp(rng.uniform(-1.0, 1.0)))))
    nU = math.sqrt(grad_norm_sq(U))
    u = U.scale(float(rng.uniform(0.3, 3.0)))
    k = int(rng.integers(1, 3))
    for v in (radial(p, Eta0(d.K, float(np.exp(rng.uniform(-1.0, 1.0))))),
              HarmonicFunction(p, (Term(k, "cos", VPrimeShape(d.K, float(np.exp(rng.uniform(-1.0, 1.0))))),))):
        eps = float(rng.uniform(0.05, 0.5)) * float(rng.choice([-1.0, 1.0]))
        u = u + v.scale(eps * nU / math.sqrt(grad_norm_sq(v)))
    return u


CRITERIA: tuple[tuple[int, str, float, Callable], ...] = (
    (1, "selection table", 5.0, criterion_1),
    (2, "thresholds K*, a*", 1.0, criterion_2),
    (3, "quadrature oracles", 5.0, criterion_3),
    (4, "extremal identities", 5.0, criterion_4),
    (5, "spectrum closed forms", 60.0, criterion_5),
    (6, "kernel dimension switch", 60.0, criterion_6),
    (7, "distance routes agree", 60.0, criterion_7),
    (8, "two-bubble expansions", 120.0, criterion_8),
    (9, "spectral-direction limit", 60.0, criterion_9),
    (10, "degenerate direction on FS", 60.0, criterion_10),
    (11, "invariant sweeps", 120.0, criterion_11),
)


def run_one(number: int, quick: bool = False) -> CriterionResult:
    num, name, budget, fn = CRITERIA[number - 1]
    t0 = time.perf_counter()
    try:
        checks = fn(quick)
    except (CKNError, ArithmeticError, ValueError) as exc:
        return CriterionResult(num, name, False, f"{type(exc).__name__}: {exc}", time.perf_counter() - t0)
    dt = time.perf_counter() - t0
    if checks is None:
        return CriterionResult(num, name, True, "skipped in quick mode", dt, skipped=True)
    ok = checks.passed and dt < budget
    detail = checks.summary()
    if dt >= budget:
        detail += f"; runtime {dt:.1f}s over budget {budget:g}s"
    return CriterionResult(num, name, ok, detail, dt, checks=tuple(checks.items))


def run_all(quick: bool = False, echo: Callable[[str], None] | None = None) -> list:
    out = []
    for num, *_ in CRITERIA:
        r = run_one(num, quick)
        if echo is not None:
            echo(r.line())
        out.append(r)
    return out
