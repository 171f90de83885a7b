"""Per-mode eigenvalue problems of the linearized operator.

For angular mode k the radial problem

    -(t^(K-1) eta')' + tau^2 k^2 t^(K-3) eta = mu K(K-2) t^(K-1) (1+t^2)^(-2) eta

becomes, with eta = t^(-(K-2)/2) w and s = ln t, the Schroedinger form

    -w'' + m^2 w = mu rho(s) w,   m^2 = ((K-2)/2)^2 + tau^2 k^2,
    rho(s) = K(K-2) / (4 cosh(s)^2).

The Rayleigh quotients coincide term by term, so the two problems share
eigenvalues and W-norms.  The s-line is truncated symmetrically where the
eigenfunctions have decayed like exp(-m|s|) far below double precision, and
discretized with the three-point rule.  Eigenvalues are isolated by
bisection on the inertia of the tridiagonal pencil, polished by inverse
iteration and Richardson-extrapolated in the mesh size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from . import params as _params
from .errors import CKNError, InvalidParams, NoConvergence
from .params import ParamPoint, Region
from .profiles import Grid, HarmonicFunction, Term

__all__ = [
    "GridConfig", "ModeProblem", "ModeSpectrum", "SpectrumSummary",
    "closed_form_eigenvalue", "mode_problem", "solve_mode", "full_spectrum",
    "kernel_dimension", "third_eigenfunction", "sign_changes",
]


@dataclass(frozen=True)
class GridConfig:
    h_max: float = 0.04          # coarsest mesh size in s = ln t
    rel_tol: float = 1e-7        # Richardson convergence target per eigenvalue
    max_levels: int = 6          # number of mesh halvings allowed
    min_levels: int = 3
    tail_decay: float = 18.0     # m * (distance beyond the turning point)
    trim_decay: float = 12.0     # m * (distance trimmed before building profiles)


DEFAULT_GRID = GridConfig()


@dataclass(frozen=True)
class ModeProblem:
    params: ParamPoint
    k: int
    K: float
    tau: float
    m: float

    def rho(self, s):
        return self.K * (self.K - 2.0) / (4.0 * np.cosh(s) ** 2)

    def P(self, t):
        return t ** (self.K - 1.0)

    def Q(self, t):
        return self.tau**2 * self.k**2 * t ** (self.K - 3.0)

    def W(self, t):
        return self.K * (self.K - 2.0) * t ** (self.K - 1.0) / (1.0 + t * t) ** 2

    @property
    def l(self) -> float:
        """Exponent of the eigenfunctions at t -> 0, eta ~ t^l."""
        return self.m - 0.5 * (self.K - 2.0)


@dataclass(frozen=True)
class ModeSpectrum:
    k: int
    eigenvalues: tuple
    eigenfunctions: tuple
    disc_error: tuple
    s_nodes: np.ndarray
    w_values: np.ndarray       # columns: Liouville eigenvectors at s_nodes, W-normalized


@dataclass(frozen=True)
class SpectrumSummary:
    mu1: float
    mu2: float
    mu3: float
    mu3_mode: int
    kernel_dim: int
    modes: tuple


def closed_form_eigenvalue(p: ParamPoint, k: int, n: int) -> float:
    """Exact n-th eigenvalue of mode k (Poeschl-Teller ladder).

    mu = 1 + 4 L (L + K - 1) / (K (K-2)) with L = l_k + n and
    l_k = sqrt(((K-2)/2)^2 + tau^2 k^2) - (K-2)/2.
    """
    d = _params.derive(p)
    beta = 0.5 * (d.K - 2.0)
    L = math.sqrt(beta * beta + (d.tau * k) ** 2) - beta + n
    return 1.0 + 4.0 * L * (L + d.K - 1.0) / (d.K * (d.K - 2.0))


def mode_problem(p: ParamPoint, k: int) -> ModeProblem:
    d = _params.derive(p)
    if d.region == Region.BelowFS:
        raise InvalidParams(f"b={d.b} lies below b_FS(a)={d.b_fs:.9g}")
    if not (0 <= k <= 8 and int(k) == k):
        raise InvalidParams(f"mode index must be an integer in [0, 8], got {k}")
    m = math.sqrt((0.5 * (d.K - 2.0)) ** 2 + (d.tau * k) ** 2)
    return ModeProblem(p, int(k), d.K, d.tau, m)


def _inertia(diag0, rho, off2, shifts):
    """Number of negative pivots of T - sigma*B for each sigma in ``shifts``."""
    shifts = np.asarray(shifts, dtype=float)
    tiny = np.finfo(float).tiny ** 0.5
    d = diag0[0] - shifts * rho[0]
    count = (d < 0).astype(int)
    for i in range(1, diag0.size):
        d = np.where(d == 0.0, -tiny, d)
        d = (diag0[i] - shifts * rho[i]) - off2 / d
        count += d < 0
    return count


def _bisect(diag0, rho, off2, count, rel_width=1e-4, sections=64):
    """Brackets [lo, up] of the lowest ``count`` eigenvalues by multisection.

    The brackets only need to separate the eigenvalues; inverse iteration
    and the Rayleigh quotient supply the remaining digits.
    """
    probes = 2.0 ** np.arange(1, 28)
    reached = np.nonzero(_inertia(diag0, rho, off2, probes) >= count)[0]
    if reached.size == 0:
        raise NoConvergence("could not bracket the requested eigenvalues")
    hi = float(probes[reached[0]])
    lo = np.zeros(count)
    up = np.full(count, hi)
    for _ in range(200):
        width = up - lo
        if np.all(width <= rel_width * up):
            return lo, up
        frac = np.arange(1, sections) / sections
        shifts = lo[:, None] + width[:, None] * frac[None, :]
        counts = _inertia(diag0, rho, off2, shifts.ravel()).reshape(shifts.shape)
        for j in range(count):
            below = shifts[j][counts[j] <= j]
            above = shifts[j][counts[j] >= j + 1]
            if below.size:
                lo[j] = max(lo[j], below.max())
            if above.size:
                up[j] = min(up[j], above.min())
    raise NoConvergence("bisection did not isolate the eigenvalues")


def _level(prob: ModeProblem, S: float, h: float, count: int):
    n = int(round(2.0 * S / h))
    s = -S + h * np.arange(1, n)
    rho = prob.rho(s)
    diag0 = np.full(s.size, 2.0 / h**2 + prob.m**2)
    off = -1.0 / h**2
    lo, up = _bisect(diag0, rho, off * off, count)
    vals, vecs = [], []
    ab = np.zeros((3, s.size))
    ab[0, 1:] = off
    ab[2, :-1] = off
    rng = np.random.default_rng(12345)
    for j in range(count):
        sigma = 0.5 * (lo[j] + up[j])
        ab[1] = diag0 - sigma * rho
        x = 1.0 + 0.1 * rng.standard_normal(s.size)
        for _ in range(5):
            x = solve_banded((1, 1), ab, rho * x)
            x /= math.sqrt(h * np.sum(rho * x * x))
        Ax = diag0 * x
        Ax[1:] += off * x[:-1]
        Ax[:-1] += off * x[1:]
        mu = float(np.dot(x, Ax) / np.dot(x, rho * x))
        if not lo[j] - 1e-12 * up[j] <= mu <= up[j] + 1e-12 * up[j]:
            raise NoConvergence(f"inverse iteration left the bracket for eigenvalue {j}")
        # sign convention: positive in the t -> 0 tail
        big = np.nonzero(np.abs(x) > 1e-3 * np.max(np.abs(x)))[0][0]
        vals.append(mu)
        vecs.append(x * np.sign(x[big]))
    return s, np.array(vals), np.column_stack(vecs)


def sign_changes(values, floor=1e-8):
    v = np.asarray(values, dtype=float)
    v = v[np.abs(v) > floor * np.max(np.abs(v))]
    return int(np.sum(np.sign(v[1:]) != np.sign(v[:-1])))


def solve_mode(p: ParamPoint, k: int, count: int = 3, grid: GridConfig | None = None) -> ModeSpectrum:
    """Lowest ``count`` eigenpairs of mode k, Richardson-extrapolated in the mesh."""
    grid = grid or DEFAULT_GRID
    if not 1 <= count <= 6:
        raise InvalidParams(f"count must lie in [1, 6], got {count}")
    prob = mode_problem(p, k)
    K, m = prob.K, prob.m
    rho_max = K * (K - 2.0) / 4.0
    # rough size of the largest requested eigenvalue, used only to size the mesh
    mu_hi = 1.0 + 4.0 * (prob.l + count) * (prob.l + count + K) / (K * (K - 2.0))
    s_turn = 0.5 * math.acosh(max(1.0, 2.0 * mu_hi * rho_max / m**2 - 1.0)) if mu_hi * rho_max > m**2 else 0.0
    S = s_turn + grid.tail_decay / m + 1.0
    h0 = min(grid.h_max, 0.35 / math.sqrt(mu_hi * rho_max + m * m))
    n0 = int(math.ceil(2.0 * S / h0))
    h0 = 2.0 * S / n0

    levels = []
    table = []  # Richardson tableau rows for eigenvalues
    vtable = []  # same for eigenvectors restricted to coarse nodes
    s_coarse = None
    for lev in range(grid.max_levels):
        h = h0 / 2**lev
        s, vals, vecs = _level(prob, S, h, count)
        if s_coarse is None:
            s_coarse = s
        vec_c = vecs[2**lev - 1::2**lev][: s_coarse.size]
        row, vrow = [vals], [vec_c]
        for j in range(1, lev + 1):
            f = 4.0**j
            row.append((f * row[j - 1] - table[-1][j - 1]) / (f - 1.0))
            vrow.append((f * vrow[j - 1] - vtable[-1][j - 1]) / (f - 1.0))
        table.append(row)
        vtable.append(vrow)
        levels.append(h)
        if lev + 1 >= grid.min_levels:
            err = np.abs(table[-1][-1] - table[-2][-1])
            if np.all(err <= grid.rel_tol * np.abs(table[-1][-1])):
                break
    else:
        raise NoConvergence(f"mode {k}: eigenvalues did not settle to rel_tol={grid.rel_tol:g}")

    mus = table[-1][-1]
    W = vtable[-1][-1]
    # W-normalize with the (spectrally accurate) trapezoid rule on the coarse mesh
    rho_c = prob.rho(s_coarse)
    W = W / np.sqrt(h0 * np.sum(rho_c[:, None] * W * W, axis=0))[None, :]

    keep = np.abs(s_coarse) <= S - grid.trim_decay / m
    s_keep = s_coarse[keep]
    t_keep = np.exp(s_keep)
    beta = 0.5 * (K - 2.0)
    profiles = []
    for j in range(count):
        eta = np.exp(-beta * s_keep) * W[keep, j]
        profiles.append(Grid.from_samples(K, t_keep, eta, prob.l, prob.l + K - 2.0))
    return ModeSpectrum(
        k=int(k),
        eigenvalues=tuple(float(x) for x in mus),
        eigenfunctions=tuple(profiles),
        disc_error=tuple(float(x) for x in err),
        s_nodes=s_coarse,
        w_values=W,
    )


def full_spectrum(p: ParamPoint, grid: GridConfig | None = None, kernel_tol: float = 1e-6) -> SpectrumSummary:
    d = _params.derive(p)
    if d.region == Region.BelowFS:
        raise InvalidParams(f"b={d.b} lies below b_FS(a)={d.b_fs:.9g}")
    modes = [solve_mode(p, 0, 3, grid)] + [solve_mode(p, k, 2, grid) for k in (1, 2, 3)]
    mu1, mu2, third0 = modes[0].eigenvalues[:3]
    low1 = modes[1].eigenvalues[0]
    mu3, mu3_mode = (third0, 0) if third0 < low1 else (low1, 1)
    if not modes[2].eigenvalues[0] > mu3:
        raise CKNError("mode k=2 fell below mu3; monotonicity in k is violated")
    target = d.q - 1.0
    kdim = 0
    for ms in modes:
        mult = 1 if ms.k == 0 else 2
        kdim += mult * sum(abs(e - target) <= kernel_tol * target for e in ms.eigenvalues)
    return SpectrumSummary(mu1, mu2, mu3, mu3_mode, kdim, tuple(modes))


def kernel_dimension(p: ParamPoint, tol: float = 1e-6, grid: GridConfig | None = None) -> int:
    """Number of eigenvalues equal to q-1 across all modes, with angular multiplicity."""
    d = _params.derive(p)
    if d.region == Region.BelowFS:
        raise InvalidParams(f"b={d.b} lies below b_FS(a)={d.b_fs:.9g}")
    target = d.q - 1.0
    total = 0
    for k in range(0, 9):
        ms = solve_mode(p, k, 3 if k == 0 else 1, grid)
        mult = 1 if k == 0 else 2
        total += mult * sum(abs(e - target) <= tol * target for e in ms.eigenvalues)
        if k >= 1 and ms.eigenvalues[0] > target * (1.0 + tol):
            break
    return total


def third_eigenfunction(p: ParamPoint, grid: GridConfig | None = None) -> HarmonicFunction:
    """e3 as a harmonic function, W-normalized (int W eta^2 dt = 1)."""
    d = _params.derive(p)
    if d.region in (Region.BelowFS, Region.OnFS):
        raise InvalidParams("e3 is defined here only for b > b_FS(a)")
    m0 = solve_mode(p, 0, 3, grid)
    m1 = solve_mode(p, 1, 1, grid)
    if m0.eigenvalues[2] < m1.eigenvalues[0]:
        return HarmonicFunction(p, (Term(0, "cos", m0.eigenfunctions[2]),))
    return HarmonicFunction(p, (Term(1, "cos", m1.eigenfunctions[0]),))
