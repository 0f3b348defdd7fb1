"""Norms, Bregman divergences, and the constant calculus behind the solvers.

The objectives handled by this package split into a weakly smooth part
(Hoelder gradient exponent ``kappa`` in (1, 2], constant ``L``) and a
uniformly convex part (degree ``q`` >= 2, modulus ``mu``), both measured in
the l_q norm. Everything downstream — step-size conditions, proximal steps,
run certificates — is driven by three derived constants:

    r = (q - kappa) / kappa         curvature mismatch (0 in the smooth case)
    M = (r/q)**r * L                smoothness constant after Young splitting
    p = q / (q - 1)                 dual exponent, in (1, 2]

with the convention 0**0 = 1 so that kappa == q gives M = L.

This module holds that calculus, the norm/divergence primitives, and
empirical checkers for the two curvature inequalities the analysis relies
on. Vectors are plain 1-D numpy arrays throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError

__all__ = [
    "GeometryParams",
    "derive_params",
    "lq_norm",
    "dual_exponent",
    "dual_norm",
    "bregman",
    "power_uc_constant",
    "power_inv_r",
    "young_gap_bound",
    "check_uniform_convexity",
    "check_weak_smoothness",
    "UniformConvexityReport",
    "WeakSmoothnessReport",
]


@dataclass(frozen=True)
class GeometryParams:
    """Problem constants plus the derived (r, M, p) triple.

    ``mu`` must be a genuine uniform-convexity modulus of the regularizer in
    use (see :func:`power_uc_constant`); ``sigma`` is the oracle noise level
    (p-th dual-norm moment scale) and ``R`` a radius bound on the iterates
    around the optimum, used only by concentration diagnostics.
    """

    q: float
    kappa: float
    L: float
    mu: float
    sigma: float = 0.0
    R: float = 1.0
    r: float = 0.0
    M: float = 0.0
    p: float = 2.0


def derive_params(
    q: float,
    kappa: float,
    L: float,
    mu: float,
    sigma: float = 0.0,
    R: float = 1.0,
) -> GeometryParams:
    """Validate the base constants and fill in r, M, p."""
    if not q >= 2.0:
        raise ParameterError(f"q must be >= 2, got {q}")
    if not 1.0 < kappa <= 2.0:
        raise ParameterError(f"kappa must lie in (1, 2], got {kappa}")
    if kappa > q:
        raise ParameterError(f"kappa must not exceed q, got kappa={kappa} > q={q}")
    if L < 0.0:
        raise ParameterError(f"L must be nonnegative, got {L}")
    if not mu > 0.0:
        raise ParameterError(f"mu must be positive, got {mu}")
    if sigma < 0.0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    if not R > 0.0:
        raise ParameterError(f"R must be positive, got {R}")
    r = (q - kappa) / kappa
    M = float(L) if r == 0.0 else (r / q) ** r * L
    p = q / (q - 1.0)
    return GeometryParams(
        q=float(q), kappa=float(kappa), L=float(L), mu=float(mu),
        sigma=float(sigma), R=float(R), r=float(r), M=float(M), p=float(p),
    )


def lq_norm(x: np.ndarray, q: float) -> float:
    """l_q norm, q >= 1 (q = inf gives the max norm). Rescales to dodge overflow."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return 0.0
    if not np.all(np.isfinite(x)):
        raise ParameterError("lq_norm: input has non-finite entries")
    ax = np.abs(x)
    if np.isinf(q):
        return float(ax.max())
    if q < 1.0:
        raise ParameterError(f"lq_norm: q must be >= 1, got {q}")
    m = float(ax.max())
    if m == 0.0:
        return 0.0
    return m * float(np.sum((ax / m) ** q)) ** (1.0 / q)


def dual_exponent(q: float) -> float:
    """Exponent of the dual norm: q/(q-1), with q = 1 mapping to inf."""
    if q == 1.0:
        return np.inf
    if np.isinf(q):
        return 1.0
    return q / (q - 1.0)


def dual_norm(g: np.ndarray, q: float) -> float:
    """Dual norm of the l_q norm, i.e. the l_{q/(q-1)} norm of g."""
    return lq_norm(g, dual_exponent(q))


def bregman(omega, x: np.ndarray, y: np.ndarray) -> float:
    """Bregman divergence omega(x) - omega(y) - <grad omega(y), x - y>.

    ``omega`` is any object exposing ``value(x) -> float`` and
    ``grad(x) -> array`` (the regularizers in this package do).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(omega.value(x) - omega.value(y) - np.dot(np.asarray(omega.grad(y)), x - y))


@lru_cache(maxsize=None)
def power_uc_constant(q: float) -> float:
    """Exact modulus ratio of the scalar power t -> |t|^q, q >= 2.

    Returns the largest c such that

        |a|^q - |b|^q - q |b|^{q-1} sign(b) (a - b) >= c |a - b|^q

    for all scalars a, b. By coordinate separability the same c works for
    (mu/q)||x||_q^q in any dimension w.r.t. the l_q norm, so that function is
    (c * mu, q)-uniformly convex. c = 1 for q = 2 and decays for larger q
    (e.g. 1/3 at q = 4); folklore sometimes asserts c = 1 for all q, which
    fails already in one dimension, so solvers and certificates in this
    package always use the calibrated value.
    """
    q = float(q)
    if not q >= 2.0:
        raise ParameterError(f"power_uc_constant: q must be >= 2, got {q}")
    if q == 2.0:
        return 1.0

    def ratio(a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        return (np.abs(a) ** q - 1.0 - q * (a - 1.0)) / np.abs(a - 1.0) ** q

    # Scale invariance lets us pin b = 1; the infimum sits at some a < 1
    # (the ratio tends to 1 at +-inf and blows up near a = 1 for q > 2).
    grid = np.concatenate(
        [np.linspace(-80.0, 0.9999, 400_001), np.linspace(1.0001, 80.0, 40_001)]
    )
    vals = ratio(grid)
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]

    # Golden-section refinement of the bracketed minimum.
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c1 = b - invphi * (b - a)
    c2 = a + invphi * (b - a)
    f1, f2 = float(ratio(c1)), float(ratio(c2))
    for _ in range(200):
        if f1 <= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - invphi * (b - a)
            f1 = float(ratio(c1))
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (b - a)
            f2 = float(ratio(c2))
        if b - a < 1e-13 * (1.0 + abs(a)):
            break
    best = min(float(vals[i]), f1, f2)
    return float(min(best, 1.0))


def power_inv_r(base, r: float):
    """base ** (1/r) with the smooth-case limit at r = 0.

    For r = 0 the analysis lets the Young gap go to zero, so the term is 0
    whenever base <= 1 (guaranteed by a valid step-size schedule) and +inf
    otherwise, flagging the violated precondition.
    """
    base = np.asarray(base, dtype=float)
    if r == 0.0:
        out = np.where(base <= 1.0 + 1e-12, 0.0, np.inf)
        return float(out) if out.ndim == 0 else out
    out = base ** (1.0 / r)
    return float(out) if out.ndim == 0 else out


def young_gap_bound(params: GeometryParams, x: np.ndarray, y: np.ndarray, delta: float) -> float:
    """Right-hand side of the smoothness/uniform-convexity bridge inequality:

        (M / (q delta^r)) ||x - y||_q^q + L delta

    which dominates (L/kappa) ||x - y||_q^kappa for every delta > 0. When
    r = 0 the delta^r factor is 1 and the bound is (M/q)||x-y||^q + L delta.
    """
    if not delta > 0.0:
        raise ParameterError(f"delta must be positive, got {delta}")
    dist = lq_norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), params.q)
    return params.M / (params.q * delta ** params.r) * dist ** params.q + params.L * delta


@dataclass(frozen=True)
class UniformConvexityReport:
    min_ratio: float
    witness_x: np.ndarray
    witness_y: np.ndarray
    mu: float
    passed: bool


@dataclass(frozen=True)
class WeakSmoothnessReport:
    max_ratio: float
    witness_x: np.ndarray
    witness_y: np.ndarray
    L: float
    passed: bool


_DEGENERATE_PAIR = 1e-12  # reject pairs this close to avoid 0/0 ratios


def check_uniform_convexity(
    f,
    grad,
    dim: int,
    q: float,
    mu: float,
    samples: int = 400,
    rng_seed: int = 0,
    scale: float = 2.0,
    tol: float = 1e-9,
) -> UniformConvexityReport:
    """Empirically probe f(x) - f(y) - <g, x-y> >= (mu/q) ||x-y||_q^q.

    Samples random pairs and reports the minimum observed curvature ratio
    [f(x) - f(y) - <grad(y), x-y>] / ((1/q) ||x-y||_q^q); the modulus holds
    on the sample iff min_ratio >= mu (up to tol).
    """
    rng = np.random.default_rng(rng_seed)
    min_ratio = np.inf
    wx = wy = np.zeros(dim)
    for _ in range(samples):
        x = rng.normal(0.0, scale, dim)
        y = rng.normal(0.0, scale, dim)
        dist = lq_norm(x - y, q)
        if dist < _DEGENERATE_PAIR:
            continue
        ratio = (f(x) - f(y) - np.dot(grad(y), x - y)) / (dist ** q / q)
        if ratio < min_ratio:
            min_ratio, wx, wy = float(ratio), x, y
    return UniformConvexityReport(
        min_ratio=float(min_ratio), witness_x=wx, witness_y=wy,
        mu=float(mu), passed=bool(min_ratio >= mu - tol * (1.0 + abs(mu))),
    )


def check_weak_smoothness(
    f,
    grad,
    dim: int,
    kappa: float,
    L: float,
    samples: int = 400,
    rng_seed: int = 0,
    norm_q: float = 2.0,
    scale: float = 2.0,
    tol: float = 1e-9,
) -> WeakSmoothnessReport:
    """Empirically probe f(x) - f(y) - <grad(y), x-y> <= (L/kappa) ||x-y||_q^kappa."""
    rng = np.random.default_rng(rng_seed)
    max_ratio = -np.inf
    wx = wy = np.zeros(dim)
    for _ in range(samples):
        x = rng.normal(0.0, scale, dim)
        y = rng.normal(0.0, scale, dim)
        dist = lq_norm(x - y, norm_q)
        if dist < _DEGENERATE_PAIR:
            continue
        ratio = (f(x) - f(y) - np.dot(grad(y), x - y)) / (dist ** kappa / kappa)
        if ratio > max_ratio:
            max_ratio, wx, wy = float(ratio), x, y
    return WeakSmoothnessReport(
        max_ratio=float(max_ratio), witness_x=wx, witness_y=wy,
        L=float(L), passed=bool(max_ratio <= L + tol * (1.0 + abs(L))),
    )
