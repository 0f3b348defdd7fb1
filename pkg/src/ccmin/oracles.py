"""Stochastic first-order oracles: unbiased gradient estimates with a bounded
p-th dual-norm noise moment.

Three families are provided:

* ``RidgeOracle`` — the synthetic random-design regression benchmark; draws a
  fresh (a, b) sample per call and also exposes the exact mean gradient and
  objective for diagnostics.
* ``BernoulliOracle`` — a one-dimensional adversarial instance whose gradient
  is zero with probability 1 - s and uninformatively large otherwise; used by
  the failure-probability experiment.
* ``AdditiveNoiseOracle`` — a deterministic gradient map plus synthetic noise
  (gaussian / bounded sphere / pareto), calibrated so the declared level
  sigma bounds the p-th moment; the bounded-sphere variant also satisfies the
  exponential moment bound E exp(||noise||_*^p / sigma^p) <= 2 needed by the
  concentration diagnostics.

Oracles are immutable descriptions. ``sample_gradient`` takes an explicit
``numpy.random.Generator`` so concurrent users can hand each replica its own
substream; when omitted, a private Philox stream seeded at construction is
used instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .geometry import dual_exponent, lq_norm

__all__ = [
    "StochasticGradientOracle",
    "RidgeInstance",
    "RidgeOracle",
    "ridge_oracle",
    "BernoulliLowerBoundInstance",
    "BernoulliOracle",
    "bernoulli_oracle",
    "solve_bernoulli_activation",
    "AdditiveNoiseOracle",
    "additive_noise_oracle",
    "absolute_gaussian_moment",
]


def _philox(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


class StochasticGradientOracle:
    """Base interface: unbiased gradient samples with declared noise scale.

    Attributes
    ----------
    dimension : int
    noise_level : float
        Declared sigma with E ||sample - mean||_*^p <= sigma^p.
    noise_moment_exponent : float
        The exponent p in (1, 2] of that moment bound.
    mean_gradient : callable or None
        Exact expected gradient, when the instance can reveal it.
    evaluate_F : callable or None
        Exact expected objective value, when available.
    """

    dimension: int = 0
    noise_level: float = 0.0
    noise_moment_exponent: float = 2.0
    mean_gradient = None
    evaluate_F = None

    def sample_gradient(self, x: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        raise NotImplementedError

    def _rng_or_default(self, rng):
        return self._rng if rng is None else rng


@dataclass(frozen=True)
class RidgeInstance:
    """Random-design regression: a ~ U[-1,1]^d i.i.d., b = <a, x_star> + xi.

    xi ~ N(0, sigma_b^2); the population loss is E (<a,x> - b)^2 =
    (1/3)||x - x_star||_2^2 + sigma_b^2 with mean gradient (2/3)(x - x_star).
    The regularized objective adds (mu/q)||x||_q^q.
    """

    dimension: int
    x_star: np.ndarray
    sigma_b: float
    mu: float
    q: float
    R: float | None = None  # iterate radius bound; None means "estimate as 2||x_star||_q"

    def __post_init__(self):
        xs = np.asarray(self.x_star, dtype=float)
        object.__setattr__(self, "x_star", xs)
        if xs.shape != (self.dimension,):
            raise ParameterError(
                f"x_star must have shape ({self.dimension},), got {xs.shape}"
            )
        if self.sigma_b < 0.0:
            raise ParameterError(f"sigma_b must be nonnegative, got {self.sigma_b}")
        if self.mu < 0.0:
            raise ParameterError(f"mu must be nonnegative, got {self.mu}")
        if self.q < 2.0:
            raise ParameterError(f"q must be >= 2, got {self.q}")

    @property
    def L(self) -> float:
        """Smoothness of the loss w.r.t. the l_q norm: (2/3) d^(1 - 2/q)."""
        return 2.0 / 3.0 * self.dimension ** (1.0 - 2.0 / self.q)

    @property
    def mu_F(self) -> float:
        """Euclidean strong convexity of the loss alone."""
        return 2.0 / 3.0

    @property
    def radius_estimate(self) -> float:
        return self.R if self.R is not None else 2.0 * lq_norm(self.x_star, self.q)

    @property
    def declared_sigma(self) -> float:
        """Conventional noise-level surrogate d^(2/p) sigma_b^2 + 2 d^2 R^2.

        Recorded for reporting and step-budget purposes only; it is a crude
        overestimate and nothing recomputes it from data.
        """
        p = dual_exponent(self.q)
        R = self.radius_estimate
        return self.dimension ** (2.0 / p) * self.sigma_b ** 2 + 2.0 * self.dimension ** 2 * R ** 2


class RidgeOracle(StochasticGradientOracle):
    """One fresh (a, b) draw per gradient call."""

    def __init__(self, instance: RidgeInstance, seed: int = 0):
        self.instance = instance
        self.dimension = instance.dimension
        self.noise_level = instance.declared_sigma
        self.noise_moment_exponent = dual_exponent(instance.q)
        self._rng = _philox(seed)

    def sample_gradient(self, x, rng=None):
        rng = self._rng_or_default(rng)
        inst = self.instance
        a = rng.uniform(-1.0, 1.0, inst.dimension)
        b = float(a @ inst.x_star)
        if inst.sigma_b > 0.0:
            b += inst.sigma_b * rng.standard_normal()
        return 2.0 * (float(a @ x) - b) * a

    def mean_gradient(self, x):
        return 2.0 / 3.0 * (np.asarray(x, dtype=float) - self.instance.x_star)

    def evaluate_F(self, x):
        d = np.asarray(x, dtype=float) - self.instance.x_star
        return float(d @ d) / 3.0 + self.instance.sigma_b ** 2


def ridge_oracle(instance: RidgeInstance, seed: int = 0) -> RidgeOracle:
    return RidgeOracle(instance, seed=seed)


def solve_bernoulli_activation(mu: float, q: float, sigma: float, epsilon: float) -> float:
    """Activation probability s in (0, 1) solving

        s^(p-1) / (1-s)^p = 2 p mu^(p-1) epsilon / sigma^p.

    This is the equality form of the requirement that the oracle's p-th
    centered moment stays below sigma^p (given C = mu^(1/q) (eps*p)^(1/p),
    the right side equals 2 (C/sigma)^p). The left side increases
    monotonically from 0 to +inf, so the root is unique; bisection to ~1e-14.
    """
    p = dual_exponent(q)
    rhs = 2.0 * p * mu ** (p - 1.0) * epsilon / sigma ** p

    def lhs(s: float) -> float:
        return s ** (p - 1.0) / (1.0 - s) ** p

    lo, hi = 1e-300, 1.0 - 1e-16
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if lhs(mid) < rhs:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class BernoulliLowerBoundInstance:
    """Hidden-sign linear-plus-power objective nu*C*x + (mu/q)|x|^q on the line.

    The gradient oracle reveals nothing (returns 0) with probability 1 - s
    per draw; C and s are sized so the noise satisfies the p-th moment bound
    at level sigma while the two signs' epsilon-level sets stay disjoint.
    """

    nu: int
    s: float
    C: float
    mu: float
    q: float
    sigma: float
    epsilon: float

    @property
    def x_opt(self) -> float:
        return -self.nu * (self.C / self.mu) ** (1.0 / (self.q - 1.0))

    def psi(self, x: float) -> float:
        return self.nu * self.C * float(x) + self.mu / self.q * abs(float(x)) ** self.q

    @property
    def psi_star(self) -> float:
        return self.psi(self.x_opt)

    @property
    def gap_at_origin(self) -> float:
        p = dual_exponent(self.q)
        return (self.C ** self.q / self.mu) ** (1.0 / (self.q - 1.0)) / p


class BernoulliOracle(StochasticGradientOracle):
    def __init__(self, instance: BernoulliLowerBoundInstance, seed: int = 0):
        self.instance = instance
        self.dimension = 1
        self.noise_level = instance.sigma
        self.noise_moment_exponent = dual_exponent(instance.q)
        self._rng = _philox(seed)

    def sample_gradient(self, x, rng=None):
        rng = self._rng_or_default(rng)
        inst = self.instance
        b = 1.0 / inst.s if rng.random() < inst.s else 0.0
        return np.array([inst.nu * b * inst.C])

    def mean_gradient(self, x):
        return np.array([self.instance.nu * self.instance.C])


def bernoulli_oracle(
    mu: float,
    q: float,
    sigma: float,
    epsilon: float,
    nu: int,
    seed: int = 0,
) -> tuple[BernoulliOracle, BernoulliLowerBoundInstance]:
    """Construct the adversarial oracle together with its hidden-sign handle.

    Only the returned instance reveals nu; the experiment harness uses it for
    post-hoc scoring while the solver sees just the oracle. Requires
    epsilon <= sigma^p / (2 p mu^(p-1)); larger targets are rejected because
    the construction cannot bound the noise moment there.
    """
    if nu not in (-1, 1):
        raise ParameterError(f"nu must be -1 or +1, got {nu}")
    if not (mu > 0.0 and sigma > 0.0 and epsilon > 0.0):
        raise ParameterError("mu, sigma, epsilon must all be positive")
    p = dual_exponent(q)
    ceiling = sigma ** p / (2.0 * p * mu ** (p - 1.0))
    if epsilon > ceiling:
        raise ParameterError(
            f"epsilon={epsilon} exceeds sigma^p/(2 p mu^(p-1)) = {ceiling:.6g}; "
            "the adversarial construction requires epsilon below that level"
        )
    C = mu ** (1.0 / q) * (epsilon * p) ** (1.0 / p)
    s = solve_bernoulli_activation(mu, q, sigma, epsilon)
    instance = BernoulliLowerBoundInstance(
        nu=int(nu), s=s, C=C, mu=float(mu), q=float(q),
        sigma=float(sigma), epsilon=float(epsilon),
    )
    return BernoulliOracle(instance, seed=seed), instance


def absolute_gaussian_moment(p: float) -> float:
    """E |N(0,1)|^p = 2^(p/2) Gamma((p+1)/2) / sqrt(pi)."""
    return 2.0 ** (p / 2.0) * math.gamma((p + 1.0) / 2.0) / math.sqrt(math.pi)


_NOISE_KINDS = ("gaussian", "bounded_sphere", "pareto")


class AdditiveNoiseOracle(StochasticGradientOracle):
    """Exact gradient map plus i.i.d. synthetic noise at declared level sigma.

    The noise is calibrated so E ||noise||_p^p <= sigma^p with p the dual
    exponent of the ambient l_q norm:

    * gaussian — i.i.d. N(0, s^2) coordinates with s solving d s^p m_p = sigma^p;
    * bounded_sphere — a vector of constant dual norm sigma * (ln 2)^(1/p),
      making exp(||noise||_p^p / sigma^p) identically 2 (the exponential
      moment bound holds with equality);
    * pareto — heavy-tailed magnitude with tail index ``tail`` > p, scaled to
      meet the moment bound; has no exponential moment.

    ``mgf_sigma`` is the smallest level at which the exponential moment bound
    E exp(||noise||_p^p / level^p) <= 2 provably holds (None when it cannot).
    """

    def __init__(self, grad_fn, dimension: int, kind: str, sigma: float,
                 q: float = 2.0, seed: int = 0, tail: float = 4.0):
        if kind not in _NOISE_KINDS:
            raise ParameterError(f"unknown noise kind {kind!r}; expected one of {_NOISE_KINDS}")
        if sigma < 0.0:
            raise ParameterError(f"sigma must be nonnegative, got {sigma}")
        p = dual_exponent(q)
        if kind == "pareto" and tail <= p:
            raise ParameterError(f"pareto tail index must exceed p={p}, got {tail}")
        self._grad_fn = grad_fn
        self.dimension = int(dimension)
        self.kind = kind
        self.q = float(q)
        self.noise_level = float(sigma)
        self.noise_moment_exponent = p
        self.tail = float(tail)
        self._rng = _philox(seed)
        if sigma == 0.0:
            self.mgf_sigma = 0.0
        elif kind == "bounded_sphere":
            self.mgf_sigma = float(sigma)
        elif kind == "gaussian" and p == 2.0:
            s = sigma / (dimension * absolute_gaussian_moment(p)) ** (1.0 / p)
            self.mgf_sigma = float(s * math.sqrt(2.0 / (1.0 - 2.0 ** (-2.0 / dimension))))
        else:
            self.mgf_sigma = None

    def sample_gradient(self, x, rng=None):
        g = np.asarray(self._grad_fn(x), dtype=float)
        if self.noise_level == 0.0:
            return g
        rng = self._rng_or_default(rng)
        return g + self._draw_noise(rng)

    def _draw_noise(self, rng):
        p = self.noise_moment_exponent
        d = self.dimension
        sigma = self.noise_level
        if self.kind == "gaussian":
            s = sigma / (d * absolute_gaussian_moment(p)) ** (1.0 / p)
            return s * rng.standard_normal(d)
        direction = rng.standard_normal(d)
        direction /= lq_norm(direction, p)
        if self.kind == "bounded_sphere":
            return sigma * math.log(2.0) ** (1.0 / p) * direction
        # pareto: magnitude x_m * U^(-1/tail) has E mag^p = x_m^p * tail/(tail-p)
        x_m = sigma * ((self.tail - p) / self.tail) ** (1.0 / p)
        magnitude = x_m * rng.random() ** (-1.0 / self.tail)
        return magnitude * direction

    def mean_gradient(self, x):
        return np.asarray(self._grad_fn(x), dtype=float)


def additive_noise_oracle(
    grad_fn,
    dimension: int,
    kind: str = "gaussian",
    sigma: float = 0.0,
    q: float = 2.0,
    seed: int = 0,
    tail: float = 4.0,
    evaluate_fn=None,
) -> AdditiveNoiseOracle:
    oracle = AdditiveNoiseOracle(grad_fn, dimension, kind, sigma, q=q, seed=seed, tail=tail)
    if evaluate_fn is not None:
        oracle.evaluate_F = evaluate_fn
    return oracle
