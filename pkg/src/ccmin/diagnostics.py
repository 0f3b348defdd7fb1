"""Run diagnostics: exact gap metrics, pathwise certificates, and the two
Monte Carlo experiments (adversarial failure rate, martingale tail bounds).

The certificate is the central check. For a valid schedule, every run of
either solver satisfies, at every horizon t and for every noise realization,

    A_t [Psi(xag_{t+1}) - Psi*] + gamma_t D(x*, x_{t+1})
        <= gamma_1 D(x*, x_1)                                (initialization)
         + sum_s alpha_s <delta_s, x* - x_s>                 (martingale part)
         + sum_s 2||delta_s||_*^p / (p mu^{p/q}) (alpha_s^q/gamma_s)^{p/q}
         + L sum_s alpha_s (2 M alpha_s / (mu gamma_s))^{1/r}

(with the accelerated variant replacing the last sum by
L sum_s A_s (2 M alpha_s^q / (mu A_s^{q-1} gamma_s))^{1/r}). This is not a
statement in expectation — it can be asserted on a single trace, provided the
trace recorded the realized noise delta_s = sample - mean gradient, which
requires an oracle that exposes its mean gradient. That makes the check a
test-mode feature; production oracles cannot reveal their mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DiagnosticUnavailableError, NumericalError, ParameterError
from .geometry import GeometryParams, derive_params, power_inv_r, power_uc_constant
from .oracles import AdditiveNoiseOracle, RidgeInstance, absolute_gaussian_moment, bernoulli_oracle
from .regularizers import PowerNormRegularizer
from .solvers import TraceOptions, acsmd, default_schedule, nacsmd

__all__ = [
    "exact_optimum",
    "ridge_psi",
    "CertificateReport",
    "certificate_check",
    "LowerBoundReport",
    "lower_bound_experiment",
    "ConcentrationReport",
    "martingale_tail_bound",
    "concentration_check",
]


def ridge_psi(instance: RidgeInstance, x: np.ndarray) -> float:
    """Exact regularized objective of a ridge instance (population form)."""
    x = np.asarray(x, dtype=float)
    d = x - instance.x_star
    return (
        float(d @ d) / 3.0
        + instance.sigma_b ** 2
        + instance.mu / instance.q * float(np.sum(np.abs(x) ** instance.q))
    )


def exact_optimum(instance: RidgeInstance, residual_tol: float = 1e-10):
    """Coordinate-wise optimum of the ridge objective and its exact value.

    Each coordinate solves (2/3)(x - x*_j) + mu |x|^{q-1} sign(x) = 0, a
    strictly increasing scalar equation with root between 0 and x*_j;
    bisection to machine width.
    """
    xs = instance.x_star
    if instance.mu == 0.0:
        return xs.copy(), instance.sigma_b ** 2
    mu, q = instance.mu, instance.q

    def foc(x):
        return 2.0 / 3.0 * (x - xs) + mu * np.abs(x) ** (q - 1.0) * np.sign(x)

    lo = np.minimum(0.0, xs)
    hi = np.maximum(0.0, xs)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        go_up = foc(mid) < 0.0
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_up, hi, mid)
    x_opt = 0.5 * (lo + hi)
    worst = float(np.max(np.abs(foc(x_opt))))
    if worst > residual_tol:
        raise NumericalError(f"exact_optimum: optimality residual {worst:.3e} > {residual_tol}")
    return x_opt, ridge_psi(instance, x_opt)


@dataclass
class CertificateReport:
    """Per-horizon decomposition of the run inequality; slack must stay >= 0."""

    algorithm: str
    lhs: np.ndarray
    rhs: np.ndarray
    slack: np.ndarray
    init_term: float
    martingale: np.ndarray
    noise_moment: np.ndarray
    deterministic: np.ndarray
    ok: bool
    min_normalized_slack: float
    first_violation: int | None


def certificate_check(
    trace,
    params: GeometryParams,
    H: PowerNormRegularizer,
    x_star: np.ndarray,
    psi,
    psi_star: float,
    tol: float = 1e-6,
) -> CertificateReport:
    """Evaluate the pathwise inequality of a recorded run at every horizon.

    Needs a full-resolution trace (thin = 1) with iterates and realized
    noise. ``psi`` is the exact objective; ``x_star`` its unique minimizer.
    """
    if trace.noise is None:
        raise DiagnosticUnavailableError(
            "certificate_check needs realized noise; run with an oracle exposing "
            "mean_gradient and record_noise=True"
        )
    if trace.iterates is None or trace.kept_steps is not None:
        raise DiagnosticUnavailableError("certificate_check needs an unthinned iterate trace")
    T = trace.T
    x_star = np.asarray(x_star, dtype=float)
    alphas, gammas, A = trace.alphas, trace.gammas, trace.A
    delta = trace.noise                       # (T, d)
    x_t = trace.iterates[:T]                  # x_1 .. x_T
    x_next = trace.iterates[1:]               # x_2 .. x_{T+1}
    x_avg = trace.averaged[1:]                # xag_2 .. xag_{T+1}

    p, q, mu, M, L, r = params.p, params.q, params.mu, params.M, params.L, params.r
    dual_norms = np.sum(np.abs(delta) ** p, axis=1) ** (1.0 / p)

    martingale = np.cumsum(alphas * np.sum(delta * (x_star - x_t), axis=1))
    noise_moment = np.cumsum(
        2.0 * dual_norms ** p / (p * mu ** (p / q)) * (alphas ** q / gammas) ** (p / q)
    )
    if trace.algorithm == "nacsmd":
        base = 2.0 * M * alphas / (mu * gammas)
        det_steps = L * alphas * power_inv_r(base, r)
    elif trace.algorithm == "acsmd":
        base = 2.0 * M * alphas * (alphas / A) ** (q - 1.0) / (mu * gammas)
        det_steps = L * A * power_inv_r(base, r)
    else:
        raise ParameterError(f"no certificate for algorithm {trace.algorithm!r}")
    if r == 0.0 and np.any(base > 1.0 + 1e-9):
        raise ParameterError(
            "certificate_check: schedule violates gamma_t >= 2 M alpha_t / mu in the "
            "smooth case; the deterministic term convention does not apply"
        )
    deterministic = np.cumsum(det_steps)

    # D(x*, y) rows for y = x_1 and y = x_{t+1}
    def breg_rows(Y):
        hy = H.mu / H.q * np.sum(np.abs(Y) ** H.q, axis=1)
        gy = H.mu * np.abs(Y) ** (H.q - 1.0) * np.sign(Y)
        return float(H.value(x_star)) - hy - np.sum(gy * (x_star - Y), axis=1)

    init_term = float(gammas[0]) * float(breg_rows(trace.iterates[:1])[0])
    gaps = np.array([psi(row) for row in x_avg]) - psi_star
    lhs = A * gaps + gammas * breg_rows(x_next)
    rhs = init_term + martingale + noise_moment + deterministic
    slack = rhs - lhs
    norm_slack = slack / (1.0 + np.abs(rhs))
    bad = norm_slack < -tol
    first = int(np.argmax(bad)) + 1 if bool(bad.any()) else None
    return CertificateReport(
        algorithm=trace.algorithm,
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        init_term=init_term,
        martingale=martingale,
        noise_moment=noise_moment,
        deterministic=deterministic,
        ok=first is None,
        min_normalized_slack=float(norm_slack.min()),
        first_violation=first,
    )


@dataclass
class LowerBoundReport:
    empirical_failure_rate: float
    T_bound: int
    theory_rate: float
    threshold: float
    ok: bool
    allzero_rate: float
    allzero_expected: float
    activation: float
    gradient_scale: float
    trials: int


def lower_bound_experiment(
    solver: str,
    mu: float,
    q: float,
    sigma: float,
    epsilon: float,
    gamma: float,
    trials: int,
    seed: int = 0,
    T: int | None = None,
) -> LowerBoundReport:
    """Failure-probability experiment against the hidden-sign oracle.

    Runs the chosen solver for the horizon T = floor((1/(2 p^{q-1}))
    (sigma/mu) (sigma/eps)^{q-1} ln(1/(1-gamma))) from the uninformative
    start 0, with the sign drawn uniformly per trial. A trial fails when the
    output's suboptimality on the realized instance is >= epsilon (up to a
    1e-9 relative float guard). No algorithm can beat failure probability
    1 - gamma at this horizon, so the empirical rate must sit above
    (1 - gamma) minus three binomial standard errors.
    """
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"gamma must lie in (0, 1), got {gamma}")
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    p = q / (q - 1.0)
    if T is None:
        bound = (
            0.5 / p ** (q - 1.0) * (sigma / mu) * (sigma / epsilon) ** (q - 1.0)
            * math.log(1.0 / (1.0 - gamma))
        )
        T = max(1, math.floor(bound))
    run = {"nacsmd": nacsmd, "acsmd": acsmd}[solver]
    params = derive_params(q, 2.0, 0.0, mu * power_uc_constant(q), sigma=sigma)
    sched = default_schedule(params, solver, validate_horizon=max(T, 16))
    H = PowerNormRegularizer(mu=mu, q=q, dim=1)
    opts = TraceOptions(record_iterates=False, record_noise=False, record_gradients=True)

    failures = 0
    allzero = 0
    s_value = C_value = None
    for i in range(trials):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, i))))
        nu = 1 if rng.random() < 0.5 else -1
        oracle, inst = bernoulli_oracle(mu, q, sigma, epsilon, nu=nu)
        s_value, C_value = inst.s, inst.C
        _, y, trace = run(oracle, H, sched, np.zeros(1), T, rng=rng,
                          params=params, trace_opts=opts)
        subopt = inst.psi(float(y[0])) - inst.psi_star
        if subopt >= epsilon * (1.0 - 1e-9):
            failures += 1
        if not np.any(trace.grad_samples):
            allzero += 1

    rate = failures / trials
    theory = 1.0 - gamma
    threshold = theory - 3.0 * math.sqrt(gamma * (1.0 - gamma) / trials)
    return LowerBoundReport(
        empirical_failure_rate=rate,
        T_bound=T,
        theory_rate=theory,
        threshold=threshold,
        ok=rate >= threshold,
        allzero_rate=allzero / trials,
        allzero_expected=(1.0 - s_value) ** T,
        activation=s_value,
        gradient_scale=C_value,
        trials=trials,
    )


@dataclass
class ConcentrationReport:
    tau: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    stderr: np.ndarray
    ok: bool
    mgf_estimate: float
    sigma_R: float
    meta: dict = field(default_factory=dict)


def martingale_tail_bound(tau, weights: np.ndarray, sigma_R: float, q: float):
    """Tail bound for sum_t beta_t W_t when each W_t has the exponential
    moment bound E exp(|W|^p / sigma_R^p) <= 2 conditionally on the past.

    With S2 = 3 sigma_R sqrt(sum beta^2) and Sq = 3 sigma_R (sum beta^q)^{1/q}:

        tau <= S2^2 / sigma_R                ->  exp(-(tau/S2)^2 / 4)
        tau >  S2^2 / sigma_R                ->  exp(-tau / (4 sigma_R))
        tau >= q Sq^q / (2 sigma_R)^{q-1}    ->  also
                                   exp(-(1/p) (1/q)^{1/(q-1)} (tau/Sq)^p)

    Where two regimes apply the smaller bound is used. Published variants of
    the middle and polynomial regimes carry slightly stronger constants than
    their derivations support (4 vs p in the middle denominator, and a
    dropped (1/q)^{1/(q-1)} factor in the exponent of the third); this
    evaluator keeps the weaker, derivation-backed constants in both places.
    """
    tau = np.asarray(tau, dtype=float)
    beta = np.asarray(weights, dtype=float)
    p = q / (q - 1.0)
    S2 = 3.0 * sigma_R * math.sqrt(float(np.sum(beta ** 2)))
    Sq = 3.0 * sigma_R * float(np.sum(np.abs(beta) ** q)) ** (1.0 / q)
    out = np.ones_like(tau)
    gauss_regime = tau <= S2 ** 2 / sigma_R
    out[gauss_regime] = np.exp(-0.25 * (tau[gauss_regime] / S2) ** 2)
    mid = ~gauss_regime
    out[mid] = np.exp(-tau[mid] / (4.0 * sigma_R))
    poly = tau >= q * Sq ** q / (2.0 * sigma_R) ** (q - 1.0)
    coeff = (1.0 / q) ** (1.0 / (q - 1.0)) / p
    out[poly] = np.minimum(out[poly], np.exp(-coeff * (tau[poly] / Sq) ** p))
    return np.minimum(out, 1.0), S2, Sq


def concentration_check(
    noise: str,
    weights: np.ndarray,
    trials: int,
    seed: int = 0,
    sigma: float = 1.0,
    R: float = 1.0,
    dim: int = 4,
    q: float = 2.0,
    tau_grid: np.ndarray | None = None,
    mgf_draws: int = 100_000,
    chunk: int = 10_000,
) -> ConcentrationReport:
    """Monte Carlo check of the martingale tail bound on a scripted path.

    Simulates W_t = <noise_t, u_t> with deterministic directions u_t of l_q
    norm exactly R (a path inside the radius-R ball around the optimum) and
    compares the empirical tail of sum_t beta_t W_t against the bound on a
    tau grid. Only noise families with a certified exponential moment level
    are admitted; heavy-tailed noise is rejected.
    """
    weights = np.asarray(weights, dtype=float)
    T = weights.size
    p = q / (q - 1.0)
    probe = AdditiveNoiseOracle(lambda x: np.zeros(dim), dim, noise, sigma, q=q)
    if probe.mgf_sigma is None:
        raise ParameterError(
            f"noise kind {noise!r} (p={p}) has no certified exponential moment level"
        )
    sigma_R = probe.mgf_sigma * R

    # deterministic unit-l_q directions: alternating signed basis vectors
    dirs = np.zeros((T, dim))
    for t in range(T):
        dirs[t, t % dim] = R * (1.0 if t % 2 == 0 else -1.0)

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 0xC0))))
    sums = np.empty(trials)
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        noise_block = _draw_noise_block(rng, noise, n, T, dim, sigma, p)
        W = np.einsum("ntd,td->nt", noise_block, dirs)
        sums[done:done + n] = W @ weights
        done += n

    if tau_grid is None:
        S2 = 3.0 * sigma_R * math.sqrt(float(np.sum(weights ** 2)))
        tau_grid = np.linspace(0.5, 5.0, 10) * S2
    tau_grid = np.asarray(tau_grid, dtype=float)
    empirical = np.array([float(np.mean(sums > tau)) for tau in tau_grid])
    bound, S2, Sq = martingale_tail_bound(tau_grid, weights, sigma_R, q)
    stderr = np.sqrt(bound * (1.0 - bound) / trials)
    ok = bool(np.all(empirical <= bound + 3.0 * stderr + 1e-12))

    mgf_block = _draw_noise_block(rng, noise, mgf_draws, 1, dim, sigma, p)[:, 0, :]
    dual_p = np.sum(np.abs(mgf_block) ** p, axis=1)
    mgf_estimate = float(np.mean(np.exp(dual_p / probe.mgf_sigma ** p)))

    return ConcentrationReport(
        tau=tau_grid,
        empirical=empirical,
        bound=bound,
        stderr=stderr,
        ok=ok,
        mgf_estimate=mgf_estimate,
        sigma_R=sigma_R,
        meta={"S2": S2, "Sq": Sq, "T": T, "trials": trials, "noise": noise},
    )


def _draw_noise_block(rng, kind: str, n: int, T: int, dim: int, sigma: float, p: float):
    """Vectorized (n, T, dim) noise draws matching AdditiveNoiseOracle's families."""
    if kind == "gaussian":
        s = sigma / (dim * absolute_gaussian_moment(p)) ** (1.0 / p)
        return s * rng.standard_normal((n, T, dim))
    if kind == "bounded_sphere":
        u = rng.standard_normal((n, T, dim))
        norms = np.sum(np.abs(u) ** p, axis=2, keepdims=True) ** (1.0 / p)
        return sigma * math.log(2.0) ** (1.0 / p) * u / norms
    raise ParameterError(f"unsupported noise kind {kind!r} for concentration checks")
