"""Step-size schedules and the mirror-descent solvers built on them.

Two solvers share the same proximal engine:

* ``nacsmd`` — plain composite stochastic mirror descent: query the oracle at
  the current iterate, take one composite prox step, output the alpha-weighted
  average of the iterates.
* ``acsmd`` — accelerated variant: the oracle is queried at a moving convex
  combination of the averaged and raw iterates, and the averaged sequence is
  updated incrementally.

A schedule is a pair of sequences (alpha_t, gamma_t). Validity means, for
every t up to the horizon,

    alpha_t >= gamma_{t+1} - gamma_t                        (both solvers)
    gamma_t >= (2M/mu) * alpha_t                            (nacsmd)
    gamma_t >= (2M/mu) * alpha_t^q / A_t^{q-1}              (acsmd)

with A_t the running alpha sum. The run certificates in ``diagnostics`` hold
on every noise realization provided these inequalities do, so solvers refuse
nothing but the caller is expected to validate first (the bench harness
does). ``default_schedule`` builds the standard polynomial family and bumps
its offset until the inequalities hold on a long horizon.

``restart`` chains stages of a fixed length, each started from the previous
stage's final non-averaged iterate, which turns the gamma_1/gamma_K decay of
the initialization term into geometric convergence; ``plan_from_params``
sizes the stages from the computable bound ``expectation_bound``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError, ParameterError
from .geometry import GeometryParams, power_inv_r
from .regularizers import PowerNormRegularizer, composite_prox

__all__ = [
    "PolynomialSchedule",
    "CustomSchedule",
    "default_schedule",
    "validate_schedule",
    "ScheduleReport",
    "TraceOptions",
    "RunTrace",
    "nacsmd",
    "acsmd",
    "RestartPlan",
    "RestartTrace",
    "restart",
    "halving_horizon",
    "plan_from_params",
    "expectation_bound",
    "acsa_baseline",
]

TARGETS = ("nacsmd", "acsmd")


@dataclass(frozen=True)
class PolynomialSchedule:
    """alpha_t = (t + offset [+1 if m >= 0])^m, gamma_t = s/(m+1) (t + offset)^{m+1}.

    The +1 shift on alpha makes alpha_t dominate the gamma increments for
    m >= 0; for m < 0 the increments are decreasing so the shift is dropped.
    ``safety_scale`` multiplies gamma only.
    """

    m: float
    offset: float
    target: str
    safety_scale: float = 1.0
    base_offset: float | None = None  # offset before auto-tuning, for provenance

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ParameterError(f"target must be one of {TARGETS}, got {self.target!r}")
        if self.m <= -1.0:
            raise ParameterError(f"polynomial degree must exceed -1, got {self.m}")
        if self.offset < 0.0:
            raise ParameterError(f"offset must be nonnegative, got {self.offset}")
        if self.safety_scale < 1.0:
            raise ParameterError(f"safety_scale must be >= 1, got {self.safety_scale}")

    def alpha(self, t):
        t = np.asarray(t, dtype=float)
        shift = 1.0 if self.m >= 0.0 else 0.0
        out = (t + self.offset + shift) ** self.m
        return float(out) if out.ndim == 0 else out

    def gamma(self, t):
        t = np.asarray(t, dtype=float)
        out = self.safety_scale / (self.m + 1.0) * (t + self.offset) ** (self.m + 1.0)
        return float(out) if out.ndim == 0 else out

    def describe(self) -> dict:
        return {
            "kind": "polynomial",
            "target": self.target,
            "m": self.m,
            "offset": self.offset,
            "base_offset": self.base_offset if self.base_offset is not None else self.offset,
            "safety_scale": self.safety_scale,
        }


@dataclass(frozen=True)
class CustomSchedule:
    """Explicit sequences; alphas[t-1] and gammas[t-1] are the step-t values."""

    alphas: np.ndarray
    gammas: np.ndarray
    target: str

    def __post_init__(self):
        object.__setattr__(self, "alphas", np.asarray(self.alphas, dtype=float))
        object.__setattr__(self, "gammas", np.asarray(self.gammas, dtype=float))
        if self.target not in TARGETS:
            raise ParameterError(f"target must be one of {TARGETS}, got {self.target!r}")
        if np.any(self.alphas <= 0.0) or np.any(self.gammas <= 0.0):
            raise ParameterError("custom schedules must be strictly positive")

    def _pick(self, seq, t):
        t = np.asarray(t)
        idx = t.astype(int) - 1
        if np.any(idx < 0) or np.any(idx >= seq.size):
            raise ParameterError(
                f"custom schedule of length {seq.size} queried at t={t}"
            )
        out = seq[idx]
        return float(out) if out.ndim == 0 else out

    def alpha(self, t):
        return self._pick(self.alphas, t)

    def gamma(self, t):
        return self._pick(self.gammas, t)

    def describe(self) -> dict:
        return {"kind": "custom", "target": self.target, "length": int(self.alphas.size)}


@dataclass(frozen=True)
class ScheduleReport:
    ok: bool
    first_violation: int | None
    slack_min: float
    growth_slack_min: float   # min over t of alpha_t - (gamma_{t+1} - gamma_t)
    lower_slack_min: float    # min over t of gamma_t - curvature requirement


def validate_schedule(sched, params: GeometryParams, horizon: int) -> ScheduleReport:
    """Exact per-t check of the two schedule inequalities up to ``horizon``."""
    if horizon < 1:
        raise ParameterError(f"horizon must be >= 1, got {horizon}")
    t = np.arange(1, horizon + 1, dtype=float)
    alphas = np.asarray(sched.alpha(t), dtype=float)
    gammas = np.asarray(sched.gamma(t), dtype=float)
    gammas_next = np.asarray(sched.gamma(t + 1.0), dtype=float)
    growth_slack = alphas - (gammas_next - gammas)
    beta = 2.0 * params.M / params.mu
    if sched.target == "nacsmd":
        lower_slack = gammas - beta * alphas
    else:
        A = np.cumsum(alphas)
        # alpha^q / A^{q-1} written as alpha * (alpha/A)^{q-1}: the ratio is
        # <= 1 so high exponents cannot overflow
        lower_slack = gammas - beta * alphas * (alphas / A) ** (params.q - 1.0)
    tol = 1e-9 * (1.0 + np.abs(gammas))
    bad = (growth_slack < -tol) | (lower_slack < -tol)
    first = int(np.argmax(bad)) + 1 if bool(bad.any()) else None
    return ScheduleReport(
        ok=first is None,
        first_violation=first,
        slack_min=float(min(growth_slack.min(), lower_slack.min())),
        growth_slack_min=float(growth_slack.min()),
        lower_slack_min=float(lower_slack.min()),
    )


def default_schedule(
    params: GeometryParams,
    target: str,
    m: float | None = None,
    offset: float | None = None,
    safety_scale: float = 1.0,
    validate_horizon: int = 1_000_000,
    max_doublings: int = 60,
) -> PolynomialSchedule:
    """Standard polynomial schedule for a solver, offset-tuned until valid.

    The degree defaults to m = max(1/r - 1, (2-q)/(q-1)) for nacsmd and
    m = max(q/r - 2, (2-q)/(q-1)) for acsmd, falling back to the second
    branch when r = 0 (the smooth case, where the first is unbounded). The
    printed offsets tie to (m+1) * 2M/mu but can violate the curvature
    inequality at small t; doubling the offset preserves the polynomial
    family and both inequalities eventually hold, so that is the repair
    applied here (a gamma-only bump would break the growth inequality at
    large t). The starting offset is kept in ``base_offset`` for reports.
    """
    if target not in TARGETS:
        raise ParameterError(f"target must be one of {TARGETS}, got {target!r}")
    q, r = params.q, params.r
    if m is None:
        fallback = (2.0 - q) / (q - 1.0)
        if r > 0.0:
            m = max((1.0 / r - 1.0) if target == "nacsmd" else (q / r - 2.0), fallback)
        elif target == "acsmd":
            # smooth case: a constant-degree schedule would force the offset
            # to ~L/mu through the t=1 curvature condition, losing the
            # square-root stage length; linear growth restores it
            m = max(1.0, fallback)
        else:
            m = fallback
    if offset is None:
        base = 2.0 * (m + 1.0) * params.M / params.mu
        offset = base if target == "nacsmd" else base ** (1.0 / q)
    sched = PolynomialSchedule(
        m=float(m), offset=float(offset), target=target,
        safety_scale=float(safety_scale), base_offset=float(offset),
    )
    for _ in range(max_doublings):
        if validate_schedule(sched, params, validate_horizon).ok:
            return sched
        sched = replace(sched, offset=2.0 * sched.offset + 1.0)
    raise NumericalError(
        f"default_schedule: could not satisfy the {target} step conditions "
        f"within {max_doublings} offset doublings (m={m}, safety_scale={safety_scale})"
    )


@dataclass
class TraceOptions:
    """What a solver records per iteration.

    ``gap_fn``/``bregman_fn`` are evaluated on the averaged iterate / the raw
    iterate after each step and stored as scalar series. ``thin`` keeps every
    k-th row of the per-iterate vector arrays (scalar series stay dense).
    """

    record_iterates: bool = True
    record_noise: bool = True
    record_gradients: bool = False
    thin: int = 1
    gap_fn: object = None
    bregman_fn: object = None

    def __post_init__(self):
        if self.thin < 1:
            raise ParameterError(f"thin must be >= 1, got {self.thin}")


@dataclass
class RunTrace:
    algorithm: str
    T: int
    alphas: np.ndarray
    gammas: np.ndarray
    A: np.ndarray
    iterates: np.ndarray | None = None       # rows x_1 .. x_{T+1} (thinned)
    averaged: np.ndarray | None = None       # rows x^ag_1 .. x^ag_{T+1} (thinned)
    query_points: np.ndarray | None = None   # acsmd oracle query points (thinned)
    grad_samples: np.ndarray | None = None
    noise: np.ndarray | None = None          # realized sample - mean gradient, per t
    psi_gap: np.ndarray | None = None
    bregman_to_opt: np.ndarray | None = None
    kept_steps: np.ndarray | None = None     # iterate-array row -> step index (0..T)
    stopped_at: int | None = None
    meta: dict = field(default_factory=dict)


def _thin_rows(arr, thin, T):
    if arr is None or thin == 1:
        return arr, None
    kept = np.unique(np.concatenate([np.arange(0, arr.shape[0], thin), [arr.shape[0] - 1]]))
    return arr[kept], kept


def _require_valid(sched, params, T, target):
    if params is None:
        return
    report = validate_schedule(sched, params, T)
    if not report.ok:
        raise ParameterError(
            f"schedule fails the {target} step conditions at t={report.first_violation} "
            f"(slack {report.slack_min:.3e})"
        )


def _finish_trace(trace: RunTrace, opts: TraceOptions):
    for name in ("iterates", "averaged", "query_points"):
        arr = getattr(trace, name)
        thinned, kept = _thin_rows(arr, opts.thin, trace.T)
        setattr(trace, name, thinned)
        if kept is not None:
            trace.kept_steps = kept
    return trace


def nacsmd(
    oracle,
    H: PowerNormRegularizer,
    sched,
    x1: np.ndarray,
    T: int,
    rng: np.random.Generator | None = None,
    params: GeometryParams | None = None,
    trace_opts: TraceOptions | None = None,
    stop_gap: float | None = None,
):
    """Composite stochastic mirror descent; returns (x_{T+1}, x^ag_{T+1}, trace)."""
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    _require_valid(sched, params, T, "nacsmd")
    opts = trace_opts or TraceOptions()
    x = np.array(x1, dtype=float)
    d = x.size
    record_noise = opts.record_noise and oracle.mean_gradient is not None

    alphas = np.empty(T)
    gammas = np.empty(T)
    iterates = np.empty((T + 1, d)) if opts.record_iterates else None
    averaged = np.empty((T + 1, d)) if opts.record_iterates else None
    grads = np.empty((T, d)) if opts.record_gradients else None
    noise = np.empty((T, d)) if record_noise else None
    psi_gap = np.empty(T) if opts.gap_fn is not None else None
    breg = np.empty(T) if opts.bregman_fn is not None else None
    if iterates is not None:
        iterates[0] = x
        averaged[0] = x

    S = np.zeros(d)
    A = 0.0
    x_avg = x.copy()
    steps = T
    for t in range(1, T + 1):
        a_t = float(sched.alpha(t))
        g_t = float(sched.gamma(t))
        gs = oracle.sample_gradient(x, rng)
        if record_noise:
            noise[t - 1] = gs - oracle.mean_gradient(x)
        if grads is not None:
            grads[t - 1] = gs
        x_next = composite_prox(H, gs, x, a_t, g_t)
        if not np.all(np.isfinite(x_next)):
            raise NumericalError(f"nacsmd: non-finite iterate at t={t}")
        A += a_t
        S += a_t * x_next
        x_avg = S / A
        alphas[t - 1] = a_t
        gammas[t - 1] = g_t
        if iterates is not None:
            iterates[t] = x_next
            averaged[t] = x_avg
        gap = None
        if psi_gap is not None:
            gap = float(opts.gap_fn(x_avg))
            psi_gap[t - 1] = gap
        if breg is not None:
            breg[t - 1] = float(opts.bregman_fn(x_next))
        x = x_next
        if stop_gap is not None and gap is not None and gap <= stop_gap:
            steps = t
            break

    sl = slice(0, steps)
    trace = RunTrace(
        algorithm="nacsmd",
        T=steps,
        alphas=alphas[sl],
        gammas=gammas[sl],
        A=np.cumsum(alphas[sl]),
        iterates=iterates[: steps + 1] if iterates is not None else None,
        averaged=averaged[: steps + 1] if averaged is not None else None,
        grad_samples=grads[sl] if grads is not None else None,
        noise=noise[sl] if noise is not None else None,
        psi_gap=psi_gap[sl] if psi_gap is not None else None,
        bregman_to_opt=breg[sl] if breg is not None else None,
        stopped_at=steps if steps < T else None,
    )
    return x, x_avg, _finish_trace(trace, opts)


def acsmd(
    oracle,
    H: PowerNormRegularizer,
    sched,
    x1: np.ndarray,
    T: int,
    rng: np.random.Generator | None = None,
    params: GeometryParams | None = None,
    trace_opts: TraceOptions | None = None,
    stop_gap: float | None = None,
):
    """Accelerated variant; oracle queries move to the momentum point.

    Maintains x^md_t = (A_{t-1}/A_t) x^ag_t + (alpha_t/A_t) x_t, proxes from
    x_t using the gradient sampled at x^md_t, and averages incrementally:
    x^ag_{t+1} = (A_{t-1}/A_t) x^ag_t + (alpha_t/A_t) x_{t+1}. A_0 = 0 and
    x^ag_1 = x_1, so the first query lands exactly on x_1.
    """
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    _require_valid(sched, params, T, "acsmd")
    opts = trace_opts or TraceOptions()
    x = np.array(x1, dtype=float)
    d = x.size
    record_noise = opts.record_noise and oracle.mean_gradient is not None

    alphas = np.empty(T)
    gammas = np.empty(T)
    iterates = np.empty((T + 1, d)) if opts.record_iterates else None
    averaged = np.empty((T + 1, d)) if opts.record_iterates else None
    queries = np.empty((T, d)) if opts.record_iterates else None
    grads = np.empty((T, d)) if opts.record_gradients else None
    noise = np.empty((T, d)) if record_noise else None
    psi_gap = np.empty(T) if opts.gap_fn is not None else None
    breg = np.empty(T) if opts.bregman_fn is not None else None
    if iterates is not None:
        iterates[0] = x
        averaged[0] = x

    x_ag = x.copy()
    A_prev = 0.0
    steps = T
    for t in range(1, T + 1):
        a_t = float(sched.alpha(t))
        g_t = float(sched.gamma(t))
        A_t = A_prev + a_t
        x_md = (A_prev / A_t) * x_ag + (a_t / A_t) * x
        gs = oracle.sample_gradient(x_md, rng)
        if record_noise:
            noise[t - 1] = gs - oracle.mean_gradient(x_md)
        if grads is not None:
            grads[t - 1] = gs
        x_next = composite_prox(H, gs, x, a_t, g_t)
        if not np.all(np.isfinite(x_next)):
            raise NumericalError(f"acsmd: non-finite iterate at t={t}")
        x_ag = (A_prev / A_t) * x_ag + (a_t / A_t) * x_next
        alphas[t - 1] = a_t
        gammas[t - 1] = g_t
        if iterates is not None:
            iterates[t] = x_next
            averaged[t] = x_ag
            queries[t - 1] = x_md
        gap = None
        if psi_gap is not None:
            gap = float(opts.gap_fn(x_ag))
            psi_gap[t - 1] = gap
        if breg is not None:
            breg[t - 1] = float(opts.bregman_fn(x_next))
        x = x_next
        A_prev = A_t
        if stop_gap is not None and gap is not None and gap <= stop_gap:
            steps = t
            break

    sl = slice(0, steps)
    trace = RunTrace(
        algorithm="acsmd",
        T=steps,
        alphas=alphas[sl],
        gammas=gammas[sl],
        A=np.cumsum(alphas[sl]),
        iterates=iterates[: steps + 1] if iterates is not None else None,
        averaged=averaged[: steps + 1] if averaged is not None else None,
        query_points=queries[sl] if queries is not None else None,
        grad_samples=grads[sl] if grads is not None else None,
        noise=noise[sl] if noise is not None else None,
        psi_gap=psi_gap[sl] if psi_gap is not None else None,
        bregman_to_opt=breg[sl] if breg is not None else None,
        stopped_at=steps if steps < T else None,
    )
    return x, x_ag, _finish_trace(trace, opts)


_SOLVERS = {"nacsmd": nacsmd, "acsmd": acsmd}


@dataclass(frozen=True)
class RestartPlan:
    """n halving stages of K iterations, then one final stage of T iterations."""

    n: int
    K: int
    T: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 0:
            raise ParameterError(f"n must be >= 0, got {self.n}")
        if self.K < 1:
            raise ParameterError(f"K must be >= 1, got {self.K}")
        if self.T < self.K:
            raise ParameterError(f"T must be >= K, got T={self.T}, K={self.K}")


@dataclass
class RestartTrace:
    stage_traces: list
    stage_starts: list        # x_1^0, x_1^1, ..., x_1^{n} and the final-stage start
    final_trace: RunTrace


def restart(
    solver,
    oracle,
    H: PowerNormRegularizer,
    sched,
    x1: np.ndarray,
    plan: RestartPlan,
    rng: np.random.Generator | None = None,
    params: GeometryParams | None = None,
    trace_opts: TraceOptions | None = None,
):
    """Run n stages of K iterations, chaining the raw (non-averaged) endpoint
    as the next start, then a final T-iteration stage whose averaged output is
    returned. With n = 0 this is byte-identical to a single solver call."""
    step = _SOLVERS[solver] if isinstance(solver, str) else solver
    x = np.array(x1, dtype=float)
    stage_traces = []
    stage_starts = [x.copy()]
    for _ in range(plan.n):
        x, _, tr = step(oracle, H, sched, x, plan.K, rng=rng, params=params,
                        trace_opts=trace_opts)
        stage_traces.append(tr)
        stage_starts.append(x.copy())
    _, y, final_tr = step(oracle, H, sched, x, plan.T, rng=rng, params=params,
                          trace_opts=trace_opts)
    return y, RestartTrace(stage_traces=stage_traces, stage_starts=stage_starts,
                           final_trace=final_tr)


def _bound_term_arrays(params: GeometryParams, sched, target: str, t: np.ndarray,
                       A_prev: float = 0.0):
    """Per-step noise/deterministic contributions of the computable mean bound."""
    alphas = np.asarray(sched.alpha(t), dtype=float)
    gammas = np.asarray(sched.gamma(t), dtype=float)
    A = A_prev + np.cumsum(alphas)
    p, q, mu, M, L, r = params.p, params.q, params.mu, params.M, params.L, params.r
    sigma = params.sigma
    noise = (2.0 * sigma ** p / (p * mu ** (p / q))) * (alphas ** q / gammas) ** (p / q)
    if target == "nacsmd":
        det = L * alphas * power_inv_r(2.0 * M * alphas / (mu * gammas), r)
    else:
        det = L * A * power_inv_r(
            2.0 * M * alphas * (alphas / A) ** (q - 1.0) / (mu * gammas), r
        )
    return alphas, gammas, A, noise, det


def expectation_bound(params: GeometryParams, sched, target: str, V0: float, T: int) -> float:
    """Computable bound on the expected gap after T steps:

        (gamma_1 * V0 + sum noise terms + sum deterministic terms) / A_T

    with the noise moments replaced by their declared level sigma^p. This is
    the quantity restart planning compares against the target accuracy, and
    run reports record it instead of hard-coded rate constants.
    """
    t = np.arange(1, T + 1, dtype=float)
    _, gammas, A, noise, det = _bound_term_arrays(params, sched, target, t)
    return float((float(sched.gamma(1)) * V0 + noise.sum() + det.sum()) / A[-1])


_PLAN_CHUNK = 1 << 17
_PLAN_CAP = 1 << 34


def halving_horizon(sched) -> int:
    """Smallest k with gamma_k >= 2 gamma_1: one restart stage of this length
    at least halves the Bregman divergence to the optimum (up to the stage's
    own noise/smoothness residuals), by the run inequality."""
    gamma1 = float(sched.gamma(1))
    K = 1
    while float(sched.gamma(K)) < 2.0 * gamma1:
        K += max(1, K // 4)
    while K > 1 and float(sched.gamma(K - 1)) >= 2.0 * gamma1:
        K -= 1
    return K


def plan_from_params(
    params: GeometryParams,
    target: str,
    V0_estimate: float,
    epsilon: float,
    sched=None,
) -> RestartPlan:
    """Size a restart plan from the computable bound.

    * n = ceil(log2(V0/epsilon)) halving stages;
    * K = smallest horizon with gamma_K >= 2 gamma_1, so each stage at least
      halves the divergence to the optimum (plus its own residual terms);
    * T = smallest horizon >= K at which the bound with start error epsilon
      falls below epsilon (driven by the noise term when sigma > 0).
    """
    if not epsilon > 0.0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if not V0_estimate > 0.0:
        raise ParameterError(f"V0_estimate must be positive, got {V0_estimate}")
    if sched is None:
        sched = default_schedule(params, target)
    n = max(0, math.ceil(math.log2(V0_estimate / epsilon))) if epsilon < V0_estimate else 0

    gamma1 = float(sched.gamma(1))
    K = halving_horizon(sched)

    # stream the bound terms in chunks until the residual drops below epsilon
    T = None
    A_prev = 0.0
    acc = gamma1 * epsilon
    start = 1
    while start <= _PLAN_CAP:
        t = np.arange(start, start + _PLAN_CHUNK, dtype=float)
        _, _, A, noise, det = _bound_term_arrays(params, sched, target, t, A_prev=A_prev)
        step_terms = noise + det
        if not np.all(np.isfinite(step_terms)):
            bad = int(t[np.nonzero(~np.isfinite(step_terms))[0][0]])
            raise ParameterError(
                f"plan_from_params: the bound term is undefined at t={bad} (the schedule "
                "violates the smooth-case step condition there); size the plan with a "
                "validated schedule"
            )
        residual = (acc + np.cumsum(step_terms)) / A
        hit = np.nonzero(residual <= epsilon)[0]
        if hit.size:
            T = start + int(hit[0])
            break
        acc += float(np.sum(step_terms))
        A_prev = float(A[-1])
        start += _PLAN_CHUNK
    if T is None:
        raise NumericalError(
            f"plan_from_params: bound does not reach epsilon={epsilon} within {_PLAN_CAP} steps"
        )
    T = max(T, K)
    meta = {
        "target": target,
        "gamma1": gamma1,
        "halving_ratio": gamma1 / float(sched.gamma(K)),
        "bound_at_T": expectation_bound(params, sched, target, epsilon, T),
        "schedule": sched.describe(),
    }
    return RestartPlan(n=n, K=K, T=T, meta=meta)


def _solve_power_linear(a: float, b: float, c: np.ndarray, q: float) -> np.ndarray:
    """Vector root of a|x|^{q-1}sign(x) + b x = c_j (a >= 0, b > 0, monotone)."""
    c = np.asarray(c, dtype=float)
    if a == 0.0 or q == 2.0:
        return c / (a + b) if q == 2.0 else c / b
    lo = np.minimum(0.0, c / b)
    hi = np.maximum(0.0, c / b)
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        val = a * np.abs(mid) ** (q - 1.0) * np.sign(mid) + b * mid
        go_up = val < c
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_up, hi, mid)
    return 0.5 * (lo + hi)


def acsa_baseline(
    oracle,
    H: PowerNormRegularizer,
    mu_f: float,
    L: float,
    x1: np.ndarray,
    T: int,
    rng: np.random.Generator | None = None,
    gap_fn=None,
    stop_gap: float | None = None,
    stage0: int = 4,
):
    """Multi-stage accelerated stochastic approximation baseline (Euclidean).

    Classic strongly convex accelerated stochastic approximation with
    alpha_t = 2/(t+1), gamma_t = 4 L_eff / (t (t+1)), restarted from the
    averaged iterate at doubling stage lengths. For q = 2 the regularizer is
    folded into the smooth part (L_eff = L + mu_H, mu_eff = mu_f + mu_H) and
    the inner step is a closed-form quadratic; otherwise the regularizer has
    no Euclidean strong convexity to offer, mu_eff = mu_f, and the inner step
    keeps it exact through a per-coordinate monotone solve. Counts one oracle
    query per iteration, like the mirror-descent solvers.
    """
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    if not mu_f > 0.0:
        raise ParameterError(f"mu_f must be positive, got {mu_f}")
    fold = H.q == 2.0
    mu_eff = mu_f + (H.mu if fold else 0.0)
    L_eff = L + (H.mu if fold else 0.0)

    x_ag = np.array(x1, dtype=float)
    psi_gap = np.empty(T) if gap_fn is not None else None
    alphas_used = np.empty(T)
    gammas_used = np.empty(T)
    global_t = 0
    stage = max(1, stage0)
    stopped = None

    while global_t < T and stopped is None:
        N = min(stage, T - global_t)
        x_prev = x_ag.copy()
        for t in range(1, N + 1):
            alpha_t = 2.0 / (t + 1.0)
            gamma_t = 4.0 * L_eff / (t * (t + 1.0))
            denom = gamma_t + (1.0 - alpha_t ** 2) * mu_eff
            x_md = (
                (1.0 - alpha_t) * (mu_eff + gamma_t) * x_ag
                + alpha_t * ((1.0 - alpha_t) * mu_eff + gamma_t) * x_prev
            ) / denom
            gs = oracle.sample_gradient(x_md, rng)
            if fold:
                gs = gs + H.grad(x_md)
            beta = (1.0 - alpha_t) * mu_eff + gamma_t
            rhs = alpha_t * mu_eff * x_md + beta * x_prev - alpha_t * gs
            if fold:
                x_new = rhs / (mu_eff + gamma_t)
            else:
                x_new = _solve_power_linear(alpha_t * H.mu, mu_eff + gamma_t, rhs, H.q)
            if not np.all(np.isfinite(x_new)):
                raise NumericalError(f"acsa_baseline: non-finite iterate at step {global_t + 1}")
            x_ag = alpha_t * x_new + (1.0 - alpha_t) * x_ag
            x_prev = x_new
            alphas_used[global_t] = alpha_t
            gammas_used[global_t] = gamma_t
            global_t += 1
            if psi_gap is not None:
                gap = float(gap_fn(x_ag))
                psi_gap[global_t - 1] = gap
                if stop_gap is not None and gap <= stop_gap:
                    stopped = global_t
                    break
        stage *= 2

    steps = stopped if stopped is not None else global_t
    sl = slice(0, steps)
    trace = RunTrace(
        algorithm="acsa",
        T=steps,
        alphas=alphas_used[sl],
        gammas=gammas_used[sl],
        A=np.cumsum(alphas_used[sl]),
        psi_gap=psi_gap[sl] if psi_gap is not None else None,
        stopped_at=stopped,
        meta={"mu_eff": mu_eff, "L_eff": L_eff, "folded": fold},
    )
    return x_ag, trace
