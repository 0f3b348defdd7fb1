import numpy as np
import pytest

from ccmin import (
    CustomSchedule,
    NumericalError,
    ParameterError,
    PowerNormRegularizer,
    RestartPlan,
    RidgeInstance,
    TraceOptions,
    acsa_baseline,
    acsmd,
    additive_noise_oracle,
    default_schedule,
    derive_params,
    expectation_bound,
    exact_optimum,
    nacsmd,
    plan_from_params,
    power_uc_constant,
    restart,
    ridge_oracle,
    ridge_psi,
    validate_schedule,
)


def philox(*key):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def deterministic_ridge(d=4, q=2.0, mu=2.0, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    inst = RidgeInstance(dimension=d, x_star=scale * rng.uniform(-1, 1, d),
                         sigma_b=0.0, mu=mu, q=q)
    oracle = additive_noise_oracle(
        lambda x, xs=inst.x_star: 2.0 / 3.0 * (np.asarray(x, dtype=float) - xs),
        d, kind="gaussian", sigma=0.0, q=q)
    params = derive_params(q, 2.0, inst.L, mu * power_uc_constant(q))
    H = PowerNormRegularizer(mu=mu, q=q, dim=d)
    return inst, oracle, params, H


class TestSchedules:
    def test_default_degree_smooth_case(self):
        params = derive_params(2.0, 2.0, 1.0, 1.0)
        sched = default_schedule(params, "nacsmd", validate_horizon=1000)
        assert sched.m == 0.0
        t = np.arange(1, 50)
        assert np.all(sched.alpha(t) == 1.0)  # constant steps

    def test_default_degrees_q4(self):
        params = derive_params(4.0, 2.0, 1.0, 1.0)
        assert default_schedule(params, "nacsmd", validate_horizon=1000).m == 0.0
        assert default_schedule(params, "acsmd", validate_horizon=1000).m == 2.0

    def test_acsmd_variant_offsets(self):
        # the accelerated variants use degree m and offset (L/mu)^(1/q)
        params = derive_params(2.0, 2.0, 4.0, 1.0)
        for m in (1.0, 2.0, 3.0):
            sched = default_schedule(params, "acsmd", m=m, offset=2.0,
                                     validate_horizon=1000)
            assert sched.m == m
            assert sched.base_offset == 2.0
            t = 5.0
            assert sched.alpha(t) == pytest.approx((t + sched.offset + 1.0) ** m)

    def test_auto_offset_repair(self):
        # q=4, kappa=2, L=mu=1: the accelerated printed offset violates the
        # curvature condition at t=1 and gets doubled until valid
        params = derive_params(4.0, 2.0, 1.0, 1.0)
        sched = default_schedule(params, "acsmd", validate_horizon=10_000)
        assert sched.offset > sched.base_offset
        assert validate_schedule(sched, params, 10_000).ok

    def test_validate_default_nacsmd_long_horizon(self):
        params = derive_params(4.0, 2.0, 1.0, 1.0)
        sched = default_schedule(params, "nacsmd", validate_horizon=10_000)
        report = validate_schedule(sched, params, 10_000)
        assert report.ok and report.first_violation is None

    def test_validate_flags_bad_custom_schedule(self):
        params = derive_params(2.0, 2.0, 1.0, 1.0)  # M/mu = 1
        t = np.arange(1, 101, dtype=float)
        sched = CustomSchedule(alphas=t ** 2, gammas=t, target="nacsmd")
        report = validate_schedule(sched, params, 99)
        assert not report.ok
        assert report.first_violation == 1  # gamma_1 = 1 < 2 * alpha_1

    def test_gamma_scaling_raises_curvature_slack(self):
        params = derive_params(2.0, 2.0, 1.0, 1.0)
        t = np.arange(1, 101, dtype=float)
        base = CustomSchedule(alphas=t ** 2, gammas=t, target="nacsmd")
        scaled = CustomSchedule(alphas=t ** 2, gammas=10.0 * t, target="nacsmd")
        r0 = validate_schedule(base, params, 99)
        r1 = validate_schedule(scaled, params, 99)
        assert r1.lower_slack_min > r0.lower_slack_min

    def test_polynomial_validation_errors(self):
        with pytest.raises(ParameterError):
            default_schedule(derive_params(2, 2, 1, 1), "sgd")
        with pytest.raises(ParameterError):
            CustomSchedule(alphas=[1.0, -1.0], gammas=[1.0, 1.0], target="nacsmd")


class TestSolvers:
    def test_fixed_point_at_optimum(self):
        inst, oracle, params, H = deterministic_ridge(d=1, q=4.0, mu=2.0)
        x_opt, _ = exact_optimum(inst)
        sched = default_schedule(params, "nacsmd", validate_horizon=200)
        xT, x_avg, _ = nacsmd(oracle, H, sched, x_opt, 100, params=params)
        assert np.max(np.abs(xT - x_opt)) <= 1e-12
        assert np.max(np.abs(x_avg - x_opt)) <= 1e-12

    def test_deterministic_gap_non_increasing(self):
        inst, oracle, params, H = deterministic_ridge(d=4, q=2.0, mu=2.0)
        _, psi_star = exact_optimum(inst)
        gap_fn = lambda x: ridge_psi(inst, x) - psi_star  # noqa: E731
        sched = default_schedule(params, "nacsmd", validate_horizon=2000)
        opts = TraceOptions(record_iterates=False, gap_fn=gap_fn)
        _, _, tr = nacsmd(oracle, H, sched, np.zeros(4), 1000, params=params,
                          trace_opts=opts)
        gaps = tr.psi_gap[9:]
        assert np.all(np.diff(gaps) <= 1e-12 * (1.0 + gaps[:-1]))

    def test_acsmd_first_query_is_start_point(self):
        inst, oracle, params, H = deterministic_ridge(d=3, q=4.0)
        sched = default_schedule(params, "acsmd", validate_horizon=200)
        x1 = np.array([0.5, -1.0, 2.0])
        _, _, tr = acsmd(oracle, H, sched, x1, 5, params=params)
        assert np.array_equal(tr.query_points[0], x1)

    def test_acceleration_beats_plain_on_deterministic_quadratic(self):
        inst, oracle, params, H = deterministic_ridge(d=50, q=2.0, mu=2.0, seed=3)
        _, psi_star = exact_optimum(inst)
        gap_fn = lambda x: ridge_psi(inst, x) - psi_star  # noqa: E731
        opts = TraceOptions(record_iterates=False, gap_fn=gap_fn)
        x1 = np.ones(50)

        def first_hit(solver, target, m=None):
            sched = default_schedule(params, target, m=m, validate_horizon=3000)
            _, _, tr = solver(oracle, H, sched, x1, 2000, params=params, trace_opts=opts)
            hits = np.nonzero(tr.psi_gap <= 1e-4)[0]
            return hits[0] + 1 if hits.size else np.inf

        assert first_hit(acsmd, "acsmd", m=1.0) < first_hit(nacsmd, "nacsmd")

    def test_average_is_alpha_weighted_combination(self):
        inst, oracle, params, H = deterministic_ridge(d=3, q=3.0)
        sched = default_schedule(params, "nacsmd", validate_horizon=200)
        rng = philox(4)
        orc = ridge_oracle(
            RidgeInstance(dimension=3, x_star=inst.x_star, sigma_b=0.1, mu=2.0, q=3.0))
        _, x_avg, tr = nacsmd(orc, H, sched, np.zeros(3), 50, rng=rng, params=params)
        weights = tr.alphas / tr.A[-1]
        assert weights.min() > 0.0
        assert np.sum(weights) == pytest.approx(1.0)
        recomputed = np.sum(weights[:, None] * tr.iterates[1:], axis=0)
        assert np.allclose(recomputed, x_avg, atol=1e-12)
        hull_lo = tr.iterates[1:].min(axis=0) - 1e-12
        hull_hi = tr.iterates[1:].max(axis=0) + 1e-12
        assert np.all(x_avg >= hull_lo) and np.all(x_avg <= hull_hi)
        # the accelerated recursion realizes the same alpha-weighted average
        sched_ac = default_schedule(params, "acsmd", validate_horizon=200)
        _, ag, tra = acsmd(orc, H, sched_ac, np.zeros(3), 50, rng=philox(4),
                           params=params)
        w = tra.alphas / tra.A[-1]
        assert np.allclose(np.sum(w[:, None] * tra.iterates[1:], axis=0), ag,
                           atol=1e-10)

    def test_determinism_bit_exact(self):
        inst = RidgeInstance(dimension=4, x_star=np.array([0.3, -0.2, 0.8, 0.0]),
                             sigma_b=0.1, mu=2.0, q=4.0)
        oracle = ridge_oracle(inst)
        params = derive_params(4.0, 2.0, inst.L, 2.0 * power_uc_constant(4.0))
        H = PowerNormRegularizer(mu=2.0, q=4.0, dim=4)
        for solver, target in [(nacsmd, "nacsmd"), (acsmd, "acsmd")]:
            sched = default_schedule(params, target, validate_horizon=300)
            runs = []
            for _ in range(2):
                _, _, tr = solver(oracle, H, sched, np.zeros(4), 200,
                                  rng=philox(77), params=params)
                runs.append(tr)
            assert np.array_equal(runs[0].iterates, runs[1].iterates)
            assert np.array_equal(runs[0].noise, runs[1].noise)

    def test_nan_gradient_raises_numerical_error(self):
        H = PowerNormRegularizer(mu=1.0, q=2.0, dim=1)
        bad = additive_noise_oracle(lambda x: np.array([np.nan]), 1,
                                    kind="gaussian", sigma=0.0)
        sched = default_schedule(derive_params(2, 2, 1, 1), "nacsmd",
                                 validate_horizon=10)
        with pytest.raises(NumericalError, match="t=1"):
            nacsmd(bad, H, sched, np.zeros(1), 5)

    def test_invalid_schedule_rejected_when_params_given(self):
        inst, oracle, params, H = deterministic_ridge(d=2, q=2.0)
        t = np.arange(1, 20, dtype=float)
        sched = CustomSchedule(alphas=t ** 2, gammas=0.01 * t, target="nacsmd")
        with pytest.raises(ParameterError, match="step conditions"):
            nacsmd(oracle, H, sched, np.zeros(2), 10, params=params)

    def test_thinning_keeps_endpoints(self):
        inst, oracle, params, H = deterministic_ridge(d=2, q=2.0)
        sched = default_schedule(params, "nacsmd", validate_horizon=200)
        opts = TraceOptions(thin=7)
        _, _, tr = nacsmd(oracle, H, sched, np.zeros(2), 100, params=params,
                          trace_opts=opts)
        assert tr.kept_steps is not None
        assert tr.kept_steps[0] == 0 and tr.kept_steps[-1] == 100
        assert tr.iterates.shape[0] == tr.kept_steps.size


class TestRestart:
    def test_degenerate_plan_matches_single_run(self):
        inst = RidgeInstance(dimension=3, x_star=np.array([0.5, -0.5, 1.0]),
                             sigma_b=0.1, mu=2.0, q=4.0)
        oracle = ridge_oracle(inst)
        params = derive_params(4.0, 2.0, inst.L, 2.0 * power_uc_constant(4.0))
        H = PowerNormRegularizer(mu=2.0, q=4.0, dim=3)
        sched = default_schedule(params, "nacsmd", validate_horizon=100)
        plan = RestartPlan(n=0, K=1, T=60)
        y, rtrace = restart("nacsmd", oracle, H, sched, np.zeros(3), plan,
                            rng=philox(5), params=params)
        _, y_direct, _ = nacsmd(oracle, H, sched, np.zeros(3), 60,
                                rng=philox(5), params=params)
        assert np.array_equal(y, y_direct)

    def test_stage_chaining_is_bit_exact(self):
        inst, oracle, params, H = deterministic_ridge(d=4, q=2.0, mu=2.0)
        sched = default_schedule(params, "nacsmd", validate_horizon=100)
        plan = RestartPlan(n=3, K=5, T=10)
        _, rtrace = restart("nacsmd", oracle, H, sched, np.zeros(4), plan,
                            params=params)
        for k, tr in enumerate(rtrace.stage_traces):
            assert np.array_equal(tr.iterates[0], rtrace.stage_starts[k])
            assert np.array_equal(tr.iterates[-1], rtrace.stage_starts[k + 1])

    def test_halving_contraction_deterministic(self):
        # sigma = 0, q = kappa = 2: the run inequality makes each stage shrink
        # the divergence to the optimum by at least gamma_1/gamma_K <= 1/2
        inst, oracle, params, H = deterministic_ridge(d=6, q=2.0, mu=2.0, seed=9)
        x_opt, _ = exact_optimum(inst)

        def breg(y):
            return H.value(x_opt) - H.value(y) - float(H.grad(y) @ (x_opt - y))

        x1 = np.zeros(6)
        V0 = breg(x1)
        plan = plan_from_params(params, "nacsmd", V0, V0 / 2 ** 6)
        sched = default_schedule(params, "nacsmd")
        _, rtrace = restart("nacsmd", oracle, H, sched, x1, plan, params=params)
        Ds = [breg(s) for s in rtrace.stage_starts]
        for a, b in zip(Ds, Ds[1:]):
            assert b <= (0.5 + 1e-3) * a

    def test_plan_validation(self):
        with pytest.raises(ParameterError):
            RestartPlan(n=-1, K=1, T=1)
        with pytest.raises(ParameterError):
            RestartPlan(n=0, K=5, T=3)


class TestPlanning:
    def test_epsilon_above_v0_means_no_halving(self):
        params = derive_params(2.0, 2.0, 1.0, 1.0)
        plan = plan_from_params(params, "nacsmd", V0_estimate=0.5, epsilon=1.0)
        assert plan.n == 0

    def test_accelerated_halving_length_scales_with_condition_root(self):
        # sigma = 0, q = kappa = 2, L/mu = 100: n = 10 halvings; with the
        # literal polynomial constants (degree 1, offset sqrt(4M/mu) = 20)
        # the halving length is Theta((L/mu)^(1/2)) = Theta(10)
        from ccmin import PolynomialSchedule
        from ccmin.solvers import halving_horizon

        params = derive_params(2.0, 2.0, 100.0, 1.0)
        printed = PolynomialSchedule(m=1.0, offset=(4.0 * params.M / params.mu) ** 0.5,
                                     target="acsmd")
        assert 10 <= halving_horizon(printed) <= 30
        n = plan_from_params(params, "nacsmd", V0_estimate=2.0 ** 10, epsilon=1.0).n
        assert n == 10
        # the printed constants violate the smooth-case condition at small t,
        # so the bound-driven horizon search refuses them explicitly
        with pytest.raises(ParameterError, match="smooth-case"):
            plan_from_params(params, "acsmd", 2.0 ** 10, 1.0, sched=printed)

    def test_validated_accelerated_plan_still_halves(self):
        # the offset-repaired schedule pays a longer stage but the halving
        # guarantee is certificate-exact
        params = derive_params(2.0, 2.0, 100.0, 1.0)
        plan = plan_from_params(params, "acsmd", V0_estimate=2.0 ** 4, epsilon=1.0)
        assert plan.meta["halving_ratio"] <= 0.5
        assert plan.K >= 10

    def test_stochastic_horizon_scaling(self):
        params = derive_params(2.0, 2.0, 1.0, 1.0, sigma=2.0)
        t1 = plan_from_params(params, "nacsmd", 1.0, 1e-2).T
        t2 = plan_from_params(params, "nacsmd", 1.0, 5e-3).T
        # noise-dominated: halving epsilon roughly multiplies T by 2^(q-1) = 2
        assert 1.7 <= t2 / t1 <= 2.9

    def test_expectation_bound_decreases(self):
        params = derive_params(4.0, 2.0, 1.0, 0.5, sigma=1.0)
        sched = default_schedule(params, "nacsmd", validate_horizon=5000)
        bounds = [expectation_bound(params, sched, "nacsmd", 1.0, T)
                  for T in (10, 100, 1000)]
        assert bounds[0] > bounds[1] > bounds[2] > 0


class TestBaseline:
    def test_deterministic_quadratic_trend(self):
        # sigma = 0, q = 2: the staged accelerated baseline converges steadily
        inst, oracle, params, H = deterministic_ridge(d=10, q=2.0, mu=2.0, seed=11)
        _, psi_star = exact_optimum(inst)
        gap_fn = lambda x: ridge_psi(inst, x) - psi_star  # noqa: E731
        x, tr = acsa_baseline(oracle, H, inst.mu_F, params.L, np.ones(10), 200,
                              gap_fn=gap_fn)
        assert tr.psi_gap[-1] <= 1e-8
        assert tr.psi_gap[-1] < tr.psi_gap[20] < tr.psi_gap[0]

    def test_q4_keeps_regularizer_exact(self):
        inst, oracle, params, H = deterministic_ridge(d=5, q=4.0, mu=2.0, seed=12)
        x_opt, psi_star = exact_optimum(inst)
        gap_fn = lambda x: ridge_psi(inst, x) - psi_star  # noqa: E731
        x, tr = acsa_baseline(oracle, H, inst.mu_F, params.L, np.ones(5), 400,
                              gap_fn=gap_fn)
        assert tr.psi_gap[-1] <= 1e-6
        assert np.max(np.abs(x - x_opt)) <= 1e-2

    def test_determinism(self):
        inst = RidgeInstance(dimension=3, x_star=np.array([0.2, 0.4, -0.6]),
                             sigma_b=0.1, mu=2.0, q=3.0)
        oracle = ridge_oracle(inst)
        H = PowerNormRegularizer(mu=2.0, q=3.0, dim=3)
        outs = [acsa_baseline(oracle, H, inst.mu_F, inst.L, np.zeros(3), 64,
                              rng=philox(13))[0] for _ in range(2)]
        assert np.array_equal(outs[0], outs[1])
