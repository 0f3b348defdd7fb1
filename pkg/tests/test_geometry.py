import numpy as np
import pytest

from ccmin import (
    ParameterError,
    PowerNormRegularizer,
    bregman,
    check_uniform_convexity,
    check_weak_smoothness,
    derive_params,
    dual_norm,
    lq_norm,
    power_inv_r,
    power_uc_constant,
    young_gap_bound,
)


@pytest.mark.parametrize(
    "q,kappa,L,mu,r,M,p",
    [
        (2.0, 2.0, 1.0, 1.0, 0.0, 1.0, 2.0),
        (4.0, 2.0, 1.0, 1.0, 1.0, 0.25, 4.0 / 3.0),
        (3.0, 1.5, 2.0, 0.5, 1.0, 2.0 / 3.0, 1.5),
    ],
)
def test_derive_params_examples(q, kappa, L, mu, r, M, p):
    out = derive_params(q, kappa, L, mu)
    assert out.r == pytest.approx(r)
    assert out.M == pytest.approx(M)
    assert out.p == pytest.approx(p)


@pytest.mark.parametrize(
    "kwargs,field",
    [
        (dict(q=1.5, kappa=1.5, L=1.0, mu=1.0), "q"),
        (dict(q=2.0, kappa=1.0, L=1.0, mu=1.0), "kappa"),
        (dict(q=2.0, kappa=2.5, L=1.0, mu=1.0), "kappa"),
        (dict(q=2.0, kappa=2.0, L=-1.0, mu=1.0), "L"),
        (dict(q=2.0, kappa=2.0, L=1.0, mu=0.0), "mu"),
        (dict(q=3.0, kappa=3.1, L=1.0, mu=1.0), "kappa"),
    ],
)
def test_derive_params_rejects_and_names_field(kwargs, field):
    with pytest.raises(ParameterError, match=field):
        derive_params(**kwargs)


def test_derived_invariants_over_grid():
    rng = np.random.default_rng(0)
    for _ in range(200):
        q = float(rng.uniform(2.0, 6.0))
        kappa = float(rng.uniform(1.01, min(2.0, q)))
        params = derive_params(q, kappa, float(rng.uniform(0, 5)), float(rng.uniform(0.1, 5)))
        assert params.M * params.q >= 0.0
        assert (params.r == 0.0) == (params.kappa == params.q)
        assert 1.0 < params.p <= 2.0
    assert derive_params(2.0, 2.0, 2.5, 1.0).M == 2.5  # 0**0 = 1 convention


def test_lq_norm_examples():
    assert lq_norm(np.array([3.0, 4.0]), 2.0) == pytest.approx(5.0)
    assert lq_norm(np.ones(4), 4.0) == pytest.approx(4.0 ** 0.25)
    assert dual_norm(np.array([1.0, 0.0]), 4.0) == pytest.approx(1.0)
    assert lq_norm(np.array([-2.0, 1.0]), np.inf) == pytest.approx(2.0)
    with pytest.raises(ParameterError):
        lq_norm(np.array([0.5]), 0.5)
    with pytest.raises(ParameterError):
        lq_norm(np.array([np.nan]), 2.0)


def test_bregman_quadratic_and_identity():
    H = PowerNormRegularizer(mu=1.0, q=2.0, dim=2)
    assert bregman(H, np.array([1.0, 0.0]), np.zeros(2)) == pytest.approx(0.5)
    x = np.array([0.3, -1.2])
    assert bregman(H, x, x) == pytest.approx(0.0)


def test_bregman_power_example_against_finite_differences():
    # omega = (2/4)|x|^4, x = 1, y = -1: direct value is 4; cross-check the
    # gradient entering the divergence by central differences
    H = PowerNormRegularizer(mu=2.0, q=4.0, dim=1)
    x, y = np.array([1.0]), np.array([-1.0])
    assert bregman(H, x, y) == pytest.approx(4.0)
    h = 1e-6
    fd_grad = (H.value(y + h) - H.value(y - h)) / (2 * h)
    fd_breg = H.value(x) - H.value(y) - fd_grad * (x - y)[0]
    assert fd_breg == pytest.approx(4.0, rel=1e-6)


def test_gradient_matches_finite_differences():
    # coordinate separability lets the central difference run on the scalar
    # slice, which avoids cancellation against the other coordinates' value
    rng = np.random.default_rng(3)
    for q in (2.0, 2.5, 3.0, 4.0):
        H = PowerNormRegularizer(mu=1.7, q=q, dim=5)
        H1 = PowerNormRegularizer(mu=1.7, q=q, dim=1)
        for _ in range(25):
            x = rng.normal(0.0, 2.0, 5)
            g = H.grad(x)
            for j in range(5):
                h = 1e-6 * max(1.0, abs(x[j]))
                fd = (H1.value(np.array([x[j] + h])) - H1.value(np.array([x[j] - h]))) / (2 * h)
                assert g[j] == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_quadratic_loss_gradient_matches_finite_differences():
    rng = np.random.default_rng(4)
    x_star = rng.normal(0, 1, 5)
    f = lambda x: float(np.sum((x - x_star) ** 2)) / 3.0  # noqa: E731
    g = lambda x: 2.0 / 3.0 * (x - x_star)  # noqa: E731
    for _ in range(100):
        x = rng.normal(0.0, 2.0, 5)
        grad = g(x)
        for j in range(5):
            e = np.zeros(5)
            e[j] = 1e-6
            fd = (f(x + e) - f(x - e)) / 2e-6
            assert grad[j] == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_power_uc_constant_values():
    assert power_uc_constant(2.0) == 1.0
    # q = 4: minimizer of the scalar ratio sits at a = -2b with value 1/3
    assert power_uc_constant(4.0) == pytest.approx(1.0 / 3.0, abs=1e-10)
    # q = 3: exact constant 2 - sqrt(2)
    assert power_uc_constant(3.0) == pytest.approx(2.0 - np.sqrt(2.0), abs=1e-9)
    # independent oracle: dense 1-D scan of the defining ratio
    for q in (2.5, 4.0):
        c = power_uc_constant(q)
        a = np.linspace(-30.0, 30.0, 200_001)
        a = a[np.abs(a - 1.0) > 1e-6]
        ratios = (np.abs(a) ** q - 1.0 - q * (a - 1.0)) / np.abs(a - 1.0) ** q
        assert ratios.min() >= c - 1e-6
        assert ratios.min() <= c + 1e-3


def test_unit_modulus_claim_fails_for_q4():
    # the often-quoted constant 1 is refuted by a = -1, b = 1 in one dimension
    q = 4.0
    lhs = (abs(-1.0) ** q - 1.0 - q * (-2.0))
    assert lhs < (1.0 / q) * 2.0 ** q * q  # ratio 2 < 4
    assert lhs / 2.0 ** q < 1.0


def test_check_uniform_convexity_quadratic():
    H = PowerNormRegularizer(mu=1.0, q=2.0, dim=3)
    rep = check_uniform_convexity(H.value, H.grad, dim=3, q=2.0, mu=1.0, rng_seed=1)
    assert rep.min_ratio == pytest.approx(1.0, abs=1e-9)
    assert rep.passed


def test_check_uniform_convexity_quartic_1d():
    H = PowerNormRegularizer(mu=1.0, q=4.0, dim=1)
    rep = check_uniform_convexity(H.value, H.grad, dim=1, q=4.0,
                                  mu=power_uc_constant(4.0), samples=2000, rng_seed=2)
    assert rep.min_ratio >= 1.0 / 3.0 - 1e-9
    assert rep.min_ratio <= 1.0 + 1e-9
    assert rep.passed


def test_check_uniform_convexity_linear_is_flat():
    c = np.array([1.0, -2.0])
    rep = check_uniform_convexity(lambda x: float(c @ x), lambda x: c,
                                  dim=2, q=2.0, mu=0.0, rng_seed=3)
    assert rep.min_ratio == pytest.approx(0.0, abs=1e-12)


def test_check_weak_smoothness_quadratic():
    x_star = np.array([0.5, -1.0, 0.0])
    f = lambda x: float(np.sum((x - x_star) ** 2)) / 3.0  # noqa: E731
    g = lambda x: 2.0 / 3.0 * (x - x_star)  # noqa: E731
    rep = check_weak_smoothness(f, g, dim=3, kappa=2.0, L=2.0 / 3.0, rng_seed=4)
    assert rep.max_ratio == pytest.approx(2.0 / 3.0, abs=1e-9)
    assert rep.passed


def test_check_weak_smoothness_linear():
    c = np.array([2.0, 0.5])
    rep = check_weak_smoothness(lambda x: float(c @ x), lambda x: c,
                                dim=2, kappa=1.5, L=0.0, rng_seed=5)
    assert rep.max_ratio == pytest.approx(0.0, abs=1e-12)


def test_check_weak_smoothness_lq_dimension_factor():
    d, q = 16, 4.0
    x_star = np.zeros(d)
    f = lambda x: float(np.sum((x - x_star) ** 2)) / 3.0  # noqa: E731
    g = lambda x: 2.0 / 3.0 * (x - x_star)  # noqa: E731
    bound = 2.0 / 3.0 * d ** (1.0 - 2.0 / q)
    rep = check_weak_smoothness(f, g, dim=d, kappa=2.0, L=bound, norm_q=q,
                                samples=800, rng_seed=6)
    assert rep.max_ratio <= bound + 1e-9
    assert rep.passed


def test_young_gap_bound_examples():
    params = derive_params(4.0, 2.0, 1.0, 1.0)
    x, y = np.array([1.0]), np.array([0.0])
    assert young_gap_bound(params, x, y, 1.0) == pytest.approx(1.0625)
    assert young_gap_bound(params, y, y, 0.3) == pytest.approx(params.L * 0.3)
    # the bound must dominate the Hoelder remainder it replaces
    assert params.L / params.kappa * 1.0 ** params.kappa <= 1.0625
    with pytest.raises(ParameterError):
        young_gap_bound(params, x, y, 0.0)


def test_young_gap_dominance_sweep():
    # brute-force oracle: sample (distance, delta) pairs and check
    # (L/kappa) dist^kappa <= (M/(q delta^r)) dist^q + L delta
    params = derive_params(3.0, 1.5, 1.3, 0.7)
    rng = np.random.default_rng(7)
    dist = rng.uniform(0.0, 5.0, 10_000)
    delta = rng.uniform(1e-3, 5.0, 10_000)
    lhs = params.L / params.kappa * dist ** params.kappa
    rhs = params.M / (params.q * delta ** params.r) * dist ** params.q + params.L * delta
    assert np.all(lhs <= rhs + 1e-12)


def test_bregman_nonnegative_for_convex_omega():
    rng = np.random.default_rng(8)
    for q in (2.0, 3.0, 4.0):
        H = PowerNormRegularizer(mu=0.8, q=q, dim=4)
        for _ in range(100):
            x, y = rng.normal(0, 2, 4), rng.normal(0, 2, 4)
            assert bregman(H, x, y) >= -1e-12


def test_uniform_convexity_lower_bound_dense_grid_1d():
    # D(x, y) >= (mu c_q / q) |x - y|^q on a dense 1-D grid, with the
    # empirically calibrated constant (the nominal mu alone fails for q > 2)
    q, mu = 4.0, 2.0
    H = PowerNormRegularizer(mu=mu, q=q, dim=1)
    c = power_uc_constant(q)
    grid = np.linspace(-3.0, 3.0, 201)
    for xv in grid:
        x = np.array([xv])
        ds = np.abs(grid - xv)
        keep = ds > 1e-9
        breg = np.array([bregman(H, x, np.array([yv])) for yv in grid[keep]])
        assert np.all(breg >= mu * c / q * ds[keep] ** q - 1e-10)


def test_power_inv_r_conventions():
    assert power_inv_r(0.5, 0.0) == 0.0
    assert power_inv_r(1.0, 0.0) == 0.0
    assert np.isinf(power_inv_r(1.5, 0.0))
    assert power_inv_r(0.25, 0.5) == pytest.approx(0.0625)
    out = power_inv_r(np.array([0.3, 0.9]), 0.0)
    assert np.all(out == 0.0)
