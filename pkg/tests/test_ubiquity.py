import math

import numpy as np
import pytest

from dirichlet_lab.exceptions import BudgetExceededError, DivergenceExhaustedError, DomainError
from dirichlet_lab.psi import PowerLog, SeriesSpec, dimension_predict, log_summand
from dirichlet_lab.ubiquity import (
    UbiquityConfig,
    bad_pair_check,
    census_m1,
    constant_summand,
    count_pairs_exhaustive,
    epsilon_index,
    epsilon_of_b,
    index_set,
    isolated_mask,
    mean_variance,
    omega_sequence,
    pair_count_claimed_bound,
    pair_count_rigorous_bound,
    pairing_violations,
    rational_points,
    rho_ubiquity,
    totient_ratio,
    totient_sieve,
)
from oracles import brute_isolated, brute_rational_points, naive_totient_sum


def dist_int(v):
    return abs(v - round(v))


# eps(b) and bad-vector pairing


def test_epsilon_examples():
    assert epsilon_of_b([0.3]) == pytest.approx(0.075)
    assert epsilon_of_b([0.5, 2.0]) == pytest.approx(0.125)
    assert epsilon_of_b([0.9]) == pytest.approx(0.025)
    assert epsilon_index([2.0, 0.45, 0.3]) == 2
    with pytest.raises(DomainError):
        epsilon_of_b([1.0, -2.0])
    with pytest.raises(DomainError):
        epsilon_index([0.0])


def test_bad_pair_examples():
    assert bad_pair_check([0.5], [2])
    assert not bad_pair_check([0.5], [1])


def test_pairing_exhaustive_scalar():
    b = 0.3
    eps = epsilon_of_b([b])
    for x in range(-100, 101):
        assert not (bad_pair_check([b], [x]) and bad_pair_check([b], [x + 1]))
        assert bad_pair_check([b], [x]) == (dist_int(b * x) <= eps)


def test_pairing_violations_against_loop():
    rng = np.random.default_rng(0)
    for m in (1, 2, 3):
        for _ in range(5):
            b = rng.random(m)
            eps, i = epsilon_of_b(b), epsilon_index(b)
            loop = 0
            r = 4
            for x in np.ndindex(*([2 * r + 1] * m)):
                x = np.array(x) - r
                y = x.copy()
                y[i] += 1
                loop += dist_int(b @ x) <= eps and dist_int(b @ y) <= eps
            assert pairing_violations(b, r) == loop == 0


# omega and rho


def test_omega_constant_summand():
    om = omega_sequence(constant_summand, 200)
    assert om.to_list() == [(2, 1), (5, 2), (11, 3), (23, 4), (47, 5), (95, 6), (191, 7)]
    assert all(om.doubling_bound[1:])
    assert om(1) == 1.0 and om(3) == 2.0 and om(191) == 7.0
    assert np.array_equal(om(np.array([2, 6, 12])), [1.0, 3.0, 4.0])


def test_omega_root_and_range():
    om = omega_sequence(constant_summand, 100, n=2)
    assert om(12) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        om(1000)


def test_omega_critical_block_sums():
    a = 0.5
    spec = SeriesSpec(PowerLog(a), 1, 1, dimension_predict(1, 1, a))

    def summand(h):
        return np.exp(log_summand(spec, np.maximum(np.asarray(h, dtype=float), spec.psi.T0)))

    om = omega_sequence(summand, 100_000)
    peak = float(np.max(summand(np.arange(1, 100_001))))
    assert len(om.boundaries) >= 3
    for total, doubled in zip(om.block_sums, om.doubling_bound):
        assert total > 1
        if not doubled:
            assert total <= 1 + peak
    h = np.array(om.boundaries)
    assert np.all(h[1:] > 2 * h[:-1])
    lengths = np.diff(h)
    assert np.all(np.diff(lengths) > 0)


def test_omega_exhausted():
    with pytest.raises(DivergenceExhaustedError):
        omega_sequence(lambda h: 0.1 / np.asarray(h, dtype=float) ** 2, 10_000)


def test_rho_examples():
    assert rho_ubiquity(1.0, 1, 1, 4) == pytest.approx(0.0625)
    assert rho_ubiquity(1.0, 2, 1, 4, 2.0) == pytest.approx(4.0**-3 * 2)
    om = omega_sequence(constant_summand, 1000)
    assert rho_ubiquity(1.0, 2, 1, 10, om) == pytest.approx(10.0**-3 * 3)
    with pytest.raises(DomainError):
        rho_ubiquity(1.0, 1, 1, 0.5)


def test_rho_two_regular():
    h = 2.0 ** np.arange(0, 12)
    r = rho_ubiquity(0.7, 1, 2, h)
    assert np.allclose(r[1:] / r[:-1], 2.0 ** (-3 / 2))
    om = omega_sequence(constant_summand, 2**13)
    r = rho_ubiquity(1.0, 2, 1, h[1:], om)
    assert np.all(r[1:] / r[:-1] < 1)


def test_rho_decreasing_within_block():
    h = np.arange(6, 11)
    r = rho_ubiquity(1.0, 2, 1, h, omega_sequence(constant_summand, 100))
    assert np.all(np.diff(r) < 0)


# totients


def test_totient_small():
    assert totient_ratio(1) == 1.0
    assert totient_ratio(3) == pytest.approx(4 / 9)
    phi = totient_sieve(60)
    for q in range(1, 61):
        assert phi[q] == sum(1 for k in range(1, q + 1) if math.gcd(k, q) == 1)
    assert totient_ratio(500) == naive_totient_sum(500) / 500**2


def test_totient_limit():
    assert abs(totient_ratio(10**5) - 3 / math.pi**2) <= 0.02 * 3 / math.pi**2


# pair counts


def test_claimed_bound_counterexample():
    x, t, A, l, u = 5, 4, 3, 0.2, 0.45
    assert count_pairs_exhaustive(x, t, A, l, u) == 2
    assert count_pairs_exhaustive(x, t, A, l, u) > pair_count_claimed_bound(A, l, u)


def test_rigorous_bound_holds():
    rng = np.random.default_rng(1)
    for _ in range(3000):
        x, t = (int(v) for v in rng.integers(1, 60, 2))
        A = int(rng.integers(1, 40))
        l = float(rng.uniform(0, 0.9))
        u = float(rng.uniform(l, 1))
        c = count_pairs_exhaustive(x, t, A, l, u)
        assert c <= pair_count_rigorous_bound(x, t, A, l, u)
        # direct double loop
        ref = sum(
            1
            for y in range(math.ceil(x * l), math.floor(x * u) + 1)
            for s in range(math.ceil(t * l), math.floor(t * u) + 1)
            if 0 < abs(t * y - x * s) <= A
        ) if x < 15 and t < 15 else c
        assert c == ref


# census for m = 1


def test_config_validation():
    with pytest.raises(DomainError):
        UbiquityConfig(b=[1.0])
    with pytest.raises(DomainError):
        UbiquityConfig(b=[0.5], box=((0.5, 0.2),))
    with pytest.raises(DomainError):
        UbiquityConfig(b=[0.5], c=-1.0)
    assert UbiquityConfig(b=[0.5], n=2).box_volume == 1.0


@pytest.mark.parametrize("b, box", [(0.5, (0.0, 1.0)), (0.3, (0.2, 0.7)), (0.9, (0.0, 0.5))])
def test_rational_points_brute_force(b, box):
    cfg = UbiquityConfig(b=[b], N=6, box=(box,))
    xs, Y = rational_points(cfg)
    got = sorted(zip(xs.tolist(), Y[:, 0].tolist()))
    assert got == sorted(brute_rational_points(b, 6, *box))


def test_rational_points_two_dimensional():
    cfg = UbiquityConfig(b=[0.5], n=2, N=4)
    xs, Y = rational_points(cfg)
    for x, y in zip(xs, Y):
        assert math.gcd(math.gcd(int(x), int(y[0])), int(y[1])) == 1
        assert 8 < x <= 16 and np.all((0 <= y) & (y <= x))


def test_isolated_mask_brute_force():
    rng = np.random.default_rng(2)
    for n in (1, 2):
        for _ in range(5):
            P = rng.random((300, n))
            r = rng.uniform(0.001, 0.03)
            assert np.array_equal(isolated_mask(P, r), brute_isolated(P, r))


def test_census_hash_matches_brute_force():
    for N in range(4, 9):
        cfg = UbiquityConfig(b=[0.5], N=N)
        rep = census_m1(cfg)
        xs, Y = rational_points(cfg)
        ref = int(brute_isolated(Y / xs[:, None], rep.rho).sum())
        assert rep.countG == ref <= rep.countT


def test_census_half_retained():
    for N in (8, 9, 10):
        rep = census_m1(UbiquityConfig(b=[0.5], N=N))
        assert rep.countG >= 0.5 * rep.countT
        assert rep.c1_hat > 0


def test_census_budget():
    with pytest.raises(BudgetExceededError):
        census_m1(UbiquityConfig(b=[0.5], N=15))
    with pytest.raises(DomainError):
        rational_points(UbiquityConfig(b=[0.5, 0.3], m=2, N=4))


# index set and mean/variance for m >= 2


def test_index_set_brute_force():
    om = omega_sequence(constant_summand, 1000)
    cfg = UbiquityConfig(b=[0.3, 0.5], m=2, N=12, omega=om)
    X = index_set(cfg)
    eps, lead = epsilon_of_b(cfg.b), epsilon_index(cfg.b)
    R = int(math.floor(12 / om(24) ** 0.5 + 1e-12))
    ref = []
    for x0 in range(-R, R + 1):
        for x1 in range(12, 25):
            x = [x0, x1] if lead == 1 else [x1, x0]
            if math.gcd(x0, x1) == 1 and dist_int(0.3 * x[0] + 0.5 * x[1]) > eps:
                ref.append(x)
    assert sorted(map(list, X.tolist())) == sorted(ref)


def test_mean_variance_wrong_mode():
    with pytest.raises(DomainError):
        mean_variance(UbiquityConfig(b=[0.5], N=10))


def test_mean_variance_statistics():
    om = omega_sequence(constant_summand, 10_000)
    cfg = UbiquityConfig(b=[0.5, 0.3], m=2, N=40, mc_samples=4000, rng_seed=3, omega=om)
    r = mean_variance(cfg)
    assert r.mu_exact == pytest.approx(r.sizeI * (2 * r.delta))
    assert abs(r.mu_hat - r.mu_exact) <= 4 * r.se_mu
    assert r.sigma2_hat >= 0 and r.sigma2_hat - r.mu_hat <= 4 * r.se_excess
    assert 0 <= r.z_empty_fraction <= 1
    assert r.z_empty_fraction <= 1 / r.mu_exact + 4 * r.se_empty


def test_mean_variance_deterministic():
    om = omega_sequence(constant_summand, 1000)
    cfg = UbiquityConfig(b=[0.5, 0.3], m=2, N=20, mc_samples=500, rng_seed=7, omega=om)
    a, b = mean_variance(cfg, workers=2), mean_variance(cfg, workers=2)
    assert a.mu_hat == b.mu_hat and a.sigma2_hat == b.sigma2_hat


def test_mu_lower_bound_shape():
    om = omega_sequence(constant_summand, 10_000)
    ratios = []
    for N in (20, 40, 80, 160):
        cfg = UbiquityConfig(b=[0.5, 0.3], m=2, N=N, mc_samples=2, omega=om)
        X = index_set(cfg)
        delta = N**-2.0 * om(2 * N)
        ratios.append(len(X) * 2 * delta / math.sqrt(om(2 * N)))
    assert min(ratios) > 0 and max(ratios) / min(ratios) < 3
