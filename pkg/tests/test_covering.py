import math
from itertools import product

import numpy as np
import pytest

from dirichlet_lab.covering import (
    CoverReport,
    Membership,
    classify_height,
    coherence_check,
    cover_count,
    cover_sweep,
    fitted_K,
    hausdorff_sum,
    predicted_slope,
    slope_fit,
    zt_member,
)
from dirichlet_lab.exceptions import BudgetExceededError, DomainError
from dirichlet_lab.lattice import FlowParams, Grid, apply_flow, pair_basis, successive_minima
from dirichlet_lab.psi import PowerLog, ZProfile


def naive_count(m, n, psi, t, C0, sampler="centers"):
    """Every cube, every sample point, minima by plain enumeration."""
    d, mn = m + n, m * n
    k = int(math.ceil(math.exp((1 / m + 1 / n) * t)))
    z = float(ZProfile(psi, m, n)(t))
    offsets = [np.full(mn, 0.5)] if sampler == "centers" else [np.array(c) for c in product((0.0, 1.0), repeat=mn)]
    count = 0
    for cell in product(range(k), repeat=mn):
        for off in offsets:
            A = (np.array(cell) + off) / k
            g = apply_flow(Grid(pair_basis(A, m, n)), FlowParams(m, n, t))
            lam = successive_minima(g, method="enumerate").lambdas[-1]
            if 2 * math.log(d) + math.log(lam) >= z - C0 - 1:
                count += 1
                break
    return count


def test_zero_matrix_membership():
    psi = PowerLog(0.5)
    for t in (1.0, 4.0, 8.0):
        z = float(ZProfile(psi, 1, 1)(t))
        got = zt_member([[0.0]], 1, 1, t, psi, C0=1.0)
        # lambda_2(a_t Z^2) = e^t
        expect_in = math.log(2 * math.exp(t)) >= z - 1.0
        assert (got is Membership.IN_ZT) == expect_in


def test_threshold_ordering():
    for log_lam in np.linspace(-3, 3, 61):
        got = classify_height(log_lam, 3, 1.0, 0.5)
        if math.log(3) + log_lam >= 0.5:
            assert got is Membership.IN_ZT
        elif 2 * math.log(3) + log_lam >= -0.5:
            assert got is Membership.IN_ZT_PRIME_ONLY
        else:
            assert got is Membership.OUTSIDE


def test_zt_member_validates_shape():
    with pytest.raises(DomainError):
        zt_member(np.zeros((2, 2)), 1, 1, 1.0, PowerLog(0.5))


def test_saturated_threshold_counts_everything():
    r = cover_count(1, 1, PowerLog(0.5), 2.0, C0=1.0)
    assert r.count == r.total and r.evaluated == 0
    assert r.cube_side == 1.0 / r.per_axis


@pytest.mark.parametrize("t", [2.0, 3.0, 3.7])
def test_planar_count_matches_naive(t):
    psi = PowerLog(0.5)
    assert cover_count(1, 1, psi, t, C0=-3.0).count == naive_count(1, 1, psi, t, -3.0)


def test_planar_corner_sampler_matches_naive():
    psi = PowerLog(0.8)
    r = cover_count(1, 1, psi, 3.0, C0=-3.0, sampler="corners")
    assert r.count == naive_count(1, 1, psi, 3.0, -3.0, sampler="corners")
    assert r.count >= cover_count(1, 1, psi, 3.0, C0=-3.0).count


@pytest.mark.parametrize("m, n", [(2, 1), (1, 2)])
def test_general_count_matches_naive(m, n):
    psi = PowerLog(0.5)
    assert cover_count(m, n, psi, 1.6, C0=-3.0).count == naive_count(m, n, psi, 1.6, -3.0)


def test_count_invariants():
    for r in cover_sweep(1, 1, PowerLog(0.5), range(3, 8), C0=-3.0):
        assert r.count <= r.per_axis ** 1
        assert r.count * r.cube_side <= 1 + 1e-12
        assert r.bound_exponent == pytest.approx(2 * (r.t - float(ZProfile(PowerLog(0.5), 1, 1)(r.t))))


def test_budget_errors():
    with pytest.raises(BudgetExceededError):
        cover_count(1, 1, PowerLog(0.5), 8.0, C0=-3.0, budget=100)
    with pytest.raises(BudgetExceededError):
        cover_count(2, 2, PowerLog(0.5), 6.0, C0=-3.0, budget=1000)
    with pytest.raises(DomainError):
        cover_count(1, 1, PowerLog(0.5), 3.0, sampler="random")


def test_hausdorff_sum_trivial():
    one = CoverReport(t=0.0, cube_side=0.25, per_axis=4, count=1, total=16, bound_exponent=0.0)
    assert hausdorff_sum(one, 2) == pytest.approx(0.25**2)
    full = CoverReport(t=0.0, cube_side=0.25, per_axis=4, count=16, total=16, bound_exponent=0.0)
    assert hausdorff_sum(full, 1.5) == pytest.approx(0.25 ** (1.5 - 2))


def test_hausdorff_dichotomy():
    a = 0.5
    dim = predicted_slope(1, 1, a) / 2
    reps = cover_sweep(1, 1, PowerLog(a), range(4, 10), C0=-3.0, s_values=(dim - 0.15, dim + 0.15))
    low = [r.s_sum[dim - 0.15] for r in reps]
    high = [r.s_sum[dim + 0.15] for r in reps]
    assert all(np.diff(low) > 0)
    assert all(np.diff(high) < 0)


def test_uniform_K():
    reps = cover_sweep(1, 1, PowerLog(0.8), range(4, 10), C0=-3.0)
    K, ratios = fitted_K(reps)
    assert K == ratios.max()
    assert ratios.max() / ratios.min() < 2.0


def test_coherence():
    checked, violations = coherence_check(1, 1, PowerLog(0.5), 6.0, C0=-3.0, fraction=0.01)
    assert checked > 100 and violations == 0
    checked, violations = coherence_check(2, 1, PowerLog(0.5), 2.0, C0=-3.0, fraction=0.2, max_cubes=200)
    assert checked > 0 and violations == 0


def test_slope_fit_synthetic():
    c = 1.37
    reps = [CoverReport(t, 1.0, 1, math.exp(c * t + 0.4), 1, 0.0) for t in range(4, 10)]
    fit = slope_fit(reps)
    assert abs(fit.slope - c) < 1e-9 and abs(fit.intercept - 0.4) < 1e-9 and fit.r2 == pytest.approx(1.0)
    with pytest.raises(DomainError):
        slope_fit(reps[:3])


def test_predicted_slope_values():
    assert predicted_slope(1, 1, 0.5) == pytest.approx(4 / 3)
    assert predicted_slope(1, 1, 0.8) == pytest.approx(16 / 9)
    assert predicted_slope(2, 1, 1.0) == pytest.approx(3.0)
