"""Cube covers of the set of matrices whose flowed lattice has a large last minimum.

For a flow time ``t`` the unit cube ``[0,1]^{mn}`` is cut into cubes of side
``e^-(1/m+1/n)t``. A cube is counted when its sample point ``A`` satisfies
``log(d^2 lambda_d(a_t Lambda_A)) >= z(t) - C0 - 1``. Most cubes are discarded
without computing ``lambda_d``: since ``lambda_1^(d-1) lambda_d <= 1`` for a
unimodular lattice in the sup norm, a large ``lambda_d`` forces a short first
minimum, i.e. a good rational approximation of ``A``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from ._validation import check_matrix, check_positive_int
from .exceptions import BudgetExceededError, DomainError
from .lattice import Grid, apply_flow, FlowParams, pair_basis, planar_minima, successive_minima
from .psi import ZProfile

EVAL_BUDGET = 10_000_000
_CHUNK = 1_000_000


class Membership(str, enum.Enum):
    IN_ZT = "InZt"
    IN_ZT_PRIME_ONLY = "InZtPrimeOnly"
    OUTSIDE = "Outside"


def log_height(A, m, n, t):
    """``log(lambda_d(a_t Lambda_A))``."""
    A = check_matrix(A, m, n)
    if m == n == 1:
        _, l2 = planar_minima(A.ravel(), t)
        return math.log(l2[0])
    g = apply_flow(Grid(pair_basis(A, m, n)), FlowParams(m, n, t))
    return math.log(successive_minima(g).lambdas[-1])


def classify_height(log_lam_d, d, z, C0):
    if math.log(d) + log_lam_d >= z - C0:
        return Membership.IN_ZT
    if 2 * math.log(d) + log_lam_d >= z - C0 - 1:
        return Membership.IN_ZT_PRIME_ONLY
    return Membership.OUTSIDE


def zt_member(A, m, n, t, psi, C0=1.0):
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    z = float(ZProfile(psi, m, n)(t))
    return classify_height(log_height(A, m, n, t), m + n, z, C0)


@dataclass
class CoverReport:
    t: float
    cube_side: float
    per_axis: int
    count: int
    total: int
    bound_exponent: float
    evaluated: int = 0
    s_sum: dict = field(default_factory=dict)

    def hausdorff_sum(self, s):
        return hausdorff_sum(self, s)


def hausdorff_sum(report, s):
    """``sum diam^s`` over the counted cubes (sup-norm diameter = side)."""
    return report.count * report.cube_side**s


def cube_threshold(z, C0, d):
    """``lambda_d`` threshold ``e^(z - C0 - 1) / d^2`` of the relaxed set."""
    return math.exp(z - C0 - 1) / d**2


def _merge_ranges(lo, hi):
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    run_hi = np.maximum.accumulate(hi)
    start = np.ones(len(lo), dtype=bool)
    start[1:] = lo[1:] > run_hi[:-1] + 1
    groups = np.cumsum(start) - 1
    g_lo = lo[start]
    g_hi = np.zeros(len(g_lo), dtype=np.int64)
    np.maximum.at(g_hi, groups, hi)
    return g_lo, g_hi


def _planar_candidates(k, t, rho, offsets):
    """Indices ``i`` whose sample ``(i + offset)/k`` lies within ``rho e^-t / q`` of some ``p/q``."""
    q_max = int(math.floor(rho * math.exp(t)))
    if q_max < 1:
        return np.zeros(0, dtype=np.int64)
    lo_all, hi_all = [], []
    w_num = rho * math.exp(-t)
    for q in range(1, q_max + 1):
        p = np.arange(0, q + 1)
        w = w_num / q
        for off in offsets:
            lo_all.append(np.ceil((p / q - w) * k - off - 1e-12).astype(np.int64))
            hi_all.append(np.floor((p / q + w) * k - off + 1e-12).astype(np.int64))
    lo = np.clip(np.concatenate(lo_all), 0, k - 1)
    hi = np.clip(np.concatenate(hi_all), -1, k - 1)
    keep = hi >= lo
    g_lo, g_hi = _merge_ranges(lo[keep], hi[keep])
    lengths = g_hi - g_lo + 1
    total = int(lengths.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    idx = np.repeat(g_lo - np.cumsum(np.concatenate([[0], lengths[:-1]])), lengths)
    return idx + np.arange(total)


def _general_candidates(centers, m, n, t, rho):
    """Rows of ``centers`` (flattened m x n matrices) with ``lambda_1(a_t Lambda_A) <= rho``."""
    q_rad = int(math.floor(rho * math.exp(t / n)))
    eps = rho * math.exp(-t / m)
    if q_rad < 1:
        return np.zeros(len(centers), dtype=bool)
    rng = np.arange(-q_rad, q_rad + 1)
    Q = np.array([q for q in product(rng, repeat=n) if any(q)], dtype=float)
    # q and -q give the same distance
    Q = Q[: len(Q) // 2]
    hit = np.zeros(len(centers), dtype=bool)
    step = max(1, _CHUNK // max(1, len(Q) * m))
    for s in range(0, len(centers), step):
        Ac = centers[s : s + step].reshape(-1, m, n)
        vals = np.einsum("kij,qj->kqi", Ac, Q)
        dist = np.max(np.abs(vals - np.rint(vals)), axis=2)
        hit[s : s + step] = np.any(dist <= eps * (1 + 1e-12), axis=1)
    return hit


def _log_lambda_d_batch(centers, m, n, t):
    if m == n == 1:
        _, l2 = planar_minima(centers.ravel(), t)
        return np.log(l2)
    out = np.empty(len(centers))
    fp = FlowParams(m, n, t)
    for i, a in enumerate(centers):
        g = apply_flow(Grid(pair_basis(a, m, n)), fp)
        out[i] = math.log(successive_minima(g).lambdas[-1])
    return out


def _sample_offsets(sampler, dim):
    if sampler == "centers":
        return [np.full(dim, 0.5)]
    if sampler == "corners":
        return [np.array(c, dtype=float) for c in product((0.0, 1.0), repeat=dim)]
    raise DomainError(f"unknown sampler {sampler!r}")


def cover_count(m, n, psi, t, C0=1.0, sampler="centers", budget=EVAL_BUDGET, s_values=()):
    """Count cubes of side ``e^-(1/m+1/n)t`` whose sample point lies in the relaxed set.

    With ``sampler="corners"`` a cube counts when any of its corners does.
    ``budget`` caps the number of exact ``lambda_d`` evaluations.
    """
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    d, mn = m + n, m * n
    k = int(math.ceil(math.exp((1 / m + 1 / n) * t)))
    side = 1.0 / k
    total = k**mn
    zp = ZProfile(psi, m, n)
    z = float(zp(t))
    bound_exp = d * (t - z)
    R = cube_threshold(z, C0, d)
    offsets = _sample_offsets(sampler, mn)
    report = CoverReport(t, side, k, total, total, bound_exp)
    if R <= math.factorial(d) ** (-1.0 / d):
        # every unimodular lattice has lambda_d >= (d!)^(-1/d)
        report.s_sum = {s: hausdorff_sum(report, s) for s in s_values}
        return report
    rho = R ** (-1.0 / (d - 1))
    log_R = math.log(R)
    if m == n == 1:
        idx = _planar_candidates(k, t, rho, [o[0] for o in offsets])
        if len(idx) > budget:
            raise BudgetExceededError(f"{len(idx)} cubes need exact evaluation (budget {budget})")
        hit = np.zeros(len(idx), dtype=bool)
        for off in offsets:
            for s in range(0, len(idx), _CHUNK):
                A = (idx[s : s + _CHUNK] + off[0]) * side
                hit[s : s + _CHUNK] |= _log_lambda_d_batch(A, 1, 1, t) >= log_R
        count, evaluated = int(hit.sum()), len(idx)
    else:
        if total > budget:
            raise BudgetExceededError(f"{total} cubes exceed the budget {budget}")
        cells = np.array(list(product(range(k), repeat=mn)), dtype=float)
        hit = np.zeros(total, dtype=bool)
        evaluated = 0
        for off in offsets:
            pts = (cells + off) * side
            cand = np.flatnonzero(_general_candidates(pts, m, n, t, rho) & ~hit)
            evaluated += len(cand)
            if evaluated > budget:
                raise BudgetExceededError(f"{evaluated} exact evaluations exceed the budget {budget}")
            if len(cand):
                hit[cand] |= _log_lambda_d_batch(pts[cand], m, n, t) >= log_R
        count = int(hit.sum())
    report.count = count
    report.evaluated = evaluated
    report.s_sum = {s: hausdorff_sum(report, s) for s in s_values}
    return report


def coherence_check(m, n, psi, t, C0=1.0, fraction=0.01, seed=0, max_cubes=20_000):
    """Sample cubes; whenever the centre is Outside, no corner may be InZt.

    Returns ``(checked, violations)``.
    """
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    d, mn = m + n, m * n
    k = int(math.ceil(math.exp((1 / m + 1 / n) * t)))
    z = float(ZProfile(psi, m, n)(t))
    rng = np.random.default_rng(seed)
    n_cubes = int(min(max_cubes, max(1, fraction * k**mn)))
    cells = rng.integers(0, k, size=(n_cubes, mn))
    corners = np.array(list(product((0.0, 1.0), repeat=mn)))
    violations = 0
    checked = 0
    for cell in cells:
        centre = (cell + 0.5) / k
        if classify_height(log_height(centre, m, n, t), d, z, C0) is not Membership.OUTSIDE:
            continue
        checked += 1
        for c in corners:
            corner = np.clip((cell + c) / k, 0.0, 1.0)
            if classify_height(log_height(corner, m, n, t), d, z, C0) is Membership.IN_ZT:
                violations += 1
                break
    return checked, violations


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r2: float


def slope_fit(reports):
    """Least squares of ``log(count)`` against ``t``."""
    if len(reports) < 4:
        raise DomainError("slope_fit needs at least four reports")
    t = np.array([r.t for r in reports], dtype=float)
    y = np.log(np.array([r.count for r in reports], dtype=float))
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(float(slope), float(intercept), r2)


def fitted_K(reports):
    """Per-report ratios ``count / e^bound_exponent`` and their maximum ``K_emp``."""
    ratios = np.array([r.count / math.exp(r.bound_exponent) for r in reports])
    return float(ratios.max()), ratios


def predicted_slope(m, n, a):
    """``(m+n)(1 - (1-a)/(m+an))``: exponent of the count bound for ``psi = q^-a``."""
    return (m + n) * (1 - (1 - a) / (m + a * n))


def cover_sweep(m, n, psi, t_list, C0=1.0, sampler="centers", budget=EVAL_BUDGET, s_values=()):
    return [cover_count(m, n, psi, t, C0, sampler, budget, s_values) for t in t_list]
