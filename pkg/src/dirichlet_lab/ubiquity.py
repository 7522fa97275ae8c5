"""Counting layer behind the ubiquity argument.

Covers the quantity ``eps(b)``, the pairing of bad integer vectors, the
2-regular step function ``omega`` built from a divergent series, the radius
function ``rho_c``, exact censuses of rational points for ``m = 1`` and Monte
Carlo mean/variance statistics of the counting function for ``m >= 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from ._validation import check_positive_int, check_vector, dist_to_int
from .exceptions import BudgetExceededError, DivergenceExhaustedError, DomainError
from .parallel import parallel_map, split_counts, worker_generators

CENSUS_MAX_LEVEL = 14
CENSUS_BUDGET = 50_000_000
_CHUNK = 2_000_000


def epsilon_of_b(b):
    """A quarter of the smallest nonzero distance ``|b_j|_Z``."""
    dist = dist_to_int(np.atleast_1d(np.asarray(b, dtype=float)))
    nz = dist[dist > 0]
    if nz.size == 0:
        raise DomainError("eps(b) is undefined for integral b")
    return float(nz.min()) / 4


def epsilon_index(b):
    """Index ``j`` realising ``eps(b)``."""
    dist = dist_to_int(np.atleast_1d(np.asarray(b, dtype=float)))
    dist = np.where(dist > 0, dist, np.inf)
    if not np.isfinite(dist).any():
        raise DomainError("eps(b) is undefined for integral b")
    return int(np.argmin(dist))


def bad_pair_check(b, x):
    """True when ``|b.x|_Z <= eps(b)``."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    x = np.atleast_1d(np.asarray(x))
    return bool(dist_to_int(b @ x) <= epsilon_of_b(b))


def pairing_violations(b, radius):
    """Count ``x`` with ``||x||_inf <= radius`` such that both ``x`` and ``x + e_i`` are bad.

    ``i`` is the index realising ``eps(b)``; the expected count is zero.
    """
    b = np.atleast_1d(np.asarray(b, dtype=float))
    m = b.size
    eps = epsilon_of_b(b)
    i = epsilon_index(b)
    rng = np.arange(-radius, radius + 1)
    X = np.stack([g.ravel() for g in np.meshgrid(*([rng] * m), indexing="ij")], axis=1)
    bx = X @ b
    bad = dist_to_int(bx) <= eps
    bad_next = dist_to_int(bx + b[i]) <= eps
    return int(np.count_nonzero(bad & bad_next))


@dataclass(frozen=True)
class OmegaTable:
    """Step function ``omega(h) = i^(1/n)`` for ``h_(i-1) < h <= h_i``."""

    boundaries: tuple
    n: int = 1
    start: int = 1
    doubling_bound: tuple = ()
    block_sums: tuple = ()

    def level(self, h):
        h = np.asarray(h)
        if np.any(h < self.start) or np.any(h > self.boundaries[-1]):
            raise DomainError(
                f"omega is tabulated on [{self.start}, {self.boundaries[-1]}]"
            )
        return np.searchsorted(np.asarray(self.boundaries), h, side="left") + 1

    def __call__(self, h):
        out = self.level(h) ** (1.0 / self.n)
        return float(out) if np.ndim(out) == 0 else out

    def to_list(self):
        return [(int(h), i + 1) for i, h in enumerate(self.boundaries)]


def omega_sequence(summand, N_max, n=1, start=1):
    """Close blocks ``h_i > 2 h_(i-1)`` whose summand total exceeds 1.

    ``summand`` maps an integer array ``h`` to the series terms. Raises when no
    block closes before ``N_max``.
    """
    n = check_positive_int(n, "n")
    N_max = int(N_max)
    vals = np.asarray(summand(np.arange(start, N_max + 1)), dtype=float)
    boundaries, doubling, sums = [], [], []
    prev, acc = start - 1, 0.0
    for h, v in zip(range(start, N_max + 1), vals.tolist()):
        acc += v
        if h > 2 * prev and acc > 1.0:
            # doubling binds when the mass already exceeded 1 before h
            doubling.append(acc - v > 1.0)
            boundaries.append(h)
            sums.append(acc)
            prev, acc = h, 0.0
    if not boundaries:
        raise DivergenceExhaustedError(f"no block of mass > 1 closed before N_max = {N_max}")
    return OmegaTable(tuple(boundaries), n, start, tuple(doubling), tuple(sums))


def constant_summand(h):
    return np.ones(np.shape(h))


def rho_ubiquity(c, m, n, h, omega=1.0):
    """``c h^-(1+n)/n`` for ``m = 1``; ``c h^-(m+n)/n omega(h)`` for ``m >= 2``."""
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    h = np.asarray(h, dtype=float)
    if np.any(h < 1):
        raise DomainError("rho is defined for h >= 1")
    if m == 1:
        out = c * h ** (-(1 + n) / n)
    else:
        w = omega(h) if callable(omega) else omega
        out = c * h ** (-(m + n) / n) * w
    return float(out) if np.ndim(out) == 0 else out


def totient_sieve(N):
    phi = np.arange(N + 1, dtype=np.int64)
    for p in range(2, N + 1):
        if phi[p] == p:
            phi[p::p] -= phi[p::p] // p
    return phi


def totient_ratio(N):
    """``(1/N^2) sum_{q <= N} phi(q)``."""
    N = check_positive_int(N, "N")
    total = int(totient_sieve(N)[1:].sum())
    return float(Fraction(total, N * N))


def count_pairs_exhaustive(x, t, A, l, u):
    """Number of integer ``(y, s) >= 0`` with ``0 < |ty - xs| <= A``, ``xl <= y <= xu``, ``tl <= s <= tu``."""
    ys = np.arange(max(0, math.ceil(x * l)), math.floor(x * u) + 1)
    ss = np.arange(max(0, math.ceil(t * l)), math.floor(t * u) + 1)
    if ys.size == 0 or ss.size == 0:
        return 0
    diff = np.abs(t * ys[:, None] - x * ss[None, :])
    return int(np.count_nonzero((diff > 0) & (diff <= A)))


def pair_count_claimed_bound(A, l, u):
    return 2 * (u - l) * A


def pair_count_rigorous_bound(x, t, A, l, u):
    """``2 floor(A/g) (floor((u-l) g) + 1)`` with ``g = gcd(x, t)``."""
    g = math.gcd(int(x), int(t))
    return 2 * math.floor(A / g) * (math.floor((u - l) * g) + 1)


@dataclass
class UbiquityConfig:
    b: np.ndarray
    m: int = 1
    n: int = 1
    N: int = 8
    box: tuple = None
    c: float = None
    mc_samples: int = 10_000
    rng_seed: int = 0
    omega: object = None

    def __post_init__(self):
        check_positive_int(self.m, "m")
        check_positive_int(self.n, "n")
        check_positive_int(self.N, "N")
        self.b = check_vector(self.b, self.m)
        epsilon_of_b(self.b)
        if self.box is None:
            self.box = tuple((0.0, 1.0) for _ in range(self.n))
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if len(box) != self.n or any(not 0 <= lo < hi <= 1 for lo, hi in box):
            raise DomainError("box must be n intervals [l, u] inside [0, 1] with l < u")
        self.box = box
        if self.c is not None and self.c <= 0:
            raise DomainError("c must be positive")
        if self.mc_samples < 2:
            raise DomainError("mc_samples must be at least 2")

    @property
    def box_volume(self):
        return float(np.prod([hi - lo for lo, hi in self.box]))

    def omega_fn(self):
        if self.omega is None:
            return lambda h: np.ones(np.shape(h)) if np.ndim(h) else 1.0
        if callable(self.omega):
            return self.omega
        return lambda h: self.omega


@dataclass
class UbiquityReport:
    N: int
    countT: int = None
    countG: int = None
    c: float = None
    rho: float = None
    c1_hat: float = None
    sizeI: int = None
    delta: float = None
    mu_exact: float = None
    sigma2_exact: float = None
    mu_hat: float = None
    sigma2_hat: float = None
    se_mu: float = None
    se_excess: float = None
    z_empty_fraction: float = None
    se_empty: float = None
    extra: dict = field(default_factory=dict)


def rational_points(cfg):
    """``T(N)``: reduced ``(x, y)`` with ``2^(N-1) < x <= 2^N``, ``y/x`` in the box, ``|b x|_Z > eps(b)``."""
    if cfg.m != 1:
        raise DomainError("rational_points needs m = 1")
    if cfg.N > CENSUS_MAX_LEVEL:
        raise BudgetExceededError(f"N = {cfg.N} exceeds the census level budget {CENSUS_MAX_LEVEL}")
    eps0 = epsilon_of_b(cfg.b)
    xs = np.arange(2 ** (cfg.N - 1) + 1, 2**cfg.N + 1)
    xs = xs[dist_to_int(cfg.b[0] * xs) > eps0]
    widths = [np.floor(xs * hi) - np.ceil(xs * lo) + 1 for lo, hi in cfg.box]
    if float(np.sum(np.prod(widths, axis=0))) > CENSUS_BUDGET:
        raise BudgetExceededError("census would enumerate too many rational points")
    out_x, out_y = [], []
    for x in xs:
        axes = [np.arange(math.ceil(x * lo), math.floor(x * hi) + 1) for lo, hi in cfg.box]
        if any(a.size == 0 for a in axes):
            continue
        Y = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        g = np.full(len(Y), x)
        for j in range(Y.shape[1]):
            g = np.gcd(g, Y[:, j])
        Y = Y[g == 1]
        out_x.append(np.full(len(Y), x))
        out_y.append(Y)
    if not out_x:
        return np.zeros(0, dtype=np.int64), np.zeros((0, cfg.n), dtype=np.int64)
    return np.concatenate(out_x), np.concatenate(out_y)


def isolated_mask(points, radius):
    """Points whose closed sup-norm ``radius``-ball meets no other point's ball.

    Uses a spatial hash with cell size ``2 radius``; only the ``3^n``
    neighbouring cells are compared.
    """
    P = np.asarray(points, dtype=float)
    N, n = P.shape
    if N == 0:
        return np.zeros(0, dtype=bool)
    reach = 2 * radius
    cells = np.floor(P / reach).astype(np.int64)
    cells -= cells.min(axis=0)
    dims = cells.max(axis=0) + 3
    def key(C):
        k = np.zeros(len(C), dtype=np.int64)
        for j in range(n):
            k = k * dims[j] + (C[:, j] + 1)
        return k
    keys = key(cells)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    isolated = np.ones(N, dtype=bool)
    for off in product((-1, 0, 1), repeat=n):
        nk = key(cells + np.array(off))
        lo = np.searchsorted(sorted_keys, nk, side="left")
        hi = np.searchsorted(sorted_keys, nk, side="right")
        cnt = hi - lo
        if not cnt.any():
            continue
        src = np.repeat(np.arange(N), cnt)
        pos = np.repeat(lo - np.cumsum(np.concatenate([[0], cnt[:-1]])), cnt) + np.arange(cnt.sum())
        dst = order[pos]
        other = src != dst
        src, dst = src[other], dst[other]
        close = np.max(np.abs(P[src] - P[dst]), axis=1) <= reach
        isolated[src[close]] = False
    return isolated


def default_c_m1(c1_hat, n):
    return 0.9 * (c1_hat * 2.0 ** (-(2 * n + 1))) ** (1.0 / n)


def census_m1(cfg):
    """Exact ``#T(N)`` and ``#G(N)`` (points whose ``rho_c(2^N)``-ball is disjoint from all others)."""
    xs, Y = rational_points(cfg)
    count_T = len(xs)
    c1_hat = count_T / (cfg.box_volume * 2.0 ** (cfg.N * (cfg.n + 1)))
    c = cfg.c if cfg.c is not None else default_c_m1(c1_hat, cfg.n)
    rho = rho_ubiquity(c, 1, cfg.n, 2.0**cfg.N)
    pts = Y / xs[:, None]
    count_G = int(isolated_mask(pts, rho).sum()) if count_T else 0
    return UbiquityReport(cfg.N, countT=count_T, countG=count_G, c=c, rho=rho, c1_hat=c1_hat)


def index_set(cfg):
    """``I(N)`` for ``m >= 2``: primitive ``x`` with the long coordinate in ``[N, 2N]``.

    The long coordinate is the one realising ``eps(b)``; the others satisfy
    ``|x_j| <= N / omega(2N)^(1/(2(m-1)))``; and ``|b.x|_Z > eps(b)``.
    """
    m, N = cfg.m, cfg.N
    if m < 2:
        raise DomainError("index_set needs m >= 2")
    eps0 = epsilon_of_b(cfg.b)
    lead = epsilon_index(cfg.b)
    w = float(cfg.omega_fn()(2 * N))
    R = int(math.floor(N / w ** (1.0 / (2 * (m - 1))) + 1e-12))
    count = (N + 1) * (2 * R + 1) ** (m - 1)
    if count > CENSUS_BUDGET:
        raise BudgetExceededError(f"I(N) box holds {count} vectors (budget {CENSUS_BUDGET})")
    axes = [np.arange(-R, R + 1)] * m
    axes[lead] = np.arange(N, 2 * N + 1)
    X = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    g = np.abs(X[:, 0])
    for j in range(1, m):
        g = np.gcd(g, X[:, j])
    X = X[(g == 1) & (dist_to_int(X @ cfg.b) > eps0)]
    return X


def _nu_samples(X, m, n, delta, count, rng):
    out = np.empty(count, dtype=np.int64)
    Xf = X.astype(float)
    step = max(1, _CHUNK // max(1, len(X) * n))
    for s in range(0, count, step):
        k = min(step, count - s)
        A = rng.random((k, m, n))
        vals = np.einsum("xi,kij->kxj", Xf, A)
        near = np.max(dist_to_int(vals), axis=2) < delta
        out[s : s + k] = near.sum(axis=1)
    return out


def _nu_worker(args):
    X, m, n, delta, count, rng = args
    return _nu_samples(X, m, n, delta, count, rng)


def mean_variance(cfg, workers=1):
    """Exact ``mu_N`` and Monte Carlo estimates of mean, variance and ``P(nu = 0)``.

    ``nu_N(A)`` counts ``x`` in ``I(N)`` with ``||A^T x||_Z < delta(N)``, where
    ``delta(N) = N^(-m/n) omega(2N)``; ``A`` is uniform on ``[0,1]^(mn)``.
    """
    m, n, N = cfg.m, cfg.n, cfg.N
    if m < 2:
        raise DomainError("mean_variance needs m >= 2 (use census_m1 for m = 1)")
    X = index_set(cfg)
    w = float(cfg.omega_fn()(2 * N))
    delta = N ** (-m / n) * w
    if delta >= 0.5:
        raise DomainError("delta(N) must be below 1/2")
    p = (2 * delta) ** n
    mu = len(X) * p
    sigma2 = mu * (1 - p)
    S = cfg.mc_samples
    gens = worker_generators(cfg.rng_seed, workers)
    jobs = [(X, m, n, delta, k, g) for k, g in zip(split_counts(S, workers), gens)]
    nu = np.concatenate(parallel_map(_nu_worker, jobs, workers))
    mu_hat = float(nu.mean())
    sigma2_hat = float(nu.var(ddof=1))
    u = (nu - mu_hat) ** 2 - nu
    empty = float(np.mean(nu == 0))
    c = cfg.c if cfg.c is not None else 0.9 * 2.0 ** ((m + n) / n)
    return UbiquityReport(
        N,
        c=c,
        rho=rho_ubiquity(c, m, n, float(N), w),
        sizeI=len(X),
        delta=delta,
        mu_exact=mu,
        sigma2_exact=sigma2,
        mu_hat=mu_hat,
        sigma2_hat=sigma2_hat,
        se_mu=float(nu.std(ddof=1) / math.sqrt(S)),
        se_excess=float(u.std(ddof=1) / math.sqrt(S)),
        z_empty_fraction=empty,
        se_empty=math.sqrt(max(empty * (1 - empty), 1.0 / S) / S),
        extra={"omega_2N": w},
    )
