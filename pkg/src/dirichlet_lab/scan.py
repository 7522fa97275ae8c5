"""Checkers for the inhomogeneous Dirichlet property of an affine form.

Three independent routes decide, for sampled ``T``, whether

    ||Aq + b - p||^m < psi(T),   ||q||^n < T

has an integral solution ``(p, q)`` (``q = 0`` allowed):

* :func:`direct_check` enumerates ``q`` exhaustively;
* :func:`dani_check` compares the log-length of the shortest vector of the
  flowed grid with the ``z`` profile at the matching flow time;
* :func:`transference_witness` looks for dual integer vectors that certify
  failure.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_pair, check_positive_int, dist_to_int
from .exceptions import BudgetExceededError, DomainError
from .lattice import flowed_pair_grid, shortest_vector
from .psi import PowerLog, ZProfile, dual_psi, dual_start, flow_time

DIRECT_BUDGET = 5_000_000
DANI_TOL_FLOOR = 1e-9
MAX_PERIOD = 64


class Status(str, enum.Enum):
    DIRICHLET_ON_WINDOW = "DirichletOnWindow"
    FAILS_AT = "FailsAt"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class ScanConfig:
    psi: object
    m: int = 1
    n: int = 1
    T_window: tuple = (10.0, 1e4)
    T_samples: int = 16
    search_slack: int = 0
    boundary_tol: float = 1e-12
    T_values: tuple = None

    def __post_init__(self):
        check_positive_int(self.m, "m")
        check_positive_int(self.n, "n")
        T_min, T_max = map(float, self.T_window)
        if not T_min <= T_max:
            raise DomainError("T_window must satisfy T_min <= T_max")
        if T_min < self.psi.T0:
            raise DomainError(f"T_min = {T_min} lies below the domain start T0 = {self.psi.T0}")
        if self.T_values is None and self.T_samples < 2:
            raise DomainError("T_samples must be at least 2")
        if self.search_slack < 0:
            raise DomainError("search_slack must be nonnegative")
        object.__setattr__(self, "T_window", (T_min, T_max))
        if self.T_values is not None:
            Ts = tuple(sorted(float(T) for T in self.T_values))
            if Ts[0] < self.psi.T0:
                raise DomainError("sampled T values must be >= T0")
            object.__setattr__(self, "T_values", Ts)

    def sample_T(self):
        if self.T_values is not None:
            return np.array(self.T_values)
        T_min, T_max = self.T_window
        return np.geomspace(T_min, T_max, self.T_samples)


@dataclass
class Witness:
    T: float
    solvable: bool
    boundary: bool
    residual: float
    q: np.ndarray
    p: np.ndarray


@dataclass
class ScanVerdict:
    status: Status
    window: tuple
    fails_at: list = field(default_factory=list)
    boundary: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    deltas: list = None
    z_values: list = None
    slack: list = None

    @property
    def solvable_mask(self):
        return np.array([w.solvable for w in self.witnesses])


def _status(fails, boundary):
    if fails:
        return Status.FAILS_AT
    if boundary:
        return Status.BOUNDARY
    return Status.DIRICHLET_ON_WINDOW


def max_shell(T, n):
    """Largest integer ``k`` with ``k^n < T``."""
    T = float(T)  # python int/float comparison is exact, numpy's is not
    k = int(math.floor(T ** (1.0 / n)))
    while k > 0 and k**n >= T:
        k -= 1
    while (k + 1) ** n < T:
        k += 1
    return k


def rational_period(A, max_den=MAX_PERIOD):
    """Smallest ``D <= max_den`` with ``D * A`` integral in floating point, else ``None``.

    When it exists, ``||Aq + b||_Z`` depends only on ``q mod D``.
    """
    A = np.asarray(A, dtype=float)
    for D in range(1, max_den + 1):
        scaled = A * D
        if np.all(scaled == np.rint(scaled)):
            return D
    return None


def _shell_minima(A, b, K, strict, budget):
    """Minimum residual and its argmin ``q`` on each shell ``||q||_inf = k``, ``k <= K``."""
    m, n = A.shape
    count = (2 * K + 1) ** n
    if count > budget:
        raise BudgetExceededError(
            f"direct search needs {count:.3g} vectors q (budget {budget}); T^(1/n) too large"
        )
    best = np.full(K + 1, np.inf)
    arg = np.zeros((K + 1, n), dtype=np.int64)
    rng = np.arange(-K, K + 1)
    lead = [rng] * (n - 1)
    step = max(1, int(2_000_000 // max(1, (2 * K + 1) ** (n - 1))))
    for start in range(0, len(rng), step):
        axes = lead + [rng[start : start + step]]
        Q = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        vals = np.max(dist_to_int(Q @ A.T + b), axis=1)
        shells = np.max(np.abs(Q), axis=1)
        if strict:
            vals = np.where(shells == 0, np.inf, vals)
        order = np.lexsort((vals, shells))
        first = np.ones(len(order), dtype=bool)
        first[1:] = shells[order][1:] != shells[order][:-1]
        idx = order[first]
        sh = shells[idx]
        better = vals[idx] < best[sh]
        best[sh[better]] = vals[idx][better]
        arg[sh[better]] = Q[idx][better]
    return best, arg


def direct_check(A, b, cfg, strict=False, budget=DIRECT_BUDGET):
    """Exhaustive search over ``q`` with ``||q||^n < T`` for every sampled ``T``."""
    m, n = cfg.m, cfg.n
    A, b = check_pair(A, b, m, n)
    Ts = cfg.sample_T()
    shells = np.array([max_shell(T, n) for T in Ts])
    K = int(shells.max())
    period = rational_period(A)
    if period is not None:
        K = min(K, period + 1)
    best, arg = _shell_minima(A, b, K, strict, budget)
    prefix = np.minimum.accumulate(best)
    prefix_arg = np.zeros_like(arg)
    cur = 0
    for k in range(K + 1):
        if best[k] < best[cur]:
            cur = k
        prefix_arg[k] = arg[cur]
    log_psi = cfg.psi.log_psi_at_log(np.log(Ts))
    tol = cfg.boundary_tol
    fails, bnd, wit = [], [], []
    for T, k, lp in zip(Ts, shells, log_psi):
        k_eff = min(int(k), K)
        r = float(prefix[k_eff])
        q = prefix_arg[k_eff].copy()
        if not np.isfinite(r):
            solvable, boundary = False, False
            q = np.zeros(n, dtype=np.int64)
        else:
            lhs = m * math.log(r) if r > 0 else -math.inf
            solvable = lhs < lp
            boundary = abs(lhs - lp) <= tol
        p = np.rint(A @ q + b).astype(np.int64)
        wit.append(Witness(float(T), solvable, boundary, r, q, p))
        if boundary:
            bnd.append(float(T))
        elif not solvable:
            fails.append(float(T))
    return ScanVerdict(_status(fails, bnd), cfg.T_window, fails, bnd, wit)


def dani_check(A, b, cfg, C0=1.0, budget=None):
    """Decide each sampled ``T`` through the flowed grid ``a_t Lambda_{A,b}``.

    At ``t = (m log T - n log psi(T)) / (m + n)`` the system is solvable iff
    ``Delta(a_t Lambda_{A,b}) < z(t)``. Values within the boundary tolerance
    are flagged; ``slack`` lists the ``T`` where ``z - C0 <= Delta < z``.
    """
    if C0 < 0:
        raise DomainError("C0 must be nonnegative")
    m, n = cfg.m, cfg.n
    A, b = check_pair(A, b, m, n)
    Ts = cfg.sample_T()
    zp = ZProfile(cfg.psi, m, n)
    ts = np.asarray(flow_time(cfg.psi, m, n, Ts), dtype=float)
    zs = np.asarray(zp(ts), dtype=float)
    tol = max(cfg.boundary_tol, DANI_TOL_FLOOR)
    kwargs = {} if budget is None else {"budget": budget}
    fails, bnd, wit, deltas, slack = [], [], [], [], []
    for T, t, z in zip(Ts, ts, zs):
        g = flowed_pair_grid(A, b, m, n, float(t))
        sv = shortest_vector(g, **kwargs)
        delta = float(sv.delta)
        deltas.append(delta)
        solvable = delta < z
        boundary = abs(delta - z) <= tol
        q = sv.coeffs[m:].copy()
        p = -sv.coeffs[:m]
        r = float(np.max(np.abs(A @ q + b - p))) if m else 0.0
        wit.append(Witness(float(T), solvable, boundary, r, q, p))
        if boundary:
            bnd.append(float(T))
        elif not solvable:
            fails.append(float(T))
        if solvable and delta >= z - C0:
            slack.append(float(T))
    return ScanVerdict(
        _status(fails, bnd), cfg.T_window, fails, bnd, wit,
        deltas=deltas, z_values=zs.tolist(), slack=slack,
    )


def transference_witness(A, b, psi, S_list, x_budget, m=1, n=1, max_count=DIRECT_BUDGET):
    """Integer ``x`` with ``0 < ||x|| < |b.x|_Z S / d`` and ``||A^T x||_Z < |b.x|_Z dual_psi(S) / d``.

    Each hit at ``S`` rules out a solution at ``T = psi^-1(S^-m)``.
    Returns a list of ``(S, x)``.
    """
    A, b = check_pair(A, b, m, n)
    d = m + n
    S_arr = np.asarray(S_list, dtype=float)
    if np.any(S_arr < dual_start(psi, m) * (1 - 1e-12)):
        raise DomainError(f"S must be >= S0 = {dual_start(psi, m)}")
    # |b.x|_Z <= 1/2 bounds the search box
    X = int(math.ceil(S_arr.max() / (2 * d)))
    if X > x_budget or (2 * X + 1) ** m > max_count:
        raise BudgetExceededError(f"transference search radius {X} exceeds the budget {x_budget}")
    rng = np.arange(-X, X + 1)
    Xs = np.stack([g.ravel() for g in np.meshgrid(*([rng] * m), indexing="ij")], axis=1)
    norms = np.max(np.abs(Xs), axis=1)
    Xs, norms = Xs[norms > 0], norms[norms > 0]
    bx = dist_to_int(Xs @ b)
    atx = np.max(dist_to_int(Xs @ A), axis=1)
    dual = np.atleast_1d(dual_psi(psi, m, n, S_arr))
    out = []
    for S, dS in zip(S_arr, dual):
        hit = (norms < bx * S / d) & (atx < bx * dS / d)
        out.extend((float(S), x.copy()) for x in Xs[hit])
    return out


@dataclass
class ExponentEstimate:
    value: float
    tol: float
    window: tuple
    truncated: bool = True


def uniform_exponent(A, b, w_bracket=(0.0, 2.0), T_max=1e6, tol=1e-3, m=1, n=1, T_samples=16):
    """Bisection estimate of the uniform exponent on the window ``[T_max/8, T_max]``.

    ``w`` is accepted when ``||Aq + b - p|| < T^-w``, ``||q|| < T`` is solvable at
    every sampled ``T``; in the rate-function form this is ``psi(T') = T'^(-mw/n)``
    with ``T' = T^n``. Returns ``inf`` when ``b`` is integral.
    """
    A, b = check_pair(A, b, m, n)
    window = (T_max / 8.0, T_max)
    if np.all(b == np.rint(b)):
        return ExponentEstimate(math.inf, tol, window)
    w_lo, w_hi = map(float, w_bracket)
    if not 0 <= w_lo < w_hi:
        raise DomainError("w_bracket must satisfy 0 <= w_lo < w_hi")
    T_window = (window[0] ** n, window[1] ** n)

    def ok(w):
        psi = PowerLog(a=m * w / n, e=0.0, T0=min(2.0, T_window[0]))
        cfg = ScanConfig(psi=psi, m=m, n=n, T_window=T_window, T_samples=T_samples)
        return not direct_check(A, b, cfg).fails_at

    if not ok(w_lo) or ok(w_hi):
        raise DomainError("w_bracket does not straddle the exponent")
    while w_hi - w_lo > tol:
        mid = 0.5 * (w_lo + w_hi)
        if ok(mid):
            w_lo = mid
        else:
            w_hi = mid
    return ExponentEstimate(0.5 * (w_lo + w_hi), tol, window)
