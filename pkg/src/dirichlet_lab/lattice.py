"""Sup-norm geometry of unimodular grids in R^d.

A grid is ``{B k + s : k in Z^d}`` with ``|det B| = 1``. The affine form
``q -> Aq + b`` gives the grid with basis ``[[I_m, A], [0, I_n]]`` and shift
``(b, 0)``; the diagonal flow stretches the first ``m`` coordinates by
``e^(t/m)`` and contracts the last ``n`` by ``e^(-t/n)``.

Shortest vectors are found exactly: LLL preconditioning, a coefficient box
derived from the inverse of the reduced basis, and enumeration over all but
one coefficient, the last one being optimised in closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np

from ._validation import check_pair, check_positive_int
from .exceptions import BudgetExceededError, DomainError

DET_TOL = 1e-9
ZERO_TOL = 1e-9
LLL_DELTA = 0.99
DEFAULT_BUDGET = 20_000_000
_CHUNK = 200_000


class NegInfinity:
    """Tagged ``-inf``: the log-length of a grid that contains the origin."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __float__(self):
        return -math.inf

    def __repr__(self):
        return "NEG_INF"

    def __eq__(self, other):
        return other is self or (isinstance(other, (int, float)) and other == -math.inf)

    def __hash__(self):
        return hash(-math.inf)

    def __lt__(self, other):
        return not self == other

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return self == other


NEG_INF = NegInfinity()


def as_float(delta):
    return float(delta)


@dataclass(frozen=True)
class Grid:
    basis: np.ndarray
    shift: np.ndarray = None

    def __post_init__(self):
        B = np.array(self.basis, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] < 1:
            raise DomainError("basis must be a square matrix")
        if not np.all(np.isfinite(B)):
            raise DomainError("basis must have finite entries")
        d = B.shape[0]
        s = np.zeros(d) if self.shift is None else np.array(self.shift, dtype=float).ravel()
        if s.shape != (d,) or not np.all(np.isfinite(s)):
            raise DomainError(f"shift must be a finite vector of length {d}")
        scale = max(1.0, float(np.prod(np.linalg.norm(B, axis=0))))
        det = np.linalg.det(B)
        if abs(abs(det) - 1.0) > DET_TOL * scale:
            raise DomainError(f"basis must be unimodular, |det| = {abs(det)}")
        B.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "shift", s)

    @property
    def d(self):
        return self.basis.shape[0]

    @property
    def is_lattice(self):
        return not np.any(self.shift)

    def points(self, coeffs):
        """Grid points for integer coefficient rows ``coeffs`` of shape (N, d)."""
        return np.asarray(coeffs, dtype=float) @ self.basis.T + self.shift

    def to_dict(self):
        return {"d": self.d, "basis": self.basis.tolist(), "shift": self.shift.tolist()}

    @classmethod
    def from_dict(cls, data):
        g = cls(basis=np.array(data["basis"], dtype=float), shift=np.array(data["shift"], dtype=float))
        if g.d != data.get("d", g.d):
            raise DomainError("declared dimension does not match the basis")
        return g

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FlowParams:
    m: int
    n: int
    t: float

    def __post_init__(self):
        check_positive_int(self.m, "m")
        check_positive_int(self.n, "n")

    @property
    def diagonal(self):
        return np.concatenate(
            [np.full(self.m, math.exp(self.t / self.m)), np.full(self.n, math.exp(-self.t / self.n))]
        )


def pair_basis(A, m, n):
    A = np.asarray(A, dtype=float).reshape(m, n)
    B = np.eye(m + n)
    B[:m, m:] = A
    return B


def grid_from_pair(A, b, m=None, n=None):
    """Grid of the affine form ``q -> Aq + b``: points ``(Aq + b - p, q)``."""
    A_arr = np.atleast_2d(np.asarray(A, dtype=float))
    if m is None or n is None:
        m, n = A_arr.shape
    A, b = check_pair(A, b, m, n)
    shift = np.concatenate([b, np.zeros(n)])
    return Grid(pair_basis(A, m, n), shift)


def apply_flow(g, fp):
    if g.d != fp.m + fp.n:
        raise DomainError(f"grid dimension {g.d} does not match m + n = {fp.m + fp.n}")
    D = fp.diagonal
    return Grid(D[:, None] * g.basis, D * g.shift)


def flowed_pair_grid(A, b, m, n, t):
    return apply_flow(grid_from_pair(A, b, m, n), FlowParams(m, n, t))


def sup_norm(v, axis=-1):
    return np.max(np.abs(v), axis=axis)


def _gram_schmidt(B):
    d = B.shape[1]
    Bs = np.zeros_like(B)
    mu = np.eye(d)
    norms = np.zeros(d)
    for i in range(d):
        v = B[:, i].copy()
        for j in range(i):
            mu[i, j] = B[:, i] @ Bs[:, j] / norms[j]
            v -= mu[i, j] * Bs[:, j]
        Bs[:, i] = v
        norms[i] = v @ v
    return mu, norms


class LLLResult(NamedTuple):
    basis: np.ndarray
    transform: np.ndarray


def lll_reduce(basis, delta=LLL_DELTA):
    """LLL-reduce the columns of ``basis``.

    Returns the reduced basis and the exact integer transform ``U`` (object
    dtype) with ``reduced = basis @ U``.
    """
    B = np.array(basis, dtype=float)
    d = B.shape[1]
    if B.ndim != 2 or B.shape[0] != d:
        raise DomainError("basis must be square")
    if abs(np.linalg.det(B)) == 0 or np.linalg.matrix_rank(B) < d:
        raise DomainError("basis is singular")
    U = np.array([[int(i == j) for j in range(d)] for i in range(d)], dtype=object)
    mu, norms = _gram_schmidt(B)
    k = 1
    while k < d:
        changed = False
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                B[:, k] -= q * B[:, j]
                U[:, k] -= q * U[:, j]
                mu[k, : j + 1] -= q * mu[j, : j + 1]
                changed = True
        if changed:
            mu, norms = _gram_schmidt(B)
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            B[:, [k - 1, k]] = B[:, [k, k - 1]]
            U[:, [k - 1, k]] = U[:, [k, k - 1]]
            mu, norms = _gram_schmidt(B)
            k = max(k - 1, 1)
    return LLLResult(B, U)


def best_integer_multiple(c, u):
    """Minimise ``max_i |c_i + k u_i|`` over integers ``k``, row by row.

    ``c`` has shape (N, d), ``u`` shape (d,). The objective is convex and
    piecewise linear, so its real minimiser sits at a kink; the integer
    optimum is the floor or ceiling of that kink.
    """
    c = np.atleast_2d(c)
    u = np.asarray(u, dtype=float)
    d = u.size
    cand = []
    for i in range(d):
        if u[i] != 0:
            with np.errstate(over="ignore"):
                cand.append(-c[:, i] / u[i])
    for i, j in combinations(range(d), 2):
        with np.errstate(over="ignore"):
            if u[i] != u[j]:
                cand.append(-(c[:, i] - c[:, j]) / (u[i] - u[j]))
            if u[i] != -u[j]:
                cand.append(-(c[:, i] + c[:, j]) / (u[i] + u[j]))
    cand = np.stack(cand, axis=1)
    # a subnormal denominator overflows; k = 0 is always a safe stand-in
    cand[~np.isfinite(cand)] = 0.0
    vals = np.max(np.abs(c[:, None, :] + cand[:, :, None] * u), axis=2)
    k_real = cand[np.arange(len(c)), np.argmin(vals, axis=1)]
    k_lo = np.floor(k_real)
    k_hi = k_lo + 1
    f_lo = sup_norm(c + k_lo[:, None] * u)
    f_hi = sup_norm(c + k_hi[:, None] * u)
    use_hi = f_hi < f_lo
    return np.where(use_hi, k_hi, k_lo), np.where(use_hi, f_hi, f_lo)


def _box(Binv_rows, g, R):
    r = Binv_rows * R * (1 + 1e-12) + 1e-9
    return np.ceil(-g - r).astype(np.int64), np.floor(-g + r).astype(np.int64)


def _search(Bp, g, R, exclude_zero, budget):
    """Minimise ``||Bp (k + g)||_inf`` over integer ``k``; returns (k, value)."""
    d = Bp.shape[0]
    row1 = np.abs(np.linalg.inv(Bp)).sum(axis=1)
    best_k = None
    best_val = R
    lo, hi = _box(row1, g, R)
    widths = hi - lo
    j_star = int(np.argmax(widths))
    others = [i for i in range(d) if i != j_star]
    u = Bp[:, j_star]
    if not others:
        if exclude_zero:
            return np.ones(1, dtype=np.int64), abs(u[0])
        k, val = best_integer_multiple((Bp[:, 0] * g[0])[None, :], u)
        return np.array([int(k[0])], dtype=np.int64), float(val[0])
    count = float(np.prod((widths[others] + 1).astype(float)))
    if count > budget:
        raise BudgetExceededError(
            f"enumeration box holds {count:.3g} coefficient vectors (budget {budget})"
        )
    lead, rest = others[0], others[1:]
    lead_vals = np.arange(lo[lead], hi[lead] + 1)
    lead_vals = lead_vals[np.argsort(np.abs(lead_vals + g[lead]), kind="stable")]
    Bo = Bp[:, others]
    for v0 in lead_vals:
        lo, hi = _box(row1, g, best_val)
        if v0 < lo[lead] or v0 > hi[lead]:
            continue
        axes = [np.array([v0])] + [np.arange(lo[i], hi[i] + 1) for i in rest]
        if any(ax.size == 0 for ax in axes):
            continue
        grids = np.meshgrid(*axes, indexing="ij")
        K = np.stack([gr.ravel() for gr in grids], axis=1)
        for start in range(0, len(K), _CHUNK):
            Kc = K[start : start + _CHUNK]
            c = (Kc + g[others]) @ Bo.T + g[j_star] * u
            kj, vals = best_integer_multiple(c, u)
            if exclude_zero:
                zero_rows = np.all(Kc == 0, axis=1) & (kj == 0)
                if np.any(zero_rows):
                    vals = vals.copy()
                    kj = kj.copy()
                    kj[zero_rows] = 1
                    vals[zero_rows] = sup_norm(u)
            i = int(np.argmin(vals))
            if best_k is None or vals[i] < best_val:
                best_val = float(vals[i])
                full = np.zeros(d, dtype=np.int64)
                full[others] = Kc[i]
                full[j_star] = int(kj[i])
                best_k = full
    if best_k is None:
        raise BudgetExceededError("enumeration found no point inside the initial radius")
    return best_k, best_val


class ShortestVector(NamedTuple):
    vector: np.ndarray
    delta: object
    coeffs: np.ndarray


def shortest_vector(g, budget=DEFAULT_BUDGET):
    """Sup-norm shortest point of a grid and ``Delta = log`` of its length.

    Returns ``NEG_INF`` as ``delta`` when the grid contains the origin.
    """
    if g.d > 8:
        raise DomainError("enumeration is limited to d <= 8")
    red = lll_reduce(g.basis)
    Bp = red.basis
    g_full = np.linalg.solve(Bp, g.shift)
    g_round = np.rint(g_full)
    g_frac = g_full - g_round
    U = red.transform
    if np.all(np.abs(g_frac) <= ZERO_TOL):
        coeffs = -np.asarray(U.dot(g_round.astype(np.int64).astype(object)), dtype=np.int64)
        return ShortestVector(np.zeros(g.d), NEG_INF, coeffs)
    R = float(sup_norm(Bp @ g_frac))
    k, val = _search(Bp, g_frac, R, exclude_zero=False, budget=budget)
    k_orig = U.dot((k - g_round.astype(np.int64)).astype(object))
    coeffs = np.array([int(x) for x in k_orig], dtype=np.int64)
    vec = g.basis @ coeffs + g.shift
    return ShortestVector(vec, math.log(val), coeffs)


def grid_log_min(g, budget=DEFAULT_BUDGET):
    """``Delta(g)`` as a float (``-inf`` when the grid contains the origin)."""
    return float(shortest_vector(g, budget).delta)


def shortest_nonzero(basis, budget=DEFAULT_BUDGET):
    """Sup-norm shortest nonzero vector of the lattice spanned by ``basis`` columns."""
    red = lll_reduce(basis)
    Bp = red.basis
    R = float(np.min(sup_norm(Bp, axis=0)))
    k, val = _search(Bp, np.zeros(Bp.shape[0]), R, exclude_zero=True, budget=budget)
    coeffs = np.array([int(x) for x in red.transform.dot(k.astype(object))], dtype=np.int64)
    return val, coeffs


@dataclass(frozen=True)
class MinimaReport:
    lambdas: np.ndarray
    witnesses: np.ndarray


def _enumerate_ball(Bp, R, budget):
    d = Bp.shape[0]
    row1 = np.abs(np.linalg.inv(Bp)).sum(axis=1)
    lo, hi = _box(row1, np.zeros(d), R)
    count = float(np.prod((hi - lo + 1).astype(float)))
    if count > budget:
        raise BudgetExceededError(
            f"enumeration box holds {count:.3g} coefficient vectors (budget {budget})"
        )
    axes = [np.arange(lo[i], hi[i] + 1) for i in range(d)]
    K = np.stack([gr.ravel() for gr in np.meshgrid(*axes, indexing="ij")], axis=1)
    norms = sup_norm(K @ Bp.T)
    keep = (norms <= R * (1 + 1e-12)) & np.any(K != 0, axis=1)
    K, norms = K[keep], norms[keep]
    order = np.lexsort((np.abs(K).sum(axis=1), norms))
    return K[order], norms[order]


def _greedy_independent(K, norms, d):
    chosen, lambdas = [], []
    for k, nv in zip(K, norms):
        trial = np.array(chosen + [k], dtype=float)
        if np.linalg.matrix_rank(trial, tol=1e-9) == len(chosen) + 1:
            chosen.append(k)
            lambdas.append(nv)
            if len(chosen) == d:
                break
    return chosen, lambdas


def successive_minima(g, budget=DEFAULT_BUDGET, method="auto"):
    """Sup-norm successive minima of a lattice (``g.shift`` must be zero).

    ``method="gauss"`` (the default for d = 2) uses sup-norm Gauss reduction,
    which is exact in the plane and insensitive to skew; ``"enumerate"``
    collects every lattice point in the box of radius equal to the longest
    reduced basis vector and selects independent vectors greedily.
    """
    if not g.is_lattice:
        raise DomainError("successive minima are defined for lattices (zero shift)")
    if g.d > 8:
        raise DomainError("enumeration is limited to d <= 8")
    if method == "auto":
        method = "gauss" if g.d == 2 else "enumerate"
    if method == "gauss":
        if g.d != 2:
            raise DomainError("Gauss reduction applies to d = 2 only")
        u, v, lam1, lam2 = gauss_reduce_sup(g.basis[None, :, 0], g.basis[None, :, 1])
        W = np.linalg.solve(g.basis, np.stack([u[0], v[0]], axis=1))
        return MinimaReport(np.array([lam1[0], lam2[0]]), np.rint(W.T).astype(np.int64))
    if method != "enumerate":
        raise DomainError(f"unknown method {method!r}")
    red = lll_reduce(g.basis)
    Bp = red.basis
    R = float(np.max(sup_norm(Bp, axis=0)))
    K, norms = _enumerate_ball(Bp, R, budget)
    chosen, lambdas = _greedy_independent(K, norms, g.d)
    if len(chosen) < g.d:
        raise BudgetExceededError("did not collect d independent vectors inside the box")
    W = np.array([[int(x) for x in red.transform.dot(np.asarray(k).astype(object))] for k in chosen])
    return MinimaReport(np.array(lambdas), W.astype(np.int64))


def gauss_reduce_sup(u, v, max_iter=200):
    """Batch sup-norm Gauss reduction of planar bases.

    ``u``, ``v`` have shape (N, 2). Returns reduced ``(u, v, |u|, |v|)`` with
    ``|u| = lambda_1`` and ``|v| = lambda_2`` for each lattice.
    """
    u = np.array(u, dtype=float, copy=True)
    v = np.array(v, dtype=float, copy=True)
    nu, nv = sup_norm(u), sup_norm(v)
    swap = nv < nu
    u[swap], v[swap] = v[swap].copy(), u[swap].copy()
    nu, nv = np.minimum(nu, nv), np.maximum(nu, nv)
    active = np.ones(len(u), dtype=bool)
    for _ in range(max_iter):
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        uu, vv = u[idx], v[idx]
        k, val = _best_multiple_rows(vv, uu)
        vv = vv + k[:, None] * uu
        shrink = val < nu[idx] * (1 - 1e-13)
        # reduced: keep u, store the improved v; otherwise swap and continue
        done = idx[~shrink]
        u[done], v[done], nv[done] = uu[~shrink], vv[~shrink], val[~shrink]
        go = idx[shrink]
        v[go], u[go] = uu[shrink], vv[shrink]
        nv[go], nu[go] = nu[go], val[shrink]
        active[done] = False
    else:
        raise BudgetExceededError("Gauss reduction did not terminate")
    return u, v, nu, nv


def _best_multiple_rows(c, u):
    """Row-wise version of :func:`best_integer_multiple` with per-row ``u`` (d = 2)."""
    c1, c2, u1, u2 = c[:, 0], c[:, 1], u[:, 0], u[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        cand = np.stack(
            [-c1 / u1, -c2 / u2, -(c1 - c2) / (u1 - u2), -(c1 + c2) / (u1 + u2)], axis=1
        )
    cand = np.where(np.isfinite(cand), cand, 0.0)
    vals = np.maximum(np.abs(c1[:, None] + cand * u1[:, None]), np.abs(c2[:, None] + cand * u2[:, None]))
    k_real = cand[np.arange(len(c)), np.argmin(vals, axis=1)]
    k_lo = np.floor(k_real)
    k_hi = k_lo + 1
    f_lo = sup_norm(c + k_lo[:, None] * u)
    f_hi = sup_norm(c + k_hi[:, None] * u)
    use_hi = f_hi < f_lo
    return np.where(use_hi, k_hi, k_lo), np.where(use_hi, f_hi, f_lo)


def planar_minima(A, t):
    """``(lambda_1, lambda_2)`` of ``a_t Lambda_A`` for m = n = 1 and a batch of ``A``."""
    A = np.asarray(A, dtype=float).ravel()
    et = math.exp(t)
    u = np.stack([np.full_like(A, et), np.zeros_like(A)], axis=1)
    v = np.stack([A * et, np.full_like(A, 1.0 / et)], axis=1)
    _, _, l1, l2 = gauss_reduce_sup(u, v)
    return l1, l2


def dual_lattice(g):
    if not g.is_lattice:
        raise DomainError("the dual is defined for lattices (zero shift)")
    return Grid(np.linalg.inv(g.basis).T)


class MahlerResult(NamedTuple):
    lhs: float
    rhs: float
    ok: bool


def shortest_nonzero_l1(basis, budget=DEFAULT_BUDGET):
    """l1-norm shortest nonzero vector of the lattice spanned by ``basis`` columns.

    The l1 norm is the polar of the sup norm, so this is the matching length on a dual lattice.
    """
    red = lll_reduce(basis)
    Bp = red.basis
    d = Bp.shape[0]
    R = float(np.min(np.abs(Bp).sum(axis=0)))
    # |k_i| <= max_j |Binv_ij| * ||v||_1
    reach = np.floor(np.abs(np.linalg.inv(Bp)).max(axis=1) * R * (1 + 1e-12) + 1e-9).astype(np.int64)
    count = float(np.prod((2 * reach + 1).astype(float)))
    if count > budget:
        raise BudgetExceededError(f"enumeration box holds {count:.3g} coefficient vectors (budget {budget})")
    axes = [np.arange(-r, r + 1) for r in reach]
    K = np.stack([gr.ravel() for gr in np.meshgrid(*axes, indexing="ij")], axis=1)
    K = K[np.any(K != 0, axis=1)]
    best_val, best_k = math.inf, None
    for start in range(0, len(K), _CHUNK):
        Kc = K[start : start + _CHUNK]
        vals = np.abs(Kc @ Bp.T).sum(axis=1)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_k = float(vals[i]), Kc[i]
    coeffs = np.array([int(x) for x in red.transform.dot(best_k.astype(object))], dtype=np.int64)
    return best_val, coeffs


def mahler_check(g, slack=1e-9, budget=DEFAULT_BUDGET):
    """Check ``1 <= lambda_1(dual) * lambda_d(g) <= d!``.

    ``lambda_d`` uses the sup norm and ``lambda_1`` of the dual uses its polar, the l1 norm.
    With the sup norm on both sides the lower bound can fail (a 45 degree rotation of Z^2 gives 1/2).
    """
    if g.d > 6:
        raise DomainError("Mahler check is limited to d <= 6")
    lam1_dual, _ = shortest_nonzero_l1(dual_lattice(g).basis, budget)
    lam_d = successive_minima(g, budget).lambdas[-1]
    lhs = float(lam1_dual * lam_d)
    rhs = float(math.factorial(g.d))
    return MahlerResult(lhs, rhs, bool(1 - slack <= lhs <= rhs + slack))
