"""Rate functions and the quantities derived from them.

A rate function is a positive, nonincreasing ``psi`` on ``[T0, inf)``. Two
families are supported: the closed form ``q^-a (log q)^e`` and a tabulated
function interpolated log-linearly between knots. Everything downstream
(generalized inverse, transference dual, the flow-time profile ``z``, series
classification) works in log coordinates to stay finite for very large ``T``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_positive_int, check_real
from .exceptions import DomainError, SolverError, UnboundedInverseError

Z_TOL = 1e-10
Z_MAX_ITER = 200
UNDECIDED_BAND = (0.9, 1.1)
CONDENSATION_BLOCKS = 40


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


class PsiFunction:
    """Base class. Subclasses implement :meth:`log_psi_at_log` and :meth:`log_inverse`."""

    T0: float

    @property
    def log_T0(self):
        return math.log(self.T0)

    @property
    def psi_T0(self):
        return math.exp(self.log_psi_at_log(self.log_T0))

    def log_psi_at_log(self, lam):
        raise NotImplementedError

    def log_inverse(self, log_u):
        raise NotImplementedError

    def _check_domain_log(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam < self.log_T0 - 1e-12) or np.any(np.isnan(lam)):
            raise DomainError(f"psi is only defined on [T0, inf) with T0 = {self.T0}")
        return np.maximum(lam, self.log_T0)

    def __call__(self, T):
        T = np.asarray(T, dtype=float)
        if np.any(T <= 0):
            raise DomainError(f"psi is only defined on [T0, inf) with T0 = {self.T0}")
        out = np.exp(self.log_psi_at_log(np.log(T)))
        return _scalar_or_array(out, T)

    def inverse(self, u):
        """Generalized inverse ``sup{T >= T0 : psi(T) >= u}``."""
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0):
            raise DomainError("inverse_psi needs u > 0")
        out = np.exp(self.log_inverse(np.log(u)))
        return _scalar_or_array(out, u)

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLog(PsiFunction):
    """``psi(T) = T^-a (log T)^e`` on ``[T0, inf)``.

    ``T0`` defaults to ``max(2, exp(e/a))``, the smallest start past which the
    closed form is nonincreasing. ``a = 0`` is allowed only with ``e = 0``
    (the constant function 1).
    """

    a: float
    e: float = 0.0
    T0: float = None

    def __post_init__(self):
        a = check_real(self.a, "a", low=0.0)
        e = check_real(self.e, "e", low=0.0)
        if a == 0.0 and e != 0.0:
            raise DomainError("a = 0 requires e = 0 (psi would be increasing)")
        T0 = self.T0
        if T0 is None:
            T0 = max(2.0, math.exp(e / a)) if a > 0 else 2.0
        T0 = check_real(T0, "T0", low=1.0, low_inclusive=False)
        if e > 0 and math.log(T0) < e / a - 1e-12:
            raise DomainError(
                f"T0 = {T0} is below exp(e/a) = {math.exp(e / a)}; psi would not be monotone"
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "T0", T0)

    def log_psi_at_log(self, lam):
        lam = self._check_domain_log(lam)
        if self.e == 0.0:
            return -self.a * lam
        return -self.a * lam + self.e * np.log(lam)

    def log_inverse(self, log_u):
        log_u = np.asarray(log_u, dtype=float)
        log_psi0 = self.log_psi_at_log(self.log_T0)
        if np.any(log_u > log_psi0 + 1e-12):
            raise DomainError(f"inverse_psi needs u <= psi(T0) = {math.exp(log_psi0)}")
        if self.a == 0.0:
            raise UnboundedInverseError("psi is constant; its inverse is unbounded")
        if self.e == 0.0:
            return np.maximum(-log_u / self.a, self.log_T0)
        # -a*lam + e*log(lam) is strictly decreasing past e/a
        lo = np.full_like(log_u, self.log_T0)
        hi = np.maximum(2.0 * (-log_u / self.a), self.log_T0 + 1.0)
        while True:
            bad = self.log_psi_at_log(hi) > log_u
            if not np.any(bad):
                break
            hi = np.where(bad, 2.0 * hi, hi)
        f = lambda lam: self.log_psi_at_log(lam) - log_u  # noqa: E731
        return bisect_decreasing(f, lo, hi, tol=1e-13, rel=True)

    def to_dict(self):
        return {"family": "powerlog", "a": self.a, "e": self.e, "t0": self.T0}


@dataclass(frozen=True)
class Tabulated(PsiFunction):
    """Tabulated rate function.

    Values between knots are interpolated linearly in ``(log T, log psi)``;
    beyond the last knot the function stays at its last value.
    """

    knots: tuple
    _logT: np.ndarray = field(init=False, repr=False, compare=False)
    _logpsi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        arr = np.asarray(self.knots, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise DomainError("knots must be a sequence of at least two (T, psi) pairs")
        T, psi = arr[:, 0], arr[:, 1]
        if not np.all(np.isfinite(arr)):
            raise DomainError("knots must be finite")
        if T[0] <= 1.0:
            raise DomainError("the first knot must satisfy T > 1")
        if np.any(np.diff(T) <= 0):
            raise DomainError("knot abscissae must be strictly increasing")
        if np.any(psi <= 0):
            raise DomainError("knot values must be positive")
        if np.any(np.diff(psi) > 0):
            raise DomainError("knot values must be nonincreasing")
        object.__setattr__(self, "knots", tuple((float(a), float(b)) for a, b in arr))
        object.__setattr__(self, "_logT", np.log(T))
        object.__setattr__(self, "_logpsi", np.log(psi))

    @property
    def T0(self):
        return self.knots[0][0]

    @property
    def psi_limit(self):
        return self.knots[-1][1]

    def log_psi_at_log(self, lam):
        lam = self._check_domain_log(lam)
        return np.interp(lam, self._logT, self._logpsi)

    def log_inverse(self, log_u):
        log_u = np.asarray(log_u, dtype=float)
        lp, lT = self._logpsi, self._logT
        if np.any(log_u > lp[0] + 1e-12):
            raise DomainError(f"inverse_psi needs u <= psi(T0) = {self.knots[0][1]}")
        if np.any(log_u <= lp[-1]):
            raise UnboundedInverseError(
                f"u <= lim psi = {self.psi_limit}; the generalized inverse is infinite"
            )
        # last knot j with psi_j >= u; then psi_{j+1} < u
        j = np.searchsorted(-lp, -log_u, side="right") - 1
        j = np.clip(j, 0, len(lp) - 2)
        lp_j, lp_k = lp[j], lp[j + 1]
        frac = np.where(lp_j > log_u, (log_u - lp_j) / (lp_k - lp_j), 0.0)
        return lT[j] + frac * (lT[j + 1] - lT[j])

    def to_dict(self):
        return {"family": "table", "knots": [list(k) for k in self.knots]}


def psi_from_dict(data):
    family = data.get("family")
    if family == "powerlog":
        return PowerLog(a=data["a"], e=data.get("e", 0.0), T0=data.get("t0"))
    if family == "table":
        return Tabulated(knots=tuple(map(tuple, data["knots"])))
    raise DomainError(f"unknown psi family {family!r}")


def psi_to_json(psi):
    return json.dumps(psi.to_dict(), sort_keys=True)


def psi_from_json(text):
    return psi_from_dict(json.loads(text))


def parse_psi(text):
    """Parse the command-line form ``powerlog:a,e[,T0]`` or ``table:<file or T/psi;...>``."""
    family, _, params = text.partition(":")
    family = family.strip().lower()
    if family == "powerlog":
        vals = [float(v) for v in params.split(",") if v.strip()]
        if not 1 <= len(vals) <= 3:
            raise DomainError("powerlog expects a[,e[,T0]]")
        a = vals[0]
        e = vals[1] if len(vals) > 1 else 0.0
        T0 = vals[2] if len(vals) > 2 else None
        return PowerLog(a=a, e=e, T0=T0)
    if family == "table":
        path = Path(params)
        if path.suffix == ".json" and path.exists():
            data = json.loads(path.read_text())
            return psi_from_dict(data) if isinstance(data, dict) else Tabulated(tuple(map(tuple, data)))
        knots = [tuple(float(x) for x in pair.split("/")) for pair in params.split(";") if pair]
        return Tabulated(knots=tuple(knots))
    raise DomainError(f"unknown psi family {family!r}")


def bisect_decreasing(f, lo, hi, tol=Z_TOL, max_iter=Z_MAX_ITER, rel=False):
    """Vectorized bisection for the root of a decreasing function on ``[lo, hi]``.

    Assumes ``f(lo) >= 0 >= f(hi)`` elementwise. Stops once every bracket is
    narrower than ``tol`` (relative to ``max(1, |x|)`` when ``rel``).
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(max_iter):
        width = hi - lo
        scale = np.maximum(1.0, np.abs(lo)) if rel else 1.0
        if np.all(width <= tol * scale):
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        exact = fm == 0
        lo = np.where((fm > 0) | exact, mid, lo)
        hi = np.where((fm < 0) | exact, mid, hi)
    else:
        raise SolverError("bisection did not reach the requested tolerance")
    return 0.5 * (lo + hi)


def inverse_psi(psi, u):
    return psi.inverse(u)


def eval_psi(psi, T):
    return psi(T)


def flow_start(psi, m, n):
    """``t0 = m/(m+n) log T0 - n/(m+n) log psi(T0)``."""
    lT0 = psi.log_T0
    return (m * lT0 - n * psi.log_psi_at_log(lT0)) / (m + n)


def flow_time(psi, m, n, T):
    """Flow time ``t`` at which ``a_t`` matches the box ``(psi(T), T)``."""
    lT = np.log(np.asarray(T, dtype=float))
    out = (m * lT - n * psi.log_psi_at_log(lT)) / (m + n)
    return _scalar_or_array(out, T)


def dual_start(psi, m):
    """``S0 = psi(T0)^(-1/m)``."""
    return math.exp(-psi.log_psi_at_log(psi.log_T0) / m)


def log_dual_psi(psi, m, n, log_S):
    log_S = np.asarray(log_S, dtype=float)
    if np.any(log_S < math.log(dual_start(psi, m)) - 1e-12):
        raise DomainError(f"dual psi is defined for S >= S0 = {dual_start(psi, m)}")
    log_u = np.minimum(-m * log_S, psi.log_psi_at_log(psi.log_T0))
    return -psi.log_inverse(log_u) / n


def dual_psi(psi, m, n, S):
    """Transference dual ``(psi^-1(S^-m))^(-1/n)`` on ``[S0, inf)``."""
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    S = np.asarray(S, dtype=float)
    if np.any(S <= 0):
        raise DomainError("S must be positive")
    out = np.exp(log_dual_psi(psi, m, n, np.log(S)))
    return _scalar_or_array(out, S)


def capital_psi_eps(psi, m, n, eps, U):
    """``Psi_eps(U) = eps/d * dual_psi(d U / eps)`` with ``d = m + n``."""
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    eps = check_real(eps, "eps", low=0.0, low_inclusive=False, high=0.5)
    if eps >= 0.5:
        raise DomainError("eps must lie in (0, 1/2)")
    d = m + n
    U = np.asarray(U, dtype=float)
    U_min = eps * dual_start(psi, m) / d
    if np.any(U < U_min * (1 - 1e-12)):
        raise DomainError(f"Psi_eps needs U >= eps*S0/d = {U_min}")
    S = np.maximum(d * U / eps, dual_start(psi, m))
    out = eps / d * dual_psi(psi, m, n, S)
    return _scalar_or_array(out, U)


class ZProfile:
    """The flow-time profile ``z`` of a rate function.

    ``z(t)`` is the unique root of ``psi(e^(t+nz)) = e^(-t+mz)``. Solved in log
    form, ``h(z) = log psi(e^(t+nz)) + t - m z``, which is strictly decreasing
    in ``z`` and bracketed by ``(log T0 - t)/n <= z <= (t + log psi(T0))/m``.
    """

    def __init__(self, psi, m, n, tol=Z_TOL):
        self.psi = psi
        self.m = check_positive_int(m, "m")
        self.n = check_positive_int(n, "n")
        self.tol = tol
        self.t0 = flow_start(psi, self.m, self.n)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t0 - 1e-12) or np.any(~np.isfinite(t)):
            raise DomainError(f"z is defined for t >= t0 = {self.t0}")
        t = np.maximum(t, self.t0)
        m, n, psi = self.m, self.n, self.psi
        lT0 = psi.log_T0
        lpsi0 = psi.log_psi_at_log(lT0)
        lo = (lT0 - t) / n
        hi = np.maximum((t + lpsi0) / m, lo)

        def h(z):
            return psi.log_psi_at_log(np.maximum(t + n * z, lT0)) + t - m * z

        h_lo, h_hi = h(lo), h(hi)
        if np.any(h_lo < -1e-9) or np.any(h_hi > 1e-9) or np.any(np.isnan(h_lo + h_hi)):
            raise SolverError("could not bracket the z-profile root")
        z = bisect_decreasing(h, lo, hi, tol=self.tol)
        return _scalar_or_array(z, t)

    def residual(self, t):
        """``|psi(e^(t+nz)) - e^(-t+mz)| / e^(-t+mz)`` at the computed root."""
        t = np.asarray(t, dtype=float)
        z = np.asarray(self(t))
        lhs = self.psi.log_psi_at_log(t + self.n * z)
        rhs = -t + self.m * z
        return np.abs(np.expm1(lhs - rhs))


def z_profile(psi, m, n, t, tol=Z_TOL):
    return ZProfile(psi, m, n, tol=tol)(t)


class Variant(str, enum.Enum):
    SINGLY = "singly"
    DOUBLY = "doubly"
    JARNIK = "jarnik"


class SeriesStatus(str, enum.Enum):
    CONVERGES = "Converges"
    DIVERGES = "Diverges"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class SeriesSpec:
    psi: PsiFunction
    m: int
    n: int
    s: float
    variant: Variant = Variant.SINGLY
    eps: float = 0.25

    def __post_init__(self):
        check_positive_int(self.m, "m")
        check_positive_int(self.n, "n")
        variant = Variant(self.variant)
        object.__setattr__(self, "variant", variant)
        mn = self.m * self.n
        top = mn + self.m if variant is Variant.DOUBLY else mn
        check_real(self.s, "s", low=0.0, high=top)
        if not 0.0 < self.eps < 0.5:
            raise DomainError("eps must lie in (0, 1/2)")


@dataclass
class SeriesVerdict:
    status: SeriesStatus
    method: str
    exponent: float = None
    log_exponent: float = None
    ratio: float = None
    partial_sums: np.ndarray = None


def _powerlog_exponents(spec):
    """Exponents ``(E, F)`` with summand asymptotic to ``q^E (log q)^F``."""
    psi, m, n, s = spec.psi, spec.m, spec.n, spec.s
    a, e = psi.a, psi.e
    if spec.variant is Variant.JARNIK:
        if a == 0:
            raise DomainError("the Jarnik form needs a > 0")
        sigma = s - n * (m - 1)
        return m + n - 1 - sigma * (1 + m / (a * n)), -e * sigma / (a * n)
    k = m * n - s if spec.variant is Variant.SINGLY else m * n + m - s
    return a - 2 + k * (1 / n + a / m), -e * (1 + k / m)


def log_summand(spec, q):
    """Log of the series term at (real) index ``q``."""
    psi, m, n, s = spec.psi, spec.m, spec.n, spec.s
    lq = np.log(np.asarray(q, dtype=float))
    if spec.variant is Variant.JARNIK:
        sigma = s - n * (m - 1)
        lPsi = np.log(capital_psi_eps(psi, m, n, spec.eps, np.exp(lq)))
        return (m + n - 1) * lq + sigma * (lPsi - lq)
    k = m * n - s if spec.variant is Variant.SINGLY else m * n + m - s
    lp = psi.log_psi_at_log(lq)
    return -lp - 2 * lq + k * (lq / n - lp / m)


def series_start(spec):
    if spec.variant is Variant.JARNIK:
        d = spec.m + spec.n
        return max(1.0, math.ceil(spec.eps * dual_start(spec.psi, spec.m) / d))
    return math.ceil(spec.psi.T0)


def _classify_ratio(ratio):
    lo, hi = UNDECIDED_BAND
    if ratio < lo:
        return SeriesStatus.CONVERGES
    if ratio > hi:
        return SeriesStatus.DIVERGES
    return SeriesStatus.UNDECIDED


def series_classify_numeric(spec, blocks=CONDENSATION_BLOCKS):
    """Cauchy condensation over ``blocks`` dyadic blocks with a growth-ratio test.

    The condensed terms are ``2^k f(2^k)``; their geometric growth rate over
    the last ten blocks decides the verdict, and values in the undecided band
    are reported as such.
    """
    k0 = math.ceil(math.log2(series_start(spec)))
    ks = np.arange(k0, k0 + blocks + 1, dtype=float)
    log_c = ks * math.log(2.0) + log_summand(spec, 2.0**ks)
    ratio = math.exp((log_c[-1] - log_c[-11]) / 10.0)
    partial = np.exp(np.logaddexp.accumulate(log_c))
    return SeriesVerdict(
        status=_classify_ratio(ratio), method="condensation", ratio=ratio, partial_sums=partial
    )


def series_classify(spec, tol=1e-9):
    """Classify convergence of the series attached to ``spec``.

    Closed-form rate functions are classified exactly from the exponents of
    ``q^E (log q)^F``; tabulated ones fall back to numeric condensation.
    """
    if not isinstance(spec.psi, PowerLog):
        return series_classify_numeric(spec)
    E, F = _powerlog_exponents(spec)
    if E < -1 - tol:
        status = SeriesStatus.CONVERGES
    elif E > -1 + tol:
        status = SeriesStatus.DIVERGES
    else:
        status = SeriesStatus.CONVERGES if F < -1 - tol else SeriesStatus.DIVERGES
    return SeriesVerdict(status=status, method="analytic", exponent=E, log_exponent=F)


def flow_series_classify(psi, m, n, s, blocks=CONDENSATION_BLOCKS):
    """Ratio test for ``sum_t exp(-(m+n)(z(t) - (mn-s)/(mn) t))`` over integer ``t``."""
    zp = ZProfile(psi, m, n)
    t = math.ceil(zp.t0) + np.arange(blocks + 1, dtype=float)
    mn = m * n
    log_g = -(m + n) * (zp(t) - (mn - s) / mn * t)
    ratio = math.exp((log_g[-1] - log_g[-11]) / 10.0)
    partial = np.exp(np.logaddexp.accumulate(log_g))
    return SeriesVerdict(
        status=_classify_ratio(ratio), method="flow-ratio", ratio=ratio, partial_sums=partial
    )


class Mode(str, enum.Enum):
    SINGLY = "singly"
    DOUBLY = "doubly"


def dimension_predict(m, n, a, mode=Mode.SINGLY):
    """Hausdorff dimension of the non-improvable set for ``psi = q^-a``, ``0 < a <= 1``."""
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    a = check_real(a, "a", low=0.0, low_inclusive=False, high=1.0)
    mn = m * n
    s_a = mn - mn * (1 - a) / (m + n * a)
    return s_a + m if Mode(mode) is Mode.DOUBLY else s_a


def exponent_dimension(m, n, w, mode=Mode.SINGLY):
    """Dimension of ``{uniform exponent <= w}``, clamped at the full dimension."""
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    w = check_real(w, "w", low=0.0, low_inclusive=False)
    full = m * n + (m if Mode(mode) is Mode.DOUBLY else 0)
    return min(full - (n - m * w) / (1 + w), float(full))
