"""Overflow-safe special functions.

Everything hypergeometric is returned as a :class:`LogScaled` value.  At the
quarterly maturity the Kummer argument is z ~ 86, so 1F1 ~ e^86 while the
prefactor it multiplies is ~ e^-86; only the product in log space is usable.

The Gamma/digamma/Bessel primitives are thin, domain-checked wrappers around
``scipy.special``.  The hypergeometric series and the parameter derivatives
of 1F1 are summed here directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import special as sc

from .exceptions import ConvergenceError, DomainError

__all__ = [
    "LogScaled",
    "HypSeriesCtrl",
    "DEFAULT_CTRL",
    "ASYMPTOTIC_Z",
    "log_sum",
    "ln_gamma",
    "digamma",
    "bessel_i_log",
    "pochhammer_log",
    "hyp1f1_log",
    "hyp2f2_log",
    "hyp1f1_da",
    "hyp1f1_db",
    "hyp1f1_param_derivs",
    "hyp1f1_mixed_dz",
    "whittaker_m_log",
]

# Beyond this argument 1F1 switches to its large-z expansion.
ASYMPTOTIC_Z = 500.0


@dataclass(frozen=True)
class LogScaled:
    """A real number stored as ``sign * exp(log_mag)``.

    ``approx`` marks values produced by a truncated asymptotic expansion
    whose last retained term exceeded the requested tolerance.
    """

    sign: int
    log_mag: float
    approx: bool = False

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign!r}")

    @classmethod
    def from_real(cls, x: float) -> "LogScaled":
        if x == 0:
            return ZERO
        if not math.isfinite(x):
            raise DomainError(f"cannot log-scale non-finite value {x!r}")
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, log_mag: float, sign: int = 1) -> "LogScaled":
        if sign == 0 or log_mag == -math.inf:
            return ZERO
        return cls(sign, float(log_mag))

    def to_real(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_mag)

    __float__ = to_real

    def log(self) -> float:
        """Natural log of the (positive) value."""
        if self.sign <= 0:
            raise DomainError("log of a non-positive LogScaled value")
        return self.log_mag

    def _coerce(self, other) -> "LogScaled":
        if isinstance(other, LogScaled):
            return other
        return LogScaled.from_real(float(other))

    def __mul__(self, other):
        other = self._coerce(other)
        if self.sign == 0 or other.sign == 0:
            return ZERO
        return LogScaled(self.sign * other.sign, self.log_mag + other.log_mag,
                         self.approx or other.approx)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogScaled value")
        if self.sign == 0:
            return ZERO
        return LogScaled(self.sign * other.sign, self.log_mag - other.log_mag,
                         self.approx or other.approx)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __neg__(self):
        return LogScaled(-self.sign, self.log_mag, self.approx)

    def __add__(self, other):
        return log_sum((self, self._coerce(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return log_sum((self, -self._coerce(other)))

    def __rsub__(self, other):
        return log_sum((self._coerce(other), -self))

    def __pow__(self, p: float):
        if self.sign < 0:
            raise DomainError("real power of a negative LogScaled value")
        if self.sign == 0:
            if p > 0:
                return ZERO
            raise ZeroDivisionError("non-positive power of zero")
        return LogScaled(1, self.log_mag * p, self.approx)

    def __repr__(self):
        flag = ", approx" if self.approx else ""
        return f"LogScaled({self.sign:+d}, {self.log_mag!r}{flag})"


ZERO = LogScaled(0, -math.inf)
ONE = LogScaled(1, 0.0)


def log_sum(values: Iterable[LogScaled]) -> LogScaled:
    """Signed log-sum-exp.

    Positive and negative parts are accumulated separately (each with a
    compensated sum around its own maximum) and subtracted once.
    """
    pos, neg = [], []
    approx = False
    for v in values:
        approx = approx or v.approx
        if v.sign > 0:
            pos.append(v.log_mag)
        elif v.sign < 0:
            neg.append(v.log_mag)
    lp = _lse(pos)
    ln = _lse(neg)
    if lp == -math.inf and ln == -math.inf:
        return ZERO
    if ln == -math.inf:
        return LogScaled(1, lp, approx)
    if lp == -math.inf:
        return LogScaled(-1, ln, approx)
    if lp == ln:
        return ZERO
    if lp > ln:
        return LogScaled(1, lp + math.log1p(-math.exp(ln - lp)), approx)
    return LogScaled(-1, ln + math.log1p(-math.exp(lp - ln)), approx)


def _lse(logs) -> float:
    if not logs:
        return -math.inf
    mx = max(logs)
    if mx == -math.inf:
        return mx
    return mx + math.log(math.fsum(math.exp(x - mx) for x in logs))


@dataclass(frozen=True)
class HypSeriesCtrl:
    """Truncation control for positive-term hypergeometric series.

    A series stops once ``consecutive_small`` successive terms are each
    below ``rel_tol`` times the running partial sum.
    """

    max_terms: int = 10_000
    rel_tol: float = 1e-14
    consecutive_small: int = 3

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.consecutive_small < 2:
            raise ValueError("consecutive_small must be >= 2")


DEFAULT_CTRL = HypSeriesCtrl()


def _is_nonpos_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


# ---------------------------------------------------------------------------
# Gamma family and Bessel


def ln_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return float(sc.gammaln(x))


def digamma(x: float) -> float:
    """psi(x) = Gamma'(x)/Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"digamma requires x > 0, got {x!r}")
    return float(sc.psi(x))


def bessel_i_log(nu: float, x: float, ctrl: HypSeriesCtrl = DEFAULT_CTRL) -> LogScaled:
    """Modified Bessel function of the first kind, I_nu(x), log-scaled.

    Uses the exponentially scaled ``ive`` and adds ``x`` back in log space.
    When ``ive`` underflows (tiny ``x`` with large ``nu``) the ascending
    0F1 series is summed in log space instead.

    Orders in (-1, 0) are accepted (I_nu stays positive there) and negative
    integers map to I_{-n} = I_n.  Other negative orders raise DomainError.
    """
    if nu < 0 and float(nu).is_integer():
        nu = -nu
    if not nu > -1:
        raise DomainError(f"bessel_i_log requires nu > -1 or an integer order, got {nu!r}")
    if x < 0:
        raise DomainError(f"bessel_i_log requires x >= 0, got {x!r}")
    if x == 0:
        return ONE if nu == 0 else ZERO
    lead = nu * math.log(x / 2) - float(sc.gammaln(nu + 1))
    if x < 2:
        # log1p keeps relative accuracy in log I when I is close to its lead term
        q = x * x / 4
        t, tail = 1.0, []
        for k in range(1, 200):
            t *= q / (k * (nu + k))
            tail.append(t)
            if t < 1e-18:
                break
        return LogScaled(1, lead + math.log1p(math.fsum(tail)))
    scaled = float(sc.ive(nu, x))
    if scaled > 0 and math.isfinite(scaled):
        return LogScaled(1, math.log(scaled) + x)
    return LogScaled(1, lead) * _pfq_log((), (nu + 1.0,), x * x / 4, ctrl)


def pochhammer_log(a: float, n: int) -> LogScaled:
    """Rising factorial (a)_n = a (a+1) ... (a+n-1)."""
    if n < 0 or int(n) != n:
        raise DomainError(f"pochhammer_log requires integer n >= 0, got {n!r}")
    if n == 0:
        return ONE
    vals = a + np.arange(int(n), dtype=float)
    if np.any(vals == 0):
        return ZERO
    sign = -1 if np.count_nonzero(vals < 0) % 2 else 1
    return LogScaled(sign, float(np.sum(np.log(np.abs(vals)))))


# ---------------------------------------------------------------------------
# Generalized hypergeometric series


def _check_lower(bs):
    for bj in bs:
        if _is_nonpos_int(bj):
            raise DomainError(f"lower parameter {bj!r} is a non-positive integer")


def _pfq_log(a, b, z: float, ctrl: HypSeriesCtrl = DEFAULT_CTRL) -> LogScaled:
    """Direct pFq series summed in log space.

    Term ratios are formed in one vectorized pass, partial sums checked
    against the stopping rule, and the retained terms summed with ``fsum``
    around their maximum.  The array is doubled until the rule fires.
    """
    _check_lower(b)
    if z == 0:
        return ONE
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    logz = math.log(abs(z))
    zsign = 1.0 if z > 0 else -1.0
    log_tol = math.log(ctrl.rel_tol)
    c = ctrl.consecutive_small
    n = min(256, ctrl.max_terms)
    while True:
        k = np.arange(n - 1, dtype=float)
        with np.errstate(divide="ignore"):
            lr = logz - np.log1p(k)
            sr = np.full(n - 1, zsign)
            for ai in a:
                v = ai + k
                lr += np.log(np.abs(v))
                sr *= np.sign(v)
            for bj in b:
                v = bj + k
                lr -= np.log(np.abs(v))
                sr *= np.sign(v)
        lt = np.concatenate(([0.0], np.cumsum(lr)))
        st = np.concatenate(([1.0], np.cumprod(sr)))
        shift = float(np.max(lt))
        w = st * np.exp(lt - shift)
        partial = np.cumsum(w)
        with np.errstate(divide="ignore"):
            log_partial = np.log(np.abs(partial)) + shift
        small = (lt < log_tol + log_partial) | (st == 0)
        small[0] = False
        if n >= c:
            runs = np.convolve(small.astype(np.int64), np.ones(c, dtype=np.int64), "valid")
            hits = np.flatnonzero(runs == c)
        else:
            hits = np.empty(0, dtype=np.int64)
        if hits.size:
            stop = int(hits[0]) + c
            total = math.fsum(w[:stop].tolist())
            if total == 0:
                return ZERO
            return LogScaled(1 if total > 0 else -1, math.log(abs(total)) + shift)
        if n >= ctrl.max_terms:
            raise ConvergenceError(
                f"pFq series with a={a.tolist()}, b={b.tolist()}, z={z!r} "
                f"did not converge in {ctrl.max_terms} terms"
            )
        n = min(2 * n, ctrl.max_terms)


def hyp2f2_log(a1: float, a2: float, b1: float, b2: float, z: float,
               ctrl: HypSeriesCtrl = DEFAULT_CTRL) -> LogScaled:
    """2F2(a1, a2; b1, b2; z) by direct series."""
    return _pfq_log((a1, a2), (b1, b2), z, ctrl)


def _kummer_asymptotic(a, b, z, ctrl):
    """Large-z expansion of 1F1 with its a- and b-derivative sums.

    Returns ``(F, dlogF_da, dlogF_db)`` where ``F`` is log-scaled.  The
    recessive e^0 branch is dropped (relative size e^-z).
    """
    # Poincare sum S = sum_s (b-a)_s (1-a)_s / (s! z^s), carried with its
    # a- and b-derivatives in forward mode.
    t, ta, tb = 1.0, 0.0, 0.0
    s_val, s_a, s_b = 1.0, 0.0, 0.0
    last = 1.0
    for s in range(ctrl.max_terms):
        u = b - a + s
        v = 1 - a + s
        q = (s + 1) * z
        r = u * v / q
        ra = -(u + v) / q
        rb = v / q
        t, ta, tb = t * r, ta * r + t * ra, tb * r + t * rb
        if abs(t) > abs(last) and s > 0:
            break  # asymptotic series started to diverge
        s_val += t
        s_a += ta
        s_b += tb
        last = t
        if abs(t) < ctrl.rel_tol * abs(s_val) and abs(ta) < ctrl.rel_tol * max(abs(s_a), 1.0) \
                and abs(tb) < ctrl.rel_tol * max(abs(s_b), 1.0):
            break
    approx = abs(last) > ctrl.rel_tol
    gsign = float(sc.gammasgn(b) * sc.gammasgn(a))
    log_lead = float(sc.gammaln(b) - sc.gammaln(a)) + z + (a - b) * math.log(z)
    F = LogScaled(int(gsign) * (1 if s_val > 0 else -1), log_lead + math.log(abs(s_val)), approx)
    dA = -float(sc.psi(a)) + math.log(z) + s_a / s_val
    dB = float(sc.psi(b)) - math.log(z) + s_b / s_val
    return F, dA, dB


def _use_asymptotic(a, z):
    return z > ASYMPTOTIC_Z and not _is_nonpos_int(a)


def hyp1f1_log(a: float, b: float, z: float, ctrl: HypSeriesCtrl = DEFAULT_CTRL) -> LogScaled:
    """Kummer's confluent hypergeometric function 1F1(a; b; z), log-scaled.

    For z <= 500 this is the defining series.  Beyond that the large-z
    expansion is used; the result carries ``approx=True`` when that
    expansion could not reach ``ctrl.rel_tol``.  Negative z is summed
    directly and loses digits to cancellation for large |z|.
    """
    _check_lower((b,))
    if z == 0:
        return ONE
    if _use_asymptotic(a, z):
        return _kummer_asymptotic(a, b, z, ctrl)[0]
    return _pfq_log((a,), (b,), z, ctrl)


def whittaker_m_log(k: float, mu: float, z: float, ctrl: HypSeriesCtrl = DEFAULT_CTRL) -> LogScaled:
    """Whittaker M_{k,mu}(z) = e^{-z/2} z^{1/2+mu} 1F1(1/2+mu-k; 1+2mu; z), z > 0."""
    if not z > 0:
        raise DomainError("whittaker_m_log requires z > 0")
    pref = LogScaled(1, -z / 2 + (0.5 + mu) * math.log(z))
    return pref * hyp1f1_log(0.5 + mu - k, 1 + 2 * mu, z, ctrl)


# ---------------------------------------------------------------------------
# Parameter derivatives of 1F1 (double series)


class _Running:
    """Series accumulator applying the consecutive-small stopping rule."""

    __slots__ = ("terms", "total", "run", "done")

    def __init__(self):
        self.terms = []
        self.total = ZERO
        self.run = 0
        self.done = False

    def push(self, term: LogScaled, ctrl: HypSeriesCtrl):
        self.terms.append(term)
        self.total = self.total + term
        if len(self.terms) == 1:
            return
        small = term.sign == 0 or (
            self.total.sign != 0 and term.log_mag < math.log(ctrl.rel_tol) + self.total.log_mag
        )
        self.run = self.run + 1 if small else 0
        if self.run >= ctrl.consecutive_small:
            self.done = True

    def value(self) -> LogScaled:
        return log_sum(self.terms)


def _ag_sums(a, b, z, ctrl, with_dz=False):
    """Outer sums of the Ancarani-Gasaneo representation.

    With c^G_m = (a)_m (1)_m / ((b+1)_m (2)_m) and
    c^H_m = (a+1)_m (b)_m (1)_m / ((b+1)_m^2 (2)_m), and
    P_m = 2F2(1, a+1+m; 2+m, b+1+m; z), returns the sums

    ``G0 = sum c^G_m z^m/m! P_m``     ``H0`` likewise with c^H,
    and, when ``with_dz``, ``G1 = sum c^G_m m z^(m-1)/m! P_m`` and
    ``G2 = sum c^G_m z^m/m! dP_m/dz`` (same for H).
    """
    keys = ("G0", "H0") + (("G1", "H1", "G2", "H2") if with_dz else ())
    acc = {key: _Running() for key in keys}
    logz = math.log(z)
    cG = ONE
    cH = ONE
    for m in range(ctrl.max_terms):
        P = _pfq_log((1.0, a + 1 + m), (2.0 + m, b + 1 + m), z, ctrl)
        acc["G0"].push(cG * P, ctrl)
        acc["H0"].push(cH * P, ctrl)
        if with_dz:
            if m == 0:
                acc["G1"].push(ZERO, ctrl)
                acc["H1"].push(ZERO, ctrl)
            else:
                mz = LogScaled(1, math.log(m) - logz)
                acc["G1"].push(cG * P * mz, ctrl)
                acc["H1"].push(cH * P * mz, ctrl)
            dP = LogScaled.from_real((a + 1 + m) / ((2 + m) * (b + 1 + m))) * _pfq_log(
                (2.0, a + 2 + m), (3.0 + m, b + 2 + m), z, ctrl
            )
            acc["G2"].push(cG * dP, ctrl)
            acc["H2"].push(cH * dP, ctrl)
        if all(r.done for r in acc.values()):
            return {key: r.value() for key, r in acc.items()}
        step = LogScaled(1, logz - math.log(m + 1))
        cG = cG * step * LogScaled.from_real((a + m) * (1 + m) / ((b + 1 + m) * (2 + m)))
        cH = cH * step * LogScaled.from_real(
            (a + 1 + m) * (b + m) * (1 + m) / ((b + 1 + m) ** 2 * (2 + m))
        )
    raise ConvergenceError(
        f"parameter-derivative double series for 1F1({a!r}; {b!r}; {z!r}) "
        f"did not converge in {ctrl.max_terms} outer terms"
    )


def hyp1f1_param_derivs(a: float, b: float, z: float,
                        ctrl: HypSeriesCtrl = DEFAULT_CTRL) -> tuple[LogScaled, LogScaled]:
    """Return ``(dF/da, dF/db)`` for F = 1F1(a; b; z).

    The two derivatives share the inner 2F2 evaluations, so computing them
    together halves the work compared to separate calls.
    """
    _check_lower((b,))
    if z == 0:
        return ZERO, ZERO
    if z < 0:
        raise DomainError("parameter derivatives are implemented for z >= 0 only")
    if _use_asymptotic(a, z):
        F, dA, dB = _kummer_asymptotic(a, b, z, ctrl)
        return F * dA, F * dB
    sums = _ag_sums(a, b, z, ctrl)
    g1 = LogScaled.from_real(z / b) * sums["G0"]
    h1 = LogScaled.from_real(-z * a / b ** 2) * sums["H0"]
    return g1, h1


def hyp1f1_da(a: float, b: float, z: float, ctrl: HypSeriesCtrl = DEFAULT_CTRL) -> LogScaled:
    """G1(a, b; z) = d 1F1(a; b; z) / da."""
    return hyp1f1_param_derivs(a, b, z, ctrl)[0]


def hyp1f1_db(a: float, b: float, z: float, ctrl: HypSeriesCtrl = DEFAULT_CTRL) -> LogScaled:
    """H1(a, b; z) = d 1F1(a; b; z) / db."""
    return hyp1f1_param_derivs(a, b, z, ctrl)[1]


def hyp1f1_mixed_dz(a: float, b: float, z: float,
                    ctrl: HypSeriesCtrl = DEFAULT_CTRL) -> tuple[LogScaled, LogScaled]:
    """z-derivatives of G1 and H1, i.e. ``(d2F/da dz, d2F/db dz)``.

    Differentiates the double series term by term (this is what the delta
    formula needs).  Above the asymptotic threshold the contiguity relation
    dF/dz = (a/b) 1F1(a+1; b+1; z) is differentiated in a and b instead.
    """
    _check_lower((b,))
    if z < 0:
        raise DomainError("mixed derivatives are implemented for z >= 0 only")
    if z == 0 or _use_asymptotic(a, z):
        F1 = hyp1f1_log(a + 1, b + 1, z, ctrl)
        G1s, H1s = hyp1f1_param_derivs(a + 1, b + 1, z, ctrl)
        ga = F1 / b + G1s * (a / b)
        hb = F1 * (-a / b ** 2) + H1s * (a / b)
        return ga, hb
    s = _ag_sums(a, b, z, ctrl, with_dz=True)
    zl = LogScaled.from_real(z)
    ga = (s["G0"] + zl * s["G1"] + zl * s["G2"]) / b
    hb = (s["H0"] + zl * s["H1"] + zl * s["H2"]) * (-a / b ** 2)
    return ga, hb
