"""Normalizing constants of (shifted) power laws and their exponent derivatives.

``normalizer(lam, w, q)`` evaluates

    Z(lam) = sum_{r=1}^{w} (r + q)^(-lam)        and        dZ/dlam

for finite ``w`` or ``w = UNBOUNDED``.  With ``q = 0`` and ``w = UNBOUNDED`` this
is the Riemann zeta function; with ``q > 0`` it is the Hurwitz zeta function
``zeta(lam, 1 + q)``.  Nothing here relies on a special-function library: short
sums are added directly and long or infinite ones use the Euler-Maclaurin
formula with an explicit remainder check.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError

UNBOUNDED = math.inf

# finite sums up to this many terms are added directly
DIRECT_SUM_MAX = 100_000
# relative size of the first omitted Euler-Maclaurin correction
_EM_TOL = 1e-16
_EM_MAX_ORDER = 30


@dataclass(frozen=True)
class Normalizer:
    value: float
    derivative: float
    lam: float
    w: float
    q: float = 0.0

    @property
    def log_derivative(self):
        """d ln Z / d lam."""
        return self.derivative / self.value


@lru_cache(maxsize=None)
def _bernoulli_coefficients(kmax):
    """B_{2k} / (2k)! for k = 1..kmax as floats (Akiyama-Tanigawa recurrence)."""
    m = 2 * kmax
    a = [Fraction(0)] * (m + 1)
    b = []
    for i in range(m + 1):
        a[i] = Fraction(1, i + 1)
        for j in range(i, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        b.append(a[0])
    return tuple(float(b[2 * k] / math.factorial(2 * k)) for k in range(1, kmax + 1))


def check_w(w):
    """Validate an event-space size; return it as int or UNBOUNDED."""
    if w is None or w == UNBOUNDED:
        return UNBOUNDED
    if isinstance(w, float) and not w.is_integer():
        raise DomainError(f"event-space size must be an integer, got {w}")
    w = int(w)
    if w < 1:
        raise DomainError(f"event-space size must be >= 1, got {w}")
    return w


def _expm1_over_x(x):
    """(e^x - 1) / x and its x-derivative, accurate near 0."""
    if abs(x) < 1e-3:
        phi = 1.0 + x / 2 + x * x / 6 + x**3 / 24 + x**4 / 120
        dphi = 0.5 + x / 3 + x * x / 8 + x**3 / 30
        return phi, dphi
    ex = math.exp(x)
    return (ex - 1.0) / x, (ex * (x - 1.0) + 1.0) / (x * x)


def _power_integral(s, a, b):
    """Integral of x^(-s) over [a, b] and its s-derivative; b may be infinite."""
    if b == math.inf:
        t = a ** (1.0 - s)
        val = t / (s - 1.0)
        return val, -val * math.log(a) - t / (s - 1.0) ** 2
    t = 1.0 - s
    la = math.log(a)
    span = math.log(b) - la
    at = math.exp(t * la)
    phi, dphi = _expm1_over_x(t * span)
    val = at * span * phi
    d_dt = la * val + at * span * span * dphi
    return val, -d_dt


def _em_corrections(s, a):
    """Bernoulli correction terms of Euler-Maclaurin at abscissa a.

    Returns (C, dC/ds, last) with C = sum_k B_2k/(2k)! * (s)_{2k-1} * a^(-s-2k+1),
    where ``last`` is the magnitude of the first term left out.
    """
    coef = _bernoulli_coefficients(_EM_MAX_ORDER)
    la = math.log(a)
    base = a ** (-s)
    total = 0.0
    dtotal = 0.0
    rising = s   # (s)_m with m = 2k - 1
    drising = 1.0
    for k in range(1, _EM_MAX_ORDER + 1):
        m = 2 * k - 1
        scale = coef[k - 1] * base / a**m
        term = scale * rising
        dterm = scale * (drising - la * rising)
        # (s)_m vanishes at s = 0 while its derivative does not
        if abs(term) <= _EM_TOL * base * a and abs(dterm) <= _EM_TOL * base * a * (1.0 + la):
            return total, dtotal, abs(term)
        total += term
        dtotal += dterm
        for j in (m, m + 1):
            drising = drising * (s + j) + rising
            rising *= s + j
    return total, dtotal, abs(term)


def _head_sums(s, q, count):
    r = np.arange(1, count + 1, dtype=np.float64) + q
    terms = r ** (-s)
    return float(np.sum(terms)), float(-np.sum(terms * np.log(r)))


def _em_sum(s, q, w):
    """Z and Z' for sum_{r=1}^{w} (r+q)^-s, w possibly infinite, via Euler-Maclaurin."""
    head = 16
    while True:
        a = head + q
        head_val, head_der = _head_sums(s, q, head - 1)
        if w == math.inf:
            integral, dintegral = _power_integral(s, a, math.inf)
            corr, dcorr, last = _em_corrections(s, a)
            ends = 0.5 * a ** (-s)
            dends = -math.log(a) * ends
        else:
            b = w + q
            integral, dintegral = _power_integral(s, a, b)
            ca, dca, last_a = _em_corrections(s, a)
            cb, dcb, last_b = _em_corrections(s, b)
            corr, dcorr, last = ca - cb, dca - dcb, max(last_a, last_b)
            ends = 0.5 * (a ** (-s) + b ** (-s))
            dends = -0.5 * (math.log(a) * a ** (-s) + math.log(b) * b ** (-s))
        value = head_val + integral + ends + corr
        if last < 1e-13 * value or head > 4096:
            return value, head_der + dintegral + dends + dcorr
        head *= 2


def normalizer(lam, w=UNBOUNDED, q=0.0):
    """Normalizing constant Z = sum_{r=1}^{w} (r+q)^-lam and dZ/dlam.

    Parameters
    ----------
    lam : float
        Exponent; must exceed 1 when ``w`` is unbounded and be positive otherwise.
    w : int or UNBOUNDED
        Number of possible events.
    q : float
        Non-negative rank shift (Zipf-Mandelbrot); 0 gives the pure power law.

    Returns
    -------
    Normalizer
    """
    lam = float(lam)
    q = float(q)
    w = check_w(w)
    if not math.isfinite(lam):
        raise DomainError(f"exponent must be finite, got {lam}")
    if q < 0 or not math.isfinite(q):
        raise DomainError(f"shift q must be a finite non-negative number, got {q}")
    if w == UNBOUNDED:
        if lam <= 1.0:
            raise DomainError(f"unbounded series diverges for lambda <= 1 (got {lam})")
        value, deriv = _em_sum(lam, q, w)
    else:
        if lam < 0:
            raise DomainError(f"exponent must be non-negative for finite w, got {lam}")
        if w <= DIRECT_SUM_MAX:
            value, deriv = _head_sums(lam, q, w)
        else:
            value, deriv = _em_sum(lam, q, w)
    return Normalizer(value=value, derivative=deriv, lam=lam, w=w, q=q)
