"""Full (permutation-summed) likelihood of rank-frequency data.

The likelihood of observed counts ``n_1 >= ... >= n_W`` is the permanent of
``A[i, j] = p_j ** n_i`` (rows: empirical ranks, columns: probability ranks).
Entries underflow long before the permanent becomes uninteresting, so all
matrices here hold *log* entries (``-inf`` for an exact zero) and results come
back as :class:`SignedLogValue`.
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._optimize import grid_then_golden
from .classical import EstimateResult, Method
from .errors import DegenerateInput, DomainError, SizeCap
from .models import ZipfMandelbrotModel, ZipfModel, rank_probabilities
from .special import check_w, normalizer

NAIVE_MAX = 9
RYSER_MAX = 26
MLE_BRACKET = (0.0001, 6.0)
MLE_TOLERANCE = 1e-4


@dataclass(frozen=True)
class SignedLogValue:
    """The real number ``sign * exp(log_magnitude)``."""

    sign: int
    log_magnitude: float = -math.inf

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or 1")
        if self.sign == 0:
            object.__setattr__(self, "log_magnitude", -math.inf)

    @classmethod
    def from_float(cls, x):
        if x == 0:
            return cls(0)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @property
    def value(self):
        return self.sign * math.exp(self.log_magnitude) if self.sign else 0.0

    def __float__(self):
        return self.value

    def __neg__(self):
        return SignedLogValue(-self.sign, self.log_magnitude)

    def __mul__(self, other):
        if not isinstance(other, SignedLogValue):
            other = SignedLogValue.from_float(other)
        if self.sign == 0 or other.sign == 0:
            return SignedLogValue(0)
        return SignedLogValue(self.sign * other.sign, self.log_magnitude + other.log_magnitude)

    def __add__(self, other):
        if not isinstance(other, SignedLogValue):
            other = SignedLogValue.from_float(other)
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log_magnitude >= other.log_magnitude else (other, self)
        delta = lo.log_magnitude - hi.log_magnitude
        if hi.sign == lo.sign:
            return SignedLogValue(hi.sign, hi.log_magnitude + math.log1p(math.exp(delta)))
        if delta == 0.0:
            return SignedLogValue(0)
        return SignedLogValue(hi.sign, hi.log_magnitude + math.log1p(-math.exp(delta)))

    def __sub__(self, other):
        if not isinstance(other, SignedLogValue):
            other = SignedLogValue.from_float(other)
        return self + (-other)


def _logsumexp(x):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        return -math.inf
    m = float(np.max(x))
    if m == -math.inf:
        return -math.inf
    return m + math.log(float(np.sum(np.exp(x - m))))


def _signed_difference(log_pos, log_neg):
    pos = SignedLogValue(1, log_pos) if log_pos > -math.inf else SignedLogValue(0)
    neg = SignedLogValue(-1, log_neg) if log_neg > -math.inf else SignedLogValue(0)
    return pos + neg


def likelihood_matrix(lam, counts, w, q=0.0):
    """Log entries ``n_i * ln p_j`` of the w x w likelihood matrix.

    Counts are zero-padded to length ``w``; padded rows are all zeros (p^0 = 1).
    """
    w = check_w(w)
    if counts.w_obs > w:
        raise DomainError(f"{counts.w_obs} observed events exceed w={w}")
    n = np.zeros(w)
    n[: counts.w_obs] = counts.counts
    model = ZipfModel(lam, w) if q == 0 else ZipfMandelbrotModel(lam, q, w)
    return np.outer(n, np.log(rank_probabilities(model)))


def _square(m):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix of log entries, got shape {m.shape}")
    if np.any(np.isnan(m)) or np.any(m == math.inf):
        raise ValueError("log entries must be finite or -inf")
    return m


@lru_cache(maxsize=NAIVE_MAX + 1)
def _permutations(w):
    perms = np.array(list(itertools.permutations(range(w))), dtype=np.int8)
    perms.setflags(write=False)
    return perms


def permanent_naive(log_matrix):
    """Permanent by enumerating all W! permutations (W <= 9); reference oracle."""
    m = _square(log_matrix)
    w = m.shape[0]
    if w > NAIVE_MAX:
        raise SizeCap(f"naive permanent limited to W <= {NAIVE_MAX}, got {w}")
    perms = _permutations(w)
    terms = m[np.arange(w), perms].sum(axis=1)
    total = _logsumexp(terms)
    return SignedLogValue(0) if total == -math.inf else SignedLogValue(1, total)


def _logsumexp_axis(x, axis):
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(x - m), axis=axis))


def _balance(m, tol=1e-2, max_iterations=20_000):
    """Sinkhorn-scale log entries towards a doubly stochastic matrix.

    Returns the scaled log matrix and the log of the factor removed, so that
    per(A) = exp(offset) * per(scaled).  Likelihood matrices balance towards
    a near-permutation and converge slowly, so iteration continues until row
    sums are within ``tol`` (in log) of one.  Only the column scaling affects
    the cancellation in Ryser's formula; its accuracy is not needed beyond
    a small factor.
    """
    rows = np.zeros(m.shape[0])
    cols = np.zeros(m.shape[1])
    for it in range(max_iterations):
        rows = -_logsumexp_axis(m + cols[None, :], axis=1)
        cols = -_logsumexp_axis(m + rows[:, None], axis=0)
        if it % 8 == 7:
            err = np.abs(_logsumexp_axis(m + cols[None, :], axis=1) + rows)
            if float(err.max()) < tol:
                break
    return m + rows[:, None] + cols[None, :], -float(rows.sum() + cols.sum())


def _subset_sums(cols):
    """Row sums over every subset of the given columns (positive additions only).

    ``cols`` has shape (W, k); returns (2**k, W) with entry [mask, i] equal to
    the sum of cols[i, j] over the bits j set in mask, plus popcount parity.
    """
    w, k = cols.shape
    sums = np.zeros((1 << k, w), dtype=cols.dtype)
    parity = np.zeros(1 << k, dtype=np.int8)
    for b in range(k):
        half = 1 << b
        sums[half: 2 * half] = sums[:half] + cols[:, b]
        parity[half: 2 * half] = 1 - parity[:half]
    return sums, parity


def permanent_ryser(log_matrix, return_diagnostics=False):
    """Permanent via Ryser's inclusion-exclusion formula (W <= 26).

    per(A) = (-1)^W sum_{S} (-1)^{|S|} prod_i sum_{j in S} A_ij.

    The matrix is first Sinkhorn-balanced in log space (a scaling that changes
    the permanent by a known factor) so no row or column dominates.  Subsets
    are split into a low and a high block of columns whose subset-sum tables
    are built by additions only; per-subset products are taken in log space
    and the alternating sum is accumulated in extended precision.  The
    diagnostic ``cancellation_nats`` is ln(sum |terms|) - ln|per|.
    """
    m = _square(log_matrix)
    w = m.shape[0]
    if w > RYSER_MAX:
        raise SizeCap(f"Ryser permanent limited to W <= {RYSER_MAX}, got {w}")
    if np.any(m.max(axis=1) == -math.inf) or np.any(m.max(axis=0) == -math.inf):
        result = SignedLogValue(0)
        return (result, {"cancellation_nats": 0.0}) if return_diagnostics else result
    balanced, offset = _balance(m)
    rowmax = balanced.max(axis=1)
    offset += float(rowmax.sum())
    scaled = np.exp((balanced - rowmax[:, None]).astype(np.longdouble))

    k_low = min(w, 14)
    low, low_par = _subset_sums(scaled[:, :k_low])
    high, high_par = _subset_sums(scaled[:, k_low:])
    low_sign = np.where((low_par + w) % 2 == 0, 1.0, -1.0).astype(np.longdouble)

    block_max = np.empty(high.shape[0], dtype=np.longdouble)
    block_sum = np.empty(high.shape[0], dtype=np.longdouble)
    block_abs = np.empty(high.shape[0], dtype=np.longdouble)
    with np.errstate(divide="ignore", invalid="ignore"):
        for h in range(high.shape[0]):
            logs = np.log(low + high[h]).sum(axis=1)
            top = logs.max()
            top = top if np.isfinite(top) else 0.0
            mags = np.exp(logs - top)
            sign = -low_sign if high_par[h] else low_sign
            block_max[h] = top
            block_sum[h] = np.sum(sign * mags)
            block_abs[h] = np.sum(mags)
    ref = block_max.max()
    scale = np.exp((block_max - ref).astype(np.longdouble))
    total = np.sum(scale * block_sum)
    total_abs = np.sum(scale * block_abs)
    if total == 0:
        result = SignedLogValue(0)
        cancel = math.inf
    else:
        log_total = float(np.log(np.abs(total)))
        result = SignedLogValue(1 if total > 0 else -1, float(log_total + ref + offset))
        cancel = float(np.log(total_abs)) - log_total
    if not return_diagnostics:
        return result
    return result, {"cancellation_nats": cancel}


def full_loglik(lam, counts, w):
    """Log of the full likelihood, summed over all rank mappings.

    The padded matrix over-counts by (w - w_obs)! (permutations among the
    unobserved events); that constant is removed so values are comparable
    across ``w``.
    """
    per = permanent_ryser(likelihood_matrix(lam, counts, w))
    return per.log_magnitude - math.lgamma(check_w(w) - counts.w_obs + 1)


def full_likelihood_derivative(lam, counts, w):
    """d/dlam of the full likelihood as a SignedLogValue (enumeration, W <= 9)."""
    w = check_w(w)
    if w > NAIVE_MAX:
        raise SizeCap(f"likelihood derivative limited to W <= {NAIVE_MAX}, got {w}")
    logm = likelihood_matrix(lam, counts, w)
    perms = _permutations(w)
    rows = np.arange(w)
    log_terms = logm[rows, perms].sum(axis=1)
    n = np.zeros(w)
    n[: counts.w_obs] = counts.counts
    log_rank = np.log(np.arange(1, w + 1, dtype=np.float64))
    z = normalizer(lam, w)
    # d/dlam prod_r p_r^{n(s(r))} = -(N Z'/Z + sum_r n(s(r)) ln r) * prod
    factor = -(counts.n_total * z.log_derivative + (n[:, None] * log_rank[perms.T]).sum(axis=0))
    with np.errstate(divide="ignore"):
        logs = log_terms + np.log(np.abs(factor))
    log_pos = _logsumexp(logs[factor > 0])
    log_neg = _logsumexp(logs[factor < 0])
    result = _signed_difference(log_pos, log_neg)
    if result.sign == 0:
        return result
    return SignedLogValue(result.sign, result.log_magnitude - math.lgamma(w - counts.w_obs + 1))


def full_loglik_derivative(lam, counts, w):
    """d/dlam of the full likelihood (not its log), as a float."""
    return full_likelihood_derivative(lam, counts, w).value


def full_mle(counts, w, n_grid=61):
    """Exponent maximizing the full likelihood over [0.0001, 6]."""
    w = check_w(w)
    if w > RYSER_MAX:
        raise SizeCap(f"exact method limited to W <= {RYSER_MAX}, got {w}")
    lo, hi = MLE_BRACKET
    if w == 1:
        diagnostics = {"loglik": 0.0, "evaluations": 0, "tolerance": MLE_TOLERANCE,
                       "at_bracket_edge": True, "flat": True}
        return EstimateResult(lo, Method.EXACT_FULL, diagnostics)
    if counts.w_obs < 2:
        raise DegenerateInput("a single observed event puts the optimum at the bracket edge")

    def objective(lam):
        return full_loglik(lam, counts, w)

    lam_hat, ll, evals = grid_then_golden(objective, lo, hi, MLE_TOLERANCE, n_grid)
    edge = min(lam_hat - lo, hi - lam_hat) < 10 * MLE_TOLERANCE
    diagnostics = {"loglik": ll, "evaluations": evals, "tolerance": MLE_TOLERANCE,
                   "at_bracket_edge": bool(edge)}
    return EstimateResult(lam_hat, Method.EXACT_FULL, diagnostics)
