"""Rank-frequency data, power-law models and seeded data generation.

Random streams
--------------
Every sampler takes a ``seed`` that is either an integer or a
``numpy.random.SeedSequence``.  Integers are turned into
``SeedSequence(seed)``; callers that need many independent reproducible
streams (ABC particles, benchmark replicates) derive them with
:func:`stream`, which appends a spawn key to the master seed.  The bit
generator is PCG64, so identical seeds give identical output on every run.
"""

import json
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, EmptyInput
from .special import UNBOUNDED, check_w, normalizer

# table-based sampling is used for finite event spaces up to this size
TABLE_MAX = 10_000_000
# float64 represents every integer below this exactly
_EXACT_INT = 2.0**53


class CountVector:
    """Observed event counts ordered by empirical rank (most frequent first)."""

    __slots__ = ("_counts",)

    def __init__(self, counts):
        arr = np.array(counts, dtype=np.int64).ravel()
        if arr.size == 0:
            raise EmptyInput("a CountVector needs at least one observed event")
        if np.any(arr < 1):
            raise ValueError("counts must all be positive integers")
        if np.any(np.diff(arr) > 0):
            raise ValueError("counts must be sorted non-increasing")
        arr.setflags(write=False)
        self._counts = arr

    @classmethod
    def from_unsorted(cls, counts):
        """Build from positive counts in any order (zeros are dropped)."""
        arr = np.asarray(counts, dtype=np.int64).ravel()
        arr = arr[arr > 0]
        return cls(-np.sort(-arr, kind="stable"))

    @property
    def counts(self):
        return self._counts

    @property
    def n_total(self):
        return int(self._counts.sum())

    @property
    def w_obs(self):
        return int(self._counts.size)

    def __len__(self):
        return self.w_obs

    def __iter__(self):
        return iter(self._counts.tolist())

    def __eq__(self, other):
        if not isinstance(other, CountVector):
            return NotImplemented
        return np.array_equal(self._counts, other._counts)

    def __hash__(self):
        return hash(self._counts.tobytes())

    def __repr__(self):
        head = self._counts[:8].tolist()
        more = ", ..." if self.w_obs > 8 else ""
        return f"CountVector({head}{more}; N={self.n_total}, W_obs={self.w_obs})"

    def to_json(self):
        return json.dumps(self._counts.tolist())

    @classmethod
    def from_json(cls, text):
        return cls(json.loads(text))


def empirical_rank_map(tallies):
    """Turn raw per-event tallies into a CountVector.

    ``tallies`` is a mapping event -> count or an iterable of ``(event, count)``
    pairs.  Ties are broken by first occurrence (stable sort); only the multiset
    of counts matters downstream.
    """
    items = list(tallies.items()) if hasattr(tallies, "items") else list(tallies)
    if not items:
        raise EmptyInput("no event tallies given")
    counts = np.array([c for _, c in items], dtype=np.int64)
    order = np.argsort(-counts, kind="stable")
    return CountVector(counts[order][counts[order] > 0])


def tally(events):
    """CountVector of an iterable of hashable events."""
    return empirical_rank_map(Counter(events))


def read_counts(path):
    """Load a counts file: one integer per line, or a JSON array."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_counts(text)


def parse_counts(text):
    stripped = text.strip()
    if not stripped:
        raise EmptyInput("counts file is empty")
    if stripped.startswith("["):
        return CountVector(json.loads(stripped))
    return CountVector([int(line) for line in stripped.split() if line])


def format_counts(counts, fmt="counts"):
    if fmt == "json":
        return counts.to_json() + "\n"
    return "\n".join(str(c) for c in counts.counts.tolist()) + "\n"


def write_counts(counts, path, fmt="counts"):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_counts(counts, fmt))


@dataclass(frozen=True)
class ZipfModel:
    """p(r) = r^-lam / Z over ranks 1..w."""

    lam: float
    w: float = UNBOUNDED

    def __post_init__(self):
        object.__setattr__(self, "w", check_w(self.w))
        _check_exponent(self.lam, self.w)

    @property
    def q(self):
        return 0.0


@dataclass(frozen=True)
class ZipfMandelbrotModel:
    """p(r) = (r + q)^-lam / Z over ranks 1..w."""

    lam: float
    q: float = 0.0
    w: float = UNBOUNDED

    def __post_init__(self):
        object.__setattr__(self, "w", check_w(self.w))
        _check_exponent(self.lam, self.w)
        if not (math.isfinite(self.q) and self.q >= 0):
            raise DomainError(f"shift q must be non-negative, got {self.q}")


def _check_exponent(lam, w):
    if not math.isfinite(lam):
        raise DomainError(f"exponent must be finite, got {lam}")
    if w == UNBOUNDED and lam <= 1:
        raise DomainError(f"an unbounded power law needs lambda > 1, got {lam}")
    if lam < 0:
        raise DomainError(f"exponent must be non-negative, got {lam}")


def pmf(model, r):
    """Probability of the event with probability rank ``r`` (1-based)."""
    r = int(r)
    if r < 1 or r > model.w:
        raise DomainError(f"rank {r} outside 1..{model.w}")
    z = normalizer(model.lam, model.w, model.q).value
    return (r + model.q) ** (-model.lam) / z


def rank_probabilities(model, size=None):
    """Vector of pmf values for ranks 1..size (defaults to w when finite)."""
    if size is None:
        if model.w == UNBOUNDED:
            raise DomainError("size is required for an unbounded model")
        size = model.w
    if size > model.w:
        raise DomainError(f"size {size} exceeds the event space {model.w}")
    z = normalizer(model.lam, model.w, model.q).value
    r = np.arange(1, size + 1, dtype=np.float64) + model.q
    return r ** (-model.lam) / z


def stream(seed, *key):
    """Independent PCG64 generator for ``key`` under a master seed."""
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def _as_generator(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed)


@lru_cache(maxsize=32)
def _cumulative_table(lam, q, w):
    r = np.arange(1, w + 1, dtype=np.float64) + q
    cdf = np.cumsum(r ** (-lam))
    cdf /= cdf[-1]
    cdf.setflags(write=False)
    return cdf


def _acceptance_curve(u, lam):
    """(1 - (1+u)^(1-lam)) / u, which tends to lam - 1 as u -> 0."""
    out = np.full(u.shape, lam - 1.0)
    nz = u > 0
    out[nz] = -np.expm1((1.0 - lam) * np.log1p(u[nz])) / u[nz]
    return out


def _draw_unbounded(lam, q, n, rng, w=UNBOUNDED):
    """Exact rejection sampler for p(r) ~ (r+q)^-lam, r >= 1 (optionally r <= w).

    A continuous Pareto-type variable Y on [1, inf) with density ~ (y+q)^-lam
    is floored to R.  P(R = r) is proportional to (r+q)^(1-lam) - (r+1+q)^(1-lam)
    and the ratio target / proposal peaks at r = 1, which fixes the acceptance
    test.  For q = 0 this is Devroye's zeta sampler.  Returned ranks are floats;
    draws that overflow are +inf.
    """
    expo = -1.0 / (lam - 1.0)
    u1 = 1.0 / (1.0 + q)
    bound = -math.expm1((1.0 - lam) * math.log1p(u1)) / u1
    chunks = []
    got = 0
    while got < n:
        m = int((n - got) * 1.25) + 16
        uu = rng.random(m)
        vv = rng.random(m)
        with np.errstate(over="ignore", divide="ignore"):
            y = (1.0 + q) * (1.0 - uu) ** expo - q
            ranks = np.floor(y)
            inv = 1.0 / (ranks + q)
        keep = vv * _acceptance_curve(inv, lam) <= bound
        if w != UNBOUNDED:
            keep &= ranks <= w
        acc = ranks[keep]
        chunks.append(acc)
        got += acc.size
    return np.concatenate(chunks)[:n]


def draw_ranks(model, n, seed):
    """Probability ranks of ``n`` i.i.d. draws from ``model`` (float array).

    Ranks at or above 2**53 (including overflow to +inf) are not exactly
    representable; :func:`counts_from_ranks` treats each as a distinct event.
    """
    rng = _as_generator(seed)
    lam, q, w = float(model.lam), float(model.q), model.w
    if w != UNBOUNDED and w <= TABLE_MAX:
        cdf = _cumulative_table(lam, q, w)
        idx = np.searchsorted(cdf, rng.random(n), side="right")
        return np.minimum(idx, w - 1).astype(np.float64) + 1.0
    if lam <= 1.0:
        raise DomainError("finite event spaces above TABLE_MAX need lambda > 1")
    return _draw_unbounded(lam, q, n, rng, w)


def counts_from_ranks(ranks):
    """Tally drawn ranks into a CountVector, ignoring the rank labels."""
    ranks = np.asarray(ranks, dtype=np.float64)
    exact = ranks < _EXACT_INT
    n_huge = int(ranks.size - np.count_nonzero(exact))
    s = np.sort(ranks[exact])
    if s.size:
        edges = np.flatnonzero(np.diff(s)) + 1
        runs = np.diff(np.concatenate(([0], edges, [s.size])))
    else:
        runs = np.empty(0, dtype=np.int64)
    if n_huge:
        runs = np.concatenate([runs, np.ones(n_huge, dtype=np.int64)])
    return CountVector(-np.sort(-runs))


def sample_counts(model, n, seed):
    """Rank-frequency data from ``n`` draws of ``model``.

    Unobserved events are discarded and the counts sorted non-increasing.
    The result is a pure function of ``(model, n, seed)``.
    """
    n = int(n)
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    return counts_from_ranks(draw_ranks(model, n, seed))
