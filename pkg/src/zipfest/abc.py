"""Likelihood-free estimation of power-law exponents.

Two estimators are provided:

* :func:`abc_pmc` -- ABC population Monte Carlo with the Wasserstein-1
  distance between rank distributions, for the Zipf (``theta = lam``) and
  Zipf-Mandelbrot (``theta = (lam, q)``) models.
* :func:`abc_regression` -- rejection ABC on the log-rank summary statistic
  followed by a linear regression adjustment.

The Wasserstein distance treats a CountVector as ``N`` observations where
``n_r`` of them take the value ``r`` (the empirical rank).  Other encodings
(for instance over log counts) give different distances and estimates.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._optimize import golden_section_max
from ._parallel import pmap
from .classical import EstimateResult, Method
from .errors import DegenerateInput, DegenerateRegression, EmptyInput, NonConvergence
from .models import ZipfMandelbrotModel, ZipfModel, sample_counts, stream

ZIPF = "zipf"
ZIPF_MANDELBROT = "zipf-mandelbrot"
MODE_GRID = 400


@dataclass(frozen=True)
class PriorBox:
    """Uniform prior on an axis-aligned box."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in np.atleast_1d(self.lower))
        hi = tuple(float(x) for x in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"invalid prior box {lo} .. {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def default(cls, family=ZIPF):
        if family == ZIPF:
            return cls((1.001,), (3.0,))
        if family == ZIPF_MANDELBROT:
            return cls((1.001, 0.0), (3.0, 20.0))
        raise ValueError(f"unknown model family {family!r}")

    @property
    def dim(self):
        return len(self.lower)

    @property
    def density(self):
        return 1.0 / float(np.prod(np.subtract(self.upper, self.lower)))

    def contains(self, theta):
        theta = np.atleast_1d(theta)
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))

    def sample(self, rng):
        return rng.uniform(self.lower, self.upper)


@dataclass(frozen=True)
class Particle:
    theta: tuple
    weight: float
    distance: float


class WeightedKde:
    """Gaussian kernel density estimate with per-point weights.

    ``cov`` is the kernel covariance; in one dimension it is bandwidth**2.
    """

    def __init__(self, points, weights, cov):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (pts.shape[0],) or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be non-negative, one per point, and not all zero")
        cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
        if cov.shape != (pts.shape[1], pts.shape[1]):
            raise ValueError(f"kernel covariance has shape {cov.shape}")
        self.points = pts
        self.weights = w / w.sum()
        self.cov = cov
        self._chol = np.linalg.cholesky(cov)
        self._prec = np.linalg.inv(cov)
        d = pts.shape[1]
        self._log_norm = -0.5 * d * math.log(2 * math.pi) - float(np.log(np.diag(self._chol)).sum())

    @classmethod
    def from_bandwidth(cls, points, weights, bandwidth):
        return cls(points, weights, [[float(bandwidth) ** 2]])

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def bandwidth(self):
        """Kernel standard deviation per dimension."""
        return np.sqrt(np.diag(self.cov))

    def sample(self, rng):
        j = rng.choice(self.points.shape[0], p=self.weights)
        return self.points[j] + self._chol @ rng.standard_normal(self.dim)

    def evaluate(self, x, chunk=4096):
        """Density at points ``x`` (shape (m, d), or (m,) in one dimension)."""
        x = np.asarray(x, dtype=np.float64)
        scalar = x.ndim == 0
        if x.ndim <= 1:
            x = x.reshape(-1, self.dim)
        out = np.empty(x.shape[0])
        logw = np.log(np.where(self.weights > 0, self.weights, 1.0))
        logw[self.weights == 0] = -np.inf
        for s in range(0, x.shape[0], chunk):
            diff = x[s: s + chunk, None, :] - self.points[None, :, :]
            maha = np.einsum("mnd,de,mne->mn", diff, self._prec, diff)
            out[s: s + chunk] = np.exp(self._log_norm - 0.5 * maha + logw[None, :]).sum(axis=1)
        return float(out[0]) if scalar else out

    __call__ = evaluate


@dataclass
class PosteriorApprox:
    particles: list
    kde: WeightedKde
    point_estimate: tuple
    tolerances: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def bandwidth(self):
        bw = self.kde.bandwidth
        return float(bw[0]) if bw.size == 1 else bw.tolist()

    def density(self, theta):
        return self.kde.evaluate(np.atleast_2d(np.asarray(theta, dtype=float)))[0]

    def to_estimate(self, method):
        diag = {"point_estimate": list(self.point_estimate), **self.diagnostics}
        if len(self.point_estimate) > 1:
            diag["q_hat"] = self.point_estimate[1]
        return EstimateResult(float(self.point_estimate[0]), method, diag)

    def to_dict(self):
        return {
            "particles": [
                {"theta": list(p.theta), "weight": p.weight, "distance": p.distance}
                for p in self.particles
            ],
            "bandwidth": self.bandwidth,
            "kernel_covariance": self.kde.cov.tolist(),
            "point_estimate": list(self.point_estimate),
            "tolerances": list(self.tolerances),
            "diagnostics": dict(self.diagnostics),
        }


def _cdf_gap(a, b):
    size = max(a.size, b.size)
    fa = np.zeros(size)
    fb = np.zeros(size)
    fa[: a.size] = np.cumsum(a) / a.sum()
    fb[: b.size] = np.cumsum(b) / b.sum()
    fa[a.size:] = 1.0
    fb[b.size:] = 1.0
    return float(np.abs(fa - fb).sum())


def wasserstein_distance(a, b):
    """Wasserstein-1 distance between the rank distributions of two datasets.

    In one dimension W1 is the integral of |F_a - F_b|; both CDFs are step
    functions on the integers, so the integral is a finite sum.
    """
    if a.n_total < 1 or b.n_total < 1:
        raise EmptyInput("both datasets need at least one observation")
    return _cdf_gap(a.counts, b.counts)


def mean_log_statistic(counts):
    """sum_r n_r ln r over empirical ranks (rank 1 contributes nothing)."""
    c = counts.counts
    if c.size == 0:
        raise EmptyInput("no counts")
    return float(np.dot(c, np.log(np.arange(1, c.size + 1, dtype=np.float64))))


def weighted_variance(thetas, weights):
    """Weight-normalized second central moment; a covariance matrix in 2-D."""
    t = np.asarray(thetas, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    w = w / w.sum()
    if t.ndim == 1 or t.shape[1] == 1:
        t = t.reshape(-1)
        mean = np.dot(w, t)
        return float(np.dot(w, (t - mean) ** 2))
    mean = w @ t
    d = t - mean
    return (d * w[:, None]).T @ d


def _make_model(family, theta):
    if family == ZIPF:
        return ZipfModel(float(theta[0]))
    return ZipfMandelbrotModel(float(theta[0]), float(theta[1]))


def _kernel_cov(thetas, weights, factor):
    var = np.atleast_2d(weighted_variance(thetas, weights)) * factor
    # a collapsed population would give a singular kernel
    floor = 1e-12 * max(1.0, float(np.max(np.abs(thetas))))
    return var + np.eye(var.shape[0]) * floor


def _fill_particle(task):
    """Draw proposals for one particle until one is accepted.

    Returns (theta, distance, weight, attempts); theta is None when the
    attempt cap was hit first.  Attempt ``a`` of particle ``i`` in generation
    ``g`` uses the stream (seed, g, i, a), so the result does not depend on
    which worker ran it.
    """
    (obs, n_data, family, prior, kde_args, tolerance, seed, g, i, cap) = task
    kde = WeightedKde(*kde_args) if kde_args is not None else None
    attempts = 0
    while attempts < cap:
        rng = stream(seed, g, i, attempts)
        attempts += 1
        theta = prior.sample(rng) if kde is None else kde.sample(rng)
        if not prior.contains(theta):
            continue
        sim = sample_counts(_make_model(family, theta), n_data, rng)
        d = _cdf_gap(obs, sim.counts)
        if d <= tolerance:
            weight = 1.0 if kde is None else prior.density / kde.evaluate(theta[None, :])[0]
            return tuple(float(x) for x in theta), d, weight, attempts
    return None, math.inf, 0.0, attempts


def find_mode(kde, prior, n_grid=MODE_GRID):
    """KDE mode inside the prior box: grid scan then local refinement."""
    lo, hi = np.array(prior.lower), np.array(prior.upper)
    if kde.dim == 1:
        grid = np.linspace(lo[0], hi[0], n_grid)
        dens = kde.evaluate(grid)
        k = int(np.argmax(dens))
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, n_grid - 1)]
        x, fx, _ = golden_section_max(lambda t: kde.evaluate(np.array([t]))[0], a, b, 1e-7)
        return (x,) if fx >= dens[k] else (float(grid[k]),)
    axes = [np.linspace(lo[d], hi[d], n_grid) for d in range(kde.dim)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, kde.dim)
    dens = kde.evaluate(mesh)
    start = mesh[int(np.argmax(dens))]
    res = minimize(
        lambda t: -kde.evaluate(t[None, :])[0],
        start,
        method="Nelder-Mead",
        bounds=list(zip(lo, hi)),
        options={"xatol": 1e-7, "fatol": 1e-12 * float(dens.max()), "maxiter": 2000},
    )
    best = res.x if -res.fun >= dens.max() else start
    return tuple(float(v) for v in best)


def abc_pmc(
    observed,
    model_family=ZIPF,
    prior=None,
    n_particles=256,
    n_generations=10,
    survival_fraction=0.4,
    seed=0,
    max_draws=1_000_000,
    workers=1,
):
    """ABC population Monte Carlo with the Wasserstein distance.

    Generation 0 samples the uniform prior with infinite tolerance.  After each
    generation the tolerance becomes the ``survival_fraction`` quantile of the
    accepted distances and the proposal becomes a weighted Gaussian KDE of the
    particles with kernel covariance twice their weighted covariance.
    Proposals outside the prior box are redrawn; importance weights are
    prior density over (untruncated) proposal density.  The posterior is the
    weighted KDE with kernel covariance equal to the weighted covariance, and
    the point estimate is its mode.

    Raises
    ------
    DegenerateInput
        If the observed data has fewer than two distinct events.
    NonConvergence
        If a generation needs more than ``max_draws`` proposals.
    """
    if observed.w_obs < 2:
        raise DegenerateInput("ABC-PMC needs at least two distinct observed events")
    if model_family not in (ZIPF, ZIPF_MANDELBROT):
        raise ValueError(f"unknown model family {model_family!r}")
    prior = prior or PriorBox.default(model_family)
    expected_dim = 1 if model_family == ZIPF else 2
    if prior.dim != expected_dim:
        raise ValueError(f"{model_family} needs a {expected_dim}-D prior box")

    obs = observed.counts
    n_data = observed.n_total
    tolerance = math.inf
    kde_args = None
    tolerances = []
    draws = []
    for g in range(n_generations):
        tasks = [
            (obs, n_data, model_family, prior, kde_args, tolerance, seed, g, i, max_draws)
            for i in range(n_particles)
        ]
        if workers is not None and workers <= 1:
            results = []
            used = 0
            for t in tasks:
                res = _fill_particle(t[:-1] + (max_draws - used,))
                used += res[3]
                if res[0] is None:
                    break
                results.append(res)
        else:
            results = pmap(_fill_particle, tasks, workers)
            used = sum(r[3] for r in results)
        filled = sum(r[0] is not None for r in results)
        if filled < n_particles or used > max_draws:
            raise NonConvergence(
                f"generation {g} filled {filled}/{n_particles} particles within "
                f"{max_draws} draws at tolerance {tolerance:g}",
                tolerance=tolerance,
                filled=filled,
            )
        thetas = np.array([r[0] for r in results])
        dists = np.array([r[1] for r in results])
        weights = np.array([r[2] for r in results])
        weights = weights / weights.sum()
        draws.append(used)
        tolerances.append(tolerance)
        tolerance = float(np.quantile(dists, survival_fraction))
        kde_args = (thetas, weights, _kernel_cov(thetas, weights, 2.0))

    posterior = WeightedKde(thetas, weights, _kernel_cov(thetas, weights, 1.0))
    mode = find_mode(posterior, prior)
    particles = [Particle(tuple(t), float(w), float(d)) for t, w, d in zip(thetas, weights, dists)]
    diagnostics = {
        "family": model_family,
        "draws_per_generation": draws,
        "final_tolerance": tolerances[-1],
        "next_tolerance": tolerance,
    }
    return PosteriorApprox(particles, posterior, mode, tolerances, diagnostics)


def _simulate_statistic(task):
    lam, n_data, seed, i = task
    counts = sample_counts(ZipfModel(lam), n_data, stream(seed, 1, i))
    return mean_log_statistic(counts)


def silverman_bandwidth(x):
    """Silverman's rule of thumb: 0.9 * min(sd, IQR / 1.34) * n^(-1/5)."""
    x = np.asarray(x, dtype=np.float64)
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    iqr = float(np.subtract(*np.percentile(x, [75, 25])))
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    if spread <= 0:
        spread = max(1e-6, 1e-6 * float(np.abs(x).max()))
    return 0.9 * spread * x.size ** (-0.2)


def abc_regression(observed, prior=None, n_sims=10_000, accept_fraction=0.1, seed=0, workers=1):
    """Rejection ABC on the log-rank statistic with linear regression adjustment.

    Exponents are drawn uniformly from the prior, data simulated at the
    observed size, and the ``accept_fraction`` of simulations whose statistic
    is closest to the observed one are kept.  A least-squares line
    lam = beta * S + alpha is fitted on the kept pairs and each kept exponent is
    moved along it to the observed statistic.  The posterior is an unweighted
    Gaussian KDE (Silverman bandwidth) of the adjusted exponents; the point
    estimate is its mode within the prior box.

    If the kept statistics have zero variance a :class:`DegenerateRegression`
    warning is issued and the unadjusted exponents are used.
    """
    prior = prior or PriorBox.default(ZIPF)
    if prior.dim != 1:
        raise ValueError("abc_regression supports the one-parameter Zipf model only")
    s_obs = mean_log_statistic(observed)
    n_data = observed.n_total
    lams = stream(seed, 0).uniform(prior.lower[0], prior.upper[0], n_sims)
    stats = np.array(pmap(_simulate_statistic, [(lam, n_data, seed, i) for i, lam in enumerate(lams)], workers))

    dist = np.abs(stats - s_obs)
    n_keep = max(2, int(round(accept_fraction * n_sims)))
    keep = np.argsort(dist, kind="stable")[:n_keep]
    s_acc, lam_acc = stats[keep], lams[keep]

    degenerate = bool(np.var(s_acc) == 0)
    if degenerate:
        warnings.warn("accepted summary statistics are constant; skipping regression adjustment",
                      DegenerateRegression, stacklevel=2)
        beta, alpha = 0.0, float(np.mean(lam_acc))
        adjusted = lam_acc.copy()
    else:
        beta, alpha = np.polyfit(s_acc, lam_acc, 1)
        adjusted = lam_acc - beta * (s_acc - s_obs)

    weights = np.full(n_keep, 1.0 / n_keep)
    kde = WeightedKde.from_bandwidth(adjusted, weights, silverman_bandwidth(adjusted))
    mode = find_mode(kde, prior)
    particles = [Particle((float(t),), float(w), float(d)) for t, w, d in zip(adjusted, weights, dist[keep])]
    diagnostics = {
        "beta": float(beta),
        "alpha": float(alpha),
        "epsilon": float(dist[keep].max()),
        "statistic_observed": s_obs,
        "regression_degenerate": degenerate,
    }
    return PosteriorApprox(particles, kde, mode, [float(dist[keep].max())], diagnostics)


def estimate_abc_pmc(counts, seed=0, **kwargs):
    return abc_pmc(counts, seed=seed, **kwargs).to_estimate(Method.ABC_PMC)


def estimate_abc_regression(counts, seed=0, **kwargs):
    return abc_regression(counts, seed=seed, **kwargs).to_estimate(Method.ABC_REGRESSION)
