"""Bias experiments, book analysis and the Zipf-Mandelbrot demonstration.

Every replicate derives its data seed and its estimator seed from
``SeedSequence(seed, spawn_key=(cell, rep, k))``, and results are aggregated
in (cell, estimator) order, so output rows are identical for any worker count.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from ._parallel import pmap
from .abc import ZIPF_MANDELBROT, abc_pmc, abc_regression
from .classical import Method, clauset_mle
from .corpus import clean_text, fetch_text, word_counts
from .models import ZipfMandelbrotModel, ZipfModel, sample_counts
from .errors import DegenerateInput, ZipfestError

CSV_FIELDS = ["lambda_true", "estimator", "n", "reps", "mean_estimate", "mean_bias",
              "variance", "ci68_low", "ci68_high"]


@dataclass
class BiasRow:
    lambda_true: float
    estimator: str
    n: int
    reps: int
    mean_estimate: float
    mean_bias: float
    variance: float
    ci68_low: float
    ci68_high: float
    flag: str = ""


def run_estimator(method, counts, seed=0, abc_options=None):
    """Point estimate of the exponent by one of the unbounded-model estimators."""
    method = Method(method)
    opts = dict(abc_options or {})
    if method is Method.CLAUSET:
        return clauset_mle(counts).lambda_hat
    if method is Method.ABC_PMC:
        opts = {k: v for k, v in opts.items() if k in _PMC_KEYS}
        return abc_pmc(counts, seed=seed, **opts).point_estimate[0]
    if method is Method.ABC_REGRESSION:
        opts = {k: v for k, v in opts.items() if k in _REG_KEYS}
        return abc_regression(counts, seed=seed, **opts).point_estimate[0]
    raise ValueError(f"{method.value} is not available for unbounded rank-frequency data")


_PMC_KEYS = {"prior", "n_particles", "n_generations", "survival_fraction", "max_draws"}
_REG_KEYS = {"prior", "n_sims", "accept_fraction"}


def _seed_int(seed, *key):
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0])


def _replicate(task):
    lam, n, seed, cell, rep, estimators, abc_options = task
    counts = sample_counts(ZipfModel(lam), n, np.random.SeedSequence(seed, spawn_key=(cell, rep, 0)))
    est_seed = _seed_int(seed, cell, rep, 1)
    out = []
    for name in estimators:
        try:
            out.append(float(run_estimator(name, counts, est_seed, abc_options)))
        except ZipfestError as exc:
            out.append(f"{type(exc).__name__}: {exc}")
    return out


def aggregate(lam, estimator, n, values):
    """Moments of per-replicate estimates; error strings flag the row."""
    reps = len(values)
    good = np.array([v for v in values if not isinstance(v, str)], dtype=float)
    errors = [v for v in values if isinstance(v, str)]
    flag = f"{len(errors)}/{reps} failed: {errors[0]}" if errors else ""
    if good.size == 0:
        nan = math.nan
        return BiasRow(lam, estimator, n, reps, nan, nan, nan, nan, nan, flag)
    mean = float(good.mean())
    bias = mean - lam
    var = float(good.var(ddof=1)) if good.size > 1 else math.nan
    half = math.sqrt(var / good.size) if good.size > 1 else 0.0
    return BiasRow(lam, estimator, n, reps, mean, bias, var, bias - half, bias + half, flag)


def _sweep(cells, reps, estimators, seed, workers, abc_options):
    estimators = [Method(e).value for e in estimators]
    tasks = [(lam, n, seed, c, r, estimators, abc_options)
             for c, (lam, n) in enumerate(cells) for r in range(reps)]
    results = pmap(_replicate, tasks, workers)
    rows = []
    for c, (lam, n) in enumerate(cells):
        per_cell = results[c * reps:(c + 1) * reps]
        for k, name in enumerate(estimators):
            rows.append(aggregate(lam, name, n, [res[k] for res in per_cell]))
    return rows


def bench_bias_vs_lambda(lambda_grid, n, reps, estimators, seed, workers=1, abc_options=None):
    """Bias of each estimator across exponents at fixed sample size."""
    cells = [(float(lam), int(n)) for lam in lambda_grid]
    return _sweep(cells, reps, estimators, seed, workers, abc_options)


def bench_bias_vs_n(n_grid, reps, estimators, seed, lam=1.1, workers=1, abc_options=None):
    """Bias of each estimator across sample sizes at fixed exponent."""
    cells = [(float(lam), int(n)) for n in n_grid]
    return _sweep(cells, reps, estimators, seed, workers, abc_options)


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow(asdict(row))
    return buf.getvalue()


def rows_to_json(rows):
    def clean(v):
        return None if isinstance(v, float) and math.isnan(v) else v

    return json.dumps([{k: clean(v) for k, v in asdict(r).items()} for r in rows], indent=2)


def analyze_book(source, methods, seed=0, cache_dir=None, offline=None, abc_options=None):
    """Estimate the exponent of a book's word-frequency distribution."""
    fetched = fetch_text(source, cache_dir=cache_dir, offline=offline)
    counts = word_counts(clean_text(fetched.text))
    if counts.w_obs < 2:
        raise DegenerateInput(f"{source} contains a single distinct word")
    return [
        {"book": str(source), "method": Method(m).value,
         "lambda_hat": float(run_estimator(m, counts, seed, abc_options))}
        for m in methods
    ]


def demo_zipf_mandelbrot(seed, n=100_000, lam=1.2, q=4.0, n_grid=101, abc_options=None, workers=1):
    """Fit the two-parameter model to data generated at (lam, q).

    Returns the posterior and a density dump on an n_grid x n_grid grid over
    the prior box (rows: lambda, columns: q) for heat-map plotting.
    """
    counts = sample_counts(ZipfMandelbrotModel(lam, q), n, np.random.SeedSequence(seed, spawn_key=(0,)))
    opts = {k: v for k, v in (abc_options or {}).items() if k in _PMC_KEYS}
    posterior = abc_pmc(counts, ZIPF_MANDELBROT, seed=_seed_int(seed, 1), workers=workers, **opts)
    prior = opts.get("prior")
    lo, hi = (prior.lower, prior.upper) if prior else ((1.001, 0.0), (3.0, 20.0))
    lam_axis = np.linspace(lo[0], hi[0], n_grid)
    q_axis = np.linspace(lo[1], hi[1], n_grid)
    mesh = np.stack(np.meshgrid(lam_axis, q_axis, indexing="ij"), axis=-1).reshape(-1, 2)
    density = posterior.kde.evaluate(mesh).reshape(n_grid, n_grid)
    mode = posterior.point_estimate
    dump = {
        "true": [lam, q],
        "n": n,
        "lambda": lam_axis.tolist(),
        "q": q_axis.tolist(),
        "density": density.tolist(),
        "mode": list(mode),
        "mode_density": posterior.density(mode),
        "density_at_q0": posterior.density((mode[0], 0.0)),
    }
    return posterior, dump
