"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary (and
immediately, uncaptured).  The book criterion needs the five texts: put them
in ``$ZIPFEST_BOOKS_DIR`` as ``<key>.txt`` or make the download URLs reachable
(downloads are cached under ``$ZIPFEST_CACHE_DIR``).

Run alone with ``pytest -m acceptance -s`` or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, stats

from zipfest.abc import WeightedKde, abc_pmc, abc_regression, wasserstein_distance
from zipfest.bench import analyze_book, bench_bias_vs_lambda, bench_bias_vs_n, demo_zipf_mandelbrot, rows_to_csv
from zipfest.classical import hanel_mle, leading_term_loglik
from zipfest.errors import ZipfestError
from zipfest.exact import full_loglik, full_mle, permanent_naive, permanent_ryser
from zipfest.models import CountVector, ZipfModel, draw_ranks, rank_probabilities, sample_counts
from zipfest._parallel import default_workers
from zipfest.special import UNBOUNDED, normalizer

sys.path.insert(0, str(Path(__file__).parent))
from _books import TABLE, book_source  # noqa: E402
from conftest import CRITERIA  # noqa: E402

pytestmark = pytest.mark.acceptance

WORKERS = default_workers()


def record(capsys, name, ok, detail):
    CRITERIA.append((name, bool(ok), detail))
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'}  {name}: {detail}", flush=True)
    assert ok, f"{name}: {detail}"


def rel_gap(a, b):
    if a.sign != b.sign:
        return math.inf
    return abs(math.expm1(a.log_magnitude - b.log_magnitude)) if a.sign else 0.0


def test_c1_figure4_golden_numbers(capsys):
    counts = CountVector([10, 3, 3, 2, 1, 1])
    t = time.perf_counter()
    h = hanel_mle(counts, 6).lambda_hat
    f = full_mle(counts, 6).lambda_hat
    dt = time.perf_counter() - t
    ok = abs(h - 1.27) <= 0.01 and abs(f - 1.16) <= 0.01 and dt < 1.0
    record(capsys, "1 Figure 4 golden numbers", ok, f"hanel={h:.4f} full={f:.4f} in {dt:.2f}s")


def test_c2_permanent_oracle(capsys):
    rng = np.random.default_rng(2)
    t = time.perf_counter()
    worst = 0.0
    for w in range(2, 8):
        for _ in range(100):
            m = np.log(rng.uniform(0.0, 1.0, (w, w)))
            worst = max(worst, rel_gap(permanent_ryser(m), permanent_naive(m)))
    dt = time.perf_counter() - t
    record(capsys, "2 permanent oracle equivalence", worst <= 1e-9 and dt < 30,
           f"max rel diff {worst:.2e} over 600 matrices in {dt:.1f}s")


ABC_GRID = [1.05, 1.1, 1.2, 1.35, 1.5, 1.8]


def test_c3_bias_separation(capsys):
    t = time.perf_counter()
    rows = bench_bias_vs_lambda(ABC_GRID, 10_000, 20, ["clauset", "abc-pmc"], seed=3, workers=WORKERS)
    dt = time.perf_counter() - t
    bias = {(r.lambda_true, r.estimator): r.mean_bias for r in rows}
    flags = [r.flag for r in rows if r.flag]
    clauset_ok = all(bias[(lam, "clauset")] > 0.05 for lam in (1.05, 1.1))
    abc_ok = all(abs(bias[(lam, "abc-pmc")]) < 0.05 for lam in ABC_GRID)
    budget = 2 * 3600 if WORKERS == 1 else 20 * 60 * 8 / min(WORKERS, 8)
    detail = " ".join(f"{lam}:C{bias[(lam, 'clauset')]:+.3f}/A{bias[(lam, 'abc-pmc')]:+.3f}" for lam in ABC_GRID)
    record(capsys, "3 bias separation", clauset_ok and abc_ok and not flags and dt < budget,
           f"{detail} ({dt / 60:.1f} min, {WORKERS} workers)")


def test_c4_bias_vs_n(capsys):
    ns = [1000, 10_000, 100_000]
    rows = bench_bias_vs_n(ns, 10, ["clauset", "abc-pmc"], seed=4, lam=1.1, workers=WORKERS)
    cl = [r.mean_bias for r in rows if r.estimator == "clauset"]
    ab = [r.mean_bias for r in rows if r.estimator == "abc-pmc"]
    ok = (all(b > 0 for b in cl) and all(x >= y for x, y in zip(cl, cl[1:]))
          and all(abs(b) < 0.05 for b in ab) and not any(r.flag for r in rows))
    detail = " ".join(f"N={n}:C{c:+.3f}/A{a:+.3f}" for n, c, a in zip(ns, cl, ab))
    record(capsys, "4 bias vs N", ok, detail)


def test_c5_zipf_mandelbrot(capsys):
    post, dump = demo_zipf_mandelbrot(7, workers=WORKERS)
    lam, q = post.point_estimate
    ratio = dump["density_at_q0"] / dump["mode_density"]
    ok = 1.15 <= lam <= 1.25 and 3 <= q <= 5 and ratio < 1e-3
    record(capsys, "5 Zipf-Mandelbrot recovery", ok, f"lambda={lam:.4f} q={q:.3f} density(q=0)/mode={ratio:.1e}")


def test_c6_abc_regression(capsys):
    near = []
    for s in range(5):
        obs = sample_counts(ZipfModel(1.02), 10_000, np.random.SeedSequence(6, spawn_key=(0, s)))
        near.append(abc_regression(obs, seed=s, workers=WORKERS).point_estimate[0])
    hits = sum(abs(x - 1.02) < 0.02 for x in near)
    est = []
    for s in range(20):
        obs = sample_counts(ZipfModel(1.1), 10_000, np.random.SeedSequence(6, spawn_key=(1, s)))
        est.append(abc_regression(obs, seed=100 + s, workers=WORKERS).point_estimate[0])
    bias = float(np.mean(est)) - 1.1
    record(capsys, "6 ABC regression low-lambda accuracy", hits >= 4 and abs(bias) <= 0.03,
           f"{hits}/5 within 0.02 at 1.02 ({', '.join(f'{x:.4f}' for x in near)}); mean bias at 1.1 {bias:+.4f}")


def test_c7_books(capsys):
    parts, ok = [], True
    for key, (c_ref, p_ref, r_ref) in TABLE.items():
        src = book_source(key)
        try:
            rows = analyze_book(src, ["clauset", "abc-pmc", "abc-reg"], seed=7)
        except (ZipfestError, OSError) as exc:
            ok = False
            parts.append(f"{key}: unavailable ({type(exc).__name__}: {exc})")
            continue
        c, p, r = (row["lambda_hat"] for row in rows)
        order = r < c < p
        if abs(c - c_ref) <= 0.02:
            good = order and abs(p - p_ref) <= 0.05 and abs(r - r_ref) <= 0.05
            mode = "full"
        else:
            good = order and abs(c - c_ref) <= 0.04
            mode = "downgraded"
        ok &= good
        parts.append(f"{key}: C{c:.3f} P{p:.3f} R{r:.3f} {mode} {'ok' if good else 'off'}")
    record(capsys, "7 book table", ok, "; ".join(parts))


def _metric_axioms():
    rng = np.random.default_rng(81)

    def rand():
        return CountVector(np.sort(rng.integers(1, 60, rng.integers(1, 40)))[::-1])

    for _ in range(1000):
        a, b, c = rand(), rand(), rand()
        ab, ba = wasserstein_distance(a, b), wasserstein_distance(b, a)
        tri = wasserstein_distance(a, c) + wasserstein_distance(c, b)
        if wasserstein_distance(a, a) != 0 or abs(ab - ba) > 1e-12 or ab > tri + 1e-12 or ab < 0:
            return False
    return True


def _derivative_checks():
    rng = np.random.default_rng(82)
    for _ in range(50):
        q = float(rng.choice([0.0, rng.uniform(0, 10)]))
        w = UNBOUNDED if rng.random() < 0.5 else int(rng.integers(2, 10**6))
        lam = float(rng.uniform(1.05, 4.0) if w == UNBOUNDED else rng.uniform(0.1, 4.0))
        h = 1e-5
        fd = (normalizer(lam + h, w, q).value - normalizer(lam - h, w, q).value) / (2 * h)
        d = normalizer(lam, w, q).derivative
        if abs(fd - d) > 1e-6 * max(1.0, abs(d)):
            return False
    return True


def _chisquare_rejections():
    model = ZipfModel(2.0)
    probs = rank_probabilities(model, 10)
    expected = np.append(probs, 1 - probs.sum()) * 10**6
    rejections = 0
    for seed in range(20):
        ranks = draw_ranks(model, 10**6, np.random.SeedSequence(83, spawn_key=(seed,)))
        obs = np.bincount(np.minimum(ranks, 11).astype(int), minlength=12)[1:]
        rejections += stats.chisquare(obs, expected).pvalue < 1e-3
    return rejections


def _leading_term_bound():
    rng = np.random.default_rng(84)
    for _ in range(100):
        w_obs = int(rng.integers(1, 8))
        counts = CountVector(np.sort(rng.integers(1, 40, w_obs))[::-1])
        w = w_obs + int(rng.integers(0, 3))
        for lam in np.linspace(0.05, 4.0, 12):
            if full_loglik(lam, counts, w) < leading_term_loglik(lam, counts, w) - 1e-9:
                return False
    return True


def _kde_normalization():
    rng = np.random.default_rng(85)
    kde = WeightedKde.from_bandwidth(rng.normal(1.3, 0.02, 256), rng.uniform(size=256), 0.004)
    grid = np.linspace(1.0, 1.6, 60001)
    return integrate.trapezoid(kde(grid), grid)


def _determinism():
    obs = sample_counts(ZipfModel(1.3), 3000, 86)
    runs = [abc_pmc(obs, seed=5, n_particles=64, n_generations=5, workers=k).to_dict() for k in (1, 2, 4)]
    sweeps = [rows_to_csv(bench_bias_vs_lambda([1.2, 1.5], 2000, 3, ["clauset", "abc-pmc", "abc-reg"], 9,
                                               workers=k, abc_options={"n_particles": 32, "n_generations": 3,
                                                                       "n_sims": 300}))
              for k in (1, 3)]
    return runs[0] == runs[1] == runs[2] and sweeps[0] == sweeps[1]


def test_c8_property_suites(capsys):
    axioms = _metric_axioms()
    deriv = _derivative_checks()
    rejections = _chisquare_rejections()
    bound = _leading_term_bound()
    mass = _kde_normalization()
    determ = _determinism()
    ok = axioms and deriv and rejections <= 1 and bound and 0.99 <= mass <= 1.01 and determ
    record(capsys, "8 property suites", ok,
           f"metric={axioms} derivative={deriv} chi2 rejections={rejections}/20 "
           f"full>=leading={bound} kde mass={mass:.4f} determinism={determ}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
