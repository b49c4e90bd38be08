"""Command-line entry point: ``zipfest {sample,estimate,bench,analyze-text}``."""

import argparse
import json
import logging
import sys

import numpy as np

from . import bench
from ._parallel import default_workers
from .abc import ZIPF, ZIPF_MANDELBROT, PriorBox, abc_pmc, abc_regression
from .classical import Method, clauset_mle, hanel_mle
from .corpus import CACHE_ENV
from .errors import DomainError, SizeCap, ZipfestError
from .exact import RYSER_MAX, full_mle
from .models import ZipfMandelbrotModel, ZipfModel, format_counts, read_counts, sample_counts
from .special import UNBOUNDED

log = logging.getLogger("zipfest")


def _parse_w(text):
    if text is None or str(text).lower() in ("unbounded", "inf", "infinite"):
        return UNBOUNDED
    try:
        return int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'unbounded', got {text!r}")


def _parse_int(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(value)


def _parse_grid(text):
    """``a:b:k`` (k points from a to b inclusive) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("grid must be start:stop:count")
        a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
        return np.linspace(a, b, k).tolist()
    return [float(x) for x in text.split(",") if x]


def _parse_list(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def _add_abc_flags(p):
    g = p.add_argument_group("ABC options")
    g.add_argument("--prior-min", type=float, default=1.001, help="lower prior bound for lambda")
    g.add_argument("--prior-max", type=float, default=3.0, help="upper prior bound for lambda")
    g.add_argument("--q-max", type=float, default=20.0, help="upper prior bound for q (zipf-mandelbrot)")
    g.add_argument("--n-particles", type=int, default=256)
    g.add_argument("--n-generations", type=int, default=10)
    g.add_argument("--survival-fraction", type=float, default=0.4)
    g.add_argument("--max-draws", type=_parse_int, default=1_000_000)
    g.add_argument("--n-sims", type=_parse_int, default=10_000, help="ABC regression simulations")
    g.add_argument("--accept-fraction", type=float, default=0.1, help="ABC regression acceptance")
    g.add_argument("--threads", type=int, default=None, help="worker processes (default: all CPUs)")


def _abc_options(args, family=ZIPF):
    if family == ZIPF:
        prior = PriorBox((args.prior_min,), (args.prior_max,))
    else:
        prior = PriorBox((args.prior_min, 0.0), (args.prior_max, args.q_max))
    return {
        "prior": prior,
        "n_particles": args.n_particles,
        "n_generations": args.n_generations,
        "survival_fraction": args.survival_fraction,
        "max_draws": args.max_draws,
        "n_sims": args.n_sims,
        "accept_fraction": args.accept_fraction,
    }


def _workers(args):
    return args.threads if args.threads else default_workers()


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_sample(args, parser):
    try:
        if args.q:
            model = ZipfMandelbrotModel(args.lam, args.q, args.w)
        else:
            model = ZipfModel(args.lam, args.w)
    except DomainError as exc:
        parser.error(str(exc))
    counts = sample_counts(model, args.n, args.seed)
    _emit(format_counts(counts, args.format), args.out)
    log.info("wrote %r", counts)


def cmd_estimate(args, parser):
    counts = read_counts(args.input)
    method = Method(args.method)
    w = args.w
    if method is Method.CLAUSET:
        result = clauset_mle(counts)
    elif method is Method.HANEL:
        if w == UNBOUNDED:
            parser.error("--w is required for the hanel method")
        result = hanel_mle(counts, w)
    elif method is Method.EXACT_FULL:
        w = counts.w_obs if w == UNBOUNDED else w
        try:
            result = full_mle(counts, w)
        except SizeCap as exc:
            raise SizeCap(f"{exc}; exact method limited to W <= {RYSER_MAX}, "
                          "use clauset, abc-pmc or abc-reg for larger data") from exc
    else:
        opts = _abc_options(args, args.model)
        if method is Method.ABC_PMC:
            post = abc_pmc(counts, args.model, opts["prior"], args.n_particles, args.n_generations,
                           args.survival_fraction, args.seed, args.max_draws, _workers(args))
        else:
            if args.model != ZIPF:
                parser.error("abc-reg supports --model zipf only")
            post = abc_regression(counts, opts["prior"], args.n_sims, args.accept_fraction,
                                  args.seed, _workers(args))
        if args.posterior:
            with open(args.posterior, "w", encoding="utf-8") as fh:
                json.dump(post.to_dict(), fh)
        result = post.to_estimate(method)
    _emit(result.to_json() + "\n", args.out)


def cmd_bench(args, parser):
    workers = _workers(args)
    if args.bench == "zipf-mandelbrot":
        opts = _abc_options(args, ZIPF_MANDELBROT)
        _, dump = bench.demo_zipf_mandelbrot(args.seed, n=args.n, abc_options=opts, workers=workers)
        _emit(json.dumps(dump) + "\n", args.out)
        return
    opts = _abc_options(args)
    estimators = [Method(e).value for e in args.estimators]
    if args.bench == "bias-vs-lambda":
        rows = bench.bench_bias_vs_lambda(args.grid, args.n, args.reps, estimators, args.seed,
                                          workers=workers, abc_options=opts)
    else:
        rows = bench.bench_bias_vs_n(args.ns, args.reps, estimators, args.seed, lam=args.lam,
                                     workers=workers, abc_options=opts)
    for row in rows:
        if row.flag:
            log.warning("lambda=%g n=%d %s: %s", row.lambda_true, row.n, row.estimator, row.flag)
    text = bench.rows_to_json(rows) + "\n" if args.format == "json" else bench.rows_to_csv(rows)
    _emit(text, args.out)


def cmd_analyze_text(args, parser):
    rows = bench.analyze_book(args.input, args.methods, seed=args.seed, cache_dir=args.cache_dir,
                              offline=args.offline or None, abc_options=_abc_options(args))
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        text = "book,method,lambda_hat\n" + "".join(
            f"{r['book']},{r['method']},{r['lambda_hat']}\n" for r in rows)
    _emit(text, args.out)


def build_parser():
    parser = argparse.ArgumentParser(prog="zipfest", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="generate rank-frequency data")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--w", type=_parse_w, default=UNBOUNDED, help="event-space size or 'unbounded'")
    p.add_argument("--n", type=_parse_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["counts", "json"], default="counts")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="estimate the exponent of a counts file")
    p.add_argument("--method", required=True, choices=[m.value for m in Method])
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--w", type=_parse_w, default=UNBOUNDED)
    p.add_argument("--model", choices=[ZIPF, ZIPF_MANDELBROT], default=ZIPF)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--posterior", help="also write the ABC posterior as JSON")
    p.add_argument("--out")
    _add_abc_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="bias experiments")
    bsub = p.add_subparsers(dest="bench", required=True)
    for name in ("bias-vs-lambda", "bias-vs-n", "zipf-mandelbrot"):
        b = bsub.add_parser(name)
        b.add_argument("--seed", type=int, default=0)
        b.add_argument("--out")
        _add_abc_flags(b)
        if name == "zipf-mandelbrot":
            b.add_argument("--n", type=_parse_int, default=100_000)
            continue
        b.add_argument("--reps", type=int, default=20)
        b.add_argument("--estimators", type=_parse_list, default=["clauset", "abc-pmc"])
        b.add_argument("--format", choices=["csv", "json"], default="csv")
        if name == "bias-vs-lambda":
            b.add_argument("--grid", type=_parse_grid, default=_parse_grid("1.05:2.0:10"))
            b.add_argument("--n", type=_parse_int, default=10_000)
        else:
            b.add_argument("--lambda", dest="lam", type=float, default=1.1)
            b.add_argument("--ns", type=lambda s: [_parse_int(x) for x in _parse_list(s)],
                           default=[1000, 10_000, 100_000])
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze-text", help="estimate Zipf's exponent of a book")
    p.add_argument("--in", dest="input", required=True, help="local path or URL")
    p.add_argument("--methods", type=_parse_list, default=["clauset", "abc-pmc", "abc-reg"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cache-dir", help=f"download cache (overrides ${CACHE_ENV})")
    p.add_argument("--offline", action="store_true", help="only use cached downloads")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    _add_abc_flags(p)
    p.set_defaults(func=cmd_analyze_text)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        args.func(args, parser)
    except (ZipfestError, OSError, ValueError) as exc:
        print(f"zipfest: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
