"""Estimating Zipf exponents from rank-frequency data without the rank bias."""

from .abc import (
    PriorBox,
    PosteriorApprox,
    WeightedKde,
    abc_pmc,
    abc_regression,
    mean_log_statistic,
    wasserstein_distance,
    weighted_variance,
)
from .classical import EstimateResult, Method, clauset_mle, hanel_mle, leading_term_loglik
from .corpus import clean_text, fetch_text, word_counts
from .exact import (
    SignedLogValue,
    full_loglik,
    full_loglik_derivative,
    full_mle,
    permanent_naive,
    permanent_ryser,
)
from .models import (
    CountVector,
    ZipfMandelbrotModel,
    ZipfModel,
    empirical_rank_map,
    pmf,
    sample_counts,
)
from .special import UNBOUNDED, Normalizer, normalizer

__version__ = "0.1.0"
