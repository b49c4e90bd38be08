"""Leading-term maximum-likelihood estimators (Clauset et al.; Hanel et al.).

Both treat the empirical ranks as if they were the probability ranks, i.e.
they keep only the identity-permutation term of the full likelihood.  The
log-likelihood ``-lam * sum_r n_r ln r - N ln Z(lam)`` is concave in ``lam``,
so a golden-section search over the bracket finds the global maximum.
"""

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._optimize import golden_section_max
from .errors import DegenerateInput, DomainError
from .special import UNBOUNDED, check_w, normalizer

CLAUSET_BRACKET = (1.0001, 6.0)
HANEL_BRACKET = (0.0001, 6.0)
TOLERANCE = 1e-6


class Method(str, enum.Enum):
    CLAUSET = "clauset"
    HANEL = "hanel"
    EXACT_FULL = "exact"
    ABC_PMC = "abc-pmc"
    ABC_REGRESSION = "abc-reg"


@dataclass
class EstimateResult:
    lambda_hat: float
    method: Method
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "method": self.method.value,
            "lambda_hat": self.lambda_hat,
            "diagnostics": {k: _jsonable(v) for k, v in self.diagnostics.items()},
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def log_rank_sum(counts):
    """sum over empirical ranks r of n_r * ln r."""
    c = counts.counts
    return float(np.dot(c, np.log(np.arange(1, c.size + 1, dtype=np.float64))))


def leading_term_loglik(lam, counts, w=UNBOUNDED):
    """Log-likelihood of the identity rank mapping for exponent ``lam``."""
    w = check_w(w)
    if counts.w_obs > w:
        raise DomainError(f"{counts.w_obs} observed events exceed w={w}")
    z = normalizer(lam, w).value
    return -lam * log_rank_sum(counts) - counts.n_total * math.log(z)


def _fit(counts, w, bracket, method):
    s = log_rank_sum(counts)
    n = counts.n_total

    def objective(lam):
        return -lam * s - n * math.log(normalizer(lam, w).value)

    lam_hat, ll, evals = golden_section_max(objective, bracket[0], bracket[1], TOLERANCE)
    edge = min(abs(lam_hat - bracket[0]), abs(lam_hat - bracket[1])) < 10 * TOLERANCE
    diagnostics = {
        "loglik": ll,
        "evaluations": evals,
        "tolerance": TOLERANCE,
        "at_bracket_edge": bool(edge),
    }
    return EstimateResult(lam_hat, method, diagnostics)


def clauset_mle(counts):
    """Discrete power-law MLE over an unbounded event space, x_min = 1."""
    if counts.w_obs < 2:
        raise DegenerateInput("a single observed event puts the optimum at the bracket edge")
    return _fit(counts, UNBOUNDED, CLAUSET_BRACKET, Method.CLAUSET)


def hanel_mle(counts, w):
    """Leading-term MLE over a finite event space of size ``w``."""
    w = check_w(w)
    if w == UNBOUNDED:
        raise DomainError("hanel_mle needs a finite event-space size")
    if w < counts.w_obs:
        raise DomainError(f"w={w} is smaller than the {counts.w_obs} observed events")
    if w == 1:
        # one possible event: the likelihood is 1 for every exponent
        diagnostics = {"loglik": 0.0, "evaluations": 0, "tolerance": TOLERANCE,
                       "at_bracket_edge": True, "flat": True}
        return EstimateResult(HANEL_BRACKET[0], Method.HANEL, diagnostics)
    return _fit(counts, w, HANEL_BRACKET, Method.HANEL)
