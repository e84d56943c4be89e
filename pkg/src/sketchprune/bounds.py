"""Closed-form expected errors, provable upper bounds, and the Monte Carlo
and enumeration estimators used to verify them.

Throughout, the error of a mask m for data X and weights w is the squared
Euclidean distance ||X^T w - X^T (w * m)||^2, and expectations are over the
s independent categorical draws that build the mask (and, where stated, over
fresh Gaussian data as well).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DataMatrix,
    DegenerateDistributionError,
    DimensionMismatchError,
    EnumerationLimitError,
    InvalidDensityError,
    ProbabilityVector,
    RngStream,
    SupportError,
    as_vector,
    features,
    row_norms,
)
from .sketch import optimal_probabilities, sample_sketch_mask, uniform_probabilities

__all__ = [
    "BoundReport",
    "exact_expected_error",
    "lemma1_exact_error",
    "lemma2_bound",
    "lemma3_bound",
    "theorem1_bound",
    "lemma4_uniform_bound",
    "mc_error_over_masks",
    "enumerate_exact_error",
    "mc_error_over_data",
]

ENUMERATION_LIMIT = 1_000_000

_REPORT_KINDS = ("equality", "upper-bound")


@dataclass(frozen=True)
class BoundReport:
    """An empirical error estimate next to the closed form or bound it is
    checked against.

    kind="equality" means the reference is an exact expectation, so the check
    is a two-sided tolerance; kind="upper-bound" means the empirical value
    only has to stay below the reference.
    """

    empirical_error: float
    standard_error: float
    closed_form_or_bound: float
    kind: str
    trials: int

    def __post_init__(self):
        if self.kind not in _REPORT_KINDS:
            raise ValueError(f"unknown report kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not math.isfinite(self.empirical_error):
            raise ValueError("empirical error must be finite")
        if not (math.isfinite(self.standard_error) and self.standard_error >= 0):
            raise ValueError("standard error must be finite and nonnegative")

    def satisfied(self, num_se: float = 4.0) -> bool:
        """Whether the empirical value is consistent with the reference,
        allowing num_se standard errors of Monte Carlo slack."""
        slack = num_se * self.standard_error
        if self.kind == "equality":
            return abs(self.empirical_error - self.closed_form_or_bound) <= slack
        return self.empirical_error <= self.closed_form_or_bound + slack


def _check_budget(s: int):
    if s < 1:
        raise InvalidDensityError(f"sketch budget must be >= 1, got {s}")


def exact_expected_error(X: DataMatrix, w, p: ProbabilityVector, s: int) -> float:
    """Expected squared feature error of an s-draw sketch mask under p.

    Summing the per-coordinate variances of the unbiased estimator gives
    (1/s) sum_k ||X_(k)||^2 w_k^2 / p_k - (1/s) ||X^T w||^2. Indices whose
    numerator vanishes contribute nothing regardless of p_k; a positive
    numerator over zero probability makes the expectation infinite and
    raises.
    """
    _check_budget(s)
    wv = as_vector(w)
    if wv.size != X.d:
        raise DimensionMismatchError(
            f"weight length {wv.size} does not match {X.d} matrix rows"
        )
    if p.d != X.d:
        raise DimensionMismatchError(
            f"distribution length {p.d} does not match {X.d} matrix rows"
        )
    numerators = row_norms(X) ** 2 * wv**2
    active = numerators > 0.0
    if np.any(active & (p.values == 0.0)):
        raise SupportError(
            "sampling distribution has zero mass on an active weight"
        )
    first = float((numerators[active] / p.values[active]).sum()) / s
    return first - float((features(X, wv) ** 2).sum()) / s


def lemma1_exact_error(X: DataMatrix, w0, s: int) -> float:
    """Exact expected squared error when the sampling distribution is the
    optimal one for (X, w0) and the mask is applied to w0 itself.

    The variance sum then collapses to
    (1/s) (sum_k ||X_(k)|| |w0_k|)^2 - (1/s) ||X^T w0||^2.
    """
    _check_budget(s)
    wv = as_vector(w0)
    if wv.size != X.d:
        raise DimensionMismatchError(
            f"weight length {wv.size} does not match {X.d} matrix rows"
        )
    a = row_norms(X) * np.abs(wv)
    total = float(a.sum())
    if total <= 0.0:
        raise DegenerateDistributionError(
            "every row-norm-times-weight product is zero"
        )
    return (total**2 - float((features(X, wv) ** 2).sum())) / s


def lemma2_bound(w0, s: int) -> float:
    """Bound (1/s) ||w0||^2 on the data-averaged exact error when masking w0
    with its own optimal distribution and X has iid N(0, 1/n) entries."""
    _check_budget(s)
    wv = as_vector(w0)
    return float(wv @ wv) / s


def lemma3_bound(
    X: DataMatrix, X_tilde: DataMatrix, w0, w_star, s: int
) -> tuple[float, float]:
    """Exact error and its data-free bound for a mask tuned on (X_tilde, w0)
    but applied to w_star under X.

    Returns (exact, bound) with
    exact = (1/s) sum_k ||X_(k)||^2 w*_k^2 / p0_k - (1/s) ||X^T w*||^2 and
    bound = (1/s) sum_k (sum_j ||Xt_(j)|| |w0_j|) / (||Xt_(k)|| |w0_k|)
            * ||X_(k)||^2 w*_k^2,
    where p0 is the optimal distribution of (X_tilde, w0). Indices where
    w* is active but the tuning product ||Xt_(k)|| |w0_k| vanishes raise,
    since both quantities are then infinite.
    """
    _check_budget(s)
    w0v = as_vector(w0)
    wsv = as_vector(w_star)
    if not (w0v.size == wsv.size == X.d == X_tilde.d):
        raise DimensionMismatchError(
            "data matrices and weight vectors must share the same dimension d"
        )
    tuning = row_norms(X_tilde) * np.abs(w0v)
    total = float(tuning.sum())
    if total <= 0.0:
        raise DegenerateDistributionError(
            "every tuning row-norm-times-weight product is zero"
        )
    numerators = row_norms(X) ** 2 * wsv**2
    active = numerators > 0.0
    if np.any(active & (tuning == 0.0)):
        raise SupportError(
            "tuning distribution has zero mass on an active target weight"
        )
    p0 = ProbabilityVector(tuning / total)
    exact = exact_expected_error(X, wsv, p0, s)
    bound = float((total / tuning[active] * numerators[active]).sum()) / s
    return exact, bound


def theorem1_bound(w0, w_star, s: int) -> float:
    """Data-averaged error bound for masks tuned on (X, w0) and applied to a
    trained w_star, for X with iid N(0, 1/n) entries:

    (1/s) ||w0||_1 (||w* - w0||^2 / ||w0||_inf + 2 ||w* - w0||_1 + ||w0||_1).
    """
    _check_budget(s)
    w0v = as_vector(w0)
    wsv = as_vector(w_star)
    if w0v.size != wsv.size:
        raise DimensionMismatchError(
            f"weight lengths differ: {w0v.size} vs {wsv.size}"
        )
    l1 = float(np.abs(w0v).sum())
    if l1 <= 0.0:
        raise DegenerateDistributionError("initial weights are identically zero")
    linf = float(np.abs(w0v).max())
    delta = wsv - w0v
    return l1 * (float(delta @ delta) / linf + 2.0 * float(np.abs(delta).sum()) + l1) / s


def lemma4_uniform_bound(w_star, d: int, s: int) -> float:
    """Error bound (d/s) ||w*||^2 for uniformly sampled sketch masks."""
    _check_budget(s)
    wsv = as_vector(w_star)
    if wsv.size != d:
        raise DimensionMismatchError(
            f"weight length {wsv.size} does not match d={d}"
        )
    return d / s * float(wsv @ wsv)


def mc_error_over_masks(
    X: DataMatrix,
    w_apply,
    p: ProbabilityVector,
    s: int,
    trials: int,
    rng: RngStream,
    reference: float = math.nan,
    kind: str = "equality",
) -> BoundReport:
    """Monte Carlo mean of the squared feature error over freshly sampled
    sketch masks, reported against a caller-supplied reference value."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    wv = as_vector(w_apply)
    base = features(X, wv)
    Xt = np.ascontiguousarray(X.values.T)
    errors = np.empty(trials)
    for t in range(trials):
        m = sample_sketch_mask(p, s, rng)
        diff = base - Xt @ (wv * m.values)
        errors[t] = diff @ diff
    se = float(errors.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return BoundReport(float(errors.mean()), se, reference, kind, trials)


def enumerate_exact_error(X: DataMatrix, w, p: ProbabilityVector, s: int) -> float:
    """Exact expected squared error by enumerating every ordered draw
    sequence, weighted by its probability.

    Independent of the closed forms above; cost grows as d^s, so sequences
    beyond the enumeration limit are refused.
    """
    _check_budget(s)
    wv = as_vector(w)
    if p.d != X.d or wv.size != X.d:
        raise DimensionMismatchError(
            "matrix, weights, and distribution must share the dimension d"
        )
    if X.d**s > ENUMERATION_LIMIT:
        raise EnumerationLimitError(
            f"{X.d}^{s} ordered sequences exceed the limit of {ENUMERATION_LIMIT}"
        )
    pv = p.values
    support = p.support()
    base = features(X, wv)
    total = 0.0
    sequences = itertools.product(support.tolist(), repeat=s)
    chunk_size = 16384
    while True:
        block = np.array(list(itertools.islice(sequences, chunk_size)))
        if block.size == 0:
            break
        block = block.reshape(-1, s)
        weights = pv[block].prod(axis=1)
        masks = np.zeros((block.shape[0], X.d))
        rows = np.repeat(np.arange(block.shape[0]), s)
        np.add.at(masks, (rows, block.ravel()), 1.0 / (s * pv[block.ravel()]))
        feats = (wv * masks) @ X.values
        residual = ((base - feats) ** 2).sum(axis=1)
        total += float(weights @ residual)
    return total


def mc_error_over_data(
    w0,
    w_star,
    s: int,
    n: int,
    x_trials: int,
    rng: RngStream,
    distribution: str = "optimal",
    reference: float | None = None,
) -> BoundReport:
    """Average, over fresh X with iid N(0, 1/n) entries, of the exact
    expected masked-feature error of w_star when the mask distribution is
    tuned on (X, w0).

    distribution="optimal" tunes p on (X, w0) and reports against the
    trained-weights bound; distribution="uniform" samples uniformly and
    reports against the dimension-scaled bound. An explicit reference
    overrides either default.
    """
    if x_trials < 1:
        raise ValueError(f"x_trials must be >= 1, got {x_trials}")
    if distribution not in ("optimal", "uniform"):
        raise ValueError(f"unknown distribution {distribution!r}")
    w0v = as_vector(w0)
    wsv = as_vector(w_star)
    if w0v.size != wsv.size:
        raise DimensionMismatchError(
            f"weight lengths differ: {w0v.size} vs {wsv.size}"
        )
    d = w0v.size
    scale = 1.0 / math.sqrt(n)
    uniform = uniform_probabilities(d)
    errors = np.empty(x_trials)
    for t in range(x_trials):
        X = DataMatrix(rng.normal((d, n)) * scale)
        if distribution == "optimal":
            p = optimal_probabilities(X, w0v)
        else:
            p = uniform
        errors[t] = exact_expected_error(X, wsv, p, s)
    if reference is None:
        if distribution == "optimal":
            reference = theorem1_bound(w0v, wsv, s)
        else:
            reference = lemma4_uniform_bound(wsv, d, s)
    se = float(errors.std(ddof=1) / math.sqrt(x_trials)) if x_trials > 1 else 0.0
    return BoundReport(float(errors.mean()), se, reference, "upper-bound", x_trials)
