"""Differentially private selection mechanisms and their baselines.

Top-k selectors (exponential-mechanism peeling, report-noisy-max, sparse
vector thresholding), a Gaussian mean release, and the two non-private
baselines, all over binary datasets with per-column means of sensitivity
1/n. Each mechanism is a pure function of (data, parameters, stream); the
caller owns the random stream.

Every mechanism also has a kernel operating directly on a column-mean
vector, used by the experiment harness when only column sums are sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance import ColumnMeans, Dataset, top_k_set

MECHANISM_NAMES = ("peeling", "rnm", "svt", "gauss-mean", "first-k", "nonprivate")


def composition_split(epsilon: float, delta: float, rounds: int) -> float:
    """Per-round epsilon for a rounds-fold composition at total (epsilon,
    delta): epsilon / sqrt(8 * rounds * log(e^epsilon / delta)) when
    delta > 0, and the plain epsilon / rounds split when delta = 0."""
    if delta > 0.0:
        return epsilon / math.sqrt(8.0 * rounds * (epsilon - math.log(delta)))
    return epsilon / rounds


@dataclass(frozen=True)
class PrivacyBudget:
    """Total (epsilon, delta) plus the per-round split used by composed
    mechanisms. per_round_epsilon is derived when not supplied."""

    epsilon: float
    delta: float
    rounds: int = 1
    per_round_epsilon: float | None = None

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        expected = composition_split(self.epsilon, self.delta, self.rounds)
        if self.per_round_epsilon is None:
            object.__setattr__(self, "per_round_epsilon", expected)
        elif not math.isclose(self.per_round_epsilon, expected, rel_tol=1e-9):
            raise ValueError(
                f"per_round_epsilon {self.per_round_epsilon} does not match the "
                f"composition split {expected} for these parameters"
            )


@dataclass(frozen=True)
class HypothesisTestSpec:
    """Thresholds for the hypothesis-testing selection regime: columns with
    mean >= tau should be reported, columns with mean <= tau_prime should
    not. rho is the error-rate budget (false-positive rate per column is
    held to rho*k_bound/d, true-positive rate to 1-rho); k_bound caps the
    number of reports."""

    tau: float = 7.0 / 8.0
    tau_prime: float = 11.0 / 16.0
    rho: float = 1.0 / 16.0
    k_bound: int = 1

    def __post_init__(self):
        if not 0.0 < self.tau_prime < self.tau < 1.0:
            raise ValueError(
                f"need 0 < tau_prime < tau < 1, got tau={self.tau}, tau_prime={self.tau_prime}"
            )
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.k_bound < 1:
            raise ValueError(f"k_bound must be >= 1, got {self.k_bound}")

    @property
    def threshold(self) -> float:
        return 0.5 * (self.tau + self.tau_prime)

    def false_positive_cap(self, d: int) -> float:
        return self.rho * self.k_bound / d

    def true_positive_floor(self) -> float:
        return 1.0 - self.rho


@dataclass(frozen=True, eq=False)
class SelectionOutput:
    """A mechanism output: a score vector in [-1,1]^d with its norms.
    Indicator outputs have {0,1} entries and equal l1 and squared-l2 norms."""

    scores: np.ndarray
    l1_norm: float
    l2_norm_sq: float
    is_indicator: bool

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("scores must be a nonempty 1-d vector")
        if np.any(arr < -1.0) or np.any(arr > 1.0) or np.any(~np.isfinite(arr)):
            raise ValueError("scores must lie in [-1, 1]")
        if self.is_indicator and not np.all((arr == 0.0) | (arr == 1.0)):
            raise ValueError("indicator output entries must all be 0 or 1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "scores", arr)
        l1 = float(np.abs(arr).sum())
        l2 = float(np.square(arr).sum())
        if abs(l1 - self.l1_norm) > 1e-9 or abs(l2 - self.l2_norm_sq) > 1e-9:
            raise ValueError("stored norms disagree with the score vector")
        if self.is_indicator and self.l1_norm != self.l2_norm_sq:
            raise ValueError("indicator output must have l1_norm == l2_norm_sq")

    @classmethod
    def from_scores(cls, scores, is_indicator: bool = False) -> "SelectionOutput":
        arr = np.asarray(scores, dtype=np.float64)
        l1 = float(np.abs(arr).sum())
        l2 = float(np.square(arr).sum())
        if is_indicator:
            l2 = l1
        return cls(scores=arr, l1_norm=l1, l2_norm_sq=l2, is_indicator=is_indicator)

    @classmethod
    def from_indicator(cls, indices, d: int) -> "SelectionOutput":
        vec = np.zeros(d, dtype=np.float64)
        vec[np.asarray(indices, dtype=np.int64)] = 1.0
        return cls.from_scores(vec, is_indicator=True)

    @property
    def d(self) -> int:
        return self.scores.size

    def selected_indices(self) -> np.ndarray:
        return np.nonzero(self.scores == 1.0)[0]

    def __eq__(self, other):
        if not isinstance(other, SelectionOutput):
            return NotImplemented
        return (
            self.is_indicator == other.is_indicator
            and np.array_equal(self.scores, other.scores)
        )


def _mean_values(means) -> np.ndarray:
    if isinstance(means, ColumnMeans):
        return means.values
    return np.asarray(means, dtype=np.float64)


def exp_mech_probabilities(means, n: int, epsilon: float, exclude=()) -> np.ndarray:
    """Exact selection distribution of the exponential mechanism over
    non-excluded columns: probability proportional to exp(epsilon*n*mean/2)
    (a column mean changes by at most 1/n when one row changes, so this is
    epsilon-DP). Excluded columns get probability 0."""
    values = _mean_values(means)
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    u = 0.5 * epsilon * n * values
    mask = np.zeros(values.size, dtype=bool)
    excl = np.asarray(list(exclude), dtype=np.int64)
    if excl.size:
        mask[excl] = True
    if mask.all():
        raise ValueError("all columns are excluded")
    u = np.where(mask, -np.inf, u)
    u = u - u.max()
    w = np.exp(u)
    return w / w.sum()


def exp_mech_select_one(means, n: int, epsilon: float, exclude, rng: np.random.Generator) -> int:
    """One exponential-mechanism draw, sampled by the Gumbel-max trick
    (argmax of utilities plus standard Gumbel noise is exactly the softmax
    distribution, and is numerically stable for large epsilon*n)."""
    values = _mean_values(means)
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    u = 0.5 * epsilon * n * values
    excl = np.asarray(list(exclude), dtype=np.int64)
    if excl.size == values.size:
        raise ValueError("all columns are excluded")
    noisy = u + rng.gumbel(0.0, 1.0, values.size)
    if excl.size:
        noisy[excl] = -np.inf
    return int(np.argmax(noisy))


def peel_from_means(values: np.ndarray, n: int, k: int, per_round_epsilon: float,
                    rng: np.random.Generator) -> SelectionOutput:
    d = values.size
    u = 0.5 * per_round_epsilon * n * values
    taken = np.zeros(d, dtype=bool)
    for _ in range(k):
        noisy = u + rng.gumbel(0.0, 1.0, d)
        noisy[taken] = -np.inf
        taken[int(np.argmax(noisy))] = True
    return SelectionOutput.from_scores(taken.astype(np.float64), is_indicator=True)


def peeling_topk(x: Dataset, k: int, budget: PrivacyBudget, rng: np.random.Generator) -> SelectionOutput:
    """Top-k selection by peeling: k exponential-mechanism rounds at
    budget.per_round_epsilon, each excluding the columns already taken.
    Requires budget.rounds == k and delta > 0 (the composition split that
    sizes the rounds is undefined at delta = 0)."""
    if not 1 <= k <= x.d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={x.d}")
    if budget.delta <= 0.0:
        raise ValueError("peeling requires delta > 0; use a pure-epsilon mechanism instead")
    if budget.rounds != k:
        raise ValueError(f"budget.rounds must equal k: got rounds={budget.rounds}, k={k}")
    return peel_from_means(x.column_means(), x.n, k, budget.per_round_epsilon, rng)


def rnm_from_means(values: np.ndarray, n: int, k: int, epsilon: float,
                   rng: np.random.Generator) -> SelectionOutput:
    scale = 2.0 * k / (epsilon * n)
    noisy = values + rng.laplace(0.0, scale, values.size)
    return SelectionOutput.from_indicator(top_k_set(noisy, k), values.size)


def report_noisy_max_topk(x: Dataset, k: int, epsilon: float, rng: np.random.Generator) -> SelectionOutput:
    """Top-k selection by report-noisy-max: add independent Laplace noise of
    scale 2k/(epsilon*n) to every column mean and keep the k noisy-largest."""
    if not 1 <= k <= x.d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={x.d}")
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return rnm_from_means(x.column_means(), x.n, k, epsilon, rng)


def svt_from_means(values: np.ndarray, n: int, spec: HypothesisTestSpec, epsilon: float,
                   rng: np.random.Generator) -> SelectionOutput:
    d = values.size
    eps0 = epsilon / (2.0 * spec.k_bound)
    t_scale = 2.0 / (eps0 * n)
    q_scale = 4.0 / (eps0 * n)
    noisy = values + rng.laplace(0.0, q_scale, d)
    t_noise = rng.laplace(0.0, t_scale, spec.k_bound)
    out = np.zeros(d, dtype=np.float64)
    pos = 0
    for r in range(spec.k_bound):
        cut = spec.threshold + t_noise[r]
        above = np.nonzero(noisy[pos:] >= cut)[0]
        if above.size == 0:
            break
        j = pos + int(above[0])
        out[j] = 1.0
        pos = j + 1
    return SelectionOutput.from_scores(out, is_indicator=True)


def svt_threshold_select(x: Dataset, spec: HypothesisTestSpec, budget: PrivacyBudget,
                         rng: np.random.Generator) -> SelectionOutput:
    """Sparse-vector thresholding: scan the columns once in index order,
    reporting each column whose noisy mean clears a noisy midpoint threshold
    (tau+tau_prime)/2, with a fresh threshold draw after every report, and
    stop reporting after k_bound reports.

    Noise scales follow the standard above-threshold calibration at
    eps0 = epsilon/(2*k_bound): Laplace(2/(eps0*n)) on the threshold and
    Laplace(4/(eps0*n)) on each query (column means have sensitivity 1/n),
    so the whole scan costs at most budget.epsilon."""
    if budget.rounds != spec.k_bound:
        raise ValueError(
            f"budget.rounds must equal spec.k_bound: got rounds={budget.rounds}, "
            f"k_bound={spec.k_bound}"
        )
    if spec.k_bound > x.d:
        raise ValueError(f"k_bound={spec.k_bound} exceeds column count d={x.d}")
    return svt_from_means(x.column_means(), x.n, spec, budget.epsilon, rng)


def gaussian_sigma(d: int, n: int, epsilon: float, delta: float) -> float:
    """Per-coordinate noise standard deviation of the Gaussian mean release:
    sqrt(2*log(1.25/delta)) * (sqrt(d)/n) / epsilon, from the l2 sensitivity
    sqrt(d)/n of the mean vector."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return math.sqrt(2.0 * math.log(1.25 / delta)) * (math.sqrt(d) / n) / epsilon


def gaussian_release_from_means(values: np.ndarray, n: int, epsilon: float, delta: float,
                                rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Returns (unclamped, clamped) noisy mean vectors. The clamped vector is
    the official output; clamping is post-processing and costs no privacy."""
    sigma = gaussian_sigma(values.size, n, epsilon, delta)
    unclamped = values + rng.normal(0.0, sigma, values.size)
    return unclamped, np.clip(unclamped, 0.0, 1.0)


def gaussian_mean_release(x: Dataset, epsilon: float, delta: float,
                          rng: np.random.Generator) -> np.ndarray:
    """The empirical mean vector plus per-coordinate Gaussian noise, clamped
    to [0,1]. Requires delta > 0 (the Gaussian mechanism has no delta = 0
    form)."""
    unclamped, clamped = gaussian_release_from_means(x.column_means(), x.n, epsilon, delta, rng)
    return clamped


def trivial_first_k(d: int, k: int) -> SelectionOutput:
    """The data-independent baseline: always select columns 0..k-1."""
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    return SelectionOutput.from_indicator(np.arange(k), d)


def nonprivate_from_means(values: np.ndarray, k: int) -> SelectionOutput:
    return SelectionOutput.from_indicator(top_k_set(values, k), values.size)


def nonprivate_topk(x: Dataset, k: int) -> SelectionOutput:
    """The exact empirical top-k baseline (no privacy)."""
    if not 1 <= k <= x.d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={x.d}")
    return nonprivate_from_means(x.column_means(), k)


def kernel_from_means(name: str, *, k: int, n: int, epsilon: float = 1.0,
                      delta: float = 0.0, spec: HypothesisTestSpec | None = None):
    """A callable (values, rng) -> SelectionOutput for the named mechanism,
    operating on a column-mean vector. This is the dispatch contract used by
    the experiment harness and configuration files."""
    if name == "peeling":
        budget = PrivacyBudget(epsilon, delta, rounds=k)
        if delta <= 0.0:
            raise ValueError("peeling requires delta > 0")
        return lambda values, rng: peel_from_means(values, n, k, budget.per_round_epsilon, rng)
    if name == "rnm":
        return lambda values, rng: rnm_from_means(values, n, k, epsilon, rng)
    if name == "svt":
        svt_spec = spec if spec is not None else HypothesisTestSpec(k_bound=k)
        return lambda values, rng: svt_from_means(values, n, svt_spec, epsilon, rng)
    if name == "gauss-mean":
        return lambda values, rng: SelectionOutput.from_scores(
            gaussian_release_from_means(values, n, epsilon, delta, rng)[1]
        )
    if name == "first-k":
        return lambda values, rng: trivial_first_k(values.size, k)
    if name == "nonprivate":
        return lambda values, rng: nonprivate_from_means(values, k)
    raise ValueError(f"unknown mechanism {name!r}; expected one of {MECHANISM_NAMES}")


def run_named_mechanism(name: str, x: Dataset, k: int, epsilon: float, delta: float,
                        rng: np.random.Generator,
                        spec: HypothesisTestSpec | None = None) -> SelectionOutput:
    """Dataset-level dispatch by mechanism name string."""
    kernel = kernel_from_means(name, k=k, n=x.n, epsilon=epsilon, delta=delta, spec=spec)
    return kernel(x.column_means(), rng)
