"""Self-contained invariant suite behind the verify subcommand.

Each check exercises one analytic fact end to end: beta density and CDF
behavior against quadrature, the tail lower bound on its full grid, the
sampler against a Kolmogorov-Smirnov threshold, both fingerprinting
identities against exact enumeration, the exponential mechanism's
distribution-ratio privacy test over all small neighboring datasets, the
per-column equality between the selection statistic and its prior-side
proxy, and the lower/upper bound chain on a live experiment. The report
serializes to machine-readable JSON; any failed check fails the suite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .attack import (
    FingerprintCheck,
    check_bound_chain,
    column_equality_experiment,
    verify_beta_fingerprinting,
    verify_fingerprinting_identity,
)
from .betadist import (
    BetaParams,
    beta_cdf,
    beta_cdf_quadrature,
    beta_draws,
    tail_lower_bound,
)
from .mechanisms import exp_mech_probabilities
from .seeds import trial_generator

SHAPE_GRID = (0.5, 1.0, 2.0, 5.0)
TAIL_BETA_GRID = (1.0, 1.5, 2.0, 3.0, 5.0)
TAIL_PSTAR_GRID = (0.05, 0.1, 0.125, 0.25, 0.5)
KS_SIGNIFICANCE = 1e-3
RATIO_SLACK = 1e-12


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class VerifyReport:
    passed: bool
    checks: tuple[CheckResult, ...]


def _check_pdf_normalization() -> CheckResult:
    worst = 0.0
    for a, b in itertools.product(SHAPE_GRID, repeat=2):
        total = beta_cdf_quadrature(BetaParams(a, b), 1.0)
        worst = max(worst, abs(total - 1.0))
    return CheckResult("pdf_normalization", worst <= 1e-9,
                       f"max |integral - 1| = {worst:.3e} over {len(SHAPE_GRID)**2} shapes")


def _check_cdf_monotone() -> CheckResult:
    grid = np.linspace(0.0, 1.0, 1000)
    ok = True
    for a, b in itertools.product(SHAPE_GRID, repeat=2):
        values = beta_cdf(BetaParams(a, b), grid)
        if np.any(np.diff(values) < -1e-15):
            ok = False
        if abs(values[0]) > 1e-15 or abs(values[-1] - 1.0) > 1e-12:
            ok = False
    return CheckResult("cdf_monotone", ok, "nondecreasing on a 1000-point grid, F(0)=0, F(1)=1")


def _check_cdf_symmetry() -> CheckResult:
    grid = np.linspace(0.0, 1.0, 401)
    worst = 0.0
    for s in SHAPE_GRID:
        params = BetaParams(s, s)
        total = beta_cdf(params, grid) + beta_cdf(params, 1.0 - grid)
        worst = max(worst, float(np.max(np.abs(total - 1.0))))
    return CheckResult("cdf_symmetry", worst <= 1e-9,
                       f"max |F(p)+F(1-p)-1| = {worst:.3e} for symmetric shapes")


def _check_cdf_dual_route() -> CheckResult:
    worst = 0.0
    points = (0.05, 0.25, 0.5, 0.75, 0.95)
    for a, b in itertools.product(SHAPE_GRID, repeat=2):
        params = BetaParams(a, b)
        for p in points:
            diff = abs(beta_cdf(params, p) - beta_cdf_quadrature(params, p))
            worst = max(worst, diff)
    return CheckResult("cdf_dual_route", worst <= 1e-10,
                       f"max |closed form - quadrature| = {worst:.3e}")


def _check_tail_bound_grid() -> CheckResult:
    failures = []
    for b in TAIL_BETA_GRID:
        for p_star in TAIL_PSTAR_GRID:
            report = tail_lower_bound(b, p_star)
            if not report.satisfied:
                failures.append((b, p_star))
    return CheckResult("tail_bound_grid", not failures,
                       f"{len(TAIL_BETA_GRID) * len(TAIL_PSTAR_GRID)} grid points, "
                       f"failures: {failures if failures else 'none'}")


def ks_statistic(draws: np.ndarray, params: BetaParams) -> float:
    """Two-sided Kolmogorov-Smirnov distance between empirical draws and
    the beta CDF."""
    x = np.sort(np.asarray(draws, dtype=np.float64))
    n = x.size
    cdf = beta_cdf(params, x)
    steps = np.arange(1, n + 1, dtype=np.float64) / n
    d_plus = float(np.max(steps - cdf))
    d_minus = float(np.max(cdf - (steps - 1.0 / n)))
    return max(d_plus, d_minus)


def ks_critical_value(n: int, significance: float = KS_SIGNIFICANCE) -> float:
    return math.sqrt(-0.5 * math.log(significance / 2.0) / n)


def _check_sampler_ks(master_seed: int) -> CheckResult:
    params = BetaParams(2.0, 2.0)
    rng = trial_generator(master_seed, 0)
    draws = beta_draws(params, 100_000, rng)
    stat = ks_statistic(draws, params)
    crit = ks_critical_value(draws.size)
    return CheckResult("sampler_ks", stat < crit,
                       f"KS distance {stat:.5f} vs critical {crit:.5f} at alpha={KS_SIGNIFICANCE}")


def _check_fingerprint_identity(master_seed: int) -> CheckResult:
    rng = trial_generator(master_seed, 1)
    worst = 0.0
    for i in range(50):
        n = 1 + (i % 10)
        f_table = tuple(rng.uniform(-1.0, 1.0, size=2**n))
        p_grid = tuple(np.linspace(0.0, 1.0, 20))
        check = verify_fingerprinting_identity(FingerprintCheck(n, f_table, p_grid))
        worst = max(worst, check.max_abs_residual)
    return CheckResult("fingerprint_identity", worst <= 1e-9,
                       f"max residual {worst:.3e} over 50 random tables, n in 1..10")


def _check_fingerprint_beta(master_seed: int) -> CheckResult:
    rng = trial_generator(master_seed, 2)
    priors = [BetaParams(a, b) for a, b in itertools.product(SHAPE_GRID, repeat=2)]
    worst = 0.0
    for i in range(50):
        n = 1 + (i % 8)
        f_table = tuple(rng.uniform(-1.0, 1.0, size=2**n))
        p_grid = (0.5,)  # unused by the beta-side identity
        check = FingerprintCheck(n, f_table, p_grid)
        result = verify_beta_fingerprinting(check, priors[i % len(priors)])
        worst = max(worst, result.abs_residual)
    return CheckResult("fingerprint_beta", worst <= 1e-9,
                       f"max residual {worst:.3e} over 50 random tables, n in 1..8")


def exp_mech_ratio_scan(n: int = 2, d: int = 3, epsilons=(0.5, 1.0)) -> float:
    """Exhaustive distribution-ratio test of single-draw exponential-
    mechanism selection. Enumerates every n-row binary dataset, every
    neighbor obtained by replacing one row, and every outcome, and returns
    the largest probability ratio divided by exp(epsilon). At most 1 means
    the privacy guarantee holds exactly."""
    rows = [np.array([(r >> j) & 1 for j in range(d)], dtype=np.float64)
            for r in range(2**d)]
    worst = 0.0
    for combo in itertools.product(range(2**d), repeat=n):
        x = np.stack([rows[r] for r in combo])
        means = x.mean(axis=0)
        for eps in epsilons:
            bound = math.exp(eps)
            probs = exp_mech_probabilities(means, n, eps)
            for i in range(n):
                for r in range(2**d):
                    if r == combo[i]:
                        continue
                    y = x.copy()
                    y[i] = rows[r]
                    neighbor = exp_mech_probabilities(y.mean(axis=0), n, eps)
                    ratio = float(np.max(probs / neighbor))
                    worst = max(worst, ratio / bound)
    return worst


def _check_exp_mech_dp_ratio() -> CheckResult:
    worst = exp_mech_ratio_scan()
    return CheckResult("exp_mech_dp_ratio", worst <= 1.0 + RATIO_SLACK,
                       f"max ratio/exp(eps) = {worst:.15f} over all n=2, d=3 neighbors")


def _check_per_column_equality(master_seed: int) -> CheckResult:
    report = column_equality_experiment(d=16, k=2, n=50, beta_sym=2.0, trials=4000,
                                        master_seed=master_seed, mechanism="rnm")
    ok = report.columns_within_3sigma >= 14
    return CheckResult("per_column_equality", ok,
                       f"{report.columns_within_3sigma}/16 columns within 3 sigma "
                       f"(threshold 14) over 4000 trials")


def _check_bound_chain(master_seed: int) -> CheckResult:
    from .harness import ExperimentConfig, run_experiment

    config = ExperimentConfig(kind="topk", d=256, k=4, n=1000, beta_sym="auto",
                              mechanism="rnm", trials=400, master_seed=master_seed)
    record = run_experiment(config)
    chain = check_bound_chain(record.beta_sym, record.gamma_hat, config.k, config.n,
                              record.z_mean, record.z_ci, record.z_upper)
    return CheckResult("bound_chain", chain.chain_ok and chain.n_ok,
                       f"lb {chain.lb_value:.3f} <= z {chain.z_mean:.3f}+{chain.z_ci:.3f} "
                       f"<= upper {chain.upper_value:.3f}; n {chain.n} vs required "
                       f"{chain.n_required_proof:.3f}")


def run_verify(master_seed: int = 1) -> VerifyReport:
    """Run every invariant check and return the aggregate report."""
    checks = (
        _check_pdf_normalization(),
        _check_cdf_monotone(),
        _check_cdf_symmetry(),
        _check_cdf_dual_route(),
        _check_tail_bound_grid(),
        _check_sampler_ks(master_seed),
        _check_fingerprint_identity(master_seed),
        _check_fingerprint_beta(master_seed),
        _check_exp_mech_dp_ratio(),
        _check_per_column_equality(master_seed),
        _check_bound_chain(master_seed),
    )
    return VerifyReport(passed=all(c.passed for c in checks), checks=checks)


def render_verify_json(report: VerifyReport) -> str:
    lines = ['{"passed": %s, "checks": [' % ("true" if report.passed else "false")]
    for idx, check in enumerate(report.checks):
        detail = check.detail.replace("\\", "\\\\").replace('"', '\\"')
        tail = "," if idx + 1 < len(report.checks) else ""
        lines.append('{"name": "%s", "passed": %s, "detail": "%s"}%s'
                     % (check.name, "true" if check.passed else "false", detail, tail))
    lines.append("]}")
    return "\n".join(lines) + "\n"
