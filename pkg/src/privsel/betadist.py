"""Beta-distribution machinery: densities, CDFs, moments, sampling, the
symmetric-beta tail lower bound, and the anti-concentration quantities used
by the hard-instance generator.

All logarithms are natural logs and all reals are 64-bit floats. Random
draws go through caller-owned numpy Generators, so every function here is
pure given its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvariantError

# Absolute tolerance of the adaptive-Simpson oracle; also the slack allowed
# when comparing a true tail probability against its closed-form bound.
QUADRATURE_TOL = 1e-10


@dataclass(frozen=True)
class BetaParams:
    """Parameters (alpha, beta) of a beta distribution on [0,1]."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a positive finite real, got {self.alpha}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be a positive finite real, got {self.beta}")


@dataclass(frozen=True)
class TailBoundReport:
    """Outcome of checking the lower tail of Beta(b,b) against its closed-form
    lower bound at a point p_star in [0, 1/2]."""

    p_star: float
    true_probability: float
    bound_value: float
    satisfied: bool


def beta_function(a: float, b: float) -> float:
    """The beta function B(a,b), the normalizer of the beta density.

    Symmetric in its arguments; for integer arguments it equals
    (a-1)!(b-1)!/(a+b-1)!.
    """
    if not (a > 0 and math.isfinite(a)):
        raise ValueError(f"a must be a positive finite real, got {a}")
    if not (b > 0 and math.isfinite(b)):
        raise ValueError(f"b must be a positive finite real, got {b}")
    return float(special.beta(a, b))


def _check_unit_interval(p) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(~np.isfinite(arr)):
        raise ValueError("p must lie in [0, 1]")
    return arr


def beta_pdf(params: BetaParams, p):
    """Density of Beta(params) at p (scalar or array), for p in [0,1].

    Endpoint values follow the usual limits: infinite when the matching
    shape parameter is below 1, finite otherwise.
    """
    arr = _check_unit_interval(p)
    a, b = params.alpha, params.beta
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(a == 1.0, 0.0, (a - 1.0) * np.log(arr))
        right = np.where(b == 1.0, 0.0, (b - 1.0) * np.log1p(-arr))
        out = np.exp(left + right - special.betaln(a, b))
    if np.isscalar(p) or arr.ndim == 0:
        return float(out)
    return out


def beta_cdf(params: BetaParams, p):
    """CDF of Beta(params) at p (scalar or array), for p in [0,1]."""
    arr = _check_unit_interval(p)
    out = special.betainc(params.alpha, params.beta, arr)
    if np.isscalar(p) or arr.ndim == 0:
        return float(out)
    return np.asarray(out, dtype=np.float64)


def _adaptive_simpson(f, a: float, b: float, tol: float) -> float:
    if b <= a:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_step(f, a, b, fa, fb, fm, whole, tol, 48)


def _simpson_step(f, a, b, fa, fb, fm, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if depth <= 0 or abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    half = 0.5 * tol
    return _simpson_step(f, a, m, fa, fm, flm, left, half, depth - 1) + _simpson_step(
        f, m, b, fm, fb, frm, right, half, depth - 1
    )


def beta_cdf_quadrature(params: BetaParams, p: float, tol: float = QUADRATURE_TOL) -> float:
    """CDF of Beta(params) at p via adaptive Simpson quadrature.

    Integrates in the angle variable t with p = sin(t)^2, which removes the
    endpoint singularities whenever alpha, beta >= 1/2, so the integrand is
    smooth on the whole range. Serves as the independent oracle route for
    the closed-form CDF.
    """
    pf = float(p)
    if not 0.0 <= pf <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if pf == 0.0:
        return 0.0
    a, b = params.alpha, params.beta
    if min(a, b) < 0.5:
        raise ValueError("quadrature oracle requires alpha, beta >= 0.5")
    log_norm = special.betaln(a, b)
    ea = 2.0 * a - 1.0
    eb = 2.0 * b - 1.0

    def integrand(t: float) -> float:
        s, c = math.sin(t), math.cos(t)
        if (s == 0.0 and ea == 0.0) or (c == 0.0 and eb == 0.0):
            power = (c**eb) if s == 0.0 else (s**ea)
            return 2.0 * power * math.exp(-log_norm)
        if s <= 0.0 or c <= 0.0:
            return 0.0
        return 2.0 * math.exp(ea * math.log(s) + eb * math.log(c) - log_norm)

    upper = math.asin(math.sqrt(pf))
    return _adaptive_simpson(integrand, 0.0, upper, tol)


def beta_moments(params: BetaParams) -> tuple[float, float]:
    """Mean and variance of Beta(params), by the closed forms."""
    a, b = params.alpha, params.beta
    s = a + b
    mean = a / s
    variance = a * b / (s * s * (s + 1.0))
    return mean, variance


def beta_draws(params: BetaParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """size i.i.d. Beta(params) draws as the ratio of two gamma variates."""
    ga = rng.standard_gamma(params.alpha, size=size)
    gb = rng.standard_gamma(params.beta, size=size)
    return ga / (ga + gb)


def beta_sample(params: BetaParams, rng: np.random.Generator) -> float:
    """One Beta(params) draw from a caller-owned generator."""
    return float(beta_draws(params, 1, rng)[0])


def tail_lower_bound(beta_sym: float, p_star: float) -> TailBoundReport:
    """Check Pr[P < p_star] for P ~ Beta(b,b) against its closed-form lower
    bound (4 p_star (1-p_star))^(b-1) * p_star / b.

    Requires beta_sym >= 1 and p_star in [0, 1/2]. The true probability is
    computed by both the closed-form CDF and the quadrature oracle; the two
    must agree within QUADRATURE_TOL. Also asserts internally that the
    weaker exponential form of the bound never exceeds the primary form.
    """
    if not (beta_sym >= 1.0 and math.isfinite(beta_sym)):
        raise ValueError(f"beta_sym must be >= 1, got {beta_sym}")
    if not 0.0 <= p_star <= 0.5:
        raise ValueError(f"p_star must lie in [0, 1/2], got {p_star}")

    q = 4.0 * p_star * (1.0 - p_star)
    bound = (q ** (beta_sym - 1.0)) * p_star / beta_sym

    if p_star == 0.0 or beta_sym == 1.0:
        weak = p_star if beta_sym == 1.0 else 0.0
    else:
        weak = p_star * math.exp((math.log(q) - 1.0) * (beta_sym - 1.0))
    if weak > bound + 1e-12:
        raise InvariantError(
            f"exponential bound form {weak} exceeds primary form {bound} "
            f"at beta={beta_sym}, p_star={p_star}"
        )

    params = BetaParams(beta_sym, beta_sym)
    true_cdf = beta_cdf(params, p_star)
    true_quad = beta_cdf_quadrature(params, p_star)
    if abs(true_cdf - true_quad) > QUADRATURE_TOL:
        raise InvariantError(
            f"CDF routes disagree at beta={beta_sym}, p_star={p_star}: "
            f"closed-form {true_cdf!r} vs quadrature {true_quad!r}"
        )

    satisfied = true_cdf >= bound - QUADRATURE_TOL
    return TailBoundReport(
        p_star=p_star,
        true_probability=true_cdf,
        bound_value=bound,
        satisfied=satisfied,
    )


def anticoncentration_beta_choice(d: int, k: int) -> float:
    """The largest symmetric-beta parameter for which a d-column, top-k hard
    instance keeps its anti-concentration guarantee: 1 + ln(d/(8 max(2k,28)))/2.

    Natural log. Requires d >= 8*max(2k, 28) so the result is >= 1.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    min_d = 8 * max(2 * k, 28)
    if d < min_d:
        raise ValueError(f"d={d} is too small for k={k}; requires d >= {min_d}")
    return 1.0 + 0.5 * math.log(d / min_d)


def expected_topk_sum(
    params: BetaParams, d: int, k: int, trials: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte Carlo estimate of E[sum of the k largest of d i.i.d. Beta draws].

    Returns (estimate, ci_halfwidth) where the half-width is 3 standard
    errors under the normal approximation.
    """
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    sums = np.empty(trials, dtype=np.float64)
    chunk = max(1, min(trials, (1 << 22) // max(d, 1)))
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        draws = beta_draws(params, m * d, rng).reshape(m, d)
        if k == d:
            sums[done : done + m] = draws.sum(axis=1)
        else:
            part = np.partition(draws, d - k, axis=1)[:, d - k :]
            sums[done : done + m] = part.sum(axis=1)
        done += m
    estimate = float(math.fsum(sums) / trials)
    if trials > 1:
        var = math.fsum((s - estimate) ** 2 for s in sums) / (trials - 1)
        ci = 3.0 * math.sqrt(var / trials)
    else:
        ci = float("nan")
    return estimate, ci
