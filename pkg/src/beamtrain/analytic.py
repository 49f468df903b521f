"""Closed-form average training length and outage probability evaluators.

These are the independent references the Monte Carlo side is checked against.
Everything reduces to elementary functions plus integer-parameter incomplete
gammas, evaluated exactly as finite sums (see ``special``).

The per-step success weights for multiple RF chains and the multi-chain outage
expression are alternating sums whose terms grow combinatorially with the path
count while the result stays in [0, 1].  Terms are therefore assembled in
log-magnitude form, accumulated with exact (compensated) summation, and a
validity guard rejects any result whose largest term exceeds it by more than
``GUARD_RATIO``: such a value would be pure cancellation noise in float64, so
an ``AnalyticValidityError`` is raised instead of returning it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .special import (
    log_binomial,
    lower_inc_gamma_int,
    upper_inc_gamma_int,
    xi,
    xi_support,
)

__all__ = [
    "GUARD_RATIO",
    "AnalyticValidityError",
    "TrainingLengthPmf",
    "pmf_training_length",
    "avg_training_length",
    "avg_training_length_asymptotic",
    "outage_it_su",
    "outage_single_rf",
    "outage_single_rf_asymptote",
    "hierarchical_training_length",
]

GUARD_RATIO = 1e12


class AnalyticValidityError(ArithmeticError):
    """The closed form cancels beyond float64 resolution at these parameters."""


def _guarded_sum(terms, what):
    total = math.fsum(terms)
    largest = max((abs(t) for t in terms), default=0.0)
    if largest > 0.0 and (total == 0.0 or largest > GUARD_RATIO * abs(total)):
        raise AnalyticValidityError(
            f"{what}: cancellation beyond guard (max term {largest:.3e}, sum {total:.3e})"
        )
    return total


def _check_su_params(n_t, n_paths, n_rf, alpha):
    if n_t < 2:
        raise ValueError(f"N_t must be >= 2, got {n_t}")
    if not 1 <= n_paths <= n_t:
        raise ValueError(f"need 1 <= L <= N_t, got L={n_paths}, N_t={n_t}")
    if n_rf < 1:
        raise ValueError(f"N_RF must be >= 1, got {n_rf}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")


def _log_beta_mag(j, l, n_rf, n_paths):
    """log |beta_{j,l}|; the sign is (-1)^l."""
    return (
        math.lgamma(j + 1)
        + n_rf * math.log(n_paths)
        - math.lgamma(j - n_rf - l + 1)
        - math.lgamma(n_rf)
        - math.lgamma(n_rf - 1)
        - math.lgamma(l + 1)
    )


def _append_term(terms, sign, log_mag, factor):
    """Push sign * e^{log_mag} * factor, folding |factor| into the log."""
    if factor == 0.0:
        return
    if factor < 0.0:
        sign = -sign
        factor = -factor
    log_total = log_mag + math.log(factor)
    if log_total > 709.0:  # exp overflow: hopeless cancellation at float64
        raise AnalyticValidityError(
            f"term magnitude e^{log_total:.1f} overflows float64"
        )
    terms.append(sign * math.exp(log_total))


def _multi_chain_weight(j, n_rf, n_paths, u):
    """Success weight for j >= N_RF known non-zero beams (the two-piece integral).

    Piece one covers the region where the order-statistics support binds; piece
    two covers the remainder up to the threshold.  Bracket values are the
    antiderivative t^b Upsilon(s, t) + Gamma(s + b, t) evaluated at the limits.
    """
    r = n_rf
    fact_r1 = float(math.factorial(r - 1))
    log_pref1 = r * math.log((r - 1) / n_paths) - u - math.log(r - 1)
    sign_pref1 = (-1) ** r
    log_pref2 = r * math.log((r - 1) / n_paths) - u - 2 * math.log(r - 1)
    sign_pref2 = -((-1) ** r)
    terms: list[float] = []
    for l in range(0, j - r + 1):
        log_beta = _log_beta_mag(j, l, r, n_paths)
        sign_beta = (-1) ** l
        t_hi = u * (l + 1) / r
        log_l = log_beta - r * math.log(l + 1)
        for m in range(0, r - 1):
            log_c = log_binomial(r - 2, m)
            # piece one: [t^{m+1} Upsilon(r-1-m, t) + Gamma(r, t)] from 0 to t_hi
            br = (
                t_hi ** (m + 1) * lower_inc_gamma_int(r - 1 - m, t_hi)
                + upper_inc_gamma_int(r, t_hi)
                - fact_r1
            )
            _append_term(
                terms,
                sign_pref1 * sign_beta * (-1) ** m,
                log_pref1 + log_l + log_c,
                br / (m + 1),
            )
            # piece two: inner binomial expansion of (t - const)^m
            for n in range(0, m + 1):
                br2 = (
                    float(math.factorial(r - n - 1))
                    - t_hi ** (m - n + 1) * lower_inc_gamma_int(r - 1 - m, t_hi)
                    - upper_inc_gamma_int(r - n, t_hi)
                )
                log_t = 0.0 if n == 0 else n * math.log(u * (l + 1))
                _append_term(
                    terms,
                    sign_pref2 * sign_beta * (-1) ** n,
                    log_pref2 + log_l + log_c + log_binomial(m, n) + log_t
                    - m * math.log(r - 1),
                    br2 / (m - n + 1),
                )
    return _guarded_sum(terms, f"success weight at j={j}, N_RF={r}")


def _success_weights(n_paths, n_rf_eff, u):
    """Probability, per count j of already-known non-zero beams, that the newly
    trained non-zero beam ends the training."""
    w = np.zeros(n_paths)
    for j in range(n_paths):
        if n_rf_eff == 1:
            w[j] = math.exp(-u) * (-math.expm1(-u)) ** j
        elif j <= n_rf_eff - 1:
            w[j] = u ** j * math.exp(-u) / math.factorial(j)
        else:
            w[j] = max(_multi_chain_weight(j, n_rf_eff, n_paths, u), 0.0) if u > 0 else 0.0
    return w


@dataclass(frozen=True)
class TrainingLengthPmf:
    """Distribution of the interleaved training length, P_1..P_{N_t}."""

    n_t: int
    n_paths: int
    n_rf_effective: int
    alpha: float
    probabilities: np.ndarray

    def __post_init__(self):
        self.probabilities.flags.writeable = False

    def average(self) -> float:
        i = np.arange(1, self.n_t)
        return self.n_t - math.fsum((self.n_t - i) * self.probabilities[: self.n_t - 1])


def pmf_training_length(n_t, n_paths, n_rf, alpha) -> TrainingLengthPmf:
    """Exact training-length PMF of the interleaved single-user scheme.

    N_RF enters through min(N_RF, L): extra chains beyond the path count
    cannot change the best beam combination.  The last mass P_{N_t} is set by
    complement and must be nonnegative up to 1e-9 slack.
    """
    _check_su_params(n_t, n_paths, n_rf, alpha)
    r_eff = min(n_rf, n_paths)
    u = alpha * n_paths / n_t
    w = _success_weights(n_paths, r_eff, u)
    p = np.zeros(n_t)
    p[0] = (n_paths / n_t) * math.exp(-u)
    for i in range(2, n_t):
        lo, hi = xi_support(i, n_t, n_paths)
        p[i - 1] = math.fsum(xi(i, j, n_t, n_paths) * w[j] for j in range(lo, hi + 1))
    tail = 1.0 - math.fsum(p[: n_t - 1])
    if tail < -1e-9:
        raise AnalyticValidityError(f"PMF complement is {tail:.3e} < -1e-9")
    p[n_t - 1] = max(tail, 0.0)
    return TrainingLengthPmf(n_t, n_paths, r_eff, alpha, p)


def avg_training_length(n_t, n_paths, n_rf, alpha) -> float:
    """Mean interleaved training length: N_t minus the early-stop savings."""
    return pmf_training_length(n_t, n_paths, n_rf, alpha).average()


def avg_training_length_asymptotic(n_t, n_paths) -> float:
    """Large-N_t leading term for fixed path count: N_t / (L + 1)."""
    return n_t / (n_paths + 1.0)


def outage_it_su(n_t, n_paths, n_rf, alpha) -> float:
    """Outage probability of the interleaved (equivalently, full-training) scheme.

    Distribution function of the sum of the min(N_RF, L) largest of L iid
    exponential gains, evaluated at alpha / N_t.
    """
    _check_su_params(n_t, n_paths, n_rf, alpha)
    L = n_paths
    r = min(n_rf, L)
    u = alpha * L / n_t
    log_c = log_binomial(L, r)
    if log_c > 700:
        raise AnalyticValidityError("leading binomial overflows float64")
    terms = [math.exp(log_c) * lower_inc_gamma_int(r, u) / math.factorial(r - 1)]
    for l in range(1, L - r + 1):
        c = -1.0 - l / r
        b_l = (
            math.fsum(
                (-l / r) ** m / math.factorial(m) * lower_inc_gamma_int(m + 1, u)
                for m in range(r - 1)
            )
            if r >= 2
            else 0.0
        )
        piece = math.expm1(c * u) / c - b_l
        log_mag = log_c + log_binomial(L - r, l) + (r - 1) * (math.log(r) - math.log(l))
        _append_term(terms, (-1) ** (r + l - 1), log_mag, piece)
    out = _guarded_sum(terms, f"outage at (N_t={n_t}, L={L}, N_RF={r})")
    if not -1e-9 <= out <= 1.0 + 1e-9:
        raise AnalyticValidityError(f"outage value {out:.6e} outside [0, 1] slack")
    return min(max(out, 0.0), 1.0)


def outage_single_rf(n_t, n_paths, alpha) -> float:
    """Single-RF-chain outage in closed form: (1 - e^{-alpha L / N_t})^L."""
    _check_su_params(n_t, n_paths, 1, alpha)
    return (-math.expm1(-alpha * n_paths / n_t)) ** n_paths


def outage_single_rf_asymptote(n_t, n_paths, alpha) -> float:
    """Large-N_t scaling of the single-chain outage: (alpha L / N_t)^L."""
    _check_su_params(n_t, n_paths, 1, alpha)
    return (alpha * n_paths / n_t) ** n_paths


def hierarchical_training_length(n_t, n_paths, m) -> float:
    """Training length M L^2 log_M(N_t / L) of the hierarchical-search baseline.

    Reference value only; the search itself is outside this package.  The
    partition number must satisfy M >= 2 and L <= N_t / M.
    """
    if m < 2:
        raise ValueError(f"partition number must be >= 2, got {m}")
    if n_paths < 1 or n_paths > n_t / m:
        raise ValueError(f"need 1 <= L <= N_t/M, got L={n_paths}, N_t/M={n_t / m:.3g}")
    return m * n_paths ** 2 * math.log(n_t / n_paths) / math.log(m)
