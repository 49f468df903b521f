"""Special functions and combinatorial factors behind the closed-form results.

All incomplete gamma functions used by the analytic module have integer first
argument, so they are evaluated through their exact finite sums

    Gamma(s, x) = (s-1)! e^{-x} sum_{k<s} x^k / k!
    Upsilon(s, x) = (s-1)! - Gamma(s, x)

rather than generic continued-fraction routines.  The finite sum is a Poisson
head probability; for x << s the complement ``1 - head`` cancels, so the lower
function switches to summing the Poisson tail directly, which keeps relative
accuracy at both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "LogProb",
    "log_binomial",
    "lower_inc_gamma_int",
    "upper_inc_gamma_int",
    "xi",
    "xi_support",
    "ordered_partial_sum_pdf",
]

# Largest factorial representable in float64.
_MAX_FACTORIAL_S = 171

# Exact integer binomials are cheap up to this n; beyond it fall back to logs.
_EXACT_BINOMIAL_N = 2000


@dataclass(frozen=True)
class LogProb:
    """A probability carried on the natural-log scale (value <= 0)."""

    value: float

    def __post_init__(self):
        if self.value > 1e-12:
            raise ValueError(f"log-probability must be <= 0, got {self.value}")

    @property
    def prob(self) -> float:
        return math.exp(min(self.value, 0.0))


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k).

    Uses an exact product of logs when k (or n-k) is small, so the result
    stays accurate even where the log-gamma difference would cancel; the
    log-gamma path covers the rest.
    """
    if n < 0 or k < 0:
        raise ValueError(f"log_binomial needs nonnegative arguments, got ({n}, {k})")
    if k > n:
        raise ValueError(f"log_binomial domain error: k={k} > n={n}")
    k = min(k, n - k)
    if k == 0:
        return 0.0
    if k <= 1000:
        return math.fsum(math.log((n - k + t) / t) for t in range(1, k + 1))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _poisson_head_terms(s: int, x: float):
    """Terms e^{-x} x^k / k! for k = 0..s-1 (may underflow to 0 for huge x)."""
    t = math.exp(-x)
    terms = [t]
    for k in range(1, s):
        t *= x / k
        terms.append(t)
    return terms


def lower_inc_gamma_int(s: int, x: float) -> float:
    """Lower incomplete gamma for integer s >= 1: integral of t^{s-1} e^{-t} on [0, x]."""
    if s < 1 or s != int(s):
        raise ValueError(f"lower_inc_gamma_int needs integer s >= 1, got {s}")
    if x < 0:
        raise ValueError(f"lower_inc_gamma_int needs x >= 0, got {x}")
    if s > _MAX_FACTORIAL_S:
        raise ValueError(f"s={s} overflows float64 factorial")
    if x == 0.0:
        return 0.0
    s = int(s)
    fact = float(math.factorial(s - 1))
    terms = _poisson_head_terms(s, x)
    head = math.fsum(terms)
    if head <= 0.5:
        return fact * (1.0 - head)
    # x well below s: sum the Poisson tail instead of cancelling against 1.
    t = terms[-1]
    tail = 0.0
    k = s
    while True:
        t *= x / k
        tail += t
        k += 1
        if t <= tail * 1e-18 or k > s + x + 40.0 * math.sqrt(x + 1.0) + 60:
            break
    return fact * tail


def upper_inc_gamma_int(s: int, x: float) -> float:
    """Upper incomplete gamma for integer s >= 1: integral of t^{s-1} e^{-t} on [x, inf)."""
    if s < 1 or s != int(s):
        raise ValueError(f"upper_inc_gamma_int needs integer s >= 1, got {s}")
    if x < 0:
        raise ValueError(f"upper_inc_gamma_int needs x >= 0, got {x}")
    if s > _MAX_FACTORIAL_S:
        raise ValueError(f"s={s} overflows float64 factorial")
    s = int(s)
    return float(math.factorial(s - 1)) * math.fsum(_poisson_head_terms(s, x))


def xi_support(i: int, n_t: int, n_paths: int) -> tuple[int, int]:
    """Valid j range (inclusive) for xi at beam i: paths already covered by beams < i."""
    return max(0, n_paths - 1 - n_t + i), min(i - 1, n_paths - 1)


def _log_xi(i: int, j: int, n_t: int, n_paths: int) -> float:
    return (
        log_binomial(i - 1, j)
        + log_binomial(n_t - i, n_paths - j - 1)
        - log_binomial(n_t, n_paths)
    )


def xi(i: int, j: int, n_t: int, n_paths: int) -> float:
    """Probability that beam i covers a path while j paths sit among beams 1..i-1.

    Equals C(i-1, j) C(N_t - i, L - j - 1) / C(N_t, L) for a uniform L-subset
    of path positions.  Exact (correctly rounded) for moderate N_t via integer
    binomials; log-space for very large N_t where the integers get unwieldy.
    """
    if not 2 <= i <= n_t - 1:
        raise ValueError(f"xi needs 2 <= i <= N_t - 1, got i={i}, N_t={n_t}")
    lo, hi = xi_support(i, n_t, n_paths)
    if not lo <= j <= hi:
        raise ValueError(f"xi domain error: j={j} outside [{lo}, {hi}] at i={i}")
    if n_t <= _EXACT_BINOMIAL_N:
        num = math.comb(i - 1, j) * math.comb(n_t - i, n_paths - j - 1)
        return num / math.comb(n_t, n_paths)
    return LogProb(min(_log_xi(i, j, n_t, n_paths), 0.0)).prob


def ordered_partial_sum_pdf(x, n_rf: int, n_paths: int):
    """Density of the sum of the n_rf largest of n_paths iid Exp(rate=n_paths) draws.

    Closed form with the polynomial correction branch for n_rf >= 2; accepts a
    scalar or array ``x``.  The rate equals the path count so the L gains of a
    unit-average-power channel are covered directly.
    """
    import numpy as np

    if not 1 <= n_rf <= n_paths:
        raise ValueError(f"need 1 <= n_rf <= n_paths, got ({n_rf}, {n_paths})")
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("density support is x >= 0")
    L, R = n_paths, n_rf
    lead = float(L) ** R * x ** (R - 1) / math.factorial(R - 1)
    acc = np.zeros_like(x)
    for l in range(1, L - R + 1):
        if R >= 2:
            a_lx = np.zeros_like(x)
            t = np.ones_like(x)
            for m in range(R - 1):
                if m > 0:
                    t = t * (-l * x * L / R) / m
                a_lx += t
        else:
            a_lx = 0.0
        coeff = (-1.0) ** (R + l - 1) * math.comb(L - R, l) * (R / l) ** (R - 1)
        acc += coeff * (np.exp(-l * x * L / R) - a_lx)
    pdf = math.comb(L, R) * np.exp(-L * x) * (lead + L * acc)
    return float(pdf) if scalar else pdf
