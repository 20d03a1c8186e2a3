"""Closed-form bounds: counting lower bound, hypergraph-learning baseline,
and exact hypergeometric probabilities.

Everything here is a pure function of integers; bound values are reported in
bits (base-2 logarithms) regardless of the log conventions used elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from collections.abc import Sequence

from .core import ConcGTError

# Exact big-integer arithmetic is used up to this population size; beyond it
# the log-gamma path avoids huge intermediates.
EXACT_N_LIMIT = 2000

# Constant from the sampling bound: 4*pi^2 / e^5.
SAMPLING_BOUND_CONSTANT = 4.0 * math.pi**2 / math.exp(5.0)


class InvalidSizesError(ConcGTError):
    """Set sizes incompatible with the population."""


def _log2_binom_gamma(n: int, k: int) -> float:
    return (
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    ) / math.log(2.0)


def lower_bound(n: int, sizes: Sequence[int]) -> float:
    """Information-theoretic test lower bound in bits.

    Counts the ordered disjoint families with the given exact sizes:
    log2 of the product over i of C(n - s_1 - ... - s_{i-1}, s_i).
    """
    sizes = tuple(int(s) for s in sizes)
    if not sizes or any(s < 1 for s in sizes):
        raise InvalidSizesError("all set sizes must be at least 1")
    if sum(sizes) > n:
        raise InvalidSizesError(f"sizes sum to {sum(sizes)} > n = {n}")
    prefix = 0
    if n <= EXACT_N_LIMIT:
        product = 1
        for s in sizes:
            product *= math.comb(n - prefix, s)
            prefix += s
        return math.log2(product)
    bits = 0.0
    for s in sizes:
        bits += _log2_binom_gamma(n - prefix, s)
        prefix += s
    return bits


def simplified_lower_bound(n: int, sizes: Sequence[int]) -> tuple[float, bool]:
    """The relaxed form sum_i s_i * log2(n / s_i) and whether it applies.

    The relaxation is valid (as an order bound) when the sizes sum to at
    most n/2; the flag reports that condition.
    """
    sizes = tuple(int(s) for s in sizes)
    value = sum(s * math.log2(n / s) for s in sizes)
    return value, sum(sizes) <= n / 2


def hypergraph_query_complexity(s: int, m: int) -> float:
    """Query-complexity expression t(s, m) for edge-detecting hypergraph learning."""
    b = math.comb(s + m, m)
    return (s + m) / math.log2(b) * b


def hypergraph_baseline(s1: int, s2: int, n: int) -> tuple[float, bool]:
    """Tests needed by the generic hypergraph-learning route, in the m=2 case.

    Returns ``t(s1*s2, 2) * log2(n)`` and a flag for the advisory
    precondition ``n >= (s1*s2)**2``.
    """
    if s1 < 1 or s2 < 1:
        raise InvalidSizesError("set sizes must be at least 1")
    s = s1 * s2
    return hypergraph_query_complexity(s, 2) * math.log2(n), n >= s * s


def hypergeom_exact(n: int, draw: int, s: int, a: int) -> float:
    """Exact probability of drawing exactly ``a`` of the ``s`` marked items.

    Sampling ``draw`` items without replacement from ``n``:
    C(n - s, draw - a) * C(s, a) / C(n, draw), computed with rational
    arithmetic before conversion to float.
    """
    if not (0 <= a <= min(draw, s)) or draw > n or s > n or draw - a > n - s:
        raise InvalidSizesError(
            f"invalid hypergeometric parameters n={n} draw={draw} s={s} a={a}"
        )
    value = Fraction(math.comb(n - s, draw - a) * math.comb(s, a), math.comb(n, draw))
    return float(value)


@dataclass(frozen=True)
class BoundReport:
    """Bundle of the closed-form quantities for one (n, sizes) setting."""

    n: int
    sizes: tuple[int, ...]
    lower_bound_bits: float
    simplified_bound_bits: float
    simplified_valid: bool
    baseline_tests: float | None
    baseline_precondition_ok: bool | None


def make_bound_report(n: int, sizes: Sequence[int]) -> BoundReport:
    sizes = tuple(int(s) for s in sizes)
    lb = lower_bound(n, sizes)
    simplified, valid = simplified_lower_bound(n, sizes)
    baseline = precondition = None
    if len(sizes) == 2:
        baseline, precondition = hypergraph_baseline(sizes[0], sizes[1], n)
    return BoundReport(
        n=n,
        sizes=sizes,
        lower_bound_bits=lb,
        simplified_bound_bits=simplified,
        simplified_valid=valid,
        baseline_tests=baseline,
        baseline_precondition_ok=precondition,
    )
