"""Exact hypergeometric distribution over arbitrary-precision integers.

``sample`` is the deterministic kappa-bit inverse-CDF map: strict-inequality
tie handling partitions [0, 2^kappa) exactly, comparisons are integer
cross-multiplications, and weights are exact binomials maintained by
multiplicative running products.  Exactness is what makes keys bit-portable;
it is only feasible while the support is enumerable, so large-domain scale
keys use the separate gaussian approximation in ``fastpath`` instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .errors import RangeError

DEFAULT_KAPPA = 128


@dataclass(frozen=True)
class HypergeomParams:
    """Draw ``draws`` balls from a population of ``population`` of which
    ``successes`` are marked; the variate counts marked balls drawn."""

    population: int
    successes: int
    draws: int

    def __post_init__(self):
        if not (0 <= self.successes <= self.population):
            raise RangeError("need 0 <= successes <= population")
        if not (0 <= self.draws <= self.population):
            raise RangeError("need 0 <= draws <= population")

    @property
    def support_min(self) -> int:
        return max(0, self.draws + self.successes - self.population)

    @property
    def support_max(self) -> int:
        return min(self.draws, self.successes)

    def support(self) -> range:
        return range(self.support_min, self.support_max + 1)


def pmf_weight(p: HypergeomParams, x: int) -> tuple[int, int]:
    """Exact (numerator, denominator): C(t,x)*C(N-t,s-x) over C(N,s).

    The numerator is zero outside the support.
    """
    denom = comb(p.population, p.draws)
    if x < p.support_min or x > p.support_max:
        return 0, denom
    num = comb(p.successes, x) * comb(p.population - p.successes, p.draws - x)
    return num, denom


def sample(p: HypergeomParams, r: int, kappa: int = DEFAULT_KAPPA) -> int:
    """Inverse-CDF draw: smallest x in support with r*C(N,s) < 2^kappa*W(x).

    W(x) is the cumulative weight through x.  Monotone non-decreasing in r;
    total variation from the exact distribution is at most
    support_size * 2^-kappa.
    """
    if not 0 <= r < (1 << kappa):
        raise RangeError("r must be a kappa-bit unsigned integer")
    N, t, s = p.population, p.successes, p.draws
    lo, hi = p.support_min, p.support_max
    target = r * comb(N, s)
    # running term: C(t,x) * C(N-t, s-x), updated multiplicatively
    term = comb(t, lo) * comb(N - t, s - lo)
    acc = term
    x = lo
    while x < hi and target >= (acc << kappa):
        # C(t,x+1) = C(t,x)*(t-x)/(x+1);  C(N-t,s-x-1) = C(N-t,s-x)*(s-x)/(N-t-s+x+1)
        term = term * (t - x) * (s - x) // ((x + 1) * (N - t - s + x + 1))
        acc += term
        x += 1
    return x


def sampler_thresholds(p: HypergeomParams, kappa: int) -> list[tuple[int, int]]:
    """(x, count of r values mapping to x) for the exact sampler partition."""
    N, s = p.population, p.draws
    denom = comb(N, s)
    out = []
    acc = 0
    prev_cut = 0
    for x in p.support():
        acc += pmf_weight(p, x)[0]
        # r maps to <= x  iff  r*denom < acc << kappa  iff  r <= ceil(...) - 1
        cut = min(1 << kappa, -(-(acc << kappa) // denom))
        out.append((x, cut - prev_cut))
        prev_cut = cut
    return out
