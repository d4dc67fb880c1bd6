"""Statistics for profit comparison and price-discovery measurement:
one-tailed Wilcoxon-Mann-Whitney U test, box-plot summary statistics,
Smith's alpha, and supply/demand equilibrium prices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, groupby

EXACT_CUTOVER = 16  # combined sample size at or below which p is enumerated


@dataclass(frozen=True)
class MwuResult:
    u_a: float
    u_b: float
    p_value: float
    method: str  # "exact" or "normal"


def _midranks_doubled(pooled: list) -> list[int]:
    """Midranks of the pooled sample, scaled by 2 so ties stay integral."""
    order = sorted(range(len(pooled)), key=pooled.__getitem__)
    ranks2 = [0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        # positions i..j (0-based) share rank; midrank = (i+1 + j+1)/2
        r2 = (i + 1) + (j + 1)
        for k in range(i, j + 1):
            ranks2[order[k]] = r2
        i = j + 1
    return ranks2


def mann_whitney_one_tailed(
    sample_a,
    sample_b,
    direction: str = "b_greater",
    method: str = "auto",
) -> MwuResult:
    """Directional Wilcoxon-Mann-Whitney U test with midrank tie handling.

    Tests H1 "B tends to be greater than A" (direction="b_greater"; pass
    "a_greater" to flip). The p-value is exact by enumeration of all
    C(n, n_b) rank assignments when n_a + n_b <= 16, otherwise a normal
    approximation with tie-corrected variance and continuity correction.
    """
    a = list(sample_a)
    b = list(sample_b)
    if not a or not b:
        raise ValueError("both samples must be nonempty")
    if direction == "a_greater":
        flipped = mann_whitney_one_tailed(b, a, "b_greater", method)
        return MwuResult(flipped.u_b, flipped.u_a, flipped.p_value, flipped.method)
    if direction != "b_greater":
        raise ValueError(f"direction must be 'b_greater' or 'a_greater', got {direction!r}")
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")

    n_a, n_b = len(a), len(b)
    ranks2 = _midranks_doubled(a + b)
    w2_b = sum(ranks2[n_a:])
    u2_b = w2_b - n_b * (n_b + 1)  # twice U_b
    u2_a = 2 * n_a * n_b - u2_b
    u_a, u_b = u2_a / 2.0, u2_b / 2.0

    if method == "exact" or (method == "auto" and n_a + n_b <= EXACT_CUTOVER):
        p = _exact_p(ranks2, n_b, w2_b)
        return MwuResult(u_a, u_b, p, "exact")
    p = _normal_p(a + b, ranks2, n_a, n_b, u_b)
    return MwuResult(u_a, u_b, p, "normal")


def _exact_p(ranks2: list[int], n_b: int, w2_obs: int) -> float:
    """P(W_B >= observed) over all equally likely assignments of pooled
    positions to group B. Integer arithmetic throughout."""
    count = 0
    total = 0
    for combo in combinations(ranks2, n_b):
        total += 1
        if sum(combo) >= w2_obs:
            count += 1
    return count / total


def _normal_p(pooled: list, ranks2: list[int], n_a: int, n_b: int, u_b: float) -> float:
    n = n_a + n_b
    tie_term = 0
    for _, group in groupby(sorted(pooled)):
        t = sum(1 for _ in group)
        tie_term += t**3 - t
    sigma2 = (n_a * n_b / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma2 <= 0.0:
        # Every pooled value identical: U is degenerate at its mean and
        # P(U >= mean) is 1.
        return 1.0
    if u_b <= 0.0:
        return 1.0  # U >= 0 always holds
    mu = n_a * n_b / 2.0
    z = (u_b - 0.5 - mu) / math.sqrt(sigma2)
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@dataclass(frozen=True)
class SummaryStats:
    median: float
    q1: float
    q3: float
    mean: float
    sd: float
    whisker_lo: float
    whisker_hi: float
    degenerate: bool = False  # n == 1: sd reported as 0


def _median(sorted_values: list) -> float:
    n = len(sorted_values)
    mid = n // 2
    if n % 2 == 1:
        return float(sorted_values[mid])
    return (sorted_values[mid - 1] + sorted_values[mid]) / 2.0


def summary_stats(sample) -> SummaryStats:
    """Median, inclusive-median (Tukey hinge) quartiles, mean, sample sd
    (n-1 denominator), and whiskers at mean +/- 2 sd."""
    values = sorted(sample)
    n = len(values)
    if n == 0:
        raise ValueError("summary_stats of an empty sample")
    mean = sum(values) / n
    if n == 1:
        v = float(values[0])
        return SummaryStats(v, v, v, v, 0.0, v, v, degenerate=True)
    sd = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))
    half = n // 2
    lower = values[: half + (n % 2)]  # include the median element when n is odd
    upper = values[half:]
    return SummaryStats(
        median=_median(values),
        q1=_median(lower),
        q3=_median(upper),
        mean=mean,
        sd=sd,
        whisker_lo=mean - 2.0 * sd,
        whisker_hi=mean + 2.0 * sd,
    )


def smiths_alpha(trade_prices, equilibrium_price: float) -> float:
    """RMS deviation of transaction prices from P0, as a percentage of P0."""
    prices = list(trade_prices)
    if not prices:
        raise ValueError("smiths_alpha over an empty trade list")
    if equilibrium_price <= 0:
        raise ValueError("equilibrium price must be positive")
    mse = sum((p - equilibrium_price) ** 2 for p in prices) / len(prices)
    return 100.0 * math.sqrt(mse) / equilibrium_price


def equilibrium_price(buyer_limits, seller_limits) -> float | None:
    """Intersection of the induced supply and demand curves.

    Sort buyer limits descending and seller limits ascending; the last index
    where demand still meets supply defines the crossing pair, and P0 is its
    midpoint. Returns None when no pair can trade.
    """
    demand = sorted(buyer_limits, reverse=True)
    supply = sorted(seller_limits)
    k = -1
    for i in range(min(len(demand), len(supply))):
        if demand[i] >= supply[i]:
            k = i
        else:
            break
    if k < 0:
        return None
    return (demand[k] + supply[k]) / 2.0


def uniform_schedule_equilibrium(
    demand_range: tuple[float, float],
    supply_range: tuple[float, float],
    n_buyers: int,
    n_sellers: int,
) -> float:
    """Equilibrium of expected demand/supply curves for uniform limit draws.

    Demand at price p: n_buyers * P(buyer limit >= p); supply: n_sellers *
    P(seller limit <= p), both linear on their supports (continuous
    approximation). Solves demand(p) == supply(p).
    """
    d_lo, d_hi = demand_range
    s_lo, s_hi = supply_range
    if d_hi < s_lo:
        raise ValueError("demand lies entirely below supply: no trade possible")
    if d_lo >= d_hi and s_lo >= s_hi:
        return (d_lo + s_lo) / 2.0
    # n_b (d_hi - p) / (d_hi - d_lo) = n_s (p - s_lo) / (s_hi - s_lo)
    wd = max(d_hi - d_lo, 1e-12)
    ws = max(s_hi - s_lo, 1e-12)
    a = n_buyers / wd
    c = n_sellers / ws
    p = (a * d_hi + c * s_lo) / (a + c)
    return float(min(max(p, min(s_lo, d_lo)), max(d_hi, s_hi)))
